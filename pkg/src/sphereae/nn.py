"""Dense MLP autoencoders with hand-written reverse-mode gradients.

Three latent heads share one encoder/decoder skeleton:

* ``AE``  - the encoder output is the latent code;
* ``SAE`` - the encoder output is centered and projected to the unit sphere;
* ``VAE`` - the encoder emits ``[mu, logvar]`` and the code is the
  reparameterized sample ``mu + exp(logvar / 2) * eps``.

Weights are stored ``(in_dim, out_dim)`` so a layer computes ``x @ W + b``
on row batches.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLatentError, DomainError, TrainingDivergenceError
from .rng import RngStream

LOGVAR_CLAMP = 20.0
DEGENERATE_NORM = 1e-10


class Variant(str, enum.Enum):
    AE = "ae"
    SAE = "sae"
    VAE = "vae"


class Activation(str, enum.Enum):
    IDENTITY = "identity"
    RELU = "relu"
    TANH = "tanh"
    SIGMOID = "sigmoid"


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def activate(kind: Activation, a):
    if kind is Activation.IDENTITY:
        return a
    if kind is Activation.RELU:
        return np.maximum(a, 0.0)
    if kind is Activation.TANH:
        return np.tanh(a)
    return _sigmoid(a)


def activation_grad(kind: Activation, a, y, grad_y):
    """Gradient w.r.t. pre-activation ``a`` given output ``y`` and upstream ``grad_y``."""
    if kind is Activation.IDENTITY:
        return grad_y
    if kind is Activation.RELU:
        return grad_y * (a > 0)
    if kind is Activation.TANH:
        return grad_y * (1.0 - y * y)
    return grad_y * y * (1.0 - y)


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: Activation = Activation.IDENTITY

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise DomainError("layer dimensions must be >= 1")
        object.__setattr__(self, "activation", Activation(self.activation))


@dataclass
class Dense:
    spec: LayerSpec
    weight: np.ndarray
    bias: np.ndarray

    def forward(self, x):
        a = x @ self.weight + self.bias
        return a, activate(self.spec.activation, a)

    def backward(self, x, a, y, grad_y):
        grad_a = activation_grad(self.spec.activation, a, y, grad_y)
        return grad_a @ self.weight.T, x.T @ grad_a, grad_a.sum(axis=0)


def glorot_layer(spec: LayerSpec, rng: RngStream) -> Dense:
    limit = math.sqrt(6.0 / (spec.in_dim + spec.out_dim))
    w = (2.0 * rng.uniform((spec.in_dim, spec.out_dim)) - 1.0) * limit
    return Dense(spec, w, np.zeros(spec.out_dim))


# -- spherical normalization -------------------------------------------------

@dataclass(frozen=True)
class SphereCache:
    u: np.ndarray
    norm: np.ndarray  # centered norm per row, shape (batch,)


def spherical_normalize_forward(z):
    """Center each row and scale it to unit norm."""
    z = np.asarray(z, dtype=float)
    c = z - z.mean(axis=1, keepdims=True)
    norm = np.linalg.norm(c, axis=1)
    bad = np.flatnonzero(norm <= DEGENERATE_NORM)
    if bad.size:
        raise DegenerateLatentError("latent row has zero centered norm", int(bad[0]))
    u = c / norm[:, None]
    return u, SphereCache(u, norm)


def spherical_normalize_backward(grad_u, cache: SphereCache):
    """Vector-Jacobian product of the forward map.

    ``grad_z = P (g - u (u.g)) / ||c||`` with ``P`` the centering projector.
    """
    grad_u = np.asarray(grad_u, dtype=float)
    if grad_u.shape != cache.u.shape:
        raise ValueError(f"gradient shape {grad_u.shape} does not match cached latent {cache.u.shape}")
    u = cache.u
    tangent = grad_u - u * np.sum(u * grad_u, axis=1, keepdims=True)
    tangent = tangent - tangent.mean(axis=1, keepdims=True)
    return tangent / cache.norm[:, None]


# -- model ---------------------------------------------------------------------

@dataclass
class ForwardResult:
    x_rec: np.ndarray
    z: np.ndarray
    aux: dict = field(default_factory=dict)


@dataclass
class LossParts:
    total: float
    recon: float
    kl: float = 0.0


class Model:
    """MLP autoencoder.  ``encoder``/``decoder`` are lists of :class:`Dense`."""

    def __init__(self, variant, encoder, decoder, latent_dim, beta=1.0):
        self.variant = Variant(variant)
        self.encoder = list(encoder)
        self.decoder = list(decoder)
        self.latent_dim = int(latent_dim)
        self.beta = float(beta)
        head = 2 * self.latent_dim if self.variant is Variant.VAE else self.latent_dim
        if self.encoder[-1].spec.out_dim != head:
            raise DomainError(f"encoder must output {head} units for {self.variant.value}")
        if self.decoder[0].spec.in_dim != self.latent_dim:
            raise DomainError("decoder input must equal latent_dim")
        for stack in (self.encoder, self.decoder):
            for prev, nxt in zip(stack, stack[1:]):
                if prev.spec.out_dim != nxt.spec.in_dim:
                    raise DomainError("consecutive layer dimensions do not chain")

    @classmethod
    def build(cls, variant, input_dim, latent_dim, hidden=(64,), seed=0, beta=1.0,
              hidden_activation=Activation.RELU, output_activation=Activation.SIGMOID):
        """Glorot-initialized model; the decoder mirrors the encoder's hidden widths."""
        variant = Variant(variant)
        rng = RngStream(seed, stream_id=0)
        head = 2 * latent_dim if variant is Variant.VAE else latent_dim
        widths = [input_dim, *hidden]
        specs = [LayerSpec(i, o, hidden_activation) for i, o in zip(widths, widths[1:])]
        specs.append(LayerSpec(widths[-1], head, Activation.IDENTITY))
        dec_widths = [latent_dim, *reversed(hidden)]
        dec_specs = [LayerSpec(i, o, hidden_activation) for i, o in zip(dec_widths, dec_widths[1:])]
        dec_specs.append(LayerSpec(dec_widths[-1], input_dim, output_activation))
        encoder = [glorot_layer(s, rng) for s in specs]
        decoder = [glorot_layer(s, rng) for s in dec_specs]
        return cls(variant, encoder, decoder, latent_dim, beta)

    @property
    def input_dim(self):
        return self.encoder[0].spec.in_dim

    @property
    def layers(self):
        return self.encoder + self.decoder

    def parameters(self):
        """Parameter arrays in declaration order: per layer, weight then bias."""
        out = []
        for layer in self.layers:
            out.extend([layer.weight, layer.bias])
        return out

    def parameter_names(self):
        names = []
        for role, stack in (("encoder", self.encoder), ("decoder", self.decoder)):
            for k in range(len(stack)):
                names.extend([f"{role}.{k}.weight", f"{role}.{k}.bias"])
        return names

    def copy(self):
        clone = lambda L: Dense(L.spec, L.weight.copy(), L.bias.copy())  # noqa: E731
        return Model(self.variant, [clone(L) for L in self.encoder], [clone(L) for L in self.decoder],
                     self.latent_dim, self.beta)

    # forward/backward ---------------------------------------------------------

    @staticmethod
    def _run(stack, x):
        trace = []
        for layer in stack:
            a, y = layer.forward(x)
            trace.append((x, a, y))
            x = y
        return x, trace

    @staticmethod
    def _back(stack, trace, grad):
        grads = []
        for layer, (x, a, y) in zip(reversed(stack), reversed(trace)):
            grad, gw, gb = layer.backward(x, a, y, grad)
            grads.append((gw, gb))
        return grad, grads[::-1]

    def encode(self, x):
        h, trace = self._run(self.encoder, x)
        return h, trace

    def head(self, h, noise=None, rng=None, sample=True):
        """Map raw encoder output to the latent code (plus head cache)."""
        if self.variant is Variant.AE:
            return h, {}
        if self.variant is Variant.SAE:
            u, cache = spherical_normalize_forward(h)
            return u, {"sphere": cache}
        d = self.latent_dim
        mu = h[:, :d]
        raw_logvar = h[:, d:]
        logvar = np.clip(raw_logvar, -LOGVAR_CLAMP, LOGVAR_CLAMP)
        if not sample:
            return mu, {"mu": mu, "logvar": logvar, "raw_logvar": raw_logvar, "eps": np.zeros_like(mu),
                        "std": np.zeros_like(mu)}
        if noise is None:
            if rng is None:
                raise ValueError("VAE sampling needs an RngStream or explicit noise")
            noise = rng.normal(mu.shape)
        # Overflow is only a risk upward, so the noise scale is capped at the
        # top alone; that keeps the zero-noise limit reachable (std -> 0).
        std = np.exp(0.5 * np.minimum(raw_logvar, LOGVAR_CLAMP))
        z = mu + std * noise
        return z, {"mu": mu, "logvar": logvar, "raw_logvar": raw_logvar, "eps": noise, "std": std}

    def decode(self, z):
        x_rec, _ = self._run(self.decoder, z)
        return x_rec

    def forward(self, x, rng=None, noise=None, sample=True):
        x = np.asarray(x, dtype=float)
        if x.shape[1] != self.input_dim:
            raise DomainError(f"expected {self.input_dim} input columns, got {x.shape[1]}")
        h, enc_trace = self.encode(x)
        z, aux = self.head(h, noise=noise, rng=rng, sample=sample)
        x_rec, dec_trace = self._run(self.decoder, z)
        aux.update(enc_trace=enc_trace, dec_trace=dec_trace, h=h)
        return ForwardResult(x_rec, z, aux)

    def reconstruct(self, x):
        """Deterministic reconstruction (the VAE decodes its posterior mean)."""
        return self.forward(x, sample=False).x_rec

    def loss(self, x, x_rec, aux) -> LossParts:
        batch = x.shape[0]
        diff = x_rec - x
        recon = float(np.sum(diff * diff) / batch)
        if self.variant is not Variant.VAE:
            return LossParts(recon, recon)
        kl = kl_diag_gaussian(aux["mu"], aux["logvar"])
        return LossParts(recon + self.beta * kl, recon, kl)

    def loss_and_grads(self, x, rng=None, noise=None):
        """Total loss and parameter gradients (declaration order) for one batch."""
        x = np.asarray(x, dtype=float)
        res = self.forward(x, rng=rng, noise=noise)
        parts = self.loss(x, res.x_rec, res.aux)
        batch = x.shape[0]
        grad_rec = 2.0 * (res.x_rec - x) / batch
        grad_z, dec_grads = self._back(self.decoder, res.aux["dec_trace"], grad_rec)
        if self.variant is Variant.AE:
            grad_h = grad_z
        elif self.variant is Variant.SAE:
            grad_h = spherical_normalize_backward(grad_z, res.aux["sphere"])
        else:
            mu, logvar, eps, std = res.aux["mu"], res.aux["logvar"], res.aux["eps"], res.aux["std"]
            raw = res.aux["raw_logvar"]
            grad_mu = grad_z + self.beta * mu / batch
            # clamped entries get no gradient through the branch that clamps them
            grad_noise = grad_z * eps * 0.5 * std * (raw < LOGVAR_CLAMP)
            grad_kl = self.beta * 0.5 * np.expm1(logvar) / batch * ((raw > -LOGVAR_CLAMP) & (raw < LOGVAR_CLAMP))
            grad_logvar = grad_noise + grad_kl
            grad_h = np.concatenate([grad_mu, grad_logvar], axis=1)
        _, enc_grads = self._back(self.encoder, res.aux["enc_trace"], grad_h)
        flat = []
        for gw, gb in enc_grads + dec_grads:
            flat.extend([gw, gb])
        return parts, flat


def kl_diag_gaussian(mu, logvar) -> float:
    """Batch-mean of KL(N(mu, diag exp(logvar)) || N(0, I)), summed over latent units."""
    mu = np.atleast_2d(mu)
    logvar = np.atleast_2d(logvar)
    # expm1(lv) - lv is >= 0 and avoids cancellation for small lv
    per = 0.5 * np.sum(mu * mu + np.expm1(logvar) - logvar, axis=1)
    return float(np.mean(per))


# -- optimization ----------------------------------------------------------------

class Adam:
    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = float(lr)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params, grads):
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            if self.lr != 0.0:
                p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def backward_and_step(model: Model, batch, optimizer: Adam, rng=None, noise=None, step=None):
    """One gradient step in place; returns the pre-step loss parts."""
    parts, grads = model.loss_and_grads(batch, rng=rng, noise=noise)
    if not math.isfinite(parts.total) or not all(np.all(np.isfinite(g)) for g in grads):
        raise TrainingDivergenceError("non-finite loss or gradient", optimizer.t if step is None else step)
    optimizer.step(model.parameters(), grads)
    return parts


# -- gradient checking ---------------------------------------------------------------

def numeric_gradient(model: Model, x, noise=None, h=1e-6, indices=None):
    """Central differences of the total loss for selected parameter entries.

    ``indices`` maps parameter position -> iterable of flat indices; the
    default covers every entry.
    """
    params = model.parameters()
    out = {}
    for k, p in enumerate(params):
        flat = p.reshape(-1)
        idx = range(flat.size) if indices is None else indices.get(k, ())
        g = {}
        for i in idx:
            orig = flat[i]
            flat[i] = orig + h
            fp = model.loss(x, *_fwd(model, x, noise)).total
            flat[i] = orig - h
            fm = model.loss(x, *_fwd(model, x, noise)).total
            flat[i] = orig
            g[i] = (fp - fm) / (2.0 * h)
        out[k] = g
    return out


def _fwd(model, x, noise):
    res = model.forward(x, noise=noise)
    return res.x_rec, res.aux


def relative_error(analytic, numeric, scale):
    """|a - n| normalized by max(|a|, |n|, scale), where ``scale`` is the
    magnitude of the layer's whole gradient (so near-zero entries are judged
    against the layer, not against themselves)."""
    denom = max(abs(analytic), abs(numeric), scale, 1e-300)
    return abs(analytic - numeric) / denom


@dataclass
class GradcheckReport:
    variant: str
    seed: int
    errors: dict  # parameter name -> max relative error
    tolerance: float = 1e-5

    @property
    def max_error(self):
        return max(self.errors.values())

    @property
    def passed(self):
        return bool(self.max_error < self.tolerance)

    def as_dict(self):
        return {"variant": self.variant, "seed": self.seed, "max_error": float(self.max_error),
                "passed": bool(self.passed), "tolerance": self.tolerance,
                "layers": {k: float(v) for k, v in self.errors.items()}}


def gradcheck(variant, seed=0, input_dim=12, latent_dim=6, batch=4, hidden=(8,), h=1e-6,
              hidden_activation=Activation.RELU, output_activation=Activation.SIGMOID,
              tolerance=1e-5) -> GradcheckReport:
    """Compare every analytic gradient of a tiny model against central differences.

    The VAE noise is drawn once and frozen so the loss is deterministic.
    """
    variant = Variant(variant)
    model = Model.build(variant, input_dim, latent_dim, hidden=hidden, seed=seed,
                        hidden_activation=hidden_activation, output_activation=output_activation)
    data_rng = RngStream(seed, stream_id=1)
    x = data_rng.uniform((batch, input_dim))
    noise = data_rng.normal((batch, latent_dim)) if variant is Variant.VAE else None
    _, grads = model.loss_and_grads(x, noise=noise)
    numeric = numeric_gradient(model, x, noise=noise, h=h)
    errors = {}
    for k, name in enumerate(model.parameter_names()):
        g = grads[k].reshape(-1)
        scale = float(np.max(np.abs(g))) if g.size else 0.0
        errors[name] = max(relative_error(g[i], n, scale) for i, n in numeric[k].items())
    return GradcheckReport(variant.value, seed, errors, tolerance)
