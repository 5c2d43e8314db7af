"""Mini-batch training loop and decoder sampling helpers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .metrics import mse, sliced_w2
from .nn import Adam, Model, Variant, backward_and_step
from .rng import RngStream
from .sampling import Prior, centerize_rows, sample_prior, spherize_rows

# stream ids under the training seed; stream 0 is model initialization
SHUFFLE_STREAM = 10
NOISE_STREAM = 11


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    recon_mse: float
    kl: float


@dataclass
class TrainResult:
    model: Model
    history: list = field(default_factory=list)
    steps: int = 0

    @property
    def initial_mse(self):
        return self.history[0].recon_mse

    @property
    def final_mse(self):
        return self.history[-1].recon_mse


def evaluate_reconstruction(model: Model, x) -> float:
    return mse(x, model.reconstruct(x))


def train(model: Model, x, epochs=30, batch_size=64, lr=1e-3, seed=0) -> TrainResult:
    """Train ``model`` in place with Adam.

    ``history[0]`` is the untrained state (epoch 0); each later record holds
    the mean mini-batch loss of that epoch and the full-data reconstruction
    MSE after it.  Shuffles and VAE noise come from fixed sub-streams of
    ``seed`` so a run is reproducible bit for bit.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    opt = Adam(lr=lr)
    shuffle = RngStream(seed, SHUFFLE_STREAM)
    noise_rng = RngStream(seed, NOISE_STREAM) if model.variant is Variant.VAE else None
    result = TrainResult(model)
    init_parts = model.loss(x, *_deterministic(model, x))
    result.history.append(EpochRecord(0, init_parts.total, evaluate_reconstruction(model, x), init_parts.kl))
    for epoch in range(1, epochs + 1):
        order = shuffle.permutation(n)
        losses = []
        kls = []
        for start in range(0, n, batch_size):
            batch = x[order[start:start + batch_size]]
            parts = backward_and_step(model, batch, opt, rng=noise_rng, step=result.steps)
            result.steps += 1
            losses.append(parts.total * batch.shape[0])
            kls.append(parts.kl * batch.shape[0])
        result.history.append(EpochRecord(epoch, float(np.sum(losses) / n),
                                          evaluate_reconstruction(model, x), float(np.sum(kls) / n)))
    return result


def _deterministic(model, x):
    res = model.forward(x, sample=False)
    return res.x_rec, res.aux


def prior_latents(model: Model, prior: Prior, count: int, seed: int, center=None, spherize=None):
    """Latent codes for decoder sampling.

    By default each model gets its own pipeline: SAE latents are centered and
    spherized (its training-time constraint), AE/VAE latents are raw draws.
    """
    native = model.variant is Variant.SAE
    center = native if center is None else center
    spherize = native if spherize is None else spherize
    z = sample_prior(prior, RngStream(seed, stream_id=20), (count, model.latent_dim))
    if center:
        z = centerize_rows(z)
    if spherize:
        z = spherize_rows(z, 1.0)
    return z


def prior_sample_swd(model: Model, reference, priors, seed, n_proj=128, center=None, spherize=None):
    """SWD between decoded prior samples and ``reference``, one score per prior.

    Every prior is drawn from the same stream position, so the comparison
    differs only in the prior itself.
    """
    reference = np.asarray(reference)
    out = {}
    for prior in priors:
        z = prior_latents(model, prior, reference.shape[0], seed, center, spherize)
        out[prior.label] = sliced_w2(model.decode(z), reference, n_proj, seed=seed)
    return out


def swd_spread(scores: dict) -> float:
    """max - min of per-prior scores."""
    vals = list(scores.values())
    return float(max(vals) - min(vals))
