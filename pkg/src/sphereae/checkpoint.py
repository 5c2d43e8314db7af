"""Binary checkpoints.

Layout (all integers little-endian)::

    b"SAEC" | u32 version | u64 metadata length | UTF-8 JSON metadata |
    float64 parameters in declaration order (row-major weight, then bias,
    encoder layers first)
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import CheckpointFormatError
from .nn import Dense, LayerSpec, Model

MAGIC = b"SAEC"
VERSION = 1


def checkpoint_bytes(model: Model, **metadata) -> bytes:
    meta = {
        "variant": model.variant.value,
        "latent_dim": model.latent_dim,
        "beta": model.beta,
        "encoder": [_spec_dict(L.spec) for L in model.encoder],
        "decoder": [_spec_dict(L.spec) for L in model.decoder],
        **metadata,
    }
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    params = b"".join(np.ascontiguousarray(p, dtype="<f8").tobytes() for p in model.parameters())
    return MAGIC + struct.pack("<IQ", VERSION, len(blob)) + blob + params


def save_checkpoint(path, model: Model, **metadata):
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(model, **metadata))


def _spec_dict(spec: LayerSpec):
    return {"in": spec.in_dim, "out": spec.out_dim, "activation": spec.activation.value}


def parse_checkpoint(buf: bytes):
    """Return ``(model, metadata)``."""
    if len(buf) < 16 or buf[:4] != MAGIC:
        raise CheckpointFormatError("not a checkpoint: bad magic bytes")
    version, meta_len = struct.unpack_from("<IQ", buf, 4)
    if version != VERSION:
        raise CheckpointFormatError(f"unsupported checkpoint version {version}")
    start = 16
    if len(buf) < start + meta_len:
        raise CheckpointFormatError("truncated metadata")
    try:
        meta = json.loads(buf[start:start + meta_len].decode("utf-8"))
        enc_specs = [LayerSpec(s["in"], s["out"], s["activation"]) for s in meta["encoder"]]
        dec_specs = [LayerSpec(s["in"], s["out"], s["activation"]) for s in meta["decoder"]]
    except (ValueError, KeyError, TypeError) as exc:
        raise CheckpointFormatError(f"bad metadata: {exc}") from exc
    offset = start + meta_len
    layers = []
    for spec in enc_specs + dec_specs:
        arrays = []
        for shape in ((spec.in_dim, spec.out_dim), (spec.out_dim,)):
            count = int(np.prod(shape))
            end = offset + 8 * count
            if len(buf) < end:
                raise CheckpointFormatError("truncated parameter data")
            arrays.append(np.frombuffer(buf, dtype="<f8", count=count, offset=offset).reshape(shape).astype(np.float64))
            offset = end
        layers.append(Dense(spec, arrays[0], arrays[1]))
    if offset != len(buf):
        raise CheckpointFormatError(f"{len(buf) - offset} trailing bytes after parameters")
    n_enc = len(enc_specs)
    model = Model(meta["variant"], layers[:n_enc], layers[n_enc:], meta["latent_dim"], meta.get("beta", 1.0))
    return model, meta


def load_checkpoint(path):
    with open(path, "rb") as fh:
        return parse_checkpoint(fh.read())
