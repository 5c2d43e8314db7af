import json
import struct

import numpy as np
import pytest

from sphereae.checkpoint import checkpoint_bytes, load_checkpoint, parse_checkpoint, save_checkpoint
from sphereae.errors import CheckpointFormatError, DataError
from sphereae.nn import Model


@pytest.mark.parametrize("variant", ["ae", "sae", "vae"])
def test_round_trip_bit_exact(variant, tmp_path):
    model = Model.build(variant, 20, 4, hidden=(9, 7), seed=3, beta=0.5)
    model.decoder[0].bias[:] = np.pi  # non-trivial values
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, model, seed=3, steps=12)
    back, meta = load_checkpoint(path)
    assert back.variant == model.variant and back.beta == 0.5
    assert all(a.tobytes() == b.tobytes() for a, b in zip(model.parameters(), back.parameters()))
    assert (meta["seed"], meta["steps"], meta["latent_dim"]) == (3, 12, 4)
    assert checkpoint_bytes(back, seed=3, steps=12) == path.read_bytes()


def test_layout():
    buf = checkpoint_bytes(Model.build("ae", 3, 2, hidden=()))
    assert buf[:4] == b"SAEC"
    version, meta_len = struct.unpack("<IQ", buf[4:16])
    assert version == 1
    meta = json.loads(buf[16:16 + meta_len])
    assert meta["variant"] == "ae"
    # two layers: (3x2 + 2) + (2x3 + 3) float64 values
    assert len(buf) - 16 - meta_len == 8 * (8 + 9)


def test_bad_magic():
    buf = bytearray(checkpoint_bytes(Model.build("sae", 4, 2)))
    buf[0:4] = b"XXXX"
    with pytest.raises(CheckpointFormatError):
        parse_checkpoint(bytes(buf))


def test_is_data_error():
    assert issubclass(CheckpointFormatError, DataError)


def test_version():
    buf = bytearray(checkpoint_bytes(Model.build("sae", 4, 2)))
    buf[4:8] = struct.pack("<I", 9)
    with pytest.raises(CheckpointFormatError, match="version"):
        parse_checkpoint(bytes(buf))


@pytest.mark.parametrize("cut", [10, 40, -1])
def test_truncated(cut):
    buf = checkpoint_bytes(Model.build("vae", 4, 2))
    with pytest.raises(CheckpointFormatError):
        parse_checkpoint(buf[:cut])


def test_trailing():
    with pytest.raises(CheckpointFormatError, match="trailing"):
        parse_checkpoint(checkpoint_bytes(Model.build("ae", 4, 2)) + b"\0" * 8)
