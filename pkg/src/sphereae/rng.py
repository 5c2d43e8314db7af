"""Pinned, splittable random streams.

Every variate in the package is derived from the raw 64-bit words of a
Philox4x64-10 counter-based generator keyed by ``(seed, stream_id)``:

* unit uniforms are ``((w >> 11) + 0.5) / 2**53``, strictly inside (0, 1);
* standard normals use Box-Muller on consecutive uniform pairs ``(u1, u2)``,
  emitting ``r*cos(2*pi*u2)`` then ``r*sin(2*pi*u2)`` with
  ``r = sqrt(-2 ln u1)``; when an odd count is requested the final sine
  variate is discarded;
* bounded integers are ``floor(u * high)``.

Given the same Philox implementation, these rules reproduce a stream exactly
in any language.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_TWO_PI = 2.0 * np.pi


class RngStream:
    """Stateful stream of variates identified by ``(seed, stream_id)``.

    Two streams with equal identifiers produce identical sequences; the
    ``draw index`` is simply the position in that sequence.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self._bitgen = np.random.Philox(key=self.seed | (self.stream_id << 64))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def substream(self, stream_id: int) -> "RngStream":
        """Fresh stream sharing this seed; independent of this stream's position."""
        return RngStream(self.seed, stream_id)

    def raw(self, size: int) -> np.ndarray:
        return self._bitgen.random_raw(int(size))

    def uniform(self, shape=()) -> np.ndarray:
        """Uniforms on the open interval (0, 1), row-major fill."""
        count = int(np.prod(shape, dtype=np.int64))
        words = self.raw(count)
        u = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * (2.0 ** -53)
        return u.reshape(shape)

    def normal(self, shape=()) -> np.ndarray:
        count = int(np.prod(shape, dtype=np.int64))
        pairs = (count + 1) // 2
        u = self.uniform((pairs, 2))
        radius = np.sqrt(-2.0 * np.log(u[:, 0]))
        angle = _TWO_PI * u[:, 1]
        z = np.empty((pairs, 2))
        z[:, 0] = radius * np.cos(angle)
        z[:, 1] = radius * np.sin(angle)
        return z.reshape(-1)[:count].reshape(shape)

    def integers(self, high: int, shape=()) -> np.ndarray:
        """Integers in ``[0, high)``."""
        if high < 1:
            raise ValueError("high must be >= 1")
        idx = np.floor(self.uniform(shape) * high).astype(np.int64)
        return np.minimum(idx, high - 1)

    def permutation(self, n: int) -> np.ndarray:
        # stable argsort of uniforms: ties are impossible in practice and,
        # if they occur, resolve by index.
        return np.argsort(self.uniform(n), kind="stable")
