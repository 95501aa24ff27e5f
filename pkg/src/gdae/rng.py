"""Counter-based SplitMix64 streams.

Draw ``i`` (1-based) of a stream is ``mix64(key + i * GAMMA)`` where ``key`` is
derived from ``(seed, stream_id)``.  Because a draw depends only on its index,
any block of the sequence can be produced in one vectorized call, and kernels
can be handed a block of uniforms up front and report how many they used.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_STREAM_SALT = 0xD1B54A32D192ED03

_U_GAMMA = np.uint64(GAMMA)
_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_TWO_M53 = 1.0 / 9007199254740992.0


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int (reference, scalar)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    # uint64 array arithmetic wraps modulo 2**64 without warnings
    z = (z ^ (z >> np.uint64(30))) * _U_M1
    z = (z ^ (z >> np.uint64(27))) * _U_M2
    return z ^ (z >> np.uint64(31))


def stream_key(seed: int, stream: int) -> int:
    return mix64(mix64(seed & MASK64) ^ mix64((stream * _STREAM_SALT + GAMMA) & MASK64))


class RngStream:
    """Deterministic uniform/normal source identified by ``(seed, stream)``.

    Single-owner: the counter advances on every draw.  ``spawn`` gives an
    independent stream sharing the seed.
    """

    def __init__(self, seed: int, stream: int = 0):
        if not (0 <= seed <= MASK64 and 0 <= stream <= MASK64):
            raise ValueError("seed and stream must be 64-bit unsigned integers")
        self.seed = int(seed)
        self.stream = int(stream)
        self.key = stream_key(self.seed, self.stream)
        self.counter = 0

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream={self.stream}, counter={self.counter})"

    def spawn(self, stream: int) -> "RngStream":
        return RngStream(self.seed, stream)

    def raw(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit outputs."""
        out = self._raw_at(self.counter, n)
        self.counter += n
        return out

    def _raw_at(self, start: int, n: int) -> np.ndarray:
        idx = np.arange(1, n + 1, dtype=np.uint64) + np.uint64(start)
        return _mix64_array(np.uint64(self.key) + idx * _U_GAMMA)

    def peek(self, n: int) -> np.ndarray:
        """Next ``n`` uniforms in [0, 1) without advancing the counter."""
        return (self._raw_at(self.counter, n) >> np.uint64(11)) * _TWO_M53

    def advance(self, n: int) -> None:
        if n < 0:
            raise ValueError("cannot rewind a stream")
        self.counter += n

    def uniforms(self, n: int) -> np.ndarray:
        out = self.peek(n)
        self.counter += n
        return out

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def normals(self, n: int) -> np.ndarray:
        """``n`` standard normals; consumes ``2 n`` uniforms."""
        return box_muller(self.uniforms(2 * n).reshape(n, 2))

    def integers(self, high: int, n: int) -> np.ndarray:
        """``n`` integers uniform on ``[0, high)``; one uniform each."""
        return np.minimum((self.uniforms(n) * high).astype(np.int64), high - 1)


def box_muller(u: np.ndarray) -> np.ndarray:
    """Map uniform pairs (last axis of length 2) to standard normals."""
    return np.sqrt(-2.0 * np.log1p(-u[..., 0])) * np.cos(2.0 * np.pi * u[..., 1])
