"""Corruption processes C(x_tilde | x).

Each process can draw a corrupted sample and evaluate its exact log-density.
Uniform consumption per sample is fixed (2 for ``DiscreteFlip``, 2 per bit
for ``SaltPepper``, 2 per coordinate for ``IsotropicGaussian``) so batch and
one-at-a-time corruption give identical draws.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .distributions import SampleKind, expect_kind
from .errors import SampleKindError
from .rng import RngStream, box_muller

MAX_ENUM_BITS = 12


@dataclass(frozen=True)
class DiscreteFlip:
    """Keep ``x`` with prob ``1 - eps``, otherwise resample uniformly on all K states."""

    K: int
    eps: float = 0.5

    kind = SampleKind.DISCRETE

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("DiscreteFlip needs K >= 2")
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError("eps must lie in [0, 1]")

    @property
    def stay_prob(self) -> float:
        return (1.0 - self.eps) + self.eps / self.K

    @property
    def move_prob(self) -> float:
        return self.eps / self.K

    def sample(self, x, rng: RngStream) -> int:
        x = expect_kind(x, SampleKind.DISCRETE, "input")
        self._check_state(x)
        return int(self.sample_batch(np.array([x]), rng)[0])

    def sample_batch(self, xs: np.ndarray, rng: RngStream) -> np.ndarray:
        u = rng.uniforms(2 * len(xs)).reshape(-1, 2)
        fresh = np.minimum((u[:, 1] * self.K).astype(np.int64), self.K - 1)
        return np.where(u[:, 0] < self.eps, fresh, np.asarray(xs, dtype=np.int64))

    def log_density(self, x_tilde, x) -> float:
        x_tilde = expect_kind(x_tilde, SampleKind.DISCRETE, "x_tilde")
        x = expect_kind(x, SampleKind.DISCRETE, "x")
        self._check_state(x_tilde)
        self._check_state(x)
        p = self.stay_prob if x_tilde == x else self.move_prob
        return math.log(p) if p > 0 else -math.inf

    def matrix(self) -> np.ndarray:
        """``C[x_tilde, x]`` over all K states."""
        C = np.full((self.K, self.K), self.move_prob)
        np.fill_diagonal(C, self.stay_prob)
        return C

    def _check_state(self, x: int):
        if not 0 <= x < self.K:
            raise ValueError(f"state {x} outside [0, {self.K})")


@dataclass(frozen=True)
class SaltPepper:
    """Per bit: with prob ``corrupt_prob`` replace the bit by a fair coin."""

    d: int
    corrupt_prob: float = 0.5

    kind = SampleKind.BINARY

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("SaltPepper needs d >= 1")
        if not 0.0 <= self.corrupt_prob <= 1.0:
            raise ValueError("corrupt_prob must lie in [0, 1]")

    @property
    def keep_prob(self) -> float:
        return 1.0 - 0.5 * self.corrupt_prob

    def sample(self, x, rng: RngStream) -> np.ndarray:
        x = self._check(x)
        return self.sample_batch(x[None, :], rng)[0]

    def sample_batch(self, xs: np.ndarray, rng: RngStream) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.uint8)
        if xs.ndim != 2 or xs.shape[1] != self.d:
            raise SampleKindError(f"expected binary rows of length {self.d}")
        u = rng.uniforms(2 * xs.size).reshape(xs.shape[0], self.d, 2)
        coin = (u[..., 1] < 0.5).astype(np.uint8)
        return np.where(u[..., 0] < self.corrupt_prob, coin, xs)

    def log_density(self, x_tilde, x) -> float:
        x_tilde, x = self._check(x_tilde), self._check(x)
        flips = int(np.count_nonzero(x_tilde != x))
        keep, flip = self.keep_prob, 0.5 * self.corrupt_prob
        if flips and flip == 0:
            return -math.inf
        return (self.d - flips) * math.log(keep) + (flips * math.log(flip) if flips else 0.0)

    def matrix(self) -> np.ndarray:
        """``C[s_tilde, s]`` over all ``2**d`` states; bit j of s is coordinate j."""
        if self.d > MAX_ENUM_BITS:
            raise ValueError(f"refusing to enumerate 2**{self.d} states")
        states = np.arange(2 ** self.d)
        diff = states[:, None] ^ states[None, :]
        flips = np.array([bin(v).count("1") for v in range(2 ** self.d)])[diff]
        return self.keep_prob ** (self.d - flips) * (0.5 * self.corrupt_prob) ** flips

    def _check(self, x) -> np.ndarray:
        x = expect_kind(x, SampleKind.BINARY)
        if x.size != self.d:
            raise SampleKindError(f"binary vector of length {x.size}, expected {self.d}")
        return x


@dataclass(frozen=True)
class IsotropicGaussian:
    """Add ``N(0, sigma**2 I)`` noise."""

    d: int
    sigma: float

    kind = SampleKind.REAL

    def __post_init__(self):
        if self.d < 1 or not self.sigma > 0:
            raise ValueError("IsotropicGaussian needs d >= 1 and sigma > 0")

    def sample(self, x, rng: RngStream) -> np.ndarray:
        x = self._check(x)
        return x + self.sigma * rng.normals(self.d)

    def sample_batch(self, xs: np.ndarray, rng: RngStream) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.float64)
        z = box_muller(rng.uniforms(2 * xs.size).reshape(xs.shape + (2,)))
        return xs + self.sigma * z

    def log_density(self, x_tilde, x) -> float:
        x_tilde, x = self._check(x_tilde), self._check(x)
        r2 = float(np.sum((x_tilde - x) ** 2))
        return -0.5 * r2 / self.sigma**2 - self.d * (math.log(self.sigma) + 0.5 * math.log(2 * math.pi))

    def _check(self, x) -> np.ndarray:
        x = expect_kind(x, SampleKind.REAL)
        if x.size != self.d:
            raise SampleKindError(f"real vector of length {x.size}, expected {self.d}")
        return x


CorruptionProcess = Union[DiscreteFlip, SaltPepper, IsotropicGaussian]


def corrupt(c: CorruptionProcess, x, rng: RngStream):
    return c.sample(x, rng)


def corrupt_batch(c: CorruptionProcess, xs, rng: RngStream) -> np.ndarray:
    """Corrupt rows (or discrete states) in order; same draws as repeated ``corrupt``."""
    return c.sample_batch(xs, rng)


def corruption_log_density(c: CorruptionProcess, x_tilde, x) -> float:
    return c.log_density(x_tilde, x)


def make_corruption(name: str, *, K=None, d=None, eps=0.5, corrupt_prob=0.5, sigma=None) -> CorruptionProcess:
    """Build a process from its config name (``discrete_flip|salt_pepper|gaussian``)."""
    if name == "discrete_flip":
        if K is None:
            raise ValueError("discrete_flip needs the state count K")
        return DiscreteFlip(int(K), float(eps))
    if name == "salt_pepper":
        if d is None:
            raise ValueError("salt_pepper needs the dimension d")
        return SaltPepper(int(d), float(corrupt_prob))
    if name == "gaussian":
        if d is None or sigma is None:
            raise ValueError("gaussian needs d and sigma")
        return IsotropicGaussian(int(d), float(sigma))
    raise ValueError(f"unknown corruption {name!r}")
