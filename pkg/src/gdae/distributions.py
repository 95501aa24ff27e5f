"""Finite distributions, sample variants and divergence helpers."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import SampleKindError
from .rng import RngStream

NORM_TOL = 1e-9
NORM_FAIL = 1e-6


class SampleKind(enum.Enum):
    DISCRETE = "discrete"
    BINARY = "binary"
    REAL = "real"


def sample_kind(x) -> SampleKind:
    """Infer the variant of a single sample.

    Python/numpy integers are discrete states, 1-D integer or bool arrays are
    binary vectors and 1-D float arrays are real vectors.
    """
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return SampleKind.DISCRETE
    if isinstance(x, np.ndarray):
        if x.ndim == 0 and np.issubdtype(x.dtype, np.integer):
            return SampleKind.DISCRETE
        if x.ndim == 1:
            if x.dtype == np.bool_ or np.issubdtype(x.dtype, np.integer):
                return SampleKind.BINARY
            if np.issubdtype(x.dtype, np.floating):
                return SampleKind.REAL
    raise SampleKindError(f"not a recognised sample: {x!r}")


def expect_kind(x, kind: SampleKind, what: str = "sample"):
    got = sample_kind(x)
    if got is not kind:
        raise SampleKindError(f"{what} is {got.value}, expected {kind.value}")
    if kind is SampleKind.BINARY:
        x = np.asarray(x)
        if x.size and (x.min() < 0 or x.max() > 1):
            raise SampleKindError(f"{what} has entries outside {{0, 1}}")
        return x.astype(np.uint8, copy=False)
    if kind is SampleKind.DISCRETE:
        return int(x)
    return np.asarray(x, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class ProbVector:
    """Normalized probability vector over ``K`` states.

    Sums within 1e-9 of one are kept as given, sums within 1e-6 are
    renormalized, and anything further off is rejected as a logic error
    rather than float drift.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64).ravel()
        if p.size == 0:
            raise ValueError("empty probability vector")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("probabilities must be finite and non-negative")
        total = p.sum()
        if abs(total - 1.0) > NORM_FAIL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        if abs(total - 1.0) > NORM_TOL:
            p = p / total
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def K(self) -> int:
        return self.probs.size

    @classmethod
    def uniform(cls, K: int) -> "ProbVector":
        return cls(np.full(K, 1.0 / K))

    @classmethod
    def from_counts(cls, counts) -> "ProbVector":
        c = np.asarray(counts, dtype=np.float64)
        return cls(c / c.sum())

    def __len__(self):
        return self.K

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    def __repr__(self):
        return f"ProbVector({np.array2string(self.probs, precision=4)})"


def _as_probs(p) -> np.ndarray:
    return p.probs if isinstance(p, ProbVector) else np.asarray(p, dtype=np.float64)


def categorical_index(cdf: np.ndarray, u):
    """Index of the first cumulative weight exceeding ``u * total``.

    ``cdf`` is an unnormalized cumulative sum; zero-weight states are never
    returned.  Works elementwise on an array of ``u``.
    """
    return np.searchsorted(cdf, u * cdf[-1], side="right")


def sample_categorical(p, rng: RngStream) -> int:
    """Draw one state from ``p``; consumes a single uniform."""
    return int(categorical_index(np.cumsum(_as_probs(p)), rng.uniform()))


def total_variation(p, q) -> float:
    a, b = _as_probs(p), _as_probs(q)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    return 0.5 * float(np.abs(a - b).sum())


def log_sum_exp(xs, axis=None):
    """Stable ``log(sum(exp(xs)))``; all ``-inf`` inputs give ``-inf``."""
    a = np.asarray(xs, dtype=np.float64)
    if a.size == 0:
        raise ValueError("log_sum_exp of an empty input")
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    if axis is None:
        return float(out.reshape(()))
    return np.squeeze(out, axis=axis)
