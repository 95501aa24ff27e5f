"""Trainable reconstruction conditionals P(x | x_tilde).

Three families share one surface (``log_prob``, ``sample`` and their batch
forms, plus ``log_prob_matrix`` for the likelihood bound):

* ``MultinomialTable`` -- smoothed count table over K discrete states.
* ``ParzenConditional`` -- kernel mixture over stored (x, x_tilde) pairs.
* ``BernoulliMlp`` -- one tanh hidden layer, factorized Bernoulli output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Union

import numpy as np

from . import kernels
from .distributions import SampleKind, categorical_index, expect_kind
from .errors import FormatError, SampleKindError
from .rng import RngStream

P_MIN = 1e-7
P_MAX = 1.0 - 1e-7
MAGIC = "GDAE-MODEL v1"


@dataclass(frozen=True, eq=False)
class MultinomialTable:
    """Count table ``counts[x_tilde, x]`` with Laplace pseudo-count ``alpha``.

    With ``alpha == 0`` a row with no counts has no defined conditional; its
    probabilities are reported as all zeros and sampling from it fails.
    """

    counts: np.ndarray
    alpha: float = 0.1

    kind = SampleKind.DISCRETE

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("counts must be a square K x K matrix")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValueError("counts must be finite and non-negative")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def K(self) -> int:
        return self.counts.shape[0]

    @cached_property
    def conditional(self) -> np.ndarray:
        """Row-stochastic ``P[x_tilde, x]`` (undefined rows are zero)."""
        num = self.counts + self.alpha
        den = num.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            P = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
        P.setflags(write=False)
        return P

    @cached_property
    def cdf(self) -> np.ndarray:
        return np.cumsum(self.conditional, axis=1)

    @property
    def undefined_rows(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.conditional.sum(axis=1) == 0)]

    def log_prob(self, x, x_tilde) -> float:
        x = self._state(x, "x")
        x_tilde = self._state(x_tilde, "x_tilde")
        p = self.conditional[x_tilde, x]
        return math.log(p) if p > 0 else -math.inf

    def log_prob_batch(self, xs, x_tildes) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.conditional[np.asarray(x_tildes), np.asarray(xs)])

    def log_prob_matrix(self, xs, x_tildes) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.conditional[np.asarray(x_tildes)][:, np.asarray(xs)].T)

    def sample(self, x_tilde, rng: RngStream) -> int:
        x_tilde = self._state(x_tilde, "x_tilde")
        return int(self.sample_batch(np.array([x_tilde]), rng)[0])

    def sample_batch(self, x_tildes, rng: RngStream) -> np.ndarray:
        x_tildes = np.asarray(x_tildes, dtype=np.int64)
        bad = set(x_tildes.tolist()) & set(self.undefined_rows)
        if bad:
            raise ValueError(f"conditional row(s) {sorted(bad)} undefined (alpha=0, no counts)")
        u = rng.uniforms(len(x_tildes))
        out = np.empty(len(x_tildes), dtype=np.int64)
        for i, (xt, ui) in enumerate(zip(x_tildes, u)):
            out[i] = categorical_index(self.cdf[xt], ui)
        return out

    def _state(self, x, what):
        x = expect_kind(x, SampleKind.DISCRETE, what)
        if not 0 <= x < self.K:
            raise ValueError(f"{what}={x} outside [0, {self.K})")
        return x


def fit_multinomial(pairs, K: int, alpha: float = 0.1) -> MultinomialTable:
    """Count table from ``(x, x_tilde)`` pairs."""
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if arr.size and (arr.min() < 0 or arr.max() >= K):
        raise ValueError(f"pair value outside [0, {K})")
    counts = np.zeros((K, K))
    np.add.at(counts, (arr[:, 1], arr[:, 0]), 1.0)
    return MultinomialTable(counts, alpha)


def median_heuristic(points: np.ndarray, max_points: int = 2000) -> float:
    """Median pairwise Euclidean distance (over the first ``max_points`` rows)."""
    pts = np.asarray(points, dtype=np.float64)[:max_points]
    if len(pts) < 2:
        return 1.0
    sq = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
    iu = np.triu_indices(len(pts), k=1)
    med = float(np.median(np.sqrt(sq[iu])))
    return med if med > 0 else 1.0


@dataclass(frozen=True, eq=False)
class ParzenConditional:
    """``P(x | x_tilde) = sum_i w_i(x_tilde) N(x; x_i, sigma_x^2 I)``.

    Weights are a softmax of ``-|x_tilde - x_tilde_i|^2 / (2 sigma_c^2)``.
    """

    x_anchors: np.ndarray
    xt_anchors: np.ndarray
    sigma_x: float
    sigma_c: float

    kind = SampleKind.REAL

    def __post_init__(self):
        xa = np.ascontiguousarray(self.x_anchors, dtype=np.float64)
        xta = np.ascontiguousarray(self.xt_anchors, dtype=np.float64)
        if xa.ndim != 2 or xa.shape != xta.shape or len(xa) == 0:
            raise ValueError("anchors must be matching non-empty (n, d) arrays")
        if not (self.sigma_x > 0 and self.sigma_c > 0):
            raise ValueError("bandwidths must be positive")
        object.__setattr__(self, "x_anchors", xa)
        object.__setattr__(self, "xt_anchors", xta)

    @classmethod
    def from_pairs(cls, xs, x_tildes, sigma_x=None, sigma_c=None) -> "ParzenConditional":
        """Median-heuristic defaults: ``sigma_c`` from the x_tilde anchors, ``sigma_x = sigma_c / 2``."""
        if sigma_c is None:
            sigma_c = median_heuristic(x_tildes)
        if sigma_x is None:
            sigma_x = 0.5 * sigma_c
        return cls(np.asarray(xs), np.asarray(x_tildes), float(sigma_x), float(sigma_c))

    @property
    def n(self) -> int:
        return self.x_anchors.shape[0]

    @property
    def d(self) -> int:
        return self.x_anchors.shape[1]

    def log_prob(self, x, x_tilde) -> float:
        x, x_tilde = self._vec(x, "x"), self._vec(x_tilde, "x_tilde")
        return float(self.log_prob_batch(x[None], x_tilde[None])[0])

    def log_prob_batch(self, xs, x_tildes) -> np.ndarray:
        return kernels.parzen_log_prob_rows(
            np.ascontiguousarray(xs, dtype=np.float64), np.ascontiguousarray(x_tildes, dtype=np.float64),
            self.x_anchors, self.xt_anchors, self.sigma_x, self.sigma_c)

    def log_prob_matrix(self, xs, x_tildes) -> np.ndarray:
        return kernels.parzen_log_prob_matrix(
            np.ascontiguousarray(xs, dtype=np.float64), np.ascontiguousarray(x_tildes, dtype=np.float64),
            self.x_anchors, self.xt_anchors, self.sigma_x, self.sigma_c)

    def sample(self, x_tilde, rng: RngStream) -> np.ndarray:
        x_tilde = self._vec(x_tilde, "x_tilde")
        return self.sample_batch(x_tilde[None], rng)[0]

    def sample_batch(self, x_tildes, rng: RngStream) -> np.ndarray:
        # per row: 1 uniform for the component, 2 d for the Gaussian offset
        x_tildes = np.asarray(x_tildes, dtype=np.float64)
        d = self.d
        u = rng.uniforms(len(x_tildes) * (1 + 2 * d)).reshape(len(x_tildes), 1 + 2 * d)
        out = np.empty((len(x_tildes), d))
        for r, xt in enumerate(x_tildes):
            cdf = np.cumsum(np.exp(kernels.numpy_backend.parzen_weights(xt, self.xt_anchors, self.sigma_c)))
            i = categorical_index(cdf, u[r, 0])
            z = np.sqrt(-2.0 * np.log1p(-u[r, 1::2])) * np.cos(2.0 * np.pi * u[r, 2::2])
            out[r] = self.x_anchors[i] + self.sigma_x * z
        return out

    def _vec(self, v, what):
        v = expect_kind(v, SampleKind.REAL, what)
        if v.size != self.d:
            raise SampleKindError(f"{what} has length {v.size}, expected {self.d}")
        return v


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class MlpGradient(NamedTuple):
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray


@dataclass(eq=False)
class BernoulliMlp:
    """``p = logistic(W2 tanh(W1 x_tilde + b1) + b2)``, clamped to [1e-7, 1 - 1e-7]."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    kind = SampleKind.BINARY

    def __post_init__(self):
        self.W1 = np.array(self.W1, dtype=np.float64)
        self.b1 = np.array(self.b1, dtype=np.float64)
        self.W2 = np.array(self.W2, dtype=np.float64)
        self.b2 = np.array(self.b2, dtype=np.float64)
        h, d = self.W1.shape
        if self.b1.shape != (h,) or self.W2.shape != (d, h) or self.b2.shape != (d,):
            raise ValueError("inconsistent MLP parameter shapes")

    @classmethod
    def zeros(cls, d: int, h: int) -> "BernoulliMlp":
        return cls(np.zeros((h, d)), np.zeros(h), np.zeros((d, h)), np.zeros(d))

    @classmethod
    def initialize(cls, d: int, h: int, rng: RngStream) -> "BernoulliMlp":
        """Uniform(+-1/sqrt(fan_in)) weights, zero biases."""
        W1 = (2.0 * rng.uniforms(h * d) - 1.0).reshape(h, d) / math.sqrt(d)
        W2 = (2.0 * rng.uniforms(d * h) - 1.0).reshape(d, h) / math.sqrt(h)
        return cls(W1, np.zeros(h), W2, np.zeros(d))

    @property
    def d(self) -> int:
        return self.W1.shape[1]

    @property
    def h(self) -> int:
        return self.W1.shape[0]

    def params(self) -> MlpGradient:
        return MlpGradient(self.W1, self.b1, self.W2, self.b2)

    def copy(self) -> "BernoulliMlp":
        return BernoulliMlp(*(a.copy() for a in self.params()))

    def forward(self, x_tildes):
        """Hidden activations and unclamped output probabilities for rows of ``x_tildes``."""
        H = np.tanh(np.asarray(x_tildes, dtype=np.float64) @ self.W1.T + self.b1)
        return H, _sigmoid(H @ self.W2.T + self.b2)

    def probs(self, x_tildes) -> np.ndarray:
        return np.clip(self.forward(np.atleast_2d(x_tildes))[1], P_MIN, P_MAX)

    def log_prob(self, x, x_tilde) -> float:
        x, x_tilde = self._bits(x, "x"), self._bits(x_tilde, "x_tilde")
        return float(self.log_prob_batch(x[None], x_tilde[None])[0])

    def log_prob_batch(self, xs, x_tildes) -> np.ndarray:
        p = self.probs(x_tildes)
        xs = np.asarray(xs, dtype=np.float64)
        return (xs * np.log(p) + (1.0 - xs) * np.log1p(-p)).sum(axis=1)

    def log_prob_matrix(self, xs, x_tildes) -> np.ndarray:
        p = self.probs(x_tildes)
        xs = np.asarray(xs, dtype=np.float64)
        return xs @ np.log(p).T + (1.0 - xs) @ np.log1p(-p).T

    def sample(self, x_tilde, rng: RngStream) -> np.ndarray:
        x_tilde = self._bits(x_tilde, "x_tilde")
        return self.sample_batch(x_tilde[None], rng)[0]

    def sample_batch(self, x_tildes, rng: RngStream) -> np.ndarray:
        p = self.probs(x_tildes)
        return (rng.uniforms(p.size).reshape(p.shape) < p).astype(np.uint8)

    def _bits(self, v, what):
        v = expect_kind(v, SampleKind.BINARY, what)
        if v.size != self.d:
            raise SampleKindError(f"{what} has length {v.size}, expected {self.d}")
        return v


ConditionalModel = Union[MultinomialTable, ParzenConditional, BernoulliMlp]


def cond_log_prob(m: ConditionalModel, x, x_tilde) -> float:
    return m.log_prob(x, x_tilde)


def cond_sample(m: ConditionalModel, x_tilde, rng: RngStream):
    return m.sample(x_tilde, rng)


def mlp_loss_and_grad(m: BernoulliMlp, xs, x_tildes):
    """Mean ``-log P(x | x_tilde)`` over rows and its gradient.

    The output-layer error is ``p - x`` with the unclamped logistic, i.e. the
    exact derivative wherever the clamp is inactive.  ``xs`` may hold soft
    targets in [0, 1].
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    XT = np.atleast_2d(np.asarray(x_tildes, dtype=np.float64))
    if xs.shape != XT.shape or xs.shape[1] != m.d:
        raise SampleKindError(f"expected matching (n, {m.d}) arrays, got {xs.shape} and {XT.shape}")
    n = xs.shape[0]
    H, p = m.forward(XT)
    pc = np.clip(p, P_MIN, P_MAX)
    loss = -float((xs * np.log(pc) + (1.0 - xs) * np.log1p(-pc)).sum()) / n
    delta = (p - xs) / n
    dH = (delta @ m.W2) * (1.0 - H * H)
    grad = MlpGradient(dH.T @ XT, dH.sum(axis=0), delta.T @ H, delta.sum(axis=0))
    return loss, grad


def mlp_grad(m: BernoulliMlp, x, x_tilde) -> MlpGradient:
    """Gradient of ``-log P(x | x_tilde)`` for a single pair."""
    return mlp_loss_and_grad(m, x, x_tilde)[1]


# -- persistence ------------------------------------------------------------

def _fmt(a) -> str:
    return " ".join("%.17g" % v for v in np.ravel(a))


def dumps(m: ConditionalModel) -> str:
    lines = [MAGIC]
    if isinstance(m, MultinomialTable):
        lines += ["table", f"{m.K} {'%.17g' % m.alpha}"]
        lines += [_fmt(row) for row in m.counts]
    elif isinstance(m, ParzenConditional):
        lines += ["parzen", f"{m.n} {m.d} {'%.17g' % m.sigma_x} {'%.17g' % m.sigma_c}"]
        lines += [_fmt(np.concatenate([a, b])) for a, b in zip(m.x_anchors, m.xt_anchors)]
    elif isinstance(m, BernoulliMlp):
        lines += ["mlp", f"{m.d} {m.h}"]
        lines += [_fmt(row) for row in m.W1] + [_fmt(m.b1)]
        lines += [_fmt(row) for row in m.W2] + [_fmt(m.b2)]
    else:
        raise TypeError(f"cannot serialize {type(m).__name__}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> ConditionalModel:
    lines = text.splitlines()
    if len(lines) < 3 or lines[0].strip() != MAGIC:
        raise FormatError(f"missing magic line {MAGIC!r}")
    tag = lines[1].strip()
    header = lines[2].split()
    try:
        body = np.array(" ".join(lines[3:]).split(), dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"non-numeric token in model body: {exc}") from None

    def need(count):
        if body.size != count:
            raise FormatError(f"{tag} model body has {body.size} numbers, expected {count}")

    try:
        if tag == "table":
            K, alpha = int(header[0]), float(header[1])
            need(K * K)
            return MultinomialTable(body.reshape(K, K), alpha)
        if tag == "parzen":
            n, d = int(header[0]), int(header[1])
            need(n * 2 * d)
            rows = body.reshape(n, 2 * d)
            return ParzenConditional(rows[:, :d], rows[:, d:], float(header[2]), float(header[3]))
        if tag == "mlp":
            d, h = int(header[0]), int(header[1])
            need(h * d + h + d * h + d)
            cut = np.cumsum([h * d, h, d * h])
            W1, b1, W2, b2 = np.split(body, cut)
            return BernoulliMlp(W1.reshape(h, d), b1, W2.reshape(d, h), b2)
    except (IndexError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"bad {tag} header {lines[2]!r}: {exc}") from None
    raise FormatError(f"unknown model family {tag!r}")


def save_model(m: ConditionalModel, path) -> None:
    Path(path).write_text(dumps(m), encoding="utf-8", newline="\n")


def load_model(path) -> ConditionalModel:
    return loads(Path(path).read_text(encoding="utf-8"))
