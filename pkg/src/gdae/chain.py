"""Pseudo-Gibbs sampling and the exact finite-state transition oracle.

The chain alternates ``x_t ~ P(x | x_tilde_{t-1})`` and
``x_tilde_t ~ C(x_tilde | x_t)``.  For discrete state spaces the one-step
kernel on x is ``T[x_t, x_prev] = sum_xt P(x_t | xt) C(xt | x_prev)``, and
its principal eigenvector is the distribution the chain samples from.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import kernels
from .corruption import CorruptionProcess, DiscreteFlip, IsotropicGaussian, SaltPepper
from .distributions import ProbVector, SampleKind, expect_kind
from .errors import ConvergenceError, ErgodicityError, SampleKindError
from .models import BernoulliMlp, ConditionalModel, MultinomialTable, ParzenConditional
from .rng import RngStream

MAX_ORACLE_STATES = 4096
STATIONARY_TOL = 1e-13
STATIONARY_MAX_ITER = 10**6
COLUMN_TOL = 1e-12


@dataclass(frozen=True)
class ChainConfig:
    """Chain length and retention.  ``burn_in`` defaults to 10% of ``n_steps``."""

    n_steps: int
    init: Any
    burn_in: int | None = None
    thin: int = 1

    def __post_init__(self):
        if self.n_steps < 1 or self.thin < 1:
            raise ValueError("n_steps and thin must be positive")
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", self.n_steps // 10)
        if not 0 <= self.burn_in < self.n_steps:
            raise ValueError("need 0 <= burn_in < n_steps")

    def retained(self) -> np.ndarray:
        return np.arange(self.burn_in, self.n_steps, self.thin)


@dataclass(frozen=True, eq=False)
class ChainRun:
    """Retained ``x_t`` and ``x_tilde_t`` with their step indices."""

    xs: np.ndarray
    x_tildes: np.ndarray
    steps: np.ndarray
    config: ChainConfig | None = field(default=None)

    def __post_init__(self):
        if len(self.xs) != len(self.x_tildes) or len(self.xs) != len(self.steps):
            raise ValueError("xs, x_tildes and steps must have equal length")

    def __len__(self):
        return len(self.xs)


def _check_pair(m: ConditionalModel, c: CorruptionProcess):
    if m.kind is not c.kind:
        raise SampleKindError(f"model is {m.kind.value} but corruption is {c.kind.value}")


def chain_step(m: ConditionalModel, c: CorruptionProcess, x_tilde_prev, rng: RngStream):
    """One alternation: returns ``(x, x_tilde)``."""
    _check_pair(m, c)
    x = m.sample(x_tilde_prev, rng)
    return x, c.sample(x, rng)


def _stack(items, kind):
    if kind is SampleKind.DISCRETE:
        return np.array(items, dtype=np.int64)
    return np.array(items)


def run_chain(m: ConditionalModel, c: CorruptionProcess, cfg: ChainConfig, rng: RngStream,
              fast: bool = True) -> ChainRun:
    """Run ``cfg.n_steps`` alternations from ``cfg.init`` (``x_0``).

    ``x_0`` is corrupted first, then each step samples ``x_t`` and corrupts
    it.  Table/flip and Parzen/Gaussian pairs go through compiled kernels
    that draw exactly the same uniforms as the step-by-step path
    (``fast=False``).
    """
    _check_pair(m, c)
    x0 = expect_kind(cfg.init, m.kind, "init")
    xt = c.sample(x0, rng)
    keep = cfg.retained()
    if fast and isinstance(m, MultinomialTable) and isinstance(c, DiscreteFlip):
        if m.K != c.K:
            raise ValueError(f"model has K={m.K} but corruption has K={c.K}")
        if m.undefined_rows:
            raise ValueError(f"conditional rows {m.undefined_rows} undefined (alpha=0, no counts)")
        u = rng.uniforms(3 * cfg.n_steps).reshape(cfg.n_steps, 3)
        xs, xts = kernels.discrete_chain(np.ascontiguousarray(m.cdf), float(c.eps), int(xt), u)
        return ChainRun(xs[keep], xts[keep], keep, cfg)
    if fast and isinstance(m, ParzenConditional) and isinstance(c, IsotropicGaussian):
        w = 1 + 4 * m.d
        u = rng.uniforms(w * cfg.n_steps).reshape(cfg.n_steps, w)
        xs, xts = kernels.parzen_chain(m.x_anchors, m.xt_anchors, m.sigma_x, m.sigma_c,
                                       float(c.sigma), np.asarray(xt, dtype=np.float64), u)
        return ChainRun(xs[keep], xts[keep], keep, cfg)
    xs, xts = [], []
    keep_set = set(keep.tolist())
    for t in range(cfg.n_steps):
        x, xt = chain_step(m, c, xt, rng)
        if t in keep_set:
            xs.append(x)
            xts.append(xt)
    return ChainRun(_stack(xs, m.kind), _stack(xts, m.kind), keep, cfg)


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """``T[next, prev]``; columns are conditional distributions of the next state."""

    T: np.ndarray

    def __post_init__(self):
        T = np.array(self.T, dtype=np.float64)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise ValueError("transition matrix must be square")
        if np.any(T < 0) or not np.all(np.isfinite(T)):
            raise ValueError("transition entries must be finite and non-negative")
        T.setflags(write=False)
        object.__setattr__(self, "T", T)

    @property
    def K(self) -> int:
        return self.T.shape[0]

    def column_error(self) -> float:
        return float(np.max(np.abs(self.T.sum(axis=0) - 1.0)))


def binary_states(d: int) -> np.ndarray:
    """All ``2**d`` binary vectors; row s has bit j of s in column j."""
    s = np.arange(2**d)
    return ((s[:, None] >> np.arange(d)[None, :]) & 1).astype(np.uint8)


def model_matrix(m: ConditionalModel) -> np.ndarray:
    """``P[x_tilde, x]`` over the enumerated state space."""
    if isinstance(m, MultinomialTable):
        return np.asarray(m.conditional)
    if isinstance(m, BernoulliMlp):
        if m.d > 12:
            raise ValueError(f"refusing to enumerate 2**{m.d} states")
        S = binary_states(m.d)
        return np.exp(m.log_prob_matrix(S, S)).T
    raise SampleKindError(f"no finite state space for {type(m).__name__}")


def corruption_matrix(c: CorruptionProcess) -> np.ndarray:
    if isinstance(c, (DiscreteFlip, SaltPepper)):
        return c.matrix()
    raise SampleKindError(f"no finite state space for {type(c).__name__}")


def build_transition_matrix(m: ConditionalModel, c: CorruptionProcess, K: int | None = None) -> TransitionMatrix:
    """Exact one-step kernel by summation over every x_tilde.

    Works for tables with ``DiscreteFlip`` and, by enumerating ``2**d``
    states, for small Bernoulli MLPs with ``SaltPepper``.  Undefined model
    rows contribute nothing, which leaves columns short of unit mass.
    """
    _check_pair(m, c)
    P = model_matrix(m)
    C = corruption_matrix(c)
    if P.shape != C.shape:
        raise ValueError(f"model has {P.shape[0]} states, corruption has {C.shape[0]}")
    if K is not None and K != P.shape[0]:
        raise ValueError(f"K={K} but the state space has {P.shape[0]} states")
    if P.shape[0] > MAX_ORACLE_STATES:
        raise ValueError(f"oracle limited to {MAX_ORACLE_STATES} states")
    return TransitionMatrix(P.T @ C)


def stationary_distribution(T: TransitionMatrix, tol: float = STATIONARY_TOL,
                            max_iter: int = STATIONARY_MAX_ITER) -> ProbVector:
    """Principal eigenvector by power iteration from the uniform vector.

    Raises
    ------
    ErgodicityError
        If some entry is not strictly positive, or a column does not carry
        unit mass (an undefined model row).
    ConvergenceError
        If successive iterates are still ``tol`` apart after ``max_iter``.
    """
    if not isinstance(T, TransitionMatrix):
        T = TransitionMatrix(T)
    zeros = np.argwhere(T.T <= 0)
    if len(zeros):
        i, j = zeros[0]
        raise ErgodicityError(f"transition not strictly positive: {len(zeros)} zero entries, first T[{i}, {j}]")
    err = T.column_error()
    if err > COLUMN_TOL:
        raise ErgodicityError(f"transition columns leak mass (max deviation {err:.3g})")
    v, it = kernels.power_iteration(np.ascontiguousarray(T.T), float(tol), int(max_iter))
    if it < 0:
        raise ConvergenceError(f"power iteration did not reach TV < {tol:g} in {max_iter} iterations")
    return ProbVector(v)


def build_true_conditional(p, c: DiscreteFlip) -> MultinomialTable:
    """Bayes conditional ``P(x | x_tilde) ∝ p(x) C(x_tilde | x)`` as an alpha=0 table."""
    probs = np.asarray(p.probs if isinstance(p, ProbVector) else p, dtype=np.float64)
    if not isinstance(c, (DiscreteFlip, SaltPepper)):
        raise SampleKindError("exact conditional needs a finite corruption process")
    C = c.matrix()
    if probs.size != C.shape[0]:
        raise ValueError(f"p has {probs.size} states, corruption has {C.shape[0]}")
    if np.any(probs <= 0):
        raise ValueError(f"state {int(np.argmin(probs))} has zero probability")
    joint = C * probs[None, :]
    return MultinomialTable(joint / joint.sum(axis=1, keepdims=True), alpha=0.0)


@dataclass
class ErgodicityReport:
    """Zero entries found in the model, corruption and transition matrices.

    Model and corruption pairs are ``(x_tilde, x)``; transition pairs are
    ``(x_next, x_prev)``.
    """

    model_violations: list = field(default_factory=list)
    corruption_violations: list = field(default_factory=list)
    transition_violations: list = field(default_factory=list)
    undefined_rows: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.model_violations or self.corruption_violations
                    or self.transition_violations or self.undefined_rows)

    def rows(self):
        for kind in ("model", "corruption", "transition"):
            for a, b in getattr(self, f"{kind}_violations"):
                yield kind, a, b
        for r in self.undefined_rows:
            yield "undefined_row", r, -1


def check_ergodicity(m: ConditionalModel, c: CorruptionProcess, K: int | None = None) -> ErgodicityReport:
    """Report every non-positive entry (report only, never raises on violations)."""
    P = model_matrix(m)
    C = corruption_matrix(c)
    if K is not None and K != P.shape[0]:
        raise ValueError(f"K={K} but the state space has {P.shape[0]} states")
    T = P.T @ C
    undefined = [int(r) for r in np.flatnonzero(P.sum(axis=1) == 0)]
    return ErgodicityReport(
        model_violations=[tuple(map(int, ij)) for ij in np.argwhere(P <= 0)],
        corruption_violations=[tuple(map(int, ij)) for ij in np.argwhere(C <= 0)],
        transition_violations=[tuple(map(int, ij)) for ij in np.argwhere(T <= 0)],
        undefined_rows=undefined,
    )


def pair_histograms(run: ChainRun, K: int):
    """Joint counts of ``(x_t, x_tilde_{t-1})`` and ``(x_t, x_tilde_t)`` for a discrete run.

    Only consecutive retained steps (thin = 1) contribute to the lagged pairs.
    """
    xs, xts, steps = run.xs, run.x_tildes, run.steps
    same = np.zeros((K, K))
    np.add.at(same, (xs, xts), 1)
    lagged = np.zeros((K, K))
    ok = np.flatnonzero(np.diff(steps) == 1) + 1
    np.add.at(lagged, (xs[ok], xts[ok - 1]), 1)
    return lagged, same
