"""Denoising training with plain or walkback corruption.

Walkback: starting from a training example, alternate corruption and model
resampling, continuing after each corruption with probability ``p`` (or for
a fixed number of rounds).  Every corrupted point visited is paired with the
original example as the reconstruction target.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .corruption import CorruptionProcess, DiscreteFlip
from .distributions import SampleKind, expect_kind
from .errors import SampleKindError, TrainingError
from .models import BernoulliMlp, ConditionalModel, MultinomialTable, ParzenConditional, fit_multinomial, mlp_loss_and_grad
from .rng import RngStream

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    minibatch: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    lr_decay: float = 0.99
    weight_decay: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.minibatch < 1:
            raise ValueError("epochs and minibatch must be positive")
        if self.learning_rate < 0 or self.weight_decay < 0:
            raise ValueError("learning_rate and weight_decay must be >= 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if not 0.0 < self.lr_decay <= 1.0:
            raise ValueError("lr_decay must lie in (0, 1]")


@dataclass(frozen=True)
class WalkbackConfig:
    """Geometric walks (continue with prob ``p``, at most ``max_steps``) or fixed-length walks."""

    enabled: bool = False
    p: float = 0.5
    max_steps: int = 20
    fixed_steps: int | None = None

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError("walkback p must lie in (0, 1)")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.fixed_steps is not None and self.fixed_steps < 1:
            raise ValueError("fixed_steps must be >= 1")


@dataclass
class TrainingMetrics:
    train_nll: list = field(default_factory=list)
    valid_nll: list = field(default_factory=list)
    seconds: list = field(default_factory=list)

    def rows(self):
        for i, (tr, sec) in enumerate(zip(self.train_nll, self.seconds)):
            va = self.valid_nll[i] if i < len(self.valid_nll) else math.nan
            yield i + 1, tr, va, sec


def walkback_rollout(m: ConditionalModel, c: CorruptionProcess, x, wb: WalkbackConfig, rng: RngStream) -> list:
    """Corrupted points visited by one walk from ``x`` (each is paired with ``x``).

    Per round: corrupt the current point, then (geometric mode) draw
    ``u ~ U(0, 1)``; stop when ``u > p`` or the walk has ``max_steps``
    points, otherwise resample the current point from the model.
    """
    if m.kind is not c.kind:
        raise SampleKindError(f"model is {m.kind.value} but corruption is {c.kind.value}")
    xstar = expect_kind(x, m.kind, "x")
    out = []
    while True:
        xt = c.sample(xstar, rng)
        out.append(xt)
        if wb.fixed_steps is not None:
            if len(out) >= wb.fixed_steps:
                return out
        else:
            u = rng.uniform()
            if u > wb.p or len(out) >= wb.max_steps:
                return out
        xstar = m.sample(xt, rng)


def walkback_lengths(m: ConditionalModel, c: CorruptionProcess, xs, wb: WalkbackConfig, rng: RngStream,
                     chunk: int = 10_000):
    """Walk lengths and flattened corrupted points for many rollouts.

    Uses the compiled kernel for table/flip pairs (same draws as
    ``walkback_rollout``), otherwise loops over ``walkback_rollout``.
    """
    xs = np.asarray(xs)
    if isinstance(m, MultinomialTable) and isinstance(c, DiscreteFlip) and not m.undefined_rows:
        fixed = wb.fixed_steps or 0
        per = 4 * (fixed or wb.max_steps)
        lengths, points = [], []
        for s in range(0, len(xs), chunk):
            block = xs[s:s + chunk].astype(np.int64)
            u = rng.peek(per * len(block))
            ln, pts, used = kernels.discrete_walkback(np.ascontiguousarray(m.cdf), float(c.eps), block,
                                                      float(wb.p), int(wb.max_steps), int(fixed), u)
            rng.advance(int(used))
            lengths.append(ln)
            points.append(pts)
        return np.concatenate(lengths), np.concatenate(points)
    lengths, points = [], []
    for x in xs:
        walk = walkback_rollout(m, c, x, wb, rng)
        lengths.append(len(walk))
        points.extend(walk)
    return np.array(lengths, dtype=np.int64), np.array(points)


def walkback_batch(m: BernoulliMlp, c: CorruptionProcess, X: np.ndarray, wb: WalkbackConfig, rng: RngStream):
    """Vectorized walkback over a minibatch.

    All rows advance in lockstep (inactive rows are dropped), so draws are
    consumed in a different order from per-row ``walkback_rollout``.
    Returns ``(targets, corrupted)`` with one row per training pair.
    """
    idx = np.arange(len(X))
    cur = X
    targets, corrupted = [], []
    rounds = 0
    while len(idx):
        rounds += 1
        xt = c.sample_batch(cur, rng)
        targets.append(X[idx])
        corrupted.append(xt)
        if wb.fixed_steps is not None:
            if rounds >= wb.fixed_steps:
                break
            go = np.ones(len(idx), dtype=bool)
        else:
            go = rng.uniforms(len(idx)) <= wb.p
            if rounds >= wb.max_steps:
                break
        idx, xt = idx[go], xt[go]
        if len(idx):
            cur = m.sample_batch(xt, rng)
    return np.concatenate(targets), np.concatenate(corrupted)


def _mean_nll(m: BernoulliMlp, X, c, rng):
    return -float(m.log_prob_batch(X, c.sample_batch(X, rng)).mean())


def train_dae(data, c: CorruptionProcess, cfg: TrainConfig, wb: WalkbackConfig | None = None,
              hidden: int = 256, valid=None, model: BernoulliMlp | None = None):
    """Minibatch SGD with momentum on mean ``-log P(x | x_tilde)``.

    Each minibatch draws fresh corruptions (plain) or walkback pairs from the
    model as it stands at the start of the minibatch.  Deterministic given
    ``cfg.seed``.  Returns ``(model, metrics)``.
    """
    wb = wb or WalkbackConfig()
    X = np.asarray(data, dtype=np.uint8)
    if X.ndim != 2:
        raise SampleKindError("training data must be an (n, d) binary array")
    n, d = X.shape
    if c.kind is not SampleKind.BINARY or c.d != d:
        raise SampleKindError(f"corruption does not match binary data of dimension {d}")
    if model is None:
        model = BernoulliMlp.initialize(d, hidden, RngStream(cfg.seed, 0))
    elif model.d != d:
        raise SampleKindError(f"model dimension {model.d} != data dimension {d}")
    rng = RngStream(cfg.seed, 1)
    valid_rng_seed = (cfg.seed, 2)
    velocity = [np.zeros_like(a) for a in model.params()]
    metrics = TrainingMetrics()
    lr = cfg.learning_rate
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        order = np.argsort(rng.uniforms(n), kind="stable")
        total, count = 0.0, 0
        for s in range(0, n, cfg.minibatch):
            batch = X[order[s:s + cfg.minibatch]]
            if wb.enabled:
                targets, corrupted = walkback_batch(model, c, batch, wb, rng)
            else:
                targets, corrupted = batch, c.sample_batch(batch, rng)
            loss, grad = mlp_loss_and_grad(model, targets, corrupted)
            if not math.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch + 1}, batch offset {s}")
            total += loss * len(targets)
            count += len(targets)
            for theta, g, v in zip(model.params(), grad, velocity):
                v *= cfg.momentum
                v -= lr * (g + cfg.weight_decay * theta)
                theta += v
        metrics.train_nll.append(total / count)
        if valid is not None:
            metrics.valid_nll.append(_mean_nll(model, np.asarray(valid, dtype=np.uint8), c, RngStream(*valid_rng_seed)))
        metrics.seconds.append(time.perf_counter() - t0)
        log.info("epoch %d train_nll %.4f", epoch + 1, metrics.train_nll[-1])
        lr *= cfg.lr_decay
    return model, metrics


def fit_nonparametric(data, c: CorruptionProcess, family: str, rng: RngStream, **hyper) -> ConditionalModel:
    """One corruption per example, then count (``multinomial``) or store pairs (``parzen``).

    ``hyper``: ``alpha`` for tables; ``sigma_x``/``sigma_c`` for Parzen.
    """
    xs = np.asarray(data)
    if family == "multinomial":
        if c.kind is not SampleKind.DISCRETE or xs.ndim != 1:
            raise SampleKindError("multinomial fitting needs discrete data and corruption")
        xts = c.sample_batch(xs, rng)
        return fit_multinomial(np.column_stack([xs, xts]), c.K, hyper.get("alpha", 0.1))
    if family == "parzen":
        if c.kind is not SampleKind.REAL or xs.ndim != 2:
            raise SampleKindError("parzen fitting needs real-vector data and Gaussian corruption")
        xts = c.sample_batch(xs, rng)
        return ParzenConditional.from_pairs(xs, xts, hyper.get("sigma_x"), hyper.get("sigma_c"))
    raise ValueError(f"unknown non-parametric family {family!r}")


def expected_walkback_counts(m: MultinomialTable, c: DiscreteFlip, p_data, wb: WalkbackConfig) -> np.ndarray:
    """Expected pair counts ``N[x_tilde, x]`` per example under walkback corruption.

    The step-k corrupted point has law ``C (B C)^(k-1) e_x`` with
    ``B = P(x | x_tilde)^T``; step k is reached with prob ``p^(k-1)`` (or 1 in
    fixed mode).  Used for the infinite-data refit iteration.
    """
    C = c.matrix()
    B = np.asarray(m.conditional).T
    steps = wb.fixed_steps or wb.max_steps
    reach = np.ones(steps) if wb.fixed_steps else wb.p ** np.arange(steps)
    law = C.copy()
    total = np.zeros_like(C)
    for k in range(steps):
        total += reach[k] * law
        law = C @ (B @ law)
    return total * np.asarray(p_data)[None, :]
