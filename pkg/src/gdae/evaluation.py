"""Likelihood bound, anchored energies and histogram comparisons."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainRun
from .corruption import CorruptionProcess
from .distributions import ProbVector, SampleKind, log_sum_exp, sample_kind
from .errors import SampleKindError
from .models import ConditionalModel

HIST_BINS = 20
HIST_PAD = 0.05


@dataclass(frozen=True)
class BoundEstimate:
    mean_log_lik: float
    n_test: int
    n_chain_samples: int
    per_example: np.ndarray = field(repr=False, compare=False, default=None)


def loglik_bound(m: ConditionalModel, chain, test, chunk: int = 512) -> BoundEstimate:
    """Mean over ``test`` of ``log mean_j P(x | x_tilde_j)`` over chain samples.

    ``chain`` is a ``ChainRun`` (its ``x_tildes`` are used) or an array of
    corrupted samples.
    """
    xts = chain.x_tildes if isinstance(chain, ChainRun) else np.asarray(chain)
    test = np.asarray(test)
    if len(xts) == 0:
        raise ValueError("empty chain")
    if len(test) == 0:
        raise ValueError("empty test set")
    if sample_kind(test[0] if test.ndim > 1 else int(test[0])) is not m.kind:
        raise SampleKindError(f"test data does not match a {m.kind.value} model")
    log_n = math.log(len(xts))
    # sorted rows make the sum independent of chain order, bit for bit
    per = np.concatenate([
        log_sum_exp(np.sort(m.log_prob_matrix(test[s:s + chunk], xts), axis=1), axis=1) - log_n
        for s in range(0, len(test), chunk)
    ])
    return BoundEstimate(float(per.mean()), len(test), len(xts), per)


@dataclass(frozen=True)
class EnergyEstimate:
    """Energy up to an anchor-dependent constant; compare only at a shared anchor."""

    x: object
    x_anchor: object
    energy: float


def energy_estimate(m: ConditionalModel, c: CorruptionProcess, x, x_anchor) -> EnergyEstimate:
    """``-log P(x | anchor) + log C(anchor | x)``."""
    log_c = c.log_density(x_anchor, x)
    if log_c == -math.inf:
        raise ValueError("anchor is outside the corruption support of x")
    return EnergyEstimate(x, x_anchor, -m.log_prob(x, x_anchor) + log_c)


def relative_energy(m, c, x1, x2, x_anchor) -> float:
    """``energy(x2) - energy(x1)`` at a shared anchor (estimates ``log P(x1) - log P(x2)``)."""
    return energy_estimate(m, c, x2, x_anchor).energy - energy_estimate(m, c, x1, x_anchor).energy


def _midpoint(a, b):
    if sample_kind(a) is SampleKind.DISCRETE:
        return (int(a) + int(b)) // 2
    if sample_kind(a) is SampleKind.REAL:
        return 0.5 * (np.asarray(a) + np.asarray(b))
    raise SampleKindError("no default midpoint for binary vectors; pass anchors")


def path_energy(m, c, path, anchors=None) -> float:
    """Sum of relative energies along consecutive points of ``path``.

    Each link uses its own anchor, by default the midpoint of its endpoints.
    """
    if len(path) < 2:
        return 0.0
    if anchors is None:
        anchors = [_midpoint(a, b) for a, b in zip(path[:-1], path[1:])]
    if len(anchors) != len(path) - 1:
        raise ValueError("need one anchor per link")
    return float(sum(relative_energy(m, c, a, b, k) for a, b, k in zip(path[:-1], path[1:], anchors)))


@dataclass
class TvReport:
    """Discrete: one ``tv``.  Continuous: ``pairs`` of ``(i, j, tv)`` per coordinate pair."""

    tv: float | None = None
    pairs: list = field(default_factory=list)
    n_samples: int = 0

    def fraction_at_most(self, threshold: float) -> float:
        if not self.pairs:
            return float(self.tv is not None and self.tv <= threshold)
        return float(np.mean([t <= threshold for _, _, t in self.pairs]))


def _binned(values, edges):
    # bins 0..B-1 in range, B for anything outside
    B = len(edges) - 1
    idx = np.searchsorted(edges, values, side="right") - 1
    idx = np.where(values == edges[-1], B - 1, idx)
    return np.where((idx < 0) | (idx >= B), B, idx)


def histogram_compare(samples, reference, bins: int = HIST_BINS) -> TvReport:
    """TV between sample histograms and a reference.

    Discrete: ``reference`` is a ``ProbVector``.  Continuous: ``reference`` is
    a dataset; every coordinate pair is binned on a ``bins x bins`` grid over
    the reference range padded 5%, plus one overflow cell for points outside.
    """
    xs = samples.xs if isinstance(samples, ChainRun) else np.asarray(samples)
    if len(xs) == 0:
        raise ValueError("empty samples")
    if isinstance(reference, ProbVector):
        xs = np.asarray(xs, dtype=np.int64)
        if xs.ndim != 1 or xs.min() < 0 or xs.max() >= reference.K:
            raise ValueError("discrete samples outside the reference state space")
        emp = np.bincount(xs, minlength=reference.K) / len(xs)
        return TvReport(tv=0.5 * float(np.abs(emp - reference.probs).sum()), n_samples=len(xs))
    if bins < 2:
        raise ValueError("need at least 2 bins per axis")
    ref = np.asarray(reference, dtype=np.float64)
    xs = np.asarray(xs, dtype=np.float64)
    if ref.ndim != 2 or xs.ndim != 2 or ref.shape[1] != xs.shape[1]:
        raise ValueError("continuous comparison needs (n, d) arrays of equal d")
    lo, hi = ref.min(axis=0), ref.max(axis=0)
    pad = HIST_PAD * np.where(hi > lo, hi - lo, 1.0)
    edges = [np.linspace(a - p, b + p, bins + 1) for a, b, p in zip(lo, hi, pad)]
    cells = (bins + 1) ** 2
    report = TvReport(n_samples=len(xs))
    d = ref.shape[1]
    for i in range(d):
        for j in range(i + 1, d):
            hs = np.bincount(_binned(xs[:, i], edges[i]) * (bins + 1) + _binned(xs[:, j], edges[j]),
                             minlength=cells) / len(xs)
            hr = np.bincount(_binned(ref[:, i], edges[i]) * (bins + 1) + _binned(ref[:, j], edges[j]),
                             minlength=cells) / len(ref)
            report.pairs.append((i, j, 0.5 * float(np.abs(hs - hr).sum())))
    return report
