import math

import numpy as np
import pytest
from scipy import stats

from gdae.chain import build_transition_matrix, stationary_distribution
from gdae.corruption import DiscreteFlip, IsotropicGaussian, SaltPepper
from gdae.distributions import total_variation
from gdae.errors import SampleKindError, TrainingError
from gdae.models import BernoulliMlp, MultinomialTable, ParzenConditional
from gdae.rng import RngStream
from gdae.training import (TrainConfig, WalkbackConfig, expected_walkback_counts, fit_nonparametric, train_dae,
                           walkback_batch, walkback_lengths, walkback_rollout)


def truncated_geometric(p, cap):
    k = np.arange(1, cap + 1)
    probs = p ** (k - 1) * (1 - p)
    probs[-1] = p ** (cap - 1)
    return probs


# -- walkback rollouts -------------------------------------------------------

def test_tiny_p_gives_single_corruption():
    c = DiscreteFlip(4, 0.5)
    m = MultinomialTable(np.ones((4, 4)))
    wb = WalkbackConfig(True, p=1e-12)
    rng = RngStream(0)
    walks = [walkback_rollout(m, c, 2, wb, rng) for _ in range(20_000)]
    assert {len(w) for w in walks} == {1}
    freq = np.bincount([w[0] for w in walks], minlength=4) / len(walks)
    expect = c.matrix()[:, 2]
    assert np.all(np.abs(freq - expect) <= 4 * np.sqrt(expect * (1 - expect) / len(walks)))


def test_max_steps_one():
    m, c = MultinomialTable(np.ones((3, 3))), DiscreteFlip(3)
    wb = WalkbackConfig(True, p=0.99, max_steps=1)
    lengths, _ = walkback_lengths(m, c, np.zeros(5000, dtype=np.int64), wb, RngStream(1))
    assert set(lengths.tolist()) == {1}


def test_fixed_steps():
    m, c = MultinomialTable(np.ones((3, 3))), DiscreteFlip(3)
    wb = WalkbackConfig(True, fixed_steps=5)
    assert len(walkback_rollout(m, c, 1, wb, RngStream(2))) == 5
    lengths, pts = walkback_lengths(m, c, np.arange(3).repeat(10), wb, RngStream(2))
    assert set(lengths.tolist()) == {5} and len(pts) == 150


def test_mean_length_and_law():
    m, c = MultinomialTable(np.ones((10, 10))), DiscreteFlip(10)
    wb = WalkbackConfig(True, p=0.5, max_steps=20)
    lengths, _ = walkback_lengths(m, c, np.zeros(100_000, dtype=np.int64), wb, RngStream(3))
    assert abs(lengths.mean() - 2.0) <= 0.02
    obs = np.bincount(lengths, minlength=21)[1:]
    exp = truncated_geometric(0.5, 20) * len(lengths)
    # pool the sparse tail so every cell expects >= 5
    cut = int(np.argmax(exp < 5))
    obs = np.append(obs[:cut], obs[cut:].sum())
    exp = np.append(exp[:cut], exp[cut:].sum())
    assert stats.chisquare(obs, exp).pvalue > 0.01


def test_kernel_matches_generic_rollout():
    rng_t = RngStream(4)
    m = MultinomialTable(rng_t.uniforms(36).reshape(6, 6) * 10)
    c = DiscreteFlip(6, 0.5)
    xs = np.arange(6).repeat(50)
    for wb in (WalkbackConfig(True, 0.7, 6), WalkbackConfig(True, fixed_steps=3)):
        a = RngStream(5)
        lengths, pts = walkback_lengths(m, c, xs, wb, a)
        b = RngStream(5)
        walks = [walkback_rollout(m, c, x, wb, b) for x in xs]
        assert lengths.tolist() == [len(w) for w in walks]
        assert pts.tolist() == [v for w in walks for v in w]
        assert a.counter == b.counter


def test_walkback_chunks_do_not_change_draws():
    m, c = MultinomialTable(np.ones((4, 4))), DiscreteFlip(4)
    wb = WalkbackConfig(True, 0.5)
    xs = np.arange(4).repeat(100)
    a = walkback_lengths(m, c, xs, wb, RngStream(6))
    b = walkback_lengths(m, c, xs, wb, RngStream(6), chunk=7)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_walkback_batch_targets_are_originals():
    d = 6
    m = BernoulliMlp.initialize(d, 4, RngStream(7))
    c = SaltPepper(d)
    X = (RngStream(8).uniforms(10 * d) < 0.5).astype(np.uint8).reshape(10, d)
    for wb in (WalkbackConfig(True, 0.5), WalkbackConfig(True, fixed_steps=5)):
        targets, corrupted = walkback_batch(m, c, X, wb, RngStream(9))
        assert targets.shape == corrupted.shape
        originals = {row.tobytes() for row in X}
        assert all(t.tobytes() in originals for t in targets)
        assert len(targets) >= len(X)
    targets, _ = walkback_batch(m, c, X, WalkbackConfig(True, fixed_steps=5), RngStream(9))
    assert len(targets) == 5 * len(X)
    assert np.array_equal(targets, np.tile(X, (5, 1)))


def test_walkback_batch_mean_length():
    d = 3
    m, c = BernoulliMlp.zeros(d, 2), SaltPepper(d)
    X = np.zeros((20_000, d), dtype=np.uint8)
    targets, _ = walkback_batch(m, c, X, WalkbackConfig(True, 0.5), RngStream(10))
    assert abs(len(targets) / len(X) - 2.0) < 0.04


def test_walkback_config_validation():
    for kw in ({"p": 0.0}, {"p": 1.0}, {"max_steps": 0}, {"fixed_steps": 0}):
        with pytest.raises(ValueError):
            WalkbackConfig(True, **kw)


def test_rollout_variant_mismatch():
    with pytest.raises(SampleKindError):
        walkback_rollout(MultinomialTable(np.ones((2, 2))), SaltPepper(2), 0, WalkbackConfig(), RngStream(0))


# -- walkback fixed point ----------------------------------------------------

def test_expected_counts_match_simulation(target, flip10):
    rng = RngStream(11)
    m = MultinomialTable(rng.uniforms(100).reshape(10, 10) + 0.1)
    wb = WalkbackConfig(True, 0.5)
    N = expected_walkback_counts(m, flip10, target.probs, wb)
    assert N.sum() == pytest.approx(2.0 - 0.5**19, abs=1e-12)  # E|L| = sum_{k<20} p^k
    n = 200_000
    xs = np.searchsorted(np.cumsum(target.probs), rng.uniforms(n), side="right")
    lengths, pts = walkback_lengths(m, flip10, xs, wb, rng)
    sim = np.zeros((10, 10))
    np.add.at(sim, (pts, np.repeat(xs, lengths)), 1.0)
    assert np.abs(sim / n - N).max() < 0.005


@pytest.mark.parametrize("wb", [WalkbackConfig(True, 0.5), WalkbackConfig(True, fixed_steps=5)],
                         ids=["geometric", "fixed5"])
def test_walkback_refit_targets_data_distribution(wb, target, flip10):
    m = MultinomialTable(np.ones((10, 10)), alpha=0.0)
    for _ in range(1000):
        new = MultinomialTable(expected_walkback_counts(m, flip10, target.probs, wb), alpha=0.0)
        change = np.abs(new.conditional - m.conditional).max()
        m = new
        if change < 1e-6:
            break
    assert change < 1e-6
    pi = stationary_distribution(build_transition_matrix(m, flip10))
    assert total_variation(pi, target) <= 0.05


# -- SGD ---------------------------------------------------------------------

def _bits(n, d, seed):
    return (RngStream(seed).uniforms(n * d) < 0.5).astype(np.uint8).reshape(n, d)


def test_zero_learning_rate_keeps_parameters():
    X = _bits(40, 6, 0)
    start = BernoulliMlp.initialize(6, 5, RngStream(1))
    m, metrics = train_dae(X, SaltPepper(6), TrainConfig(epochs=3, learning_rate=0.0), model=start.copy())
    for a, b in zip(m.params(), start.params()):
        assert np.array_equal(a, b)
    assert len(metrics.train_nll) == 3


def test_memorizes_single_example():
    x = np.array([[1, 0, 1, 1]], dtype=np.uint8)
    m, metrics = train_dae(x, SaltPepper(4), TrainConfig(epochs=200, minibatch=1, learning_rate=0.1), hidden=8)
    assert metrics.train_nll[-1] < 0.1 * 4 * math.log(2)


def test_training_is_deterministic():
    X = _bits(64, 8, 2)
    cfg = TrainConfig(epochs=3, seed=5)
    wb = WalkbackConfig(True, 0.5)
    a, ma = train_dae(X, SaltPepper(8), cfg, wb, hidden=6)
    b, mb = train_dae(X, SaltPepper(8), cfg, wb, hidden=6)
    for u, v in zip(a.params(), b.params()):
        assert np.array_equal(u, v)
    assert ma.train_nll == mb.train_nll


def test_weight_decay_shrinks_weights():
    X = _bits(64, 8, 3)
    cfg = dict(epochs=5, learning_rate=0.05, seed=1)
    a, _ = train_dae(X, SaltPepper(8), TrainConfig(**cfg), hidden=6)
    b, _ = train_dae(X, SaltPepper(8), TrainConfig(weight_decay=0.5, **cfg), hidden=6)
    assert np.linalg.norm(b.W1) < np.linalg.norm(a.W1)


def test_valid_metrics_and_rows():
    X = _bits(32, 4, 4)
    _, metrics = train_dae(X, SaltPepper(4), TrainConfig(epochs=2), hidden=3, valid=X[:8])
    rows = list(metrics.rows())
    assert [r[0] for r in rows] == [1, 2]
    assert all(math.isfinite(v) for r in rows for v in r)


def test_non_finite_loss_aborts():
    X = _bits(8, 3, 5)
    m = BernoulliMlp.zeros(3, 2)
    m.W1[0, 0] = np.nan
    with pytest.raises(TrainingError):
        train_dae(X, SaltPepper(3), TrainConfig(epochs=1), model=m)


def test_train_dimension_checks():
    with pytest.raises(SampleKindError):
        train_dae(_bits(4, 3, 0), SaltPepper(4), TrainConfig(epochs=1))
    with pytest.raises(SampleKindError):
        train_dae(_bits(4, 3, 0), SaltPepper(3), TrainConfig(epochs=1), model=BernoulliMlp.zeros(4, 2))


@pytest.mark.parametrize("kw", [{"epochs": 0}, {"learning_rate": -1}, {"momentum": 1.0}, {"lr_decay": 0.0}])
def test_train_config_validation(kw):
    with pytest.raises(ValueError):
        TrainConfig(**kw)


# -- non-parametric fitting --------------------------------------------------

def test_fit_single_discrete_example():
    m = fit_nonparametric(np.array([3]), DiscreteFlip(5), "multinomial", RngStream(0), alpha=0.1)
    assert np.count_nonzero(m.counts) == 1 and m.counts.sum() == 1


def test_fit_parzen_keeps_pairs():
    X = np.arange(12.0).reshape(4, 3)
    m = fit_nonparametric(X, IsotropicGaussian(3, 0.5), "parzen", RngStream(1), sigma_x=0.2, sigma_c=1.0)
    assert isinstance(m, ParzenConditional)
    assert np.array_equal(m.x_anchors, X)
    assert m.xt_anchors.shape == X.shape and not np.array_equal(m.xt_anchors, X)


def test_fit_nonparametric_mismatch():
    with pytest.raises(SampleKindError):
        fit_nonparametric(np.zeros((3, 2)), DiscreteFlip(3), "multinomial", RngStream(0))
    with pytest.raises(SampleKindError):
        fit_nonparametric(np.array([0, 1]), IsotropicGaussian(1, 1.0), "parzen", RngStream(0))
    with pytest.raises(ValueError):
        fit_nonparametric(np.array([0, 1]), DiscreteFlip(2), "forest", RngStream(0))
