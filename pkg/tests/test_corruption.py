import math

import numpy as np
import pytest
from scipy import integrate

from gdae.chain import binary_states
from gdae.corruption import (DiscreteFlip, IsotropicGaussian, SaltPepper, corrupt, corrupt_batch,
                             corruption_log_density, make_corruption)
from gdae.errors import SampleKindError
from gdae.rng import RngStream


def test_salt_pepper_zero_noise_is_identity():
    x = np.array([1, 0, 1], dtype=np.uint8)
    c = SaltPepper(3, 0.0)
    rng = RngStream(0)
    for _ in range(50):
        assert np.array_equal(corrupt(c, x, rng), x)


def test_full_flip_forgets_input():
    c = DiscreteFlip(10, 1.0)
    for x in (0, 7):
        out = corrupt_batch(c, np.full(100_000, x), RngStream(x))
        freq = np.bincount(out, minlength=10) / len(out)
        assert np.all(np.abs(freq - 0.1) <= 4 * math.sqrt(0.09 / len(out)))


def test_salt_pepper_bit_rate_on_zeros():
    c = SaltPepper(4, 0.5)
    out = corrupt_batch(c, np.zeros((100_000, 4), dtype=np.uint8), RngStream(1))
    frac = out.mean(axis=0)
    assert np.all((frac >= 0.24) & (frac <= 0.26))


def test_flip_log_density_values():
    c = DiscreteFlip(10, 0.5)
    assert corruption_log_density(c, 3, 3) == pytest.approx(math.log(0.55), abs=1e-15)
    assert corruption_log_density(c, 4, 3) == pytest.approx(math.log(0.05), abs=1e-15)


def test_salt_pepper_log_density_values():
    c = SaltPepper(1, 0.5)
    one, zero = np.array([1], dtype=np.uint8), np.array([0], dtype=np.uint8)
    assert corruption_log_density(c, one, one) == pytest.approx(math.log(0.75))
    assert corruption_log_density(c, zero, zero) == pytest.approx(math.log(0.75))
    assert corruption_log_density(c, one, zero) == pytest.approx(math.log(0.25))


@pytest.mark.parametrize("K,eps", [(2, 0.1), (5, 0.5), (10, 1.0)])
def test_flip_normalizes(K, eps):
    c = DiscreteFlip(K, eps)
    for x in range(K):
        total = sum(math.exp(c.log_density(xt, x)) for xt in range(K))
        assert total == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(c.matrix().sum(axis=0), 1.0, atol=1e-12)


@pytest.mark.parametrize("d,q", [(1, 0.5), (4, 0.3), (10, 0.5)])
def test_salt_pepper_normalizes_by_enumeration(d, q):
    c = SaltPepper(d, q)
    S = binary_states(d)
    for x in S[[0, len(S) // 3, len(S) - 1]]:
        total = sum(math.exp(c.log_density(xt, x)) for xt in S)
        assert total == pytest.approx(1.0, abs=1e-12)


def test_salt_pepper_matrix_matches_log_density():
    c = SaltPepper(3, 0.4)
    S = binary_states(3)
    M = c.matrix()
    for i, xt in enumerate(S):
        for j, x in enumerate(S):
            assert M[i, j] == pytest.approx(math.exp(c.log_density(xt, x)), rel=1e-14)


def test_gaussian_integrates_to_one():
    c = IsotropicGaussian(1, 0.7)
    x = np.array([0.3])
    total, _ = integrate.quad(lambda v: math.exp(c.log_density(np.array([v]), x)), -np.inf, np.inf)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_gaussian_log_density_formula():
    c = IsotropicGaussian(2, 2.0)
    x, xt = np.array([0.0, 0.0]), np.array([2.0, 0.0])
    expect = -0.5 * 4 / 4 - 2 * math.log(2.0) - math.log(2 * math.pi)
    assert c.log_density(xt, x) == pytest.approx(expect, abs=1e-14)
    assert math.isfinite(c.log_density(np.array([1e6, 0.0]), x))


def test_gaussian_noise_moments():
    c = IsotropicGaussian(3, 0.5)
    out = corrupt_batch(c, np.ones((50_000, 3)), RngStream(3))
    assert np.allclose(out.mean(axis=0), 1.0, atol=0.01)
    assert np.allclose(out.std(axis=0), 0.5, atol=0.01)


def test_flip_empirical_matches_density():
    c = DiscreteFlip(5, 0.6)
    N = 100_000
    out = corrupt_batch(c, np.full(N, 2), RngStream(4))
    freq = np.bincount(out, minlength=5) / N
    p = np.exp([c.log_density(xt, 2) for xt in range(5)])
    assert np.all(np.abs(freq - p) <= 4 * np.sqrt(p * (1 - p) / N))


def test_salt_pepper_empirical_matches_density():
    c = SaltPepper(3, 0.5)
    S = binary_states(3)
    x = S[5]
    N = 100_000
    out = corrupt_batch(c, np.tile(x, (N, 1)), RngStream(5))
    codes = out @ (1 << np.arange(3))
    freq = np.bincount(codes, minlength=8) / N
    p = np.exp([c.log_density(s, x) for s in S])
    assert np.all(np.abs(freq - p) <= 4 * np.sqrt(p * (1 - p) / N))


def test_positive_for_noisy_processes():
    assert np.all(DiscreteFlip(10, 0.5).matrix() > 0)
    assert np.all(SaltPepper(6, 0.5).matrix() > 0)
    assert SaltPepper(2, 0.0).log_density(np.array([1, 0]), np.array([0, 0])) == -math.inf


def test_single_and_batch_draws_agree():
    for c, xs in [(DiscreteFlip(7, 0.5), np.arange(7)),
                  (SaltPepper(5, 0.5), binary_states(5)[:9]),
                  (IsotropicGaussian(4, 1.5), np.arange(12.0).reshape(3, 4))]:
        a, b = RngStream(8), RngStream(8)
        batch = corrupt_batch(c, xs, a)
        single = np.array([corrupt(c, x, b) for x in xs])
        assert np.array_equal(batch, single)


def test_variant_mismatch():
    rng = RngStream(0)
    with pytest.raises(SampleKindError):
        corrupt(DiscreteFlip(3), np.array([1.0]), rng)
    with pytest.raises(SampleKindError):
        corrupt(SaltPepper(2), 1, rng)
    with pytest.raises(SampleKindError):
        corrupt(IsotropicGaussian(2, 1.0), np.array([1, 0]), rng)
    with pytest.raises(SampleKindError):
        SaltPepper(3).log_density(np.array([1, 0], dtype=np.uint8), np.array([1, 0, 0], dtype=np.uint8))
    with pytest.raises(ValueError):
        DiscreteFlip(3).log_density(3, 0)


@pytest.mark.parametrize("args", [(1, 0.5), (3, -0.1), (3, 1.5)])
def test_flip_parameter_validation(args):
    with pytest.raises(ValueError):
        DiscreteFlip(*args)


def test_make_corruption():
    assert make_corruption("discrete_flip", K=4, eps=0.2) == DiscreteFlip(4, 0.2)
    assert make_corruption("salt_pepper", d=3) == SaltPepper(3, 0.5)
    assert make_corruption("gaussian", d=2, sigma=1.0) == IsotropicGaussian(2, 1.0)
    for bad in [("gaussian", {"d": 2}), ("discrete_flip", {}), ("blur", {"d": 2})]:
        with pytest.raises(ValueError):
            make_corruption(bad[0], **bad[1])
