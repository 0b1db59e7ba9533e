import numpy as np
import pytest

from misckit.metrics import MetricConfig, h1_error_mc, kde_pdf, ks2, l2_error_mc, uniform_stream


class Fn:
    def __init__(self, f):
        self.f = f

    def evaluate_many(self, Y):
        Y = np.atleast_2d(Y)
        return np.array([self.f(y) for y in Y])


ZERO = Fn(lambda y: 0.0)


def test_l2_zero_and_constant():
    cfg = MetricConfig(n_mc=500, seed=1)
    f = Fn(lambda y: y[0] * y[1])
    assert l2_error_mc(f, f, cfg) == 0.0
    c = Fn(lambda y: y[0] * y[1] + 2.5)
    assert l2_error_mc(c, f, cfg) == pytest.approx(2.5, abs=1e-12)


def test_l2_linear_oracle():
    cfg = MetricConfig(n_mc=10_000, seed=7)
    f = Fn(lambda y: y[0])
    assert l2_error_mc(f, ZERO, cfg) == pytest.approx(1 / np.sqrt(3), rel=0.02)


def test_h1_examples():
    cfg = MetricConfig(n_mc=10_000, seed=7)
    f = Fn(lambda y: y[0])
    assert h1_error_mc(f, f, cfg) == 0.0
    got = h1_error_mc(f, ZERO, cfg)
    assert got == pytest.approx(np.sqrt(1 / 3 + 1), rel=0.02)


def test_h1_step_consistency():
    f = Fn(lambda y: np.sin(2 * y[0]) * y[1])
    a = h1_error_mc(f, ZERO, MetricConfig(n_mc=2000, seed=3, fd_step=1e-4))
    b = h1_error_mc(f, ZERO, MetricConfig(n_mc=2000, seed=3, fd_step=5e-5))
    assert abs(a - b) / a < 0.005


def test_l2_below_h1():
    rng = np.random.default_rng(0)
    cfg = MetricConfig(n_mc=2000, seed=5)
    for _ in range(10):
        c = rng.standard_normal(4)
        f = Fn(lambda y, c=c: c[0] + c[1] * y[0] + c[2] * y[1] + c[3] * y[0] * y[1])
        assert l2_error_mc(f, ZERO, cfg) <= h1_error_mc(f, ZERO, cfg) + 1e-12


def test_same_seed_bit_identical():
    cfg = MetricConfig(n_mc=1000, seed=42)
    f = Fn(lambda y: np.exp(y[0] - y[1]))
    assert l2_error_mc(f, ZERO, cfg) == l2_error_mc(f, ZERO, cfg)
    s1 = uniform_stream(42, 100, 2)
    s2 = uniform_stream(42, 100, 2)
    assert np.array_equal(s1, s2)


def test_kde_normalises():
    rng = np.random.default_rng(10)
    samples = rng.normal(size=5000)
    grid = np.linspace(-6, 6, 601)
    dens = kde_pdf(samples, grid)
    assert np.all(dens >= 0)
    assert np.trapezoid(dens, grid) == pytest.approx(1.0, abs=0.02)


def test_kde_peaks_at_common_value():
    samples = np.full(50, 1.7) + 1e-9 * np.arange(50)
    grid = np.linspace(0, 3, 301)
    dens = kde_pdf(samples, grid)
    assert abs(grid[np.argmax(dens)] - 1.7) <= 0.01


def test_kde_standard_normal_density():
    rng = np.random.default_rng(123)
    samples = rng.normal(size=100_000)
    dens = kde_pdf(samples, np.array([0.0]))
    assert dens[0] == pytest.approx(1 / np.sqrt(2 * np.pi), rel=0.05)


def test_kde_rejects_tiny_sample():
    with pytest.raises(ValueError):
        kde_pdf([1.0, 2.0], np.linspace(0, 1, 5))


def test_ks2_examples():
    a = np.linspace(0, 1, 100)
    assert ks2(a, a) == 0.0
    assert ks2([0.0], [1.0]) == 1.0
    rng = np.random.default_rng(3)
    u = rng.random(10_000)
    assert ks2(u, u + 0.5) == pytest.approx(0.5, abs=0.05)


def test_ks2_symmetric_and_monotone_invariant():
    rng = np.random.default_rng(4)
    a = rng.normal(size=500)
    b = rng.normal(loc=0.3, size=700)
    assert ks2(a, b) == ks2(b, a)
    f = lambda x: np.exp(x)  # strictly increasing
    assert ks2(f(a), f(b)) == pytest.approx(ks2(a, b), abs=1e-12)
