import numpy as np
import pytest
from scipy import stats

from slicedvp import _kernels
from slicedvp.instances import random_mixture_pair
from slicedvp.quadrature import GaussRule
from slicedvp.univariate import (GaussianMixture1D, Saturation, TransportMap1D,
                                 TransportUnderflow, cdf, gaussian_w2_squared, pdf,
                                 quantile, sf, transport, transport_derivative,
                                 w2_squared_1d)

N01 = GaussianMixture1D.gaussian(0.0, 1.0)


def test_cdf_examples(backend):
    assert cdf(N01, 0.0) == 0.5
    assert cdf(GaussianMixture1D([0, 2], [0.5, 0.5], 0.0), 1.0) == 0.5
    assert abs(cdf(GaussianMixture1D([-1, 1], [0.5, 0.5], 1.0), 0.0) - 0.5) < 1e-15


def test_quantile_examples(backend):
    assert abs(quantile(GaussianMixture1D.gaussian(3, 2), 0.5) - 3) < 1e-12
    assert abs(quantile(GaussianMixture1D([-1, 1], [0.5, 0.5], 1.0), 0.5)) < 1e-12
    # reference value: scipy's inverse normal cdf
    assert abs(quantile(N01, 0.975) - stats.norm.ppf(0.975)) < 1e-12
    assert abs(quantile(N01, 0.975) - 1.959964) < 1e-6


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, np.nan])
def test_quantile_domain(p):
    with pytest.raises(ValueError):
        quantile(N01, p)


def test_discrete_quantile_is_generalized_inverse():
    m = GaussianMixture1D([0, 1, 2], [0.25, 0.5, 0.25])
    assert quantile(m, [0.1, 0.25, 0.26, 0.75, 0.9]).tolist() == [0, 0, 1, 1, 2]


def test_sf_accurate_in_upper_tail(backend):
    assert abs(sf(N01, 10.0) / stats.norm.sf(10.0) - 1) < 1e-12


def test_quantile_cdf_roundtrip(backend):
    for seed in range(10):
        a, _ = random_mixture_pair(seed, sigma=[0.25, 0.5, 1.0][seed % 3])
        p = np.linspace(1e-6, 1 - 1e-6, 101)
        assert np.max(np.abs(cdf(a, quantile(a, p)) - p)) < 1e-10
        x = np.linspace(a.means[0] - 3 * a.sigma, a.means[-1] + 3 * a.sigma, 101)
        back = quantile(a, cdf(a, x))
        # in gaps between components the cdf is flat to rounding, so x is only
        # recoverable up to eps / f(x); check the cdf residual there instead
        dense = pdf(a, x) > 1e-3
        assert np.max(np.abs(back - x)[dense]) < 1e-10
        assert np.max(np.abs(cdf(a, back) - cdf(a, x))) < 1e-14


def test_transport_closed_forms(backend):
    x = np.linspace(-3, 3, 13)
    assert np.allclose(transport(TransportMap1D(N01, N01), x), x, atol=1e-12)
    shift = TransportMap1D(N01, GaussianMixture1D.gaussian(1.5, 1.0))
    assert np.allclose(transport(shift, x), x + 1.5, atol=1e-12)
    scale = TransportMap1D(N01, GaussianMixture1D.gaussian(0.0, 2.0))
    assert np.allclose(transport(scale, x), 2 * x, atol=1e-12)
    assert np.allclose(transport_derivative(scale, x), 2.0, atol=1e-12)
    assert np.allclose(transport_derivative(TransportMap1D(N01, N01), x), 1.0, atol=1e-12)


def test_transport_derivative_matches_finite_differences(backend):
    a = GaussianMixture1D([-1.0, 0.3, 2.0], [0.2, 0.5, 0.3], 0.6)
    b = GaussianMixture1D([0.0, 1.5, 1.8], [0.4, 0.3, 0.3], 0.6)
    T = TransportMap1D(a, b)
    x, h = np.linspace(-2, 3, 21), 1e-5
    fd = (T(x + h) - T(x - h)) / (2 * h)
    assert np.max(np.abs(fd - T.derivative(x))) < 1e-6


def test_transport_requires_smoothing():
    with pytest.raises(ValueError):
        TransportMap1D(GaussianMixture1D([0.0], [1.0]), N01)


def test_saturation_is_flagged():
    T = TransportMap1D(N01, GaussianMixture1D.gaussian(0.0, 1.0))
    values, sat = T.evaluate(np.array([0.0, 40.0, -40.0]))
    assert sat.tolist() == [False, True, True]
    assert np.all(np.isfinite(values))
    assert Saturation(2, 1e-10).flagged() and not Saturation(2, 1e-14).flagged()


def test_transport_derivative_underflow_raises():
    a = GaussianMixture1D.gaussian(0.0, 1.0)
    b = GaussianMixture1D([-30.0, 30.0], [0.5, 0.5], 0.05)
    with pytest.raises(TransportUnderflow) as e:
        TransportMap1D(a, b).derivative(np.array([0.0]))
    assert e.value.x == 0.0


def test_w2_examples():
    assert w2_squared_1d(N01, N01) < 1e-15
    assert abs(w2_squared_1d(N01, GaussianMixture1D.gaussian(2.0, 1.0)) - 2.0) < 1e-12
    a = GaussianMixture1D([0, 1], [0.5, 0.5])
    b = GaussianMixture1D([2, 3], [0.5, 0.5])
    assert w2_squared_1d(a, b) == 2.0


@pytest.mark.parametrize("m1, s1, m2, s2", [(0, 1, 1, 2), (-1, 0.5, 3, 0.25), (2, 3, 2, 1)])
def test_gaussian_closed_form(m1, s1, m2, s2):
    a, b = GaussianMixture1D.gaussian(m1, s1), GaussianMixture1D.gaussian(m2, s2)
    assert abs(w2_squared_1d(a, b) - gaussian_w2_squared(m1, s1, m2, s2)) < 1e-10
    assert abs(w2_squared_1d(a, b, method="quantile", order=256) - gaussian_w2_squared(m1, s1, m2, s2)) < 1e-4


def test_mixed_smooth_and_discrete():
    # a point mass against N(0, 1): W2^2 = (1/2) E[Z^2]
    assert abs(w2_squared_1d(GaussianMixture1D([0.0], [1.0]), N01, order=512) - 0.5) < 1e-4


def test_w2_symmetry_and_triangle():
    rng = np.random.default_rng(3)
    def mix():
        n = rng.integers(1, 5)
        return GaussianMixture1D(rng.normal(0, 1.5, n), rng.dirichlet(np.ones(n)), 0.5)
    for _ in range(100):
        a, b, c = mix(), mix(), mix()
        ab, ba = w2_squared_1d(a, b), w2_squared_1d(b, a)
        assert abs(ab - ba) < 1e-10
        d = lambda u, v: np.sqrt(2 * w2_squared_1d(u, v))
        assert d(a, c) <= d(a, b) + d(b, c) + 1e-9


def test_smoothing_contracts():
    rng = np.random.default_rng(4)
    for _ in range(100):
        n, m = rng.integers(1, 5, 2)
        xa, xb = rng.normal(0, 1.5, n), rng.normal(0, 1.5, m)
        wa, wb = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(m))
        s = rng.uniform(0.1, 1.5)
        raw = w2_squared_1d(GaussianMixture1D(xa, wa), GaussianMixture1D(xb, wb))
        smooth = w2_squared_1d(GaussianMixture1D(xa, wa, s), GaussianMixture1D(xb, wb, s))
        assert smooth <= raw + 1e-10


def test_hermite_rule_converges_on_a_smooth_pair():
    a = GaussianMixture1D([0.0, 0.4], [0.5, 0.5], 1.0)
    b = GaussianMixture1D([0.2, 0.5], [0.3, 0.7], 1.0)
    ref = w2_squared_1d(a, b)
    assert abs(w2_squared_1d(a, b, quad=96) - ref) < 1e-8
    assert abs(w2_squared_1d(a, b, quad=GaussRule.composite(64, 16)) - ref) < 1e-12


def test_backends_agree():
    backends = _kernels.backends()
    if len(backends) < 2:
        pytest.skip("compiled backend not built")
    rng = np.random.default_rng(7)
    src = rng.normal(size=(6, 5))
    tgt = rng.normal(size=(6, 4)) + 1
    ws, wt = rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(4))
    x = np.sort(rng.normal(scale=3, size=(6, 200)), axis=1)
    p = rng.uniform(1e-12, 1 - 1e-12, size=(6, 50))
    py, cy = backends["python"], backends["cython"]
    for fn, args in [("mixture_cdf", (src, ws, 0.4, x)), ("mixture_sf", (src, ws, 0.4, x)),
                     ("mixture_pdf", (src, ws, 0.4, x)), ("mixture_quantile", (src, ws, 0.4, p))]:
        assert np.allclose(getattr(py, fn)(*args), getattr(cy, fn)(*args), rtol=1e-13, atol=1e-14)
    a, sa = py.transport_batch(src, ws, 0.4, tgt, wt, 0.7, x, 1e-15)
    b, sb = cy.transport_batch(src, ws, 0.4, tgt, wt, 0.7, x, 1e-15)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)
    assert np.array_equal(sa, sb)
