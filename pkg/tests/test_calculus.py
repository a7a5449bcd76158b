import numpy as np
import pytest
from scipy import integrate

from slicedvp import (DiscreteMeasure, GaussianMixture1D, TransportMap1D, build_rule,
                      check_first_bound, check_second_bound, grad_measure, hess_x_measure,
                      ibp_identity_residual)
from slicedvp._slices import slice_pass
from slicedvp.calculus import fd_atom_gradients, fd_jacobian, grad_and_hess, ibp_sides
from slicedvp.instances import random_pair
from slicedvp.quadrature import gauss_rule


def _rel(a, b):
    return np.abs(a - b).max() / np.abs(b).max()


def test_shift_gradient_k1():
    for b in (0.3, -1.7, 4.0):
        g = grad_measure(DiscreteMeasure.dirac([0.0]), DiscreteMeasure.dirac([b]), 1.0, build_rule(1))
        assert abs(g.values[0, 0] + b) < 1e-12


def test_shift_gradient_k2():
    b = np.array([0.8, -1.1])
    g = grad_measure(DiscreteMeasure.dirac([0.0, 0.0]), DiscreteMeasure.dirac(b), 1.0, build_rule(2, 16))
    np.testing.assert_allclose(g.values[0], -0.5 * b, atol=1e-12)
    h = hess_x_measure(DiscreteMeasure.dirac([0.0, 0.0]), DiscreteMeasure.dirac(b), 1.0, build_rule(2, 16))
    # a pure shift has T' = 1, so the mixed derivative vanishes
    assert np.abs(h.values).max() < 1e-12


@pytest.mark.parametrize("k", [1, 2, 3])
def test_equal_measures_give_zero_fields(k):
    mu, _ = random_pair(k, k=k)
    r = build_rule(k, 32, seed=0)
    g, h = grad_and_hess(mu, mu, 0.5, r)
    assert np.abs(g.values).max() < 1e-10
    assert np.abs(h.values).max() < 1e-10
    assert np.abs(g(mu.atoms.mean(axis=0))).max() < 1e-10


def test_hessian_symmetric_and_positive_mean_derivative():
    for seed in range(5):
        mu, nu = random_pair(seed, k=3)
        h = hess_x_measure(mu, nu, 0.5, build_rule(3, 64, seed=seed))
        assert np.abs(h.values - h.values.transpose(0, 2, 1)).max() < 1e-12
        assert h.mean_dt.min() > 0


def test_scaling_map():
    # source N(0, s^2), target N(0, 4 s^2): T(x) = 2x
    for s in (0.3, 1.0):
        a = GaussianMixture1D.gaussian(0.0, s)
        b = GaussianMixture1D.gaussian(0.0, 2 * s)
        lhs, rhs = ibp_sides(a, b)
        assert abs(lhs - 2) < 1e-8 and abs(rhs - 2) < 1e-8
        res = slice_pass(np.zeros((1, 1)), np.ones(1), np.zeros((1, 1)), np.ones(1), s,
                         gauss_rule(None), tgt_sigma=2 * s)
        assert abs((1 - res.mean_dt[0, 0]) + 1) < 1e-10
        assert abs(res.mean_t[0, 0]) < 1e-12


def test_ibp_identity_map():
    mu, _ = random_pair(2)
    assert ibp_identity_residual(mu, mu, 0.5, [0.6, 0.8]) < 1e-8
    a = GaussianMixture1D.gaussian(0.0, 0.5)
    assert max(abs(v - 1) for v in ibp_sides(a, a)) < 1e-8


def test_ibp_seeded_mixture():
    mu, nu = random_pair(11)
    assert ibp_identity_residual(mu, nu, 0.5, [1.0, 0.0]) <= 1e-6


def test_gradient_matches_finite_differences():
    mu, nu = random_pair(21)
    r = build_rule(2, 256)
    g = grad_measure(mu, nu, 0.5, r)
    fd = fd_atom_gradients(mu, nu, 0.5, r, h=1e-5)
    assert _rel(g.values, fd) <= 1e-4


def test_hessian_matches_finite_differences():
    mu, nu = random_pair(22)
    r = build_rule(2, 64)
    g, h = grad_and_hess(mu, nu, 0.5, r)
    for j, x in enumerate(mu.atoms):
        assert np.abs(fd_jacobian(g, x, 1e-5) - h.values[j]).max() <= 1e-4


def test_lazy_field_matches_eager():
    mu, nu = random_pair(5)
    r = build_rule(2, 32)
    g = grad_measure(mu, nu, 0.7, r)
    np.testing.assert_allclose(g(mu.atoms), g.values, atol=1e-12)
    assert g(mu.atoms[0]).shape == (2,)
    with pytest.raises(ValueError):
        g(np.zeros(3))


def test_k1_gradient_is_displacement():
    mu, nu = random_pair(8, k=1)
    s = 0.6
    g = grad_measure(mu, nu, s, build_rule(1))
    T = TransportMap1D(GaussianMixture1D.from_measure(mu, s), GaussianMixture1D.from_measure(nu, s))
    for x, gx in zip(mu.atoms[:, 0], g.values[:, 0]):
        f = lambda z: T(x + s * z) * np.exp(-0.5 * z * z) / np.sqrt(2 * np.pi)
        mean, _ = integrate.quad(f, -12, 12, epsabs=1e-13, limit=400)
        assert abs(gx - (x - mean)) < 1e-9


def test_first_bound_examples():
    b = np.array([1.5, -0.5])
    chk = check_first_bound(DiscreteMeasure.dirac([0.0, 0.0]), DiscreteMeasure.dirac(b), 1.0,
                            build_rule(2, 16))
    assert abs(chk.lhs - 0.25 * b @ b) < 1e-12
    assert abs(chk.rhs - 2 * (b @ b + 2)) < 1e-12
    assert chk.holds
    mu, _ = random_pair(0)
    assert check_first_bound(mu, mu, 0.5, build_rule(2, 16)).lhs < 1e-20


def test_bounds_sweep():
    for seed in range(50):
        k = 1 + seed % 3
        mu, nu = random_pair(100 + seed, k=k, equal_weights=seed % 2 == 0)
        r = build_rule(k, 32, seed=seed)
        s = [0.25, 0.5, 1.0, 2.0][seed % 4]
        assert check_first_bound(mu, nu, s, r).holds
        assert check_second_bound(mu, nu, s, r).holds


def test_sigma_zero_rejected():
    mu, nu = random_pair(0)
    r = build_rule(2, 8)
    for fn in (grad_measure, hess_x_measure, check_first_bound):
        with pytest.raises(ValueError, match="sigma"):
            fn(mu, nu, 0.0, r)
    with pytest.raises(ValueError):
        ibp_identity_residual(mu, nu, 0.0, [1.0, 0.0])


def test_hermite_rule_is_selectable():
    mu, nu = random_pair(3)
    r = build_rule(2, 16)
    a = grad_measure(mu, nu, 1.0, r, 64).values
    b = grad_measure(mu, nu, 1.0, r).values
    assert np.abs(a - b).max() < 1e-2 * np.abs(b).max()
    assert grad_measure(mu, nu, 1.0, r, 64).meta()["gauss_rule"] == {"kind": "hermite", "order": 64}


def test_backends_agree_on_gradient():
    from slicedvp import _kernels
    mu, nu = random_pair(9)
    r = build_rule(2, 32)
    saved = _kernels.ACTIVE
    out = []
    try:
        for name in sorted(_kernels.backends()):
            _kernels.use(name)
            out.append(grad_measure(mu, nu, 0.5, r).values)
    finally:
        _kernels.use(saved)
    for o in out[1:]:
        assert np.abs(o - out[0]).max() < 1e-11
