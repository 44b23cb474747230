import numpy as np
import pytest
import scipy.linalg as sla

from junctionflow.errors import DomainError
from junctionflow.symbols import (
    _bvp_system,
    _sigma_min,
    ansatz_boundary_matrix,
    check_grid,
    decay_rates,
    ls_determinant,
    make_sample,
    ode_energy_check,
    roots,
    singular_floor,
)
from junctionflow.weights import derive_angles

W = derive_angles((1.0, 1.0, 1.0))
W_ANISO = derive_angles((1.0, 1.3, 0.9), beta=(1e-2, 1.0, 1e2))


def test_symmetric_point_frozen_values():
    s = make_sample(W, 1.0)
    assert np.max(np.abs(s.tau - 1j)) <= 1e-14
    assert abs(s.det - (-3.0)) <= 1e-12
    assert np.max(np.abs(s.summand_re - (-1.0))) <= 1e-12
    det, re = ls_determinant(s)
    assert det == s.det
    assert np.array_equal(re, s.summand_re)


def test_real_p_roots_are_imaginary():
    for p in (1e-6, 0.037, 1.0, 250.0):
        tau = roots(W_ANISO, p)
        expect = 1j * np.sqrt(p / np.asarray(W_ANISO.beta))
        assert np.max(np.abs(tau - expect)) <= 1e-13 * np.max(np.abs(expect))


def test_parabolic_scaling_of_roots_and_determinant():
    rng = np.random.default_rng(5)
    for _ in range(40):
        p = rng.uniform(1e-3, 5.0) + 1j * rng.uniform(-5.0, 5.0)
        xi = rng.uniform(-2.0, 2.0)
        base = make_sample(W_ANISO, p, xi_prime=[xi])
        for s in (0.5, 2.0, 3.7):
            scaled = make_sample(W_ANISO, s * s * p, xi_prime=[s * xi])
            assert np.max(np.abs(scaled.tau - s * base.tau)) <= \
                1e-12 * np.max(np.abs(scaled.tau))
            # the determinant carries two roots per summand: degree two
            assert abs(abs(scaled.det) - s * s * abs(base.det)) <= \
                1e-12 * abs(scaled.det)


def test_rejects_frequencies_outside_the_half_plane():
    with pytest.raises(DomainError):
        make_sample(W, 0.0)
    with pytest.raises(DomainError):
        make_sample(W, -1.0 + 2.0j)
    with pytest.raises(DomainError):
        make_sample(W, 1.0, xi_prime=[1.0], g_tang=-np.ones((3, 1, 1)))


def test_summands_negative_across_grids():
    res = np.logspace(-6, 3, 7)
    ims = np.linspace(-1e3, 1e3, 5)
    xis = np.linspace(-30.0, 30.0, 5)
    for w in (W, W_ANISO, derive_angles((1.0, 1.2, 1.1))):
        for re in res:
            for im in ims:
                for xi in xis:
                    s = make_sample(w, re + 1j * im, xi_prime=[xi])
                    assert np.all(s.summand_re < 0.0)
                    pair = s.tau * np.roll(s.tau, 1)
                    ang = np.mod(np.angle(pair), 2.0 * np.pi)
                    assert np.all(ang > 0.5 * np.pi)
                    assert np.all(ang < 1.5 * np.pi)


def test_grid_scan_is_deterministic_and_clean():
    a = check_grid(W, samples=10000, seed=42)
    b = check_grid(W, samples=10000, seed=42)
    assert a == b
    assert a["samples"] >= 10000
    assert a["seed"] == 42
    assert a["min_abs_det"] > 0.0
    assert a["min_neg_re"] > 0.0
    c = check_grid(W, samples=10000, seed=43)
    assert c["worst_sample"] != a["worst_sample"]
    aniso = check_grid(W_ANISO, samples=10000, seed=42)
    assert aniso["min_neg_re"] > 0.0


def test_grid_scan_rejects_degenerate_range():
    with pytest.raises(DomainError):
        check_grid(W, p_re=(0.0, 1.0))


def test_ode_certificate_at_reference_points():
    rep = ode_energy_check(W, 1.0, 0.0)
    assert rep["sigma_min"] > 0.1
    assert rep["energy_defect"] <= 1e-10
    rep0 = ode_energy_check(W, 0.0, 1.0)
    assert rep0["sigma_min"] > 0.0
    assert rep0["energy_defect"] <= 1e-10


def test_ode_certificate_domain_checks():
    with pytest.raises(DomainError):
        ode_energy_check(W, -1.0, 0.0)
    with pytest.raises(DomainError):
        ode_energy_check(W, 0.0, 0.0)
    with pytest.raises(DomainError):
        ode_energy_check(W, 1.0, 0.0, N=100)
    with pytest.raises(DomainError):
        ode_energy_check(W, 1.0, 0.0, Y=2.0)


def test_power_iteration_matches_dense_svd():
    lam, xi_sq = 1.0 + 0.0j, 0.0
    a_red, b_red, *_ = _bvp_system(W, lam, xi_sq, 12.0, 200)
    low = np.linalg.cholesky(b_red.toarray())
    x = np.linalg.solve(low, a_red.toarray())
    c = np.linalg.solve(low, x.conj().T).conj().T
    dense = sla.svdvals(c)[-1]
    power, _, _ = _sigma_min(a_red, b_red)
    assert abs(power - dense) <= 1e-6 * dense


def test_singular_point_sets_a_low_floor():
    floor = singular_floor(W)
    assert 0.0 <= floor < 1e-6
    rng = np.random.default_rng(9)
    for _ in range(20):
        lam = rng.uniform(0.0, 10.0) + 1j * rng.uniform(-10.0, 10.0)
        rep = ode_energy_check(W, lam, rng.uniform(-3.0, 3.0))
        assert rep["sigma_min"] > 10.0 * max(floor, 1e-300)
        assert rep["energy_defect"] <= 1e-10


def test_exponential_ansatz_matches_root_determinant():
    rng = np.random.default_rng(17)
    for _ in range(100):
        gamma = rng.uniform(0.8, 1.2, size=3)
        beta = np.exp(rng.uniform(np.log(0.2), np.log(5.0), size=3))
        w = derive_angles(gamma, beta=beta)
        lam = rng.uniform(1e-3, 10.0) + 1j * rng.uniform(-10.0, 10.0)
        xi = rng.uniform(-3.0, 3.0)
        s = make_sample(w, lam, xi_prime=[xi])
        mat = ansatz_boundary_matrix(w, lam, xi * xi)
        det = np.linalg.det(mat)
        # rows scale the roots by 1/i each, so det flips sign exactly
        assert abs(det + s.det) <= 1e-10 * abs(s.det)
        assert abs(det) > 0.0
        assert abs(s.det) > 0.0
        assert 1e-3 <= abs(det) / abs(s.det) <= 1e3


def test_decay_rates_quarter_plane():
    m = decay_rates(W_ANISO, 0.3 + 0.9j, 1.7)
    assert np.all(m.real > 0.0)
    expect = np.sqrt((0.3 + 0.9j + np.asarray(W_ANISO.beta) * 1.7)
                     / np.asarray(W_ANISO.beta))
    assert np.max(np.abs(m - expect)) <= 1e-14 * np.max(np.abs(expect))


def test_energy_defect_tiny_for_anisotropic_weights():
    for lam, xi in ((2.0 + 1.0j, 0.4), (0.1, 1.3), (5.0 - 3.0j, 0.0)):
        rep = ode_energy_check(W_ANISO, lam, xi)
        assert rep["energy_defect"] <= 1e-10
        assert rep["sigma_min"] > 0.0
