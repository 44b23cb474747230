import numpy as np
import pytest

from junctionflow import (
    ShapeMismatch,
    SingularCoupling,
    build_coupling,
    derive_angles,
    make_coupling,
    make_double_bubble,
    make_triod,
    mu_from_rho,
    verify_attachment,
)

W = derive_angles((1.0, 1.0, 1.0))


def test_coupling_matrix_equal_tensions():
    r = 1.0 / np.sqrt(3.0)
    expected = np.array([[0.0, -r, r], [r, 0.0, -r], [-r, r, 0.0]])
    np.testing.assert_allclose(build_coupling(W), expected, rtol=0, atol=1e-15)


def test_coupling_matrix_uneven_tensions():
    w = derive_angles((1.0, 1.0, np.sqrt(3.0)))
    t = build_coupling(w)
    assert t[0][1] == pytest.approx(-np.sqrt(3.0), abs=1e-12)
    assert np.all(np.diag(t) == 0.0)


def test_mu_from_rho_frozen_example():
    mu = mu_from_rho(W, np.array([1.0, -1.0, 0.0]))
    r = 1.0 / np.sqrt(3.0)
    np.testing.assert_allclose(mu, [r, r, -2.0 * r], rtol=0, atol=1e-15)


def test_coupling_consistency_with_point_motion():
    """chirality * T rho must agree with decomposing a junction displacement."""
    rng = np.random.default_rng(5)
    for gamma in [(1.0, 1.0, 1.0), (1.0, 1.2, 0.8), (1.0, 1.0, np.sqrt(3.0))]:
        w = derive_angles(gamma)
        for cl in (make_triod(w, n=64), make_double_bubble(w, n=64)):
            for jn in cl.junctions:
                for _ in range(10):
                    delta = rng.standard_normal(2)
                    rho = jn.normal @ delta
                    mu = jn.nu @ delta
                    np.testing.assert_allclose(
                        mu_from_rho(w, rho, sign=jn.chirality), mu, rtol=0, atol=1e-12)


def test_verify_attachment_accepts_consistent_data():
    cl = make_double_bubble(W, n=100)
    rng = np.random.default_rng(9)
    rho = []
    for chart in cl.charts:
        n = chart.positions.shape[0]
        rho.append(np.full(n, 0.0))
    # junction traces summing to zero under the tensions
    a, b = 0.4, -0.1
    trace = np.array([a, b, -(W.gamma[0] * a + W.gamma[1] * b) / W.gamma[2]])
    for ci in range(3):
        rho[ci][:] = np.linspace(trace[ci], trace[ci], cl.charts[ci].positions.shape[0])
        rho[ci] += rng.uniform(-1, 1) * np.sin(np.linspace(0, np.pi, rho[ci].size))
    mu = [mu_from_rho(W, cl.junction_trace(rho, jn), sign=jn.chirality)
          for jn in cl.junctions]
    report = verify_attachment(cl, rho, mu)
    assert report["ok"], report
    assert report["sum_rho"] <= 1e-14
    assert report["mu_mismatch"] <= 1e-14


def test_verify_attachment_flags_uniform_tangential_offset():
    """rho = 0 with mu = eps * (1,1,1) is off by exactly eps * sqrt(3)."""
    cl = make_triod(W, n=64)
    rho = [np.zeros(c.positions.shape[0]) for c in cl.charts]
    eps = 1e-3
    mu = [np.full(3, eps)]
    report = verify_attachment(cl, rho, mu)
    assert not report["ok"]
    assert report["mu_mismatch"] == pytest.approx(eps * np.sqrt(3.0), rel=1e-12)
    assert report["sum_rho"] == 0.0


def test_resolvent_at_zero_is_exactly_the_coupling_matrix():
    c = make_coupling(W)
    p = c.resolvent(np.zeros(3))
    assert np.array_equal(p, c.matrix)


def test_resolvent_matches_dense_inverse():
    rng = np.random.default_rng(13)
    for gamma in [(1.0, 1.0, 1.0), (1.0, 1.3, 0.9)]:
        c = make_coupling(derive_angles(gamma))
        for _ in range(25):
            dag = rng.uniform(-0.3, 0.3, size=3)
            expected = c.matrix @ np.linalg.inv(np.eye(3) - np.diag(dag) @ c.matrix)
            np.testing.assert_allclose(c.resolvent(dag), expected, rtol=0, atol=1e-12)


def test_resolvent_ring_shape():
    c = make_coupling(W)
    dag = np.zeros((3, 8))
    p = c.resolvent(dag)
    assert p.shape == (3, 3, 8)
    np.testing.assert_array_equal(p[:, :, 3], c.matrix)


def test_resolvent_singular_feedback_raises():
    # diag(d) T has eigenvalue 1 for d = (0, sqrt(3), -sqrt(3)): (I - DT) x = 0
    c = make_coupling(W)
    with pytest.raises(SingularCoupling):
        c.resolvent(np.array([0.0, np.sqrt(3.0), -np.sqrt(3.0)]))


def test_wrong_trace_count_raises():
    with pytest.raises(ShapeMismatch):
        mu_from_rho(W, np.zeros(4))
