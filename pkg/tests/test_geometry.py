import numpy as np
import pytest

from junctionflow import (
    BadMesh,
    OrientationFailure,
    SupportOverlap,
    build_tau,
    derive_angles,
    geometric_fields,
    make_double_bubble,
    make_from_node_table,
    make_loop,
    make_prism,
    make_triod,
    project_to_junction,
    validate_cluster,
)
from junctionflow.geometry import arclength_resample, balance_conormals, polyline_lengths
from junctionflow.stencils import d1


W = derive_angles((1.0, 1.0, 1.0))
W_UNEVEN = derive_angles((1.0, 1.0, np.sqrt(3.0)))


def shoelace(points):
    x, y = points[:, 0], points[:, 1]
    return 0.5 * np.sum(x[:-1] * y[1:] - x[1:] * y[:-1])


# ---------------------------------------------------------------------------
# triod


def test_triod_invariants():
    cl = make_triod(W, n=200)
    rep = validate_cluster(cl)
    assert rep["ok"], rep
    assert rep["force_balance"] <= 1e-12
    assert rep["angle_match"] <= 1e-12
    assert rep["junction_bitwise"]


def test_triod_junction_frame_frozen_values():
    """Base triod: leg 1 along +x, normals fixed by the orientation tie-break."""
    cl = make_triod(W, n=100)
    jn = cl.junctions[0]
    s3 = np.sqrt(3.0) / 2.0
    np.testing.assert_allclose(jn.nu, [[-1.0, 0.0], [0.5, -s3], [0.5, s3]], atol=1e-13)
    np.testing.assert_allclose(jn.normal, [[0.0, 1.0], [-s3, -0.5], [s3, -0.5]], atol=1e-13)
    assert jn.normal[0] @ np.array([0.0, 1.0]) >= 0.0
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        assert jn.normal[i] @ jn.normal[j] == pytest.approx(W.c[k], abs=1e-13)


def test_cutoff_extension_profile():
    cl = build_tau(make_triod(W, n=200), 0.25)
    tau = cl.tau[0]
    jn = cl.junctions[0]
    np.testing.assert_array_equal(tau[0], jn.nu[0])
    # support ends at arclength r0
    s = np.concatenate([[0.0], np.cumsum(polyline_lengths(cl.charts[0].positions))])
    assert np.all(np.linalg.norm(tau[s >= 0.25], axis=-1) == 0.0)
    assert np.all(np.linalg.norm(tau, axis=-1) <= 1.0 + 1e-12)
    # sup of |d tau/ds| for the quintic profile is 1.875 / r0
    dt = d1(tau, 1.0 / 200) / cl.sqrt_g[0][:, None]
    sup = np.max(np.linalg.norm(dt, axis=-1))
    assert sup == pytest.approx(1.875 / 0.25, rel=2e-2)


def test_cutoff_radius_too_large_raises():
    with pytest.raises(SupportOverlap):
        make_triod(W, n=100, r0=0.6)


def test_slot_map_and_projection():
    cl = make_triod(W, n=100, r0=0.25)
    j, sheet, inside = project_to_junction(cl, 1, 0)
    assert (j, sheet, inside) == (0, 1, True)
    j, sheet, inside = project_to_junction(cl, 1, 80)
    assert not inside and j == -1


def test_curved_legs_still_balance():
    def bump(i, s):
        return 0.05 * (i + 1) * (s * (1.0 - s)) ** 2

    cl = make_triod(W, n=300, leg_shape=bump)
    rep = validate_cluster(cl)
    assert rep["ok"], rep
    assert np.max(np.abs(cl.mean_curv[0])) > 0.01


# ---------------------------------------------------------------------------
# families


def test_loop_curvature_and_convergence():
    errs = []
    for n in (64, 128):
        lp = make_loop(radius=2.0, n=n)
        errs.append(np.max(np.abs(lp.mean_curv[0] - 0.5)))
    assert errs[0] / errs[1] > 3.5
    assert errs[1] < 1e-3


def test_equal_area_bubble_matches_closed_form():
    """Equal areas: straight middle chart, 240-degree outer arcs."""
    bb = make_double_bubble(W, n=400, areas=(1.0, 1.0))
    assert validate_cluster(bb)["ok"]
    lobe_unit = 0.5 * (2.0 / np.sqrt(3.0)) ** 2 * (4.0 * np.pi / 3.0 + np.sqrt(3.0) / 2.0)
    half_gap = 1.0 / np.sqrt(lobe_unit)
    q_top = bb.junctions[0].point
    q_bot = bb.junctions[1].point
    np.testing.assert_allclose(q_top, [0.0, half_gap], atol=2e-6)
    np.testing.assert_allclose(q_bot, [0.0, -half_gap], atol=2e-6)
    # middle chart is a straight segment, outer charts are circular arcs
    assert np.max(np.abs(bb.mean_curv[1])) < 1e-9
    radius = 2.0 * half_gap / np.sqrt(3.0)
    np.testing.assert_allclose(np.abs(bb.mean_curv[0]), 1.0 / radius, rtol=1e-3)
    assert bb.lengths[0] == pytest.approx(4.0 * np.pi / 3.0 * radius, rel=1e-5)


@pytest.mark.parametrize("areas", [(1.0, 1.0), (1.0, 2.0), (0.7, 0.3)])
def test_bubble_region_areas_match_request(areas):
    bb = make_double_bubble(W, n=800, areas=areas)
    left = np.vstack([bb.charts[0].positions, bb.charts[1].positions[::-1]])
    right = np.vstack([bb.charts[1].positions, bb.charts[2].positions[::-1]])
    assert abs(shoelace(left)) == pytest.approx(areas[0], rel=3e-4)
    assert abs(shoelace(right)) == pytest.approx(areas[1], rel=3e-4)


def test_uneven_tension_bubble_validates():
    bb = make_double_bubble(W_UNEVEN, n=300, areas=(1.0, 1.5))
    rep = validate_cluster(bb)
    assert rep["ok"], rep
    assert bb.junctions[0].rotation_sign == -bb.junctions[1].rotation_sign


def test_prism_reference_fields():
    pr = make_prism(W, n=32, rings=32, length=1.0, period=2.0)
    rep = validate_cluster(pr)
    assert rep["ok"], rep
    for ci in range(3):
        assert np.max(np.abs(pr.mean_curv[ci])) < 1e-9
        assert np.max(np.abs(pr.pi_sq[ci])) < 1e-9
        g = pr.metric[ci]
        np.testing.assert_allclose(g[..., 0], 1.0, atol=1e-10)   # g11 = length^2
        np.testing.assert_allclose(g[..., 1], 0.0, atol=1e-12)
        np.testing.assert_allclose(g[..., 2], 1.0, atol=1e-12)
        nrm = pr.normal[ci]
        assert np.max(np.abs(nrm[..., 2])) < 1e-12
        assert np.max(np.abs(nrm - nrm[1, 1])) < 1e-9
    jn = pr.junctions[0]
    assert jn.nu.shape == (3, 32, 3)
    np.testing.assert_allclose(np.tensordot(W.gamma, jn.nu, axes=1), 0.0, atol=1e-12)


# ---------------------------------------------------------------------------
# node tables


def triod_table(n=60, rotate=0.0):
    cl = make_triod(W, n=n, base_angle=rotate)
    rows = []
    for ci, chart in enumerate(cl.charts):
        for k, (x, y) in enumerate(chart.positions):
            rows.append((ci, k, x, y))
    return np.array(rows)


def test_node_table_roundtrip():
    cl = make_from_node_table(triod_table(rotate=0.3), W)
    rep = validate_cluster(cl)
    assert rep["ok"], rep
    assert len(cl.junctions) == 1
    assert cl.junctions[0].sheets == ((0, 0), (1, 0), (2, 0))


def test_node_table_wrong_angles_rejected():
    rows = triod_table()
    mask = rows[:, 0] == 2
    ang = 0.4
    rot = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    rows[mask, 2:4] = rows[mask, 2:4] @ rot.T
    with pytest.raises(OrientationFailure):
        make_from_node_table(rows, W)


def test_node_table_gap_rejected():
    rows = triod_table()
    rows = rows[~((rows[:, 0] == 1) & (rows[:, 1] == 5))]
    with pytest.raises(BadMesh):
        make_from_node_table(rows, W)


def test_node_table_without_junction_rejected():
    rows = triod_table()
    rows[rows[:, 0] == 1, 2] += 5.0  # move chart 1 far away
    with pytest.raises(BadMesh):
        make_from_node_table(rows, W)


def test_node_table_duplicate_nodes_rejected():
    rows = triod_table()
    sel = (rows[:, 0] == 0) & (rows[:, 1] == 7)
    src = (rows[:, 0] == 0) & (rows[:, 1] == 8)
    rows[sel, 2:4] = rows[src, 2:4]
    with pytest.raises(BadMesh):
        make_from_node_table(rows, W)


# ---------------------------------------------------------------------------
# helpers


def test_balance_conormals_random_perturbations():
    rng = np.random.default_rng(3)
    base = np.array([0.0, W.theta[2], W.theta[2] + W.theta[0]]) + 0.7
    for _ in range(40):
        ang = base + rng.uniform(-0.03, 0.03, size=3)
        raw = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        nu = balance_conormals(raw, W.gamma)
        assert np.linalg.norm(W.gamma @ nu) < 1e-13
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            assert nu[i] @ nu[j] == pytest.approx(W.c[k], abs=1e-12)


def test_balance_conormals_rejects_bad_geometry():
    ang = np.array([0.0, 1.0, 2.0])  # nowhere near a balanced configuration
    raw = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    with pytest.raises(OrientationFailure):
        balance_conormals(raw, W.gamma)


def test_arclength_resample_properties():
    t = np.linspace(0.0, 1.0, 201)
    pos = np.stack([t, 0.2 * np.sin(4.0 * t) + t * t], axis=-1)
    pos2 = arclength_resample(pos)
    assert pos2[0].tobytes() == pos[0].tobytes()
    assert pos2[-1].tobytes() == pos[-1].tobytes()
    seg = polyline_lengths(pos2)
    assert seg.max() / seg.min() < 1.0 + 1e-3
    assert seg.sum() <= polyline_lengths(pos).sum() + 1e-14


def test_geometric_fields_match_stored():
    cl = make_double_bubble(W, n=120)
    rec = geometric_fields(cl)
    for ci in range(3):
        np.testing.assert_array_equal(rec["sqrt_g"][ci], cl.sqrt_g[ci])
        np.testing.assert_array_equal(rec["mean_curv"][ci], cl.mean_curv[ci])
        # stored normals differ only on the balanced junction rows
        interior = slice(1, -1)
        np.testing.assert_array_equal(rec["normal"][ci][interior], cl.normal[ci][interior])
