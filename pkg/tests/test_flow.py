import numpy as np
import pytest

from junctionflow import (
    ConfigError,
    FlowConfig,
    PicardDiverged,
    check_compatibility,
    default_dt,
    derive_angles,
    energy,
    evaluate_phi,
    make_double_bubble,
    make_loop,
    make_state,
    make_triod,
    picard_step,
    re_reference,
    run,
    validate_cluster,
)

W = derive_angles((1.0, 1.0, 1.0))

VNM_RATE = -4.0 * np.pi / 3.0   # two 120-degree vertices per enclosed region


def region_areas(positions):
    """Enclosed areas of the two bubble lobes (charts run top to bottom)."""
    def shoelace(p):
        x, y = p[:, 0], p[:, 1]
        return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))

    left = np.vstack([positions[0], positions[1][::-1]])
    right = np.vstack([positions[1], positions[2][::-1]])
    return abs(shoelace(left)), abs(shoelace(right))


def sup_rho(state):
    return max(float(np.max(np.abs(r))) for r in state.rho)


def test_config_rejects_bad_values():
    FlowConfig()
    with pytest.raises(ConfigError):
        FlowConfig(dt=-1e-4)
    with pytest.raises(ConfigError):
        FlowConfig(t_end=0.0)
    with pytest.raises(ConfigError):
        FlowConfig(picard_max=1)
    with pytest.raises(ConfigError):
        FlowConfig(output_every=0)
    with pytest.raises(ConfigError):
        FlowConfig(reref_threshold=0.0)


def test_stationary_triod_is_fixed_point():
    tri = make_triod(W, n=48, leg_length=1.0)
    state = make_state(tri)
    state_next, info = picard_step(tri, state, 1e-4)
    assert info.sweeps == 1
    assert sup_rho(state_next) <= 1e-12
    assert state_next.t == pytest.approx(1e-4, rel=0, abs=0)


def test_stationary_triod_run():
    tri = make_triod(W, n=48, leg_length=1.0)
    res = run(tri, config=FlowConfig(dt=1e-4, t_end=5e-3))
    assert res.status.kind == "Running"
    assert not res.status.terminal
    assert sup_rho(res.state) <= 1e-11
    energies = [r["energy"] for r in res.records]
    assert abs(energies[-1] - energies[0]) <= 1e-13 * energies[0]
    assert len(res.records) == 51
    times = [r["t"] for r in res.records]
    assert all(b > a for a, b in zip(times, times[1:]))
    assert res.energy_flags == []
    assert res.reref_times == []
    assert res.warnings == []


def test_picard_contracts_on_bubble():
    bub = make_double_bubble(W, n=96, areas=(1.0, 1.0))
    dt = default_dt(bub)
    _, info = picard_step(bub, make_state(bub), dt)
    assert info.sweeps <= 5
    inc = info.increments
    assert all(b < 0.5 * a for a, b in zip(inc, inc[1:]))


def test_picard_cap_raises():
    bub = make_double_bubble(W, n=64, areas=(1.0, 1.0))
    with pytest.raises(PicardDiverged):
        picard_step(bub, make_state(bub), 1e-3, picard_tol=1e-15, picard_max=2)


def test_run_turns_failures_into_status():
    # an absurd step with no retries must stop, not raise
    bub = make_double_bubble(W, n=64, areas=(1.0, 1.0))
    res = run(bub, config=FlowConfig(dt=1.0, t_end=1.0, max_retries=0))
    assert res.status.terminal
    assert res.status.kind in ("FoldOver", "PicardDiverged")
    assert res.status.detail["dt"] == 1.0
    assert len(res.records) == 1


def test_bubble_energy_and_dissipation_identity():
    bub = make_double_bubble(W, n=96, areas=(1.0, 1.0))
    res = run(bub, config=FlowConfig(dt=1e-4, t_end=5e-3))
    assert res.status.kind == "Running"
    assert res.energy_flags == []
    energies = [r["energy"] for r in res.records]
    assert all(b <= a + 1e-8 * energies[0] for a, b in zip(energies, energies[1:]))
    h = max(r["lengths"][0] for r in res.records[:1]) / 96
    for rec in res.records[2:]:
        assert rec["picard_iters"] <= 5
        assert abs(rec["dissipation_defect"]) <= 10.0 * (h * h + rec["dt"]) * rec["dissipation_rate"]
        # the converged sweep enforces these to tolerance
        assert rec["sum_gbH"] <= 1e-8
        assert max(rec["G2"], rec["G3"]) <= 1e-8
        assert rec["G_third"] <= 3.0 * max(rec["G2"], rec["G3"]) + 1e-10
        # the stencil-independent residual sees the real discretization error
        assert rec["G2_fine"] <= 5e-3
        assert rec["G_third_fine"] <= 3.0 * max(rec["G2_fine"], rec["G3_fine"]) + 1e-10


def test_shrinking_circle_radius_law():
    """dR/dt = -beta/R, so R(t)^2 = R0^2 - 2 t for unit mobility."""
    loop = make_loop(radius=0.5, n=128)
    radii = []

    def watch(i, cluster, state, record):
        pos = evaluate_phi(cluster, state)[0]
        center = pos.mean(axis=0)
        radii.append((record["t"], float(np.mean(np.linalg.norm(pos - center, axis=1)))))

    res = run(loop, config=FlowConfig(t_end=0.08, output_every=25), observer=watch)
    assert res.status.kind == "Running"
    for t, r in radii[1:]:
        exact = np.sqrt(0.25 - 2.0 * t)
        assert abs(r - exact) <= 0.01 * exact


def test_von_neumann_area_rate():
    bub = make_double_bubble(W, n=96, areas=(1.0, 1.0))
    series = []

    def watch(i, cluster, state, record):
        a_left, a_right = region_areas(evaluate_phi(cluster, state))
        series.append((record["t"], a_left, a_right))

    res = run(bub, config=FlowConfig(dt=1e-4, t_end=0.06, output_every=20),
              observer=watch)
    assert res.status.kind == "Running"
    data = np.array(series)
    skip = len(data) // 5
    for col in (1, 2):
        slope = np.polyfit(data[skip:, 0], data[skip:, col], 1)[0]
        assert slope == pytest.approx(VNM_RATE, rel=0.05)
    assert max(r["G2_fine"] for r in res.records[1:]) <= 5e-3


def test_re_reference_keeps_energy_and_junctions():
    bub = make_double_bubble(W, n=96, areas=(1.0, 1.0))
    res = run(bub, config=FlowConfig(dt=1e-4, t_end=2e-3))
    cl, st = res.cluster, res.state
    assert sup_rho(st) > 0.0
    e_before = energy(cl, st)
    jn_before = [evaluate_phi(cl, st)[0][0], evaluate_phi(cl, st)[0][-1]]
    cl2, st2 = re_reference(cl, st)
    assert sup_rho(st2) == 0.0
    assert st2.t == st.t
    e_after = energy(cl2)
    assert abs(e_after - e_before) <= 1e-10 * e_before
    for k, jn in enumerate(cl2.junctions):
        p = cl2.charts[0].positions[0 if k == 0 else -1]
        assert np.linalg.norm(p - jn_before[k]) <= 1e-10
    rep = validate_cluster(cl2)
    assert rep["force_balance"] <= 1e-9
    assert check_compatibility(cl2, st2)["ok"]


def test_re_reference_resample_path():
    bub = make_double_bubble(W, n=96, areas=(1.0, 1.0))
    res = run(bub, config=FlowConfig(dt=1e-4, t_end=2e-3))
    cl, st = res.cluster, res.state
    e_before = energy(cl, st)
    ends_before = [p[[0, -1]].copy() for p in evaluate_phi(cl, st)]
    # ratio 1.0001 forces redistribution of every open chart
    cl2, st2 = re_reference(cl, st, resample_ratio=1.0001)
    assert energy(cl2) <= e_before
    for ci, chart in enumerate(cl2.charts):
        seg = np.linalg.norm(np.diff(chart.positions, axis=0), axis=1)
        assert seg.max() / seg.min() < 1.05
        # junction nodes canonicalize to the first sheet's evolved endpoint
        tol = 0.0 if ci == 0 else 1e-12
        assert np.allclose(chart.positions[[0, -1]], ends_before[ci],
                           rtol=0.0, atol=tol)


def test_reref_triggering_run():
    bub = make_double_bubble(W, n=96, areas=(1.0, 1.0))
    res = run(bub, config=FlowConfig(dt=1e-4, t_end=3e-3, reref_threshold=2e-4))
    assert res.status.kind == "Running"
    assert len(res.reref_times) >= 1
    assert res.energy_flags == []
    energies = [r["energy"] for r in res.records]
    assert all(b <= a + 1e-8 * energies[0] for a, b in zip(energies, energies[1:]))


def test_area_vanishing_stop():
    loop = make_loop(radius=0.12, n=64)
    res = run(loop, config=FlowConfig(t_end=1.0))
    assert res.status.kind == "AreaVanishing"
    assert res.status.detail["chart"] == 0
    # stops when the circumference drops under five initial spacings
    r_stop = 5.0 * 0.12 / 64
    t_exact = 0.5 * (0.12 ** 2 - r_stop ** 2)
    assert res.records[-1]["t"] == pytest.approx(t_exact, rel=0.05)


def test_run_is_deterministic():
    cfg = FlowConfig(dt=1e-4, t_end=1e-3)
    outs = []
    for _ in range(2):
        bub = make_double_bubble(W, n=64, areas=(1.0, 1.0))
        res = run(bub, config=cfg)
        outs.append(res.records)
    a, b = outs
    assert len(a) == len(b)
    for ra, rb in zip(a, b):
        for key in ("t", "energy", "dt", "picard_iters", "dissipation_defect",
                    "G2", "G3", "G_third", "sum_gbH"):
            assert ra[key] == rb[key]
        assert ra["lengths"] == rb["lengths"]
        assert all(np.array_equal(pa, pb)
                   for pa, pb in zip(ra["junctions"], rb["junctions"]))


def test_observer_cadence():
    tri = make_triod(W, n=48, leg_length=1.0)
    seen = []

    def watch(i, cluster, state, record):
        seen.append((i, record["t"]))

    res = run(tri, config=FlowConfig(dt=1e-4, t_end=2e-3, output_every=7),
              observer=watch)
    # initial row plus steps 7, 14 and the final 20th
    assert [i for i, _ in seen] == [0, 1, 2, 3]
    assert len(res.records) == 4
    assert res.records[-1]["t"] == pytest.approx(2e-3)
