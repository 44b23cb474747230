"""Time stepping for the nonlocal junction flow.

One step freezes the geometry-dependent coefficients of the velocity law and
solves the implicit linear junction system repeatedly until the iterate is a
fixed point; the heights then satisfy the fully discrete nonlinear law
together with the exact junction angle conditions.  The outer loop
re-references whenever the heights leave the trust region of the graph
description, shrinks the step with the shortest chart (parabolic scaling),
watches energy decay, and turns the continuation criteria into terminal
statuses rather than exceptions.
"""

from dataclasses import dataclass, field
from math import ceil, log2

import numpy as np
from scipy.spatial import cKDTree

from .errors import (ConfigError, FoldOver, JunctionFlowError, PicardDiverged,
                     ShapeMismatch, SingularSystem)
from .geometry import polyline_lengths, rebuild_reference
from .linear import (assemble, boundary_values, build_operator, solve_step)
from .shape import (angle_residuals, chart_measure, check_compatibility,
                    energy, evaluate_phi, height_rate,
                    junction_rotation_defects, make_state, shape_quantities)

# contact scans are cheap but not free; a few-step detection lag is harmless
CONTACT_EVERY = 5


@dataclass(frozen=True)
class FlowConfig:
    """Step-size, sweep, and trust-region knobs of the outer loop.

    `dt=None` picks 0.25 h^2 / max(beta) from the smallest node spacing;
    `reref_threshold=None` picks 0.1 min(1/max|Pi*|, r0), refreshed after
    every re-reference.  `r0` overrides the cutoff radius of re-referenced
    clusters only; the initial cluster keeps whatever it was built with.
    Retry halving of a failed step is transient: the next step starts again
    from the quantized base step.
    """

    dt: float | None = None
    t_end: float = 1.0
    picard_tol: float = 1e-9
    picard_max: int = 25
    reref_threshold: float | None = None
    r0: float | None = None
    output_every: int = 1
    max_retries: int = 8
    resample_ratio: float = 3.0
    energy_tol: float = 1e-8

    def __post_init__(self):
        for name in ("dt", "t_end", "picard_tol", "reref_threshold", "r0",
                     "resample_ratio", "energy_tol"):
            v = getattr(self, name)
            if v is not None and not v > 0.0:
                raise ConfigError(f"{name} must be positive, got {v!r}")
        if self.picard_max < 2:
            raise ConfigError("picard_max must be at least 2")
        if self.output_every < 1:
            raise ConfigError("output_every must be at least 1")
        if self.max_retries < 0:
            raise ConfigError("max_retries must not be negative")


@dataclass
class FlowStatus:
    """Continuation state; anything but Running is terminal and sticky."""

    kind: str = "Running"
    detail: dict = field(default_factory=dict)

    @property
    def terminal(self) -> bool:
        return self.kind != "Running"


@dataclass
class PicardInfo:
    sweeps: int
    increments: list


@dataclass
class FlowResult:
    """Everything a writer needs: per-step records plus run-level bookkeeping."""

    records: list
    status: FlowStatus
    reref_times: list
    energy_flags: list     # times where energy rose beyond tolerance
    warnings: list
    cluster: object
    state: object
    dt: float              # base step before quantization
    reref_threshold: float # resolved value at the start of the run


def default_dt(cluster) -> float:
    from .geometry import min_spacing

    h = min_spacing(cluster)
    return 0.25 * h * h / float(np.max(cluster.weights.beta))


def default_reref_threshold(cluster) -> float:
    pi_max = max(float(np.max(p)) for p in cluster.pi_sq)
    curb = 1.0 / np.sqrt(pi_max) if pi_max > 0.0 else np.inf
    return 0.1 * float(min(curb, cluster.r0))


def picard_step(cluster, state, dt, picard_tol: float = 1e-9,
                picard_max: int = 25, operator=None):
    """One implicit step of the nonlinear law by fixed-point sweeps.

    Every sweep solves the linear junction system whose interior data is the
    current nonlinear rate minus the linear action of the very same matrix,
    and whose junction data cancels the current rotation defects; a fixed
    point therefore satisfies rho_new = rho_old + dt * rate(rho_new) exactly,
    with the junction angles exact as well.  The returned state re-imposes
    the attachment identity on the converged heights.

    Returns (state_next, PicardInfo).  Raises PicardDiverged when the sweep
    cap is reached (or the increments keep growing) before the relative
    sup-norm change drops below `picard_tol`; FoldOver propagates from the
    geometry of any iterate.
    """
    if operator is None:
        operator = build_operator(cluster, dt)
    nc = len(cluster.charts)
    nj = len(cluster.junctions)
    v = [np.array(r, dtype=float, copy=True) for r in state.rho]
    increments = []
    for sweep in range(1, picard_max + 1):
        trial = make_state(cluster, rho=v, t=state.t)
        quants = shape_quantities(cluster, trial)
        rate_rho, _ = height_rate(cluster, trial, quants)
        lin = operator.apply_spatial(v)
        f = [rate_rho[ci] - lin[ci] for ci in range(nc)]
        bv = boundary_values(operator, v)
        defects = junction_rotation_defects(cluster, quants)
        b = [[0.0, bv[j][1] - defects[j][0], bv[j][2] - defects[j][1]]
             for j in range(nj)]
        system = assemble(cluster, cluster.weights, dt, f=f, b=b,
                          u_old=state.rho, operator=operator)
        v_new = solve_step(system)
        delta = max(float(np.max(np.abs(v_new[ci] - v[ci]))) for ci in range(nc))
        scale = max(1.0, max(float(np.max(np.abs(u))) for u in v_new))
        increments.append(delta / scale)
        v = v_new
        if increments[-1] <= picard_tol:
            return (make_state(cluster, rho=v, t=state.t + dt),
                    PicardInfo(sweeps=sweep, increments=increments))
        if (sweep >= 3 and increments[-1] > increments[-2] > increments[-3]
                and increments[-1] > increments[0]):
            break
    raise PicardDiverged(
        f"no contraction after {len(increments)} sweeps at dt={dt:.3g} "
        f"(last relative increment {increments[-1]:.3g})")


def _cell_weights(positions, dim, closed, period):
    if dim == 1:
        seg = polyline_lengths(positions, closed)
        w = np.zeros(positions.shape[0])
        if closed:
            w += 0.5 * seg
            w += 0.5 * np.roll(seg, 1)
        else:
            w[:-1] += 0.5 * seg
            w[1:] += 0.5 * seg
        return w
    seg = np.linalg.norm(np.diff(positions, axis=0), axis=-1)
    w = np.zeros(positions.shape[:2])
    w[:-1] += 0.5 * seg
    w[1:] += 0.5 * seg
    return w * (period / positions.shape[1])


def dissipation_rate(cluster, quants) -> float:
    """Energy-decay rate of the velocity law on the evolved cluster:
    sum over charts of gamma*beta times the integrated squared curvature."""
    total = 0.0
    for ci, chart in enumerate(cluster.charts):
        ti = chart.tension_index
        gb = float(cluster.weights.gamma[ti] * cluster.weights.beta[ti])
        w = _cell_weights(quants.positions[ci], chart.dim, chart.closed,
                          chart.period)
        total += gb * float(np.sum(quants.mean_curv[ci] ** 2 * w))
    return total


def _polygon_area(pts) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(float(x @ np.roll(y, -1) - np.roll(x, -1) @ y))


def enclosed_areas(cluster, state) -> tuple:
    """Areas of the two plane regions bounded by a double-bubble layout.

    Expects the chart order produced by `make_double_bubble`: left lobe,
    separating wall, right lobe, with both junctions shared by all three.
    Each region boundary is a lobe closed up by the wall; the wall is
    flipped if needed so endpoints match, and they must match to roundoff.
    """
    pos = evaluate_phi(cluster, state)
    if len(pos) != 3 or pos[0].shape[-1] != 2:
        raise ShapeMismatch("enclosed_areas needs the three-chart plane "
                            "layout of make_double_bubble")
    out = []
    for lobe_idx in (0, 2):
        lobe, wall = pos[lobe_idx], pos[1]
        if (np.linalg.norm(wall[-1] - lobe[-1])
                < np.linalg.norm(wall[0] - lobe[-1])):
            wall = wall[::-1]
        gap = max(np.linalg.norm(wall[0] - lobe[-1]),
                  np.linalg.norm(wall[-1] - lobe[0]))
        if gap > 1e-9:
            raise ShapeMismatch(f"region boundary does not close: gap {gap:.3e}")
        out.append(_polygon_area(np.vstack([lobe[:-1], wall[:-1]])))
    return tuple(out)


def _fine_end_normal(positions, end, sign):
    """Junction normal from a one-sided cubic fit in arclength.

    Independent of the stencils the step enforces, so the residuals built
    from it see the geometric angle error of the evolved polyline instead of
    the sweep-tolerance floor.
    """
    pts = positions[:4] if end == 0 else positions[-4:][::-1]
    s = np.concatenate([[0.0], np.cumsum(
        np.linalg.norm(np.diff(pts, axis=0), axis=-1))])
    tan = np.zeros(2)
    for i in range(4):
        dl = 0.0
        for j in range(4):
            if j == i:
                continue
            term = 1.0
            for k in range(4):
                if k == i or k == j:
                    continue
                term *= (s[0] - s[k]) / (s[i] - s[k])
            dl += term / (s[i] - s[j])
        tan += dl * pts[i]
    if end == 1:
        tan = -tan
    tan /= np.linalg.norm(tan)
    return sign * np.array([-tan[1], tan[0]])


def _fine_angle_maxima(cluster, positions):
    if not cluster.junctions or cluster.dim != 1:
        return 0.0, 0.0, 0.0
    c = cluster.weights.c
    g2 = g3 = g_third = 0.0
    for jn in cluster.junctions:
        nrm = [_fine_end_normal(positions[ci], end, cluster.orientation[ci])
               for ci, end in jn.sheets]
        pair = [abs(float(nrm[i] @ nrm[(i + 1) % 3]) - c[(i + 2) % 3])
                for i in range(3)]
        g2, g3, g_third = (max(g2, pair[0]), max(g3, pair[1]),
                           max(g_third, pair[2]))
    return g2, g3, g_third


def _observables(cluster, state, quants) -> dict:
    w = cluster.weights
    lengths, areas = [], []
    for ci, chart in enumerate(cluster.charts):
        m = chart_measure(quants.positions[ci], chart.dim, chart.closed,
                          chart.period)
        lengths.append(m)
        areas.append(float(w.gamma[chart.tension_index]) * m)
    res = angle_residuals(cluster, state, quants)
    g2 = g3 = g_third = sum_gbh = 0.0
    jpos = []
    for j, jn in enumerate(cluster.junctions):
        g2 = max(g2, float(np.max(np.abs(res[j]["angle_12"]))))
        g3 = max(g3, float(np.max(np.abs(res[j]["angle_23"]))))
        g_third = max(g_third, float(np.max(np.abs(res[j]["angle_31"]))))
        curv = cluster.junction_trace(quants.mean_curv, jn)
        coef = np.array([w.gamma[cluster.charts[ci].tension_index]
                         * w.beta[cluster.charts[ci].tension_index]
                         for ci, _ in jn.sheets])
        sum_gbh = max(sum_gbh, float(np.max(np.abs(
            np.tensordot(coef, curv, axes=1)))))
        ci0, end0 = jn.sheets[0]
        jpos.append(np.array(quants.positions[ci0][0 if end0 == 0 else -1]))
    f2, f3, f_third = _fine_angle_maxima(cluster, quants.positions)
    return {"lengths": lengths, "areas": areas, "G2": g2, "G3": g3,
            "G_third": g_third, "G2_fine": f2, "G3_fine": f3,
            "G_third_fine": f_third, "sum_gbH": sum_gbh, "junctions": jpos}


def advance(cluster, state, dt, *, picard_tol: float = 1e-9,
            picard_max: int = 25, operator=None, energy_prev=None,
            energy_ref=None, energy_tol: float = 1e-8):
    """One accepted step plus its trace record.

    `energy_prev` feeds the dissipation-identity defect (the step's energy
    difference quotient plus the decay-rate integral, evaluated implicitly);
    `energy_ref` scales the non-increase flag.  Returns
    (record, state_next, quantities).
    """
    state_next, info = picard_step(cluster, state, dt, picard_tol=picard_tol,
                                   picard_max=picard_max, operator=operator)
    quants = shape_quantities(cluster, state_next)
    obs = _observables(cluster, state_next, quants)
    f_now = energy(cluster, positions=quants.positions)
    rate = dissipation_rate(cluster, quants)
    defect = 0.0 if energy_prev is None else (f_now - energy_prev) / dt + rate
    ref = abs(f_now if energy_ref is None else energy_ref)
    flagged = (energy_prev is not None
               and f_now > energy_prev + energy_tol * ref)
    record = {"t": float(state_next.t), "energy": f_now, "dt": float(dt),
              "picard_iters": info.sweeps, "dissipation_defect": defect,
              "dissipation_rate": rate, "energy_flag": bool(flagged), **obs}
    return record, state_next, quants


def re_reference(cluster, state, r0=None, resample_ratio: float = 3.0):
    """Rebuild the reference over the evolved nodes and zero the heights.

    The evolved node set is kept as-is, so energy and junction positions are
    continuous across the swap to roundoff; only when some open chart's node
    spacing has drifted past `resample_ratio` (max over min segment) are the
    open curve charts redistributed at uniform arclength, which can only
    shorten the polylines.  Junction frames are re-balanced from the evolved
    tangents, so OrientationFailure here means the run accumulated real
    angle drift.
    """
    pos = evaluate_phi(cluster, state)
    resample = False
    for ci, chart in enumerate(cluster.charts):
        if chart.dim != 1 or chart.closed:
            continue
        seg = polyline_lengths(pos[ci])
        if float(seg.max()) > resample_ratio * float(seg.min()):
            resample = True
            break
    cluster_new = rebuild_reference(cluster, pos, r0=r0, resample=resample)
    return cluster_new, make_state(cluster_new, t=state.t)


def _height_extent(cluster, state) -> float:
    """sup|rho| + r0 sup|d rho/ds| over the reference, the trust-region size."""
    sup = 0.0
    slope = 0.0
    for ci, chart in enumerate(cluster.charts):
        r = state.rho[ci]
        sup = max(sup, float(np.max(np.abs(r))))
        if chart.dim == 1:
            seg = polyline_lengths(chart.positions, chart.closed)
            d = np.abs(np.diff(r))
            if chart.closed:
                d = np.append(d, abs(r[0] - r[-1]))
        else:
            seg = np.linalg.norm(np.diff(chart.positions[:, 0], axis=0),
                                 axis=-1)
            d = np.max(np.abs(np.diff(r, axis=0)), axis=1)
        if d.size:
            slope = max(slope, float(np.max(d / seg)))
    return sup + cluster.r0 * slope


def _short_scale(cluster, lengths) -> float:
    vals = []
    for ci, chart in enumerate(cluster.charts):
        vals.append(lengths[ci] if chart.dim == 1 else np.sqrt(lengths[ci]))
    return float(min(vals))


def _vanishing_chart(lengths, limits):
    for ci, (m, lim) in enumerate(zip(lengths, limits)):
        if m < lim:
            return {"chart": ci, "measure": float(m), "limit": float(lim)}
    return None


def _self_contact(cluster, positions):
    """Nearest-approach monitor.

    Flags junction pairs not joined by any chart closer than twice the mean
    node spacing, and node pairs at that distance whose shortest connection
    along the cluster (within a chart, or through a shared junction) exceeds
    six spacings -- anything closer along the cluster is legitimate
    proximity, and two junctions joined by a chart approaching each other is
    that chart vanishing, which the area monitor owns.
    """
    seg_sum = 0.0
    seg_count = 0
    for ci, chart in enumerate(cluster.charts):
        line = positions[ci] if chart.dim == 1 else positions[ci][:, 0]
        seg = polyline_lengths(line, chart.dim == 1 and chart.closed)
        seg_sum += float(seg.sum())
        seg_count += seg.shape[0]
    scale = seg_sum / max(seg_count, 1)
    thresh = 2.0 * scale

    jpts = []
    for jn in cluster.junctions:
        ci, end = jn.sheets[0]
        p = positions[ci][0 if end == 0 else -1]
        jpts.append(np.atleast_2d(p))
    for j in range(len(jpts)):
        cj = {ci for ci, _ in cluster.junctions[j].sheets}
        for k in range(j + 1, len(jpts)):
            ck = {ci for ci, _ in cluster.junctions[k].sheets}
            if cj & ck:
                continue
            d = float(np.min(np.linalg.norm(
                jpts[j][:, None, :] - jpts[k][None, :, :], axis=-1)))
            if d < thresh:
                return {"junctions": (j, k), "distance": d}

    if cluster.dim != 1:
        return None
    pts = np.concatenate(positions, axis=0)
    chart_id = np.concatenate([np.full(p.shape[0], ci, dtype=int)
                               for ci, p in enumerate(positions)])
    node_id = np.concatenate([np.arange(p.shape[0]) for p in positions])
    pairs = cKDTree(pts).query_pairs(thresh, output_type="ndarray")
    if pairs.size == 0:
        return None

    cum, total, closed = [], [], []
    for ci, chart in enumerate(cluster.charts):
        seg = polyline_lengths(positions[ci], chart.closed)
        n = positions[ci].shape[0]
        cum.append(np.concatenate([[0.0], np.cumsum(seg[:n - 1])]))
        total.append(float(seg.sum()))
        closed.append(chart.closed)
    cumflat = np.concatenate(cum)
    ca, cb = chart_id[pairs[:, 0]], chart_id[pairs[:, 1]]
    sa, sb = cumflat[pairs[:, 0]], cumflat[pairs[:, 1]]
    margin = 6.0 * scale

    same = ca == cb
    sep = np.abs(sa - sb)
    tot = np.asarray(total)[ca]
    wrap = same & np.asarray(closed, dtype=bool)[ca]
    sep = np.where(wrap, np.minimum(sep, tot - sep), sep)
    hit = same & (sep > margin)
    if np.any(hit):
        i = int(np.argmax(hit))
        d = float(np.linalg.norm(pts[pairs[i, 0]] - pts[pairs[i, 1]]))
        return {"charts": (int(ca[i]), int(cb[i])),
                "nodes": (int(node_id[pairs[i, 0]]), int(node_id[pairs[i, 1]])),
                "distance": d}

    ends = {}
    for j, jn in enumerate(cluster.junctions):
        for ci, end in jn.sheets:
            ends.setdefault(ci, []).append((j, end))
    for i in np.nonzero(~same)[0]:
        a, b = int(ca[i]), int(cb[i])
        ja, jb = {}, {}
        for j, e in ends.get(a, []):
            ja.setdefault(j, []).append(e)
        for j, e in ends.get(b, []):
            jb.setdefault(j, []).append(e)
        path = np.inf
        for j in set(ja) & set(jb):
            for ea in ja[j]:
                da = sa[i] if ea == 0 else total[a] - sa[i]
                for eb in jb[j]:
                    db = sb[i] if eb == 0 else total[b] - sb[i]
                    path = min(path, da + db)
        if path > margin:
            d = float(np.linalg.norm(pts[pairs[i, 0]] - pts[pairs[i, 1]]))
            return {"charts": (a, b),
                    "nodes": (int(node_id[pairs[i, 0]]),
                              int(node_id[pairs[i, 1]])),
                    "distance": d}
    return None


def run(cluster, state=None, config: FlowConfig | None = None, observer=None):
    """Advance the flow to `t_end` or a continuation stop.

    The step is the configured (or default) base dt divided by a power of
    two that tracks the shortest chart at parabolic rate, so the step count
    per halving of the feature scale stays constant.  Failed steps retry:
    once after a re-reference, then with transiently halved steps, and turn
    into a terminal status when `max_retries` is exhausted.  Chart measures
    falling under five initial spacings (dim 1; 25 h^2 for sheets) stop the
    run as AreaVanishing; nearest-approach stops as SelfContact.

    `observer(index, cluster, state, record)` fires for every recorded row,
    including the initial one.  Returns a FlowResult; continuation criteria
    land in its status as data, never as exceptions.
    """
    config = FlowConfig() if config is None else config
    state = make_state(cluster) if state is None else state
    dt0 = config.dt if config.dt is not None else default_dt(cluster)
    threshold = (config.reref_threshold if config.reref_threshold is not None
                 else default_reref_threshold(cluster))
    threshold0 = threshold
    auto_threshold = config.reref_threshold is None

    warnings = []
    compat = check_compatibility(cluster, state)
    if not compat["ok"]:
        warnings.append(
            "initial data fails the attachment compatibility check "
            f"(sum_rho={compat['sum_rho']:.3g}, "
            f"mu_mismatch={compat['mu_mismatch']:.3g}); accuracy degrades")

    limits = [5.0 * cluster.h0[ci] if chart.dim == 1
              else 25.0 * cluster.h0[ci] ** 2
              for ci, chart in enumerate(cluster.charts)]

    quants = shape_quantities(cluster, state)
    obs = _observables(cluster, state, quants)
    f0 = energy(cluster, positions=quants.positions)
    record = {"t": float(state.t), "energy": f0, "dt": 0.0, "picard_iters": 0,
              "dissipation_defect": 0.0,
              "dissipation_rate": dissipation_rate(cluster, quants),
              "energy_flag": False, **obs}
    records = [record]
    recorded = 0
    if observer is not None:
        observer(recorded, cluster, state, record)

    scale0 = _short_scale(cluster, obs["lengths"])
    lengths_now = obs["lengths"]
    f_prev = f0
    reref_times = []
    energy_flags = []
    operators = {}
    status = FlowStatus()
    eps_end = 1e-12 * max(1.0, abs(config.t_end))
    step = 0

    while state.t < config.t_end - eps_end and not status.terminal:
        scale_now = _short_scale(cluster, lengths_now)
        m = 0
        if scale_now < scale0:
            # the 1e-9 slack keeps roundoff-level length changes at m = 0
            x = 2.0 * log2(scale0 / scale_now)
            m = min(60, max(0, int(ceil(x - 1e-9))))
        dt_step = min(dt0 / 2 ** m, config.t_end - state.t)

        dt_try = dt_step
        attempt = 0
        rerefed = False
        while True:
            op = operators.get(dt_try)
            if op is None:
                op = operators[dt_try] = build_operator(cluster, dt_try)
            try:
                record, state_next, quants = advance(
                    cluster, state, dt_try, picard_tol=config.picard_tol,
                    picard_max=config.picard_max, operator=op,
                    energy_prev=f_prev, energy_ref=f0,
                    energy_tol=config.energy_tol)
                break
            except (FoldOver, PicardDiverged, SingularSystem) as exc:
                attempt += 1
                if attempt > config.max_retries:
                    kind = ("FoldOver" if isinstance(exc, FoldOver)
                            else "PicardDiverged")
                    status = FlowStatus(kind, {
                        "error": str(exc), "t": float(state.t),
                        "dt": float(dt_try)})
                    break
                if not rerefed:
                    try:
                        cluster, state = re_reference(
                            cluster, state, r0=config.r0,
                            resample_ratio=config.resample_ratio)
                    except JunctionFlowError as reref_exc:
                        status = FlowStatus(type(reref_exc).__name__, {
                            "error": str(reref_exc), "t": float(state.t)})
                        break
                    operators = {}
                    rerefed = True
                    reref_times.append(float(state.t))
                    if auto_threshold:
                        threshold = default_reref_threshold(cluster)
                else:
                    dt_try *= 0.5
        if status.terminal:
            break

        step += 1
        state = state_next
        f_prev = record["energy"]
        lengths_now = record["lengths"]
        if record["energy_flag"]:
            energy_flags.append(record["t"])

        van = _vanishing_chart(record["lengths"], limits)
        if van is not None:
            status = FlowStatus("AreaVanishing", van)
        elif step % CONTACT_EVERY == 0:
            hit = _self_contact(cluster, quants.positions)
            if hit is not None:
                status = FlowStatus("SelfContact", hit)

        if (status.terminal or step % config.output_every == 0
                or state.t >= config.t_end - eps_end):
            records.append(record)
            recorded += 1
            if observer is not None:
                observer(recorded, cluster, state, record)

        if not status.terminal and _height_extent(cluster, state) > threshold:
            # a failed rebuild means the evolved nodes no longer meet at the
            # prescribed angles to stencil accuracy: stop, do not crash
            try:
                cluster, state = re_reference(cluster, state, r0=config.r0,
                                              resample_ratio=config.resample_ratio)
            except JunctionFlowError as exc:
                status = FlowStatus(type(exc).__name__, {
                    "error": str(exc), "t": float(state.t)})
                continue
            operators = {}
            reref_times.append(float(state.t))
            if auto_threshold:
                threshold = default_reref_threshold(cluster)

    return FlowResult(records=records, status=status, reref_times=reref_times,
                      energy_flags=energy_flags, warnings=warnings,
                      cluster=cluster, state=state, dt=float(dt0),
                      reref_threshold=float(threshold0))
