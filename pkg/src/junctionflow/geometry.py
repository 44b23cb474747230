"""Reference clusters: charts, junctions, and the fields living on them.

A cluster is a set of three charts (planar curves, or flat sheets with one
periodic direction) meeting at one or more triple junctions.  Each chart is a
uniform parameter grid carrying node positions; all geometric fields (normals,
area element, curvatures) are finite-difference quantities of the node
positions, so explicit node tables and analytic families go through the same
path.  Junction data (conormals, rotated normals, coupling curvature) is
stored exactly force-balanced: raw end tangents are projected onto the
constraint sum_i gamma^i nu^i = 0, which simultaneously pins all pairwise
angles to the contact angles of the tension triple.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import BadMesh, OrientationFailure, ShapeMismatch, SupportOverlap
from .stencils import d1, d2, grid_step, rot90
from .weights import AngleWeights

# Largest force-balance correction (radians) applied silently to raw end
# tangents; beyond this the geometry does not meet at Young angles.
BALANCE_TOL = 0.05

PINNED = ("pinned",)


def smoothstep_cut(t, profile: str = "quintic"):
    """Cutoff profile: 1 at the junction, 0 beyond distance r0, C^2 ("quintic")."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    if profile == "quintic":
        return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    if profile == "cubic":
        return 1.0 - t * t * (3.0 - 2.0 * t)
    raise ValueError(f"unknown cutoff profile {profile!r}")


@dataclass(frozen=True)
class DiscreteChart:
    """One chart: node positions over a uniform parameter grid.

    dim 1: positions (N+1, 2), open curve, or (N, 2) closed loop.
    dim 2: positions (N+1, M, 3); second axis is periodic with extent `period`.
    `ends` holds descriptors for the x=0 and x=1 sides: ("junction", j) or
    ("pinned",); closed loops have no ends.
    """

    dim: int
    positions: np.ndarray
    ends: tuple
    tension_index: int
    closed: bool = False
    period: float = 0.0

    @property
    def n_x(self) -> int:
        return self.positions.shape[0]

    def junction_ends(self):
        return [(e, desc[1]) for e, desc in enumerate(self.ends) if desc[0] == "junction"]


@dataclass(frozen=True)
class Junction:
    """Exactly-balanced data of one triple junction.

    `sheets` lists (chart_index, end) in sheet order; `nu` are outer unit
    conormals, `normal` their quarter-turn N* = R nu, `kappa` the second
    fundamental form on (nu, nu) per sheet.  For sheet clusters the arrays
    carry one extra ring axis of length M.  `chirality` is the product of the
    quarter-turn sign and the cyclic orientation of the sheet listing; the
    attachment map at this junction is mu = chirality * T rho.
    """

    index: int
    sheets: tuple
    point: np.ndarray        # (2,) curves; (M, 3) ring for sheets
    nu: np.ndarray           # (3, 2) or (3, M, 3)
    normal: np.ndarray       # same shape as nu
    kappa: np.ndarray        # (3,) or (3, M)
    rotation_sign: int
    chirality: int = 1


@dataclass(frozen=True)
class ReferenceCluster:
    """Charts, junctions and the reference fields used by all operators."""

    weights: AngleWeights
    charts: list
    junctions: list
    normal: list         # unit normal field N*, junction nodes exactly balanced
    tau: list            # cutoff conormal extension tau*, zero outside supports
    cut: list            # cutoff profile values per x-node
    slot: list           # per x-node: (junction index, sheet slot), -1 outside
    sqrt_g: list
    metric: list         # dim 2 only: (g11, g12, g22) per node, else None
    pi_sq: list          # |second fundamental form|^2
    mean_curv: list      # H*
    curv_drift: list     # <grad H*, tau*>
    orientation: list    # chart sign: normal = sign * rot90(unit tangent)
    lengths: list        # intrinsic chart lengths (area for sheets is length*period)
    h0: list             # mean node spacing per chart at build time
    support: list        # per chart: [(junction, sheet, x-node mask), ...]
    r0: float
    profile: str = "quintic"

    @property
    def dim(self) -> int:
        return self.charts[0].dim

    def junction_trace(self, values, junction: Junction):
        """Collect per-sheet junction-node values of a per-chart field list."""
        out = []
        for ci, end in junction.sheets:
            v = values[ci]
            out.append(v[0] if end == 0 else v[-1])
        return np.array(out)


# ---------------------------------------------------------------------------
# low-level geometry of node arrays


def polyline_lengths(positions: np.ndarray, closed: bool = False) -> np.ndarray:
    seg = np.diff(positions, axis=0)
    if closed:
        seg = np.vstack([seg, positions[:1] - positions[-1:]])
    return np.linalg.norm(seg, axis=-1)


def curve_fields(positions: np.ndarray, sign: int, closed: bool = False) -> dict:
    """Tangent, normal, area element and curvature of one planar curve chart."""
    n = positions.shape[0]
    h = 1.0 / n if closed else grid_step(n)
    px = d1(positions, h, periodic=closed)
    pxx = d2(positions, h, periodic=closed)
    sqrt_g = np.linalg.norm(px, axis=-1)
    if np.any(sqrt_g <= 0.0) or not np.all(np.isfinite(sqrt_g)):
        raise BadMesh("degenerate parametrization: zero or non-finite area element")
    tangent = px / sqrt_g[:, None]
    normal = sign * rot90(tangent)
    curv = np.einsum("ij,ij->i", normal, pxx) / (sqrt_g * sqrt_g)
    return {
        "h": h,
        "tangent": tangent,
        "normal": normal,
        "sqrt_g": sqrt_g,
        "mean_curv": curv,
        "pi_sq": curv * curv,
    }


def sheet_fields(positions: np.ndarray, period: float, sign: int) -> dict:
    """Metric, normal and curvature of one sheet chart (orthogonal-friendly).

    The second parameter direction is periodic, but the embedding coordinate
    it advances (the z component) is not: crossing the seam shifts z by one
    period.  Position derivatives along that axis therefore use a pad with
    the shift applied; derivative fields themselves are genuinely periodic.
    """
    n, m = positions.shape[0], positions.shape[1]
    hx = grid_step(n)
    hz = period / m
    shift = np.zeros(positions.shape[-1])
    shift[-1] = period
    pad = np.concatenate([
        positions[:, -1:] - shift, positions, positions[:, :1] + shift,
    ], axis=1)
    px = d1(positions, hx, axis=0)
    pz = (pad[:, 2:] - pad[:, :-2]) / (2.0 * hz)
    g11 = np.einsum("...i,...i->...", px, px)
    g12 = np.einsum("...i,...i->...", px, pz)
    g22 = np.einsum("...i,...i->...", pz, pz)
    det = g11 * g22 - g12 * g12
    if np.any(det <= 0.0) or not np.all(np.isfinite(det)):
        raise BadMesh("degenerate sheet metric")
    cross = np.cross(px, pz)
    sqrt_g = np.linalg.norm(cross, axis=-1)
    normal = sign * cross / sqrt_g[..., None]
    pxx = d2(positions, hx, axis=0)
    pzz = (pad[:, 2:] - 2.0 * pad[:, 1:-1] + pad[:, :-2]) / (hz * hz)
    pxz = d1(px, hz, axis=1, periodic=True)
    h11 = np.einsum("...i,...i->...", normal, pxx)
    h12 = np.einsum("...i,...i->...", normal, pxz)
    h22 = np.einsum("...i,...i->...", normal, pzz)
    iu11, iu12, iu22 = g22 / det, -g12 / det, g11 / det
    # shape operator G^{-1} H; curvature is its trace, |Pi|^2 = tr((G^{-1}H)^2)
    a00 = iu11 * h11 + iu12 * h12
    a01 = iu11 * h12 + iu12 * h22
    a10 = iu12 * h11 + iu22 * h12
    a11 = iu12 * h12 + iu22 * h22
    curv = a00 + a11
    pi_sq = a00 * a00 + 2.0 * a01 * a10 + a11 * a11
    return {
        "hx": hx,
        "hz": hz,
        "tangent_x": px,
        "tangent_z": pz,
        "metric": np.stack([g11, g12, g22], axis=-1),
        "sqrt_g": sqrt_g,
        "normal": normal,
        "mean_curv": curv,
        "pi_sq": pi_sq,
    }


def arclength_resample(positions: np.ndarray, n_nodes: int | None = None) -> np.ndarray:
    """Resample an open polyline at uniform arclength; endpoints stay bitwise."""
    n_nodes = positions.shape[0] if n_nodes is None else n_nodes
    seg = polyline_lengths(positions)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    target = np.linspace(0.0, s[-1], n_nodes)
    out = np.empty((n_nodes, positions.shape[1]))
    for k in range(positions.shape[1]):
        out[:, k] = np.interp(target, s, positions[:, k])
    out[0] = positions[0]
    out[-1] = positions[-1]
    return out


# ---------------------------------------------------------------------------
# junction balance


def balance_conormals(raw: np.ndarray, gamma: np.ndarray, tol: float = 1e-15,
                      max_iter: int = 50) -> np.ndarray:
    """Project three raw planar unit vectors onto sum_i gamma^i nu^i = 0.

    Feasibility Gauss-Newton on the direction angles; the correction stays
    near the raw directions, so this also pins all pairwise angles to the
    contact angles derived from gamma.  Raises OrientationFailure when the
    needed correction exceeds BALANCE_TOL radians.
    """
    ang = np.arctan2(raw[:, 1], raw[:, 0])
    start = ang.copy()
    for _ in range(max_iter):
        cos, sin = np.cos(ang), np.sin(ang)
        g = np.array([np.dot(gamma, cos), np.dot(gamma, sin)])
        if np.max(np.abs(g)) < tol * gamma.sum():
            break
        jac = np.stack([-gamma * sin, gamma * cos])  # (2, 3)
        try:
            lam = np.linalg.solve(jac @ jac.T, g)
        except np.linalg.LinAlgError as exc:
            raise OrientationFailure("junction force balance is degenerate") from exc
        ang = ang - jac.T @ lam
    else:
        raise OrientationFailure("junction force balance did not converge")
    drift = np.abs(np.angle(np.exp(1j * (ang - start))))
    if np.max(drift) > BALANCE_TOL:
        raise OrientationFailure(
            f"end tangents are {np.max(drift):.3g} rad away from any force-balanced "
            "configuration; junction does not meet at the prescribed angles"
        )
    return np.stack([np.cos(ang), np.sin(ang)], axis=-1)


def _junction_raw_conormal(chart: DiscreteChart, fields: dict, end: int) -> np.ndarray:
    t = fields["tangent"][0] if end == 0 else fields["tangent"][-1]
    return -t if end == 0 else t


def _rotation_signs(charts, junction_sheets):
    """Pick the quarter-turn sign per junction; adjacent junctions alternate."""
    n_j = len(junction_sheets)
    adj = [[] for _ in range(n_j)]
    for ci, chart in enumerate(charts):
        js = [desc[1] for desc in chart.ends if desc[0] == "junction"]
        if len(js) == 2:
            if js[0] == js[1]:
                raise OrientationFailure("chart has both ends on the same junction")
            adj[js[0]].append(js[1])
            adj[js[1]].append(js[0])
    signs = [0] * n_j
    for root in range(n_j):
        if signs[root]:
            continue
        signs[root] = 1  # provisional; fixed by the tie-break afterwards
        stack = [root]
        while stack:
            j = stack.pop()
            for k in adj[j]:
                if signs[k] == 0:
                    signs[k] = -signs[j]
                    stack.append(k)
                elif signs[k] != -signs[j]:
                    raise OrientationFailure("no consistent normal orientation exists")
    return signs


# ---------------------------------------------------------------------------
# cluster assembly


def _attach_tau_curve(chart, fields, nu_by_end, r0, profile):
    """Cutoff conormal extension and support bookkeeping for one curve chart."""
    n = chart.n_x
    seg = polyline_lengths(chart.positions)
    dist0 = np.concatenate([[0.0], np.cumsum(seg)])
    total = dist0[-1]
    tau = np.zeros_like(chart.positions)
    cut = np.zeros(n)
    slot = np.full((n, 2), -1, dtype=int)
    for end, (j_index, sheet) in nu_by_end.items():
        if not 0.0 < r0 < 0.5 * total:
            raise SupportOverlap(
                f"cutoff radius {r0} must lie in (0, {0.5 * total}) for this chart"
            )
        dist = dist0 if end == 0 else total - dist0
        prof = smoothstep_cut(dist / r0, profile)
        mask = dist < r0
        if np.any((cut > 0.0) & mask):
            raise SupportOverlap("cutoff supports of the two chart ends overlap")
        sgn = -1.0 if end == 0 else 1.0
        tau[mask] = prof[mask, None] * sgn * fields["tangent"][mask]
        cut[mask] = prof[mask]
        slot[mask, 0] = j_index
        slot[mask, 1] = sheet
    return tau, cut, slot


def _attach_tau_sheet(chart, fields, nu_by_end, r0, profile):
    n = chart.positions.shape[0]
    xlen = np.linalg.norm(chart.positions[-1, 0] - chart.positions[0, 0])
    dist0 = np.linspace(0.0, xlen, n)
    tau = np.zeros_like(chart.positions)
    cut = np.zeros(n)
    slot = np.full((n, 2), -1, dtype=int)
    tx = fields["tangent_x"]
    tx = tx / np.linalg.norm(tx, axis=-1, keepdims=True)
    for end, (j_index, sheet) in nu_by_end.items():
        if not 0.0 < r0 < 0.5 * xlen:
            raise SupportOverlap(f"cutoff radius {r0} must lie in (0, {0.5 * xlen})")
        dist = dist0 if end == 0 else xlen - dist0
        prof = smoothstep_cut(dist / r0, profile)
        mask = dist < r0
        sgn = -1.0 if end == 0 else 1.0
        tau[mask] = prof[mask, None, None] * sgn * tx[mask]
        cut[mask] = prof[mask]
        slot[mask, 0] = j_index
        slot[mask, 1] = sheet
    return tau, cut, slot


def _build_cluster(weights, charts, junction_sheets, r0=None, profile="quintic",
                   exact_conormals=None):
    """Shared assembly: balance junctions, orient normals, attach cutoffs.

    `junction_sheets` lists, per junction, three (chart_index, end) pairs in
    sheet order.  `exact_conormals` optionally supplies analytic outer
    conormal directions per junction (3, 2); they still pass the balance
    projection so stored junction data meets the invariants exactly.
    """
    gamma = weights.gamma
    dim = charts[0].dim
    fields = []
    for chart in charts:
        if chart.dim == 1:
            if chart.n_x < 8:
                raise BadMesh("charts need at least 8 nodes")
            fields.append(curve_fields(chart.positions, 1, chart.closed))
        else:
            if chart.n_x < 8 or chart.positions.shape[1] < 8:
                raise BadMesh("sheet charts need at least 8 nodes per direction")
            fields.append(sheet_fields(chart.positions, chart.period, 1))

    # canonical junction endpoints: identical bitwise across the three sheets
    for j, sheets in enumerate(junction_sheets):
        pts = []
        for ci, end in sheets:
            p = charts[ci].positions
            pts.append(p[0] if end == 0 else p[-1])
        canon = pts[0].copy()
        if any(np.max(np.abs(p - canon)) > 1e-9 * (1.0 + np.max(np.abs(canon))) for p in pts):
            raise BadMesh(f"junction {j}: chart endpoints do not coincide")
        for ci, end in sheets:
            p = charts[ci].positions
            p[0 if end == 0 else -1] = canon

    rot_signs = _rotation_signs(charts, junction_sheets)

    junctions = []
    nu_by_chart_end = [dict() for _ in charts]
    for j, sheets in enumerate(junction_sheets):
        if dim == 1:
            raw = np.stack([
                _junction_raw_conormal(charts[ci], fields[ci], end) for ci, end in sheets
            ])
            if exact_conormals is not None and exact_conormals[j] is not None:
                raw = np.asarray(exact_conormals[j], dtype=float)
                raw = raw / np.linalg.norm(raw, axis=-1, keepdims=True)
            nu = balance_conormals(raw, gamma)
            point = charts[sheets[0][0]].positions[0 if sheets[0][1] == 0 else -1]
        else:
            tx = []
            for ci, end in sheets:
                t = fields[ci]["tangent_x"][0 if end == 0 else -1]  # (M, 3)
                t = t.mean(axis=0)
                t = t[:2] / np.linalg.norm(t[:2])
                tx.append(-t if end == 0 else t)
            raw = np.stack(tx)
            if exact_conormals is not None and exact_conormals[j] is not None:
                raw = np.asarray(exact_conormals[j], dtype=float)
                raw = raw / np.linalg.norm(raw, axis=-1, keepdims=True)
            nu2 = balance_conormals(raw, gamma)
            ci0, end0 = sheets[0]
            ring = charts[ci0].positions[0 if end0 == 0 else -1]  # (M, 3)
            point = ring
            m = ring.shape[0]
            nu = np.zeros((3, m, 3))
            nu[:, :, :2] = nu2[:, None, :]
        junctions.append((j, sheets, point, nu))
        for slot_i, (ci, end) in enumerate(sheets):
            nu_by_chart_end[ci][end] = (j, slot_i)

    # quarter-turn tie-break on sheet 1 of junction 0: <N*^1, e_y> >= 0
    flip = 1
    if junctions:
        nu0 = junctions[0][3]
        v = nu0[0] if dim == 1 else nu0[0, 0, :2]
        ref = rot90(v[None, :])[0]
        key = ref[1] if abs(ref[1]) > 1e-12 else ref[0]
        want = 1 if key >= 0 else -1
        flip = want * rot_signs[junctions[0][0]]
    rot_signs = [s * flip for s in rot_signs]

    built_junctions = []
    for j, sheets, point, nu in junctions:
        eps = rot_signs[j]
        if dim == 1:
            normal = eps * rot90(nu)
            nu0, nu1 = nu[0], nu[1]
        else:
            normal = np.zeros_like(nu)
            normal[..., :2] = eps * rot90(nu[..., :2])
            nu0, nu1 = nu[0, 0, :2], nu[1, 0, :2]
        cyc = 1 if nu0[0] * nu1[1] - nu0[1] * nu1[0] > 0.0 else -1
        kappa = []
        for ci, end in sheets:
            if dim == 1:
                kappa.append(0.0)  # filled after chart orientation below
            else:
                kappa.append(np.zeros(point.shape[0]))
        built_junctions.append(Junction(
            index=j, sheets=tuple(sheets), point=point, nu=nu,
            normal=normal, kappa=np.array(kappa), rotation_sign=eps,
            chirality=eps * cyc,
        ))

    # chart orientation signs from junction rotation signs; the outer conormal
    # at end 0 is minus the x-tangent, and for sheets the cross product with
    # the periodic direction contributes one more orientation flip
    orientation = []
    for ci, chart in enumerate(charts):
        s = None
        for end, desc in enumerate(chart.ends):
            if desc[0] != "junction":
                continue
            eps = rot_signs[desc[1]]
            cand = -eps if end == 0 else eps
            if chart.dim == 2:
                cand = -cand
            if s is None:
                s = cand
            elif s != cand:
                raise OrientationFailure("chart normal orientation is inconsistent")
        if s is None:
            # closed diagnostic chart: orient the normal inward
            f = fields[ci]
            center = chart.positions.mean(axis=0)
            inward = center - chart.positions
            s = 1 if np.einsum("ij,ij->", f["normal"], inward) > 0 else -1
        orientation.append(int(s))

    normal_f, tau_f, cut_f, slot_f = [], [], [], []
    sqrt_g_f, metric_f, pi_f, H_f, drift_f = [], [], [], [], []
    lengths, h0 = [], []
    for ci, chart in enumerate(charts):
        s = orientation[ci]
        if chart.dim == 1:
            f = curve_fields(chart.positions, s, chart.closed)
        else:
            f = sheet_fields(chart.positions, chart.period, s)
        fields[ci] = f
        nrm = f["normal"].copy()
        for end, desc in enumerate(chart.ends):
            if desc[0] == "junction":
                jn = built_junctions[desc[1]]
                slot_i = dict((tuple(sh), k) for k, sh in enumerate(jn.sheets))[(ci, end)]
                nrm[0 if end == 0 else -1] = jn.normal[slot_i]
        normal_f.append(nrm)
        if chart.dim == 1:
            seg = polyline_lengths(chart.positions, chart.closed)
            lengths.append(float(seg.sum()))
            h0.append(float(seg.mean()))
            metric_f.append(None)
        else:
            xlen = np.linalg.norm(chart.positions[-1, 0] - chart.positions[0, 0])
            lengths.append(float(xlen))
            h0.append(float(min(xlen / (chart.n_x - 1), chart.period / chart.positions.shape[1])))
            metric_f.append(f["metric"])
        sqrt_g_f.append(f["sqrt_g"])
        pi_f.append(f["pi_sq"])
        H_f.append(f["mean_curv"])

    r0_val = r0 if r0 is not None else 0.25 * min(lengths)
    for ci, chart in enumerate(charts):
        f = fields[ci]
        nu_by_end = nu_by_chart_end[ci]
        if chart.closed or not nu_by_end:
            tau = np.zeros_like(chart.positions)
            cut = np.zeros(chart.n_x)
            slot = np.full((chart.n_x, 2), -1, dtype=int)
        elif chart.dim == 1:
            tau, cut, slot = _attach_tau_curve(chart, f, nu_by_end, r0_val, profile)
        else:
            tau, cut, slot = _attach_tau_sheet(chart, f, nu_by_end, r0_val, profile)
        # exact conormal at the junction node itself
        for end, (j_index, sheet) in nu_by_end.items():
            jn = built_junctions[j_index]
            tau[0 if end == 0 else -1] = jn.nu[sheet]
        tau_f.append(tau)
        cut_f.append(cut)
        slot_f.append(slot)

        # <grad H*, tau*>
        if chart.dim == 1:
            h = f["h"]
            dh = d1(f["mean_curv"], h, periodic=chart.closed) / f["sqrt_g"]
            drift = dh * np.einsum("ij,ij->i", f["tangent"], tau)
        else:
            g11, g12, g22 = (f["metric"][..., k] for k in range(3))
            dhx = d1(f["mean_curv"], f["hx"], axis=0)
            dhz = d1(f["mean_curv"], f["hz"], axis=1, periodic=True)
            # orthogonal parametrization assumed for sheets
            gx = dhx / g11
            gz = dhz / g22
            drift = gx * np.einsum("...i,...i->...", f["tangent_x"], tau) \
                + gz * np.einsum("...i,...i->...", f["tangent_z"], tau)
        drift_f.append(drift)

    # junction coupling curvature kappa* = Pi*(nu, nu) from the oriented charts
    final_junctions = []
    for jn in built_junctions:
        kappa = []
        for ci, end in jn.sheets:
            f = fields[ci]
            if charts[ci].dim == 1:
                kappa.append(f["mean_curv"][0 if end == 0 else -1])
            else:
                g11 = f["metric"][0 if end == 0 else -1, :, 0]
                pxx = d2(charts[ci].positions, f["hx"], axis=0)[0 if end == 0 else -1]
                nrm = normal_f[ci][0 if end == 0 else -1]
                kappa.append(np.einsum("...i,...i->...", nrm, pxx) / g11)
        final_junctions.append(replace(jn, kappa=np.array(kappa)))

    support = []
    for slot in slot_f:
        blocks = []
        sup = slot[:, 0] >= 0
        if np.any(sup):
            for j, sheet in np.unique(slot[sup], axis=0):
                blocks.append((int(j), int(sheet), (slot[:, 0] == j) & (slot[:, 1] == sheet)))
        support.append(blocks)

    return ReferenceCluster(
        weights=weights, charts=list(charts), junctions=final_junctions,
        normal=normal_f, tau=tau_f, cut=cut_f, slot=slot_f,
        sqrt_g=sqrt_g_f, metric=metric_f, pi_sq=pi_f, mean_curv=H_f,
        curv_drift=drift_f, orientation=orientation, lengths=lengths, h0=h0,
        support=support, r0=r0_val, profile=profile,
    )


# ---------------------------------------------------------------------------
# families


def make_triod(weights: AngleWeights, n: int = 200, leg_length=1.0,
               base_angle: float = 0.0, center=(0.0, 0.0), r0=None,
               leg_shape=None) -> ReferenceCluster:
    """Three straight legs from one junction, meeting at the contact angles.

    `leg_shape` optionally maps (leg index, arclength array) to a transverse
    offset, producing curved legs that still meet at the exact angles (used
    for nonuniform-curvature references in tests).
    """
    th = weights.theta
    angles = base_angle + np.array([0.0, th[2], th[2] + th[0]])
    center = np.asarray(center, dtype=float)
    lengths = np.broadcast_to(np.asarray(leg_length, dtype=float), (3,))
    charts = []
    for i in range(3):
        d = np.array([np.cos(angles[i]), np.sin(angles[i])])
        s = np.linspace(0.0, lengths[i], n + 1)
        pos = center[None, :] + s[:, None] * d[None, :]
        if leg_shape is not None:
            off = np.asarray(leg_shape(i, s), dtype=float)
            pos = pos + off[:, None] * rot90(d[None, :])
        pos[0] = center
        charts.append(DiscreteChart(
            dim=1, positions=pos, ends=(("junction", 0), PINNED), tension_index=i,
        ))
    sheets = [((0, 0), (1, 0), (2, 0))]
    exact = [np.stack([-np.array([np.cos(a), np.sin(a)]) for a in angles])]
    if leg_shape is not None:
        exact = None  # curved legs: balance from the discrete tangents
    return _build_cluster(weights, charts, sheets, r0=r0, exact_conormals=exact)


def _bubble_geometry(weights: AngleWeights, tilt: float, half_gap: float = 1.0):
    """Arc centers/radii of the two-junction bubble for a middle-arc tilt."""
    th = weights.theta
    down = np.array([0.0, -1.0])

    def rot(a, v):
        c, s = np.cos(a), np.sin(a)
        return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])

    u2 = rot(tilt, down)
    u1 = rot(-th[2], u2)
    u3 = rot(th[0], u2)
    q_top = np.array([0.0, half_gap])
    arcs = []
    for u in (u1, u2, u3):
        m = rot90(u[None, :])[0]
        # near-vertical tangent: the huge-radius arc is a segment to roundoff,
        # and sampling it as an arc would lose most digits to cancellation
        if abs(m[1]) < 1e-9:
            arcs.append(("segment", None, None))
            continue
        r = -q_top[1] / m[1]
        if r < 0:
            m, r = -m, -r
        arcs.append(("arc", q_top + r * m, r))
    return (u1, u2, u3), q_top, arcs


def _sample_arc(center, radius, q_top, q_bot, tangent_top, n):
    """Nodes from q_top to q_bot along the circle, starting along tangent_top."""
    a0 = np.arctan2(q_top[1] - center[1], q_top[0] - center[0])
    a1 = np.arctan2(q_bot[1] - center[1], q_bot[0] - center[0])
    ccw_vel = rot90((q_top - center)[None, :])[0]
    ccw = np.dot(ccw_vel, tangent_top) > 0
    if ccw:
        while a1 <= a0:
            a1 += 2.0 * np.pi
    else:
        while a1 >= a0:
            a1 -= 2.0 * np.pi
    ang = np.linspace(a0, a1, n + 1)
    pos = center[None, :] + radius * np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    pos[0] = q_top
    pos[-1] = q_bot
    return pos


def _bubble_region_areas(weights, tilt, n_dense: int = 4096):
    (u1, u2, u3), q_top, arcs = _bubble_geometry(weights, tilt)
    q_bot = np.array([q_top[0], -q_top[1]])
    polys = []
    for u, (kind, center, radius) in zip((u1, u2, u3), arcs):
        if kind == "segment":
            t = np.linspace(0.0, 1.0, n_dense + 1)
            polys.append(q_top[None, :] * (1 - t)[:, None] + q_bot[None, :] * t[:, None])
        else:
            polys.append(_sample_arc(center, radius, q_top, q_bot, u, n_dense))

    def shoelace(p):
        x, y = p[:, 0], p[:, 1]
        return 0.5 * np.sum(x[:-1] * y[1:] - x[1:] * y[:-1])

    left = np.vstack([polys[0], polys[1][::-1]])
    right = np.vstack([polys[1], polys[2][::-1]])
    return abs(shoelace(left)), abs(shoelace(right))


def make_double_bubble(weights: AngleWeights, n: int = 200, areas=(1.0, 1.0),
                       r0=None) -> ReferenceCluster:
    """Two-junction bubble: left arc, middle arc, right arc (sheets 1..3).

    The middle-arc tilt is solved by bisection so the enclosed region areas
    match `areas` up to a global scale, then everything is rescaled so they
    match exactly.
    """
    a_left, a_right = float(areas[0]), float(areas[1])
    if a_left <= 0 or a_right <= 0:
        raise BadMesh("bubble region areas must be positive")
    target = a_right / (a_left + a_right)

    def frac(tilt):
        al, ar = _bubble_region_areas(weights, tilt)
        return ar / (al + ar)

    # the middle-arc tilt must keep all three departure tangents short of
    # vertical-up: tilt in (theta^2 - pi, pi - theta^0); the right lobe area
    # diverges at the upper end and the left one at the lower end, so any
    # ratio is bracketed
    lo = weights.theta[2] - np.pi + 1e-3
    hi = np.pi - weights.theta[0] - 1e-3
    tilt = 0.0
    if abs(frac(0.0) - target) > 1e-12:
        flo, fhi = frac(lo) - target, frac(hi) - target
        if flo * fhi > 0:
            raise BadMesh(f"area ratio {a_left}:{a_right} is out of reach for these tensions")
        for _ in range(200):
            tilt = 0.5 * (lo + hi)
            fm = frac(tilt) - target
            if fm == 0.0 or hi - lo < 1e-15:
                break
            if flo * fm < 0:
                hi, fhi = tilt, fm
            else:
                lo, flo = tilt, fm

    al, ar = _bubble_region_areas(weights, tilt)
    scale = np.sqrt((a_left + a_right) / (al + ar))
    (u1, u2, u3), q_top, arcs = _bubble_geometry(weights, tilt)
    q_top = scale * q_top
    q_bot = np.array([q_top[0], -q_top[1]])
    charts = []
    for i, (u, (kind, center, radius)) in enumerate(zip((u1, u2, u3), arcs)):
        if kind == "segment":
            t = np.linspace(0.0, 1.0, n + 1)
            pos = q_top[None, :] * (1 - t)[:, None] + q_bot[None, :] * t[:, None]
        else:
            pos = _sample_arc(scale * center, scale * radius, q_top, q_bot, u, n)
        charts.append(DiscreteChart(
            dim=1, positions=pos, ends=(("junction", 0), ("junction", 1)), tension_index=i,
        ))
    sheets = [((0, 0), (1, 0), (2, 0)), ((0, 1), (1, 1), (2, 1))]
    mirror = np.array([1.0, -1.0])
    exact = [np.stack([-u1, -u2, -u3]), np.stack([-u1 * mirror, -u2 * mirror, -u3 * mirror])]
    return _build_cluster(weights, charts, sheets, r0=r0, exact_conormals=exact)


def make_prism(weights: AngleWeights, n: int = 24, rings: int = 24, length=1.0,
               period: float = 1.0, base_angle: float = 0.0, r0=None) -> ReferenceCluster:
    """Three flat half-planes meeting along a straight periodic junction line."""
    th = weights.theta
    angles = base_angle + np.array([0.0, th[2], th[2] + th[0]])
    lengths = np.broadcast_to(np.asarray(length, dtype=float), (3,))
    z = np.arange(rings) * (period / rings)
    ring = np.zeros((rings, 3))
    ring[:, 2] = z
    charts = []
    for i in range(3):
        d = np.array([np.cos(angles[i]), np.sin(angles[i]), 0.0])
        s = np.linspace(0.0, lengths[i], n + 1)
        pos = s[:, None, None] * d[None, None, :] + ring[None, :, :]
        pos[0] = ring
        charts.append(DiscreteChart(
            dim=2, positions=pos, ends=(("junction", 0), PINNED),
            tension_index=i, period=period,
        ))
    sheets = [((0, 0), (1, 0), (2, 0))]
    exact = [np.stack([-np.array([np.cos(a), np.sin(a)]) for a in angles])]
    return _build_cluster(weights, charts, sheets, r0=r0, exact_conormals=exact)


def make_loop(radius: float = 1.0, n: int = 256, center=(0.0, 0.0),
              weights: AngleWeights | None = None) -> ReferenceCluster:
    """Single closed curve, no junctions: diagnostic mode for curvature flow."""
    if weights is None:
        from .weights import derive_angles
        weights = derive_angles((1.0, 1.0, 1.0))
    a = np.arange(n) * (2.0 * np.pi / n)
    pos = np.asarray(center, float)[None, :] + radius * np.stack([np.cos(a), np.sin(a)], axis=-1)
    chart = DiscreteChart(dim=1, positions=pos, ends=(), tension_index=0, closed=True)
    return _build_cluster(weights, [chart], [])


def make_from_node_table(rows, weights: AngleWeights, r0=None) -> ReferenceCluster:
    """Cluster from an explicit node table: rows of (chart_id, node, x, y).

    Chart ends that coincide (within 1e-9 relative) are grouped into
    junctions; groups of three become junctions, singletons are pinned,
    anything else is a BadMesh.  Junction conormals come from the discrete
    end tangents, force-balanced.
    """
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[1] < 4:
        raise BadMesh("node table needs columns (chart_id, node, x, y)")
    chart_ids = sorted(set(int(v) for v in rows[:, 0]))
    charts_pos = []
    for cid in chart_ids:
        sub = rows[rows[:, 0].astype(int) == cid]
        order = np.argsort(sub[:, 1])
        sub = sub[order]
        idx = sub[:, 1].astype(int)
        if np.any(np.diff(idx) != 1) or idx[0] != 0:
            raise BadMesh(f"chart {cid}: node indices must run 0..N without gaps")
        pos = sub[:, 2:4].copy()
        if pos.shape[0] < 9:
            raise BadMesh(f"chart {cid}: need at least 9 nodes")
        if np.any(polyline_lengths(pos) <= 0.0):
            raise BadMesh(f"chart {cid}: coincident consecutive nodes")
        charts_pos.append(pos)
    if len(charts_pos) != 3:
        raise BadMesh(f"expected exactly 3 charts, got {len(charts_pos)}")

    scale = max(np.max(np.abs(p)) for p in charts_pos) + 1.0
    ends = [(ci, e, p[0] if e == 0 else p[-1]) for ci, p in enumerate(charts_pos) for e in (0, 1)]
    used = [False] * len(ends)
    junction_sheets, end_desc = [], {}
    for i, (ci, e, pt) in enumerate(ends):
        if used[i]:
            continue
        group = [i]
        for k in range(i + 1, len(ends)):
            if not used[k] and np.max(np.abs(ends[k][2] - pt)) < 1e-9 * scale:
                group.append(k)
        if len(group) == 3:
            j = len(junction_sheets)
            junction_sheets.append(tuple((ends[k][0], ends[k][1]) for k in group))
            for k in group:
                end_desc[(ends[k][0], ends[k][1])] = ("junction", j)
                used[k] = True
        elif len(group) == 1:
            end_desc[(ci, e)] = PINNED
            used[i] = True
        else:
            raise BadMesh(f"{len(group)} chart ends coincide; junctions need exactly 3")
    if not junction_sheets:
        raise BadMesh("node table contains no junction")

    charts = [DiscreteChart(
        dim=1, positions=p, ends=(end_desc[(ci, 0)], end_desc[(ci, 1)]), tension_index=ci,
    ) for ci, p in enumerate(charts_pos)]
    return _build_cluster(weights, charts, junction_sheets, r0=r0)


def build_reference(spec: dict, weights: AngleWeights) -> ReferenceCluster:
    """Dispatch a scenario description (CLI layer) onto the family builders."""
    kind = spec.get("scenario")
    n = int(spec.get("nodes", 200))
    r0 = spec.get("r0")
    if kind == "triod":
        return make_triod(weights, n=n, leg_length=spec.get("leg_length", 1.0),
                          base_angle=spec.get("base_angle", 0.0), r0=r0)
    if kind == "double_bubble":
        return make_double_bubble(weights, n=n, areas=spec.get("areas", (1.0, 1.0)), r0=r0)
    if kind == "prism":
        return make_prism(weights, n=n, rings=int(spec.get("rings", max(8, n))),
                          length=spec.get("length", 1.0),
                          period=spec.get("period", 1.0), r0=r0)
    if kind == "loop":
        return make_loop(radius=spec.get("radius", 1.0), n=n, weights=weights)
    if kind == "custom":
        table = np.loadtxt(spec["path"], delimiter=",", skiprows=1)
        return make_from_node_table(table, weights, r0=r0)
    raise BadMesh(f"unknown scenario {kind!r}")


def build_tau(cluster: ReferenceCluster, r0: float, profile: str = "quintic") -> ReferenceCluster:
    """Rebuild the cluster with a different cutoff radius or profile."""
    sheets = [list(j.sheets) for j in cluster.junctions]
    exact = [j.nu if cluster.dim == 1 else j.nu[:, 0, :2] for j in cluster.junctions]
    charts = [replace(c, positions=c.positions.copy()) for c in cluster.charts]
    return _build_cluster(cluster.weights, charts, sheets, r0=r0, profile=profile,
                          exact_conormals=exact)


def rebuild_reference(cluster: ReferenceCluster, positions, r0=None,
                      resample: bool = False) -> ReferenceCluster:
    """New reference over evolved node positions, same topology and weights.

    Junction frames are re-balanced from the discrete end tangents, so this
    raises OrientationFailure when the positions no longer meet close to the
    prescribed angles.  By default every chart keeps its node set; `resample`
    redistributes open curve charts at uniform arclength first (their
    endpoints stay bitwise).  The cutoff radius defaults to the fraction of
    the new chart lengths that `_build_cluster` uses for fresh clusters.
    """
    if len(positions) != len(cluster.charts):
        raise ShapeMismatch(f"expected {len(cluster.charts)} position arrays, "
                            f"got {len(positions)}")
    sheets = [list(j.sheets) for j in cluster.junctions]
    charts = []
    for chart, pos in zip(cluster.charts, positions):
        pos = np.array(pos, dtype=float)
        if pos.shape != chart.positions.shape:
            raise ShapeMismatch(f"positions shape {pos.shape} does not match "
                                f"chart grid {chart.positions.shape}")
        if resample and chart.dim == 1 and not chart.closed:
            pos = arclength_resample(pos)
        charts.append(replace(chart, positions=pos))
    return _build_cluster(cluster.weights, charts, sheets, r0=r0,
                          profile=cluster.profile)


# ---------------------------------------------------------------------------
# queries and validation


def project_to_junction(cluster: ReferenceCluster, chart_index: int, node):
    """Junction assignment of a chart node: (junction, sheet slot, in-support).

    For sheets, `node` may be (x_index, ring_index); the projection keeps the
    ring index (nearest junction-line point shares the periodic coordinate).
    """
    xi = node[0] if isinstance(node, (tuple, list)) else node
    j, sheet = cluster.slot[chart_index][xi]
    return int(j), int(sheet), bool(j >= 0)


def geometric_fields(cluster: ReferenceCluster) -> dict:
    """Recompute reference fields from node positions (verification path)."""
    out = {"sqrt_g": [], "normal": [], "mean_curv": [], "pi_sq": []}
    for ci, chart in enumerate(cluster.charts):
        if chart.dim == 1:
            f = curve_fields(chart.positions, cluster.orientation[ci], chart.closed)
        else:
            f = sheet_fields(chart.positions, chart.period, cluster.orientation[ci])
        for k in out:
            out[k].append(f[k])
    return out


def min_spacing(cluster: ReferenceCluster) -> float:
    vals = []
    for chart in cluster.charts:
        if chart.dim == 1:
            vals.append(polyline_lengths(chart.positions, chart.closed).min())
        else:
            vals.append(min(
                polyline_lengths(chart.positions[:, 0]).min(),
                chart.period / chart.positions.shape[1],
            ))
    return float(min(vals))


def validate_cluster(cluster: ReferenceCluster) -> dict:
    """Invariant report; `ok` is True when everything is within tolerance."""
    w = cluster.weights
    report = {"force_balance": 0.0, "angle_match": 0.0, "conormal_orthogonal": 0.0,
              "tau_at_junction": 0.0, "tau_bound": 0.0, "junction_bitwise": True}
    for jn in cluster.junctions:
        nu = jn.nu if cluster.dim == 1 else jn.nu[:, 0]
        nrm = jn.normal if cluster.dim == 1 else jn.normal[:, 0]
        fb = np.linalg.norm(np.tensordot(w.gamma, nu, axes=1))
        fbn = np.linalg.norm(np.tensordot(w.gamma, nrm, axes=1))
        report["force_balance"] = max(report["force_balance"], fb, fbn)
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            report["angle_match"] = max(
                report["angle_match"],
                abs(np.dot(nrm[i], nrm[j]) - w.c[k]),
                abs(np.dot(nu[i], nu[j]) - w.c[k]),
            )
            report["conormal_orthogonal"] = max(
                report["conormal_orthogonal"], abs(np.dot(nu[i], nrm[i])))
        pts = []
        for ci, end in jn.sheets:
            p = cluster.charts[ci].positions
            pts.append(p[0] if end == 0 else p[-1])
        if any(p.tobytes() != pts[0].tobytes() for p in pts[1:]):
            report["junction_bitwise"] = False
        for slot_i, (ci, end) in enumerate(jn.sheets):
            t = cluster.tau[ci][0 if end == 0 else -1]
            report["tau_at_junction"] = max(
                report["tau_at_junction"], float(np.max(np.abs(t - jn.nu[slot_i]))))
    for t in cluster.tau:
        report["tau_bound"] = max(report["tau_bound"], float(np.max(np.linalg.norm(t, axis=-1)) - 1.0))
    report["min_sqrt_g"] = float(min(np.min(s) for s in cluster.sqrt_g))
    report["ok"] = (
        report["force_balance"] <= 1e-10
        and report["angle_match"] <= 1e-10
        and report["conormal_orthogonal"] <= 1e-10
        and report["tau_at_junction"] <= 1e-12
        and report["tau_bound"] <= 1e-12
        and report["junction_bitwise"]
        and report["min_sqrt_g"] > 0.0
    )
    return report
