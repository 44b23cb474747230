"""Evolved-cluster quantities: the graph map, its geometry, and the velocity law.

The evolving cluster is the image of the reference under

    Phi(x, t) = sigma(x) + rho(x, t) N*(x) + mu(pr(x), t) tau*(x),

with per-chart heights rho and per-junction tangential offsets mu tied by the
attachment map mu = chirality * T rho|_junction.  Prescribing normal velocity
beta * H of the image and projecting onto the reference frame gives the
nonlocal height velocity

    d rho/dt = a H~ + a_dag * (d mu/dt) o pr,        a = beta / <N*, N~>,
    d mu/dt  = P(a_dag|_junction) (a H~)|_junction,  a_dag = -<tau*, N~> / <N*, N~>,

where N~ and H~ are normal and curvature of the image and P is the junction
resolvent from the attachment module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attachment import make_coupling, mu_from_rho
from .errors import BadMesh, FoldOver, ShapeMismatch
from .geometry import ReferenceCluster, curve_fields, polyline_lengths, sheet_fields


@dataclass
class HeightState:
    """Heights over the reference at one instant.

    `rho` is a per-chart list ((N+1,) or (N+1, M) arrays); `mu` a per-junction
    list of (3,) or (3, M) tangential offsets in sheet order.
    """

    t: float
    rho: list
    mu: list

    def copy(self) -> "HeightState":
        return HeightState(t=self.t, rho=[r.copy() for r in self.rho],
                           mu=[m.copy() for m in self.mu])


def make_state(cluster: ReferenceCluster, rho=None, t: float = 0.0, mu=None) -> HeightState:
    """State from per-chart heights; mu defaults to the attachment map of rho."""
    if rho is None:
        rho = [np.zeros(c.positions.shape[:-1]) for c in cluster.charts]
    rho = [np.asarray(r, dtype=float) for r in rho]
    for ci, chart in enumerate(cluster.charts):
        if rho[ci].shape != chart.positions.shape[:-1]:
            raise ShapeMismatch(
                f"chart {ci}: rho shape {rho[ci].shape} does not match grid "
                f"{chart.positions.shape[:-1]}"
            )
    if mu is None:
        mu = [mu_from_rho(cluster.weights, cluster.junction_trace(rho, jn), sign=jn.chirality)
              for jn in cluster.junctions]
    else:
        mu = [np.asarray(m, dtype=float) for m in mu]
    return HeightState(t=float(t), rho=rho, mu=mu)


def _mu_field(cluster: ReferenceCluster, mu: list, ci: int) -> np.ndarray:
    """Per-node tangential offset on chart ci: mu at the projected junction."""
    out = np.zeros(cluster.charts[ci].positions.shape[:-1])
    for j, sheet, mask in cluster.support[ci]:
        out[mask] = mu[j][sheet]
    return out


def evaluate_phi(cluster: ReferenceCluster, state: HeightState) -> list:
    """Node positions of the evolved cluster, one array per chart."""
    out = []
    for ci, chart in enumerate(cluster.charts):
        disp = state.rho[ci][..., None] * cluster.normal[ci]
        if cluster.junctions:
            disp = disp + _mu_field(cluster, state.mu, ci)[..., None] * cluster.tau[ci]
        out.append(chart.positions + disp)
    return out


@dataclass
class ShapeQuantities:
    """Geometry of the evolved cluster and the velocity-law coefficients."""

    positions: list
    sqrt_g: list
    normal: list
    mean_curv: list
    dot_nn: list        # <N*, N~> per node
    coef_a: list        # beta / <N*, N~>
    coef_dag: list      # -<tau*, N~> / <N*, N~>


# The graph description degenerates when the evolved normal tilts a quarter
# turn away from the reference one; stop well before that.
FOLD_DOT_MIN = 1e-8


def shape_quantities(cluster: ReferenceCluster, state: HeightState,
                     positions=None) -> ShapeQuantities:
    pos = evaluate_phi(cluster, state) if positions is None else positions
    sqrt_g, normal, mean_curv, dot_nn, coef_a, coef_dag = [], [], [], [], [], []
    for ci, chart in enumerate(cluster.charts):
        beta = cluster.weights.beta[chart.tension_index]
        try:
            if chart.dim == 1:
                f = curve_fields(pos[ci], cluster.orientation[ci], chart.closed)
            else:
                f = sheet_fields(pos[ci], chart.period, cluster.orientation[ci])
        except BadMesh as exc:
            raise FoldOver(f"chart {ci}: evolved parametrization degenerated") from exc
        dot = np.einsum("...i,...i->...", cluster.normal[ci], f["normal"])
        if np.min(dot) <= FOLD_DOT_MIN:
            raise FoldOver(
                f"chart {ci}: evolved normal tilted past the graph condition "
                f"(min <N*, N~> = {np.min(dot):.3g})"
            )
        dag = -np.einsum("...i,...i->...", cluster.tau[ci], f["normal"]) / dot
        sqrt_g.append(f["sqrt_g"])
        normal.append(f["normal"])
        mean_curv.append(f["mean_curv"])
        dot_nn.append(dot)
        coef_a.append(beta / dot)
        coef_dag.append(dag)
    return ShapeQuantities(positions=pos, sqrt_g=sqrt_g, normal=normal,
                           mean_curv=mean_curv, dot_nn=dot_nn, coef_a=coef_a,
                           coef_dag=coef_dag)


def height_rate(cluster: ReferenceCluster, state: HeightState,
                quantities: ShapeQuantities | None = None):
    """The nonlocal velocity (d rho/dt per chart, d mu/dt per junction).

    Returns (rate_rho, rate_mu).  The rho rate is the curvature term plus the
    junction feedback transported along the cutoff supports.
    """
    q = shape_quantities(cluster, state) if quantities is None else quantities
    drive = [q.coef_a[ci] * q.mean_curv[ci] for ci in range(len(cluster.charts))]
    coupling = make_coupling(cluster.weights)
    rate_mu = []
    for jn in cluster.junctions:
        f_trace = cluster.junction_trace(drive, jn)
        dag_trace = cluster.junction_trace(q.coef_dag, jn)
        p = coupling.resolvent(dag_trace, sign=jn.chirality)
        rate_mu.append(np.einsum("ij...,j...->i...", p, f_trace))
    rate_rho = []
    for ci in range(len(cluster.charts)):
        rate = drive[ci].copy()
        for j, sheet, mask in cluster.support[ci]:
            rate[mask] += q.coef_dag[ci][mask] * rate_mu[j][sheet]
        rate_rho.append(rate)
    return rate_rho, rate_mu


def angle_residuals(cluster: ReferenceCluster, state: HeightState,
                    quantities: ShapeQuantities | None = None) -> list:
    """Junction residuals of the evolved cluster, one dict per junction.

    `sum_heights` is the tension-weighted height sum; the three `angle_*`
    entries compare evolved normals of cyclically adjacent sheets against the
    cosines of the prescribed contact angles.
    """
    q = shape_quantities(cluster, state) if quantities is None else quantities
    w = cluster.weights
    out = []
    for jn in cluster.junctions:
        tr = cluster.junction_trace(state.rho, jn)
        nrm = cluster.junction_trace(q.normal, jn)
        g1 = np.tensordot(w.gamma, tr, axes=1)
        pair = []
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            pair.append(np.einsum("...i,...i->...", nrm[i], nrm[j]) - w.c[k])
        out.append({
            "sum_heights": g1,
            "angle_12": pair[0],
            "angle_23": pair[1],
            "angle_31": pair[2],
        })
    return out


def junction_rotation_defects(cluster: ReferenceCluster,
                              quantities: ShapeQuantities) -> list:
    """Per junction, the two angle defects in constraint-row units.

    Each sheet's evolved junction normal is compared with its reference value
    as a signed rotation (about the plane orientation, or about the junction
    line for ring junctions), scaled by the junction's rotation sign so the
    differences (rot1 - rot2, rot2 - rot3) linearize to the conormal-jump
    rows.  Both vanish exactly iff the evolved sheets meet at the prescribed
    angles, so they serve as the nonlinear boundary data of the fixed-point
    sweep.
    """
    out = []
    for jn in cluster.junctions:
        nref = cluster.junction_trace(cluster.normal, jn)
        nev = cluster.junction_trace(quantities.normal, jn)
        cr = nref[..., 0] * nev[..., 1] - nref[..., 1] * nev[..., 0]
        dot = np.einsum("...i,...i->...", nref, nev)
        rot = jn.rotation_sign * np.arctan2(cr, dot)
        out.append((rot[0] - rot[1], rot[1] - rot[2]))
    return out


def check_compatibility(cluster: ReferenceCluster, state: HeightState,
                        tol: float = 1e-8) -> dict:
    """Initial-data report: attachment identities and junction angle defects."""
    from .attachment import verify_attachment

    att = verify_attachment(cluster, state.rho, state.mu)
    res = angle_residuals(cluster, state)
    worst_angle = 0.0
    worst_sum = 0.0
    for r in res:
        worst_sum = max(worst_sum, float(np.max(np.abs(r["sum_heights"]))))
        for key in ("angle_12", "angle_23", "angle_31"):
            worst_angle = max(worst_angle, float(np.max(np.abs(r[key]))))
    return {
        "sum_rho": att["sum_rho"],
        "mu_mismatch": att["mu_mismatch"],
        "junction_angle_defect": worst_angle,
        "ok": att["sum_rho"] <= tol and att["mu_mismatch"] <= tol,
    }


def chart_measure(positions: np.ndarray, dim: int, closed: bool = False,
                  period: float = 0.0) -> float:
    """Exact discrete measure of one chart: polyline length or facet area."""
    if dim == 1:
        return float(polyline_lengths(positions, closed).sum())
    shift = np.zeros(positions.shape[-1])
    shift[-1] = period
    closed_z = np.concatenate([positions, positions[:, :1] + shift], axis=1)
    d10 = closed_z[1:, :-1] - closed_z[:-1, :-1]
    d01 = closed_z[:-1, 1:] - closed_z[:-1, :-1]
    d11 = closed_z[1:, 1:] - closed_z[:-1, :-1]
    area = 0.5 * np.linalg.norm(np.cross(d10, d11), axis=-1).sum()
    area += 0.5 * np.linalg.norm(np.cross(d11, d01), axis=-1).sum()
    return float(area)


def energy(cluster: ReferenceCluster, state: HeightState | None = None,
           positions=None) -> float:
    """Tension-weighted total measure of the (evolved) cluster.

    This is the exact measure of the discrete polyline/facet cluster, so any
    resampling that keeps nodes on the polyline cannot increase it.
    """
    if positions is None:
        if state is None:
            positions = [c.positions for c in cluster.charts]
        else:
            positions = evaluate_phi(cluster, state)
    total = 0.0
    for ci, chart in enumerate(cluster.charts):
        gamma = cluster.weights.gamma[chart.tension_index]
        total += gamma * chart_measure(positions[ci], chart.dim, chart.closed, chart.period)
    return total
