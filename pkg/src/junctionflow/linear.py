"""Linearized junction operator: assembly, implicit steps, spectra, residuals.

The height linearization at the reference is, per sheet,

    (L u)^i = beta^i (Lap_ref u^i + |Pi*^i|^2 u^i) + zeta^i (chi T u_Sigma)^i o pr

with zeta = beta <grad H*, tau*> supported in the junction collars.  Junction
nodes carry constraint rows instead of evolution rows: with

    q^i = du^i/dnu (outward one-sided) + kappa^i (chi T u_Sigma)^i,

sheet slot 0 holds the weighted trace sum, slots 1 and 2 the differences
q^1 - q^2 and q^2 - q^3, which linearize the prescribed-angle conditions.
Pinned ends hold homogeneous Dirichlet rows.  One implicit Euler step solves

    (I - dt L) u = rhs   on evolution rows,
    B u = b              on junction rows,     u = 0 on pinned rows,

and the factorization is cached for reuse across Picard sweeps and steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .attachment import build_coupling
from .errors import BadMesh, ShapeMismatch, SingularSystem
from .geometry import ReferenceCluster, polyline_lengths
from .stencils import grid_step, one_sided_d1_weights

RESIDUAL_TOL = 1e-10


# ---------------------------------------------------------------------------
# unknown layout


def layout(cluster: ReferenceCluster):
    """Chart offsets into the packed unknown vector (row-major node order)."""
    offsets, total = [], 0
    for chart in cluster.charts:
        shape = chart.positions.shape[:-1]
        offsets.append((total, shape))
        total += int(np.prod(shape))
    return offsets, total


def pack(cluster: ReferenceCluster, fields) -> np.ndarray:
    offsets, total = layout(cluster)
    out = np.empty(total)
    for (off, shape), f in zip(offsets, fields):
        if np.shape(f) != shape:
            raise ShapeMismatch(f"field shape {np.shape(f)} does not match chart grid {shape}")
        out[off:off + int(np.prod(shape))] = np.ravel(f)
    return out


def unpack(cluster: ReferenceCluster, vec: np.ndarray):
    offsets, total = layout(cluster)
    if vec.shape != (total,):
        raise ShapeMismatch(f"expected packed vector of length {total}, got {vec.shape}")
    return [vec[off:off + int(np.prod(shape))].reshape(shape) for off, shape in offsets]


def _trace_index(cluster, offsets, ci, end):
    """Global indices of the junction-node row(s) of chart ci at `end`."""
    off, shape = offsets[ci]
    if cluster.charts[ci].dim == 1:
        return np.array([off if end == 0 else off + shape[0] - 1])
    m = shape[1]
    base = off if end == 0 else off + (shape[0] - 1) * m
    return base + np.arange(m)


class _Triplets:
    def __init__(self):
        self.rows, self.cols, self.vals = [], [], []

    def add(self, r, c, v):
        r = np.asarray(r, dtype=int)
        c = np.asarray(c, dtype=int)
        v = np.broadcast_to(np.asarray(v, dtype=float), r.shape)
        self.rows.append(r.ravel())
        self.cols.append(c.ravel())
        self.vals.append(np.ravel(v))

    def matrix(self, total):
        if not self.rows:
            return sp.csr_matrix((total, total))
        return sp.csr_matrix(
            (np.concatenate(self.vals),
             (np.concatenate(self.rows), np.concatenate(self.cols))),
            shape=(total, total))


# ---------------------------------------------------------------------------
# assembly


def _curve_rows(cluster, ci, off, beta, trip):
    """Arclength Laplacian rows of one curve chart, scaled by beta."""
    chart = cluster.charts[ci]
    n = chart.n_x
    h = 1.0 / n if chart.closed else grid_step(n)
    g = cluster.sqrt_g[ci] ** 2
    if chart.closed:
        gx = (np.roll(g, -1) - np.roll(g, 1)) / (2.0 * h)
        interior = np.arange(n)
        nxt, prv = (interior + 1) % n, (interior - 1) % n
    else:
        gx = np.zeros(n)
        gx[1:-1] = (g[2:] - g[:-2]) / (2.0 * h)
        interior = np.arange(1, n - 1)
        nxt, prv = interior + 1, interior - 1
    c2 = beta / g[interior]
    c1 = -beta * gx[interior] / (2.0 * g[interior] ** 2)
    trip.add(off + interior, off + prv, c2 / (h * h) - c1 / (2.0 * h))
    trip.add(off + interior, off + interior, -2.0 * c2 / (h * h))
    trip.add(off + interior, off + nxt, c2 / (h * h) + c1 / (2.0 * h))


def _sheet_rows(cluster, ci, off, beta, trip):
    """Surface Laplacian rows of one (orthogonal-metric) sheet chart."""
    chart = cluster.charts[ci]
    n, m = chart.positions.shape[0], chart.positions.shape[1]
    hx, hz = grid_step(n), chart.period / m
    met = cluster.metric[ci]
    g11, g12, g22 = met[..., 0], met[..., 1], met[..., 2]
    if np.max(np.abs(g12)) > 1e-8 * np.max(g11):
        raise BadMesh("sheet assembly requires an orthogonal parametrization")
    sg = cluster.sqrt_g[ci]
    a = sg / g11
    b = sg / g22
    ax = np.zeros_like(a)
    ax[1:-1] = (a[2:] - a[:-2]) / (2.0 * hx)
    bz = (np.roll(b, -1, axis=1) - np.roll(b, 1, axis=1)) / (2.0 * hz)
    ii, mm = np.meshgrid(np.arange(1, n - 1), np.arange(m), indexing="ij")
    ii, mm = ii.ravel(), mm.ravel()
    node = off + ii * m + mm
    cxx = beta / g11[ii, mm]
    czz = beta / g22[ii, mm]
    cx = beta * ax[ii, mm] / sg[ii, mm]
    cz = beta * bz[ii, mm] / sg[ii, mm]
    trip.add(node, node, -2.0 * cxx / (hx * hx) - 2.0 * czz / (hz * hz))
    trip.add(node, off + (ii + 1) * m + mm, cxx / (hx * hx) + cx / (2.0 * hx))
    trip.add(node, off + (ii - 1) * m + mm, cxx / (hx * hx) - cx / (2.0 * hx))
    trip.add(node, off + ii * m + (mm + 1) % m, czz / (hz * hz) + cz / (2.0 * hz))
    trip.add(node, off + ii * m + (mm - 1) % m, czz / (hz * hz) - cz / (2.0 * hz))


def q_row_entries(cluster: ReferenceCluster, offsets, jn, slot_i):
    """Sparse entries of q^{slot_i} at junction `jn` as (cols, vals) pairs.

    For curve junctions each pair holds length-1 arrays; for ring junctions
    length-M arrays, one value per ring node.
    """
    t = jn.chirality * build_coupling(cluster.weights)
    ci, end = jn.sheets[slot_i]
    chart = cluster.charts[ci]
    off = offsets[ci][0]
    entries = []
    if chart.dim == 1:
        n = chart.n_x
        h = grid_step(n)
        offs, w = one_sided_d1_weights(end, h)
        sg = cluster.sqrt_g[ci][0 if end == 0 else -1]
        sign = -1.0 if end == 0 else 1.0
        step = 1 if end == 0 else -1
        node0 = 0 if end == 0 else n - 1
        for o, wi in zip(offs, w):
            entries.append((np.array([off + node0 + step * o]),
                            np.array([sign * wi / sg])))
    else:
        n, m = chart.positions.shape[0], chart.positions.shape[1]
        hx = grid_step(n)
        offs, w = one_sided_d1_weights(end, hx)
        sgx = np.sqrt(cluster.metric[ci][0 if end == 0 else -1, :, 0])
        sign = -1.0 if end == 0 else 1.0
        step = 1 if end == 0 else -1
        row0 = 0 if end == 0 else n - 1
        ring = np.arange(m)
        for o, wi in zip(offs, w):
            entries.append((off + (row0 + step * o) * m + ring, sign * wi / sgx))
    kappa = jn.kappa[slot_i]
    for l, (cl, el) in enumerate(jn.sheets):
        tr = _trace_index(cluster, offsets, cl, el)
        entries.append((tr, np.broadcast_to(kappa * t[slot_i, l], tr.shape)))
    return entries


@dataclass
class JunctionOperator:
    """Step matrix (I - dt L; B; Dirichlet) with its cached factorization."""

    cluster: ReferenceCluster
    dt: float
    matrix: sp.csc_matrix
    lu: object
    spatial: sp.csr_matrix   # L with junction and pinned rows zeroed
    evolution_mask: np.ndarray
    junction_mask: np.ndarray
    pinned_mask: np.ndarray

    def apply_spatial(self, fields) -> list:
        """L v on evolution rows (zero elsewhere).  The Picard defect uses this
        exact matrix so its fixed point solves the nonlocal law discretely."""
        return unpack(self.cluster, self.spatial @ pack(self.cluster, fields))


def build_operator(cluster: ReferenceCluster, dt: float) -> JunctionOperator:
    offsets, total = layout(cluster)
    trip = _Triplets()
    for ci, chart in enumerate(cluster.charts):
        off, shape = offsets[ci]
        beta = cluster.weights.beta[chart.tension_index]
        if chart.dim == 1:
            _curve_rows(cluster, ci, off, beta, trip)
        else:
            _sheet_rows(cluster, ci, off, beta, trip)
        # zero-order curvature term
        node = off + np.arange(int(np.prod(shape)))
        trip.add(node, node, beta * np.ravel(cluster.pi_sq[ci]))
        # junction feedback: zeta * (chi T u_Sigma) transported along supports
        zeta = beta * np.ravel(cluster.curv_drift[ci])
        for j, sheet, mask in cluster.support[ci]:
            jn = cluster.junctions[j]
            t = jn.chirality * build_coupling(cluster.weights)
            flat = np.ravel(mask if chart.dim == 1 else
                            np.broadcast_to(mask[:, None], shape))
            src = np.nonzero(flat)[0]
            if src.size == 0:
                continue
            for l, (cl, el) in enumerate(jn.sheets):
                tr = _trace_index(cluster, offsets, cl, el)
                if chart.dim == 1:
                    cols = np.full(src.shape, tr[0])
                else:
                    cols = tr[src % shape[1]]
                trip.add(off + src, cols, zeta[src] * t[sheet, l])

    junction_mask = np.zeros(total, dtype=bool)
    pinned_mask = np.zeros(total, dtype=bool)
    for jn in cluster.junctions:
        for ci, end in jn.sheets:
            junction_mask[_trace_index(cluster, offsets, ci, end)] = True
    for ci, chart in enumerate(cluster.charts):
        for end, desc in enumerate(chart.ends):
            if desc[0] == "pinned":
                pinned_mask[_trace_index(cluster, offsets, ci, end)] = True
    evolution_mask = ~(junction_mask | pinned_mask)

    spatial = trip.matrix(total)
    keep = np.repeat(evolution_mask, np.diff(spatial.indptr))
    spatial.data = spatial.data * keep
    spatial.eliminate_zeros()

    # constraint rows
    btrip = _Triplets()
    gamma = cluster.weights.gamma
    for jn in cluster.junctions:
        trace = [_trace_index(cluster, offsets, ci, end) for ci, end in jn.sheets]
        for l in range(3):
            btrip.add(trace[0], trace[l], gamma[l])
        for slot_i, (sa, sb) in ((1, (0, 1)), (2, (1, 2))):
            for src_slot, sgn in ((sa, 1.0), (sb, -1.0)):
                for cols_e, vals_e in q_row_entries(cluster, offsets, jn, src_slot):
                    btrip.add(np.broadcast_to(trace[slot_i], cols_e.shape),
                              cols_e, sgn * np.asarray(vals_e))

    step = (sp.diags(np.where(evolution_mask | pinned_mask, 1.0, 0.0))
            - dt * spatial + btrip.matrix(total)).tocsc()
    try:
        lu = spla.splu(step)
    except RuntimeError as exc:
        raise SingularSystem("step matrix factorization failed") from exc
    return JunctionOperator(
        cluster=cluster, dt=float(dt), matrix=step, lu=lu,
        spatial=spatial.tocsr(), evolution_mask=evolution_mask,
        junction_mask=junction_mask, pinned_mask=pinned_mask,
    )


def boundary_values(op: JunctionOperator, fields) -> list:
    """B v per junction: [trace sum, q1 - q2, q2 - q3], scalars or (M,) arrays.

    Junction rows of the step matrix hold exactly B, so this is a masked
    matrix product; the Picard sweep uses it to build inhomogeneous data
    that shares every coefficient with the implicit side.
    """
    bu = op.matrix @ pack(op.cluster, fields)
    offsets, _ = layout(op.cluster)
    out = []
    for jn in op.cluster.junctions:
        vals = []
        for ci, end in jn.sheets:
            v = bu[_trace_index(op.cluster, offsets, ci, end)]
            vals.append(v if v.size > 1 else float(v[0]))
        out.append(vals)
    return out


@dataclass
class LinearJunctionSystem:
    """One assembled implicit step: cached operator plus its right-hand side."""

    operator: JunctionOperator
    rhs: np.ndarray
    f: list
    b: list
    u_old: list

    @property
    def cluster(self):
        return self.operator.cluster

    @property
    def dt(self):
        return self.operator.dt

    @property
    def matrix(self):
        return self.operator.matrix


def _zero_fields(cluster):
    return [np.zeros(c.positions.shape[:-1]) for c in cluster.charts]


def _same_weights(a, b) -> bool:
    return a is b or (np.array_equal(a.gamma, b.gamma) and np.array_equal(a.beta, b.beta))


def assemble(cluster: ReferenceCluster, weights, dt: float, f=None, b=None,
             u_old=None, operator: JunctionOperator | None = None) -> LinearJunctionSystem:
    """Build the step system u_new - dt L u_new = u_old + dt f with junction
    data b (per junction: three slot-ordered values; the first must vanish).

    Pass a previously built `operator` for the same (cluster, dt) to reuse its
    factorization; otherwise one is built here.
    """
    if weights is not None and not _same_weights(weights, cluster.weights):
        raise ShapeMismatch("weights do not match the ones the cluster was built with")
    if operator is None:
        operator = build_operator(cluster, dt)
    elif operator.cluster is not cluster or operator.dt != dt:
        raise ShapeMismatch("cached operator belongs to a different cluster or dt")
    f = _zero_fields(cluster) if f is None else f
    u_old = _zero_fields(cluster) if u_old is None else u_old
    if b is None:
        b = [[0.0, 0.0, 0.0] for _ in cluster.junctions]
    for vals in b:
        if np.max(np.abs(vals[0])) != 0.0:
            raise ShapeMismatch("the weighted-trace-sum datum must vanish identically")

    vec = pack(cluster, u_old) + dt * pack(cluster, f)
    vec[~operator.evolution_mask] = 0.0
    offsets, _ = layout(cluster)
    for jn, vals in zip(cluster.junctions, b):
        for slot_i, (ci, end) in enumerate(jn.sheets):
            vec[_trace_index(cluster, offsets, ci, end)] = vals[slot_i]
    return LinearJunctionSystem(operator=operator, rhs=vec, f=f, b=b, u_old=u_old)


def solve_step(system: LinearJunctionSystem) -> list:
    """Direct solve of the cached factorization with a residual guard."""
    op = system.operator
    rhs = system.rhs
    u = op.lu.solve(rhs)
    res = op.matrix @ u - rhs
    # backward-error scale: a direct solve leaves residuals of order
    # machine * ||M|| * ||u||, which dwarfs ||rhs|| when dt/h^2 is large
    row_norm = float(np.max(np.abs(op.matrix).sum(axis=1)))
    scale = max(1.0, float(np.max(np.abs(rhs))),
                row_norm * float(np.max(np.abs(u), initial=0.0)))
    if not np.all(np.isfinite(u)) or np.max(np.abs(res)) > RESIDUAL_TOL * scale:
        raise SingularSystem(
            f"step solve residual {np.max(np.abs(res)):.3g} exceeds "
            f"{RESIDUAL_TOL} * {scale:.3g}")
    return unpack(op.cluster, u)


# ---------------------------------------------------------------------------
# weak residual


def _admissible_tests(cluster, count, seed):
    """Smooth per-chart test fields, zero at pinned ends, traces projected
    onto the weighted-sum-zero subspace."""
    gamma = cluster.weights.gamma
    rng = np.random.default_rng(seed)
    tests = []
    for _ in range(count):
        fields = []
        for chart in cluster.charts:
            x = np.linspace(0.0, 1.0, chart.positions.shape[0])
            f = np.zeros_like(x)
            for k in range(1, 4):
                f += rng.uniform(-1.0, 1.0) * np.cos(0.5 * np.pi * k * x)
            for end, desc in enumerate(chart.ends):
                if desc[0] == "pinned":
                    f = f * (x if end == 0 else 1.0 - x)
            if chart.dim == 2:
                f = np.repeat(f[:, None], chart.positions.shape[1], axis=1)
            fields.append(f)
        for jn in cluster.junctions:
            tr = cluster.junction_trace(fields, jn)
            corr = np.tensordot(gamma, tr, axes=1) / float(gamma @ gamma)
            for slot_i, (ci, end) in enumerate(jn.sheets):
                if end == 0:
                    fields[ci][0] = fields[ci][0] - corr * gamma[slot_i]
                else:
                    fields[ci][-1] = fields[ci][-1] - corr * gamma[slot_i]
        tests.append(fields)
    return tests


def weak_residual(system: LinearJunctionSystem, u_fields,
                  test_fields=None, seed: int = 0) -> float:
    """Variational residual of a step solution against admissible tests.

    The functional pairs the cell-weighted strong defect of the evolution
    rows (scaled by 1/dt, i.e. the time-difference form) with the test, plus
    the junction bracket: the weighted trace-flux pairing minus the pairing
    with the boundary data.  Because the test traces sum to zero against the
    weights, the bracket telescopes through the constraint rows, so solver
    output scores at direct-solve roundoff while inconsistent data does not.
    """
    op = system.operator
    rhs = system.rhs
    cluster = op.cluster
    offsets, total = layout(cluster)
    vec = pack(cluster, u_fields)
    defect = (op.matrix @ vec - rhs) * op.evolution_mask / op.dt
    gamma = cluster.weights.gamma
    beta = cluster.weights.beta

    tests = [test_fields] if test_fields is not None else _admissible_tests(cluster, 4, seed)

    worst = 0.0
    for fields in tests:
        xi = pack(cluster, fields)
        total_r = 0.0
        for ci, chart in enumerate(cluster.charts):
            off, shape = offsets[ci]
            npts = int(np.prod(shape))
            sl = slice(off, off + npts)
            if chart.dim == 1:
                seg = polyline_lengths(chart.positions, chart.closed)
                cells = np.zeros(shape[0])
                if chart.closed:
                    cells += 0.5 * (seg + np.roll(seg, 1))
                else:
                    cells[:-1] += 0.5 * seg
                    cells[1:] += 0.5 * seg
            else:
                cells = cluster.sqrt_g[ci] * grid_step(shape[0]) * (chart.period / shape[1])
            gi = gamma[chart.tension_index] / beta[chart.tension_index]
            total_r += gi * float(np.sum(defect[sl] * xi[sl] * np.ravel(cells)))
        for jn in cluster.junctions:
            qs = []
            for slot_i in range(3):
                q = 0.0
                for cols_e, vals_e in q_row_entries(cluster, offsets, jn, slot_i):
                    q = q + np.asarray(vals_e) * vec[cols_e]
                qs.append(q)
            tr_xi = cluster.junction_trace(fields, jn)
            b2 = rhs[_trace_index(cluster, offsets, *jn.sheets[1])]
            b3 = rhs[_trace_index(cluster, offsets, *jn.sheets[2])]
            flux = sum(gamma[i] * float(np.sum(tr_xi[i] * qs[i])) for i in range(3))
            data = float(np.sum(gamma[0] * tr_xi[0] * (b2 + b3) + gamma[1] * tr_xi[1] * b3))
            total_r += flux - data
        scale = max(1.0, float(np.max(np.abs(xi))))
        worst = max(worst, abs(total_r) / scale)
    return worst


# ---------------------------------------------------------------------------
# junction spectrum


def _fem_matrices(cluster: ReferenceCluster, stride: int = 1):
    """P1 stiffness/mass on the polyline arclength meshes, plus dof groups."""
    if cluster.dim != 1:
        raise BadMesh("the junction spectrum solver works on curve clusters")
    gamma = cluster.weights.gamma
    beta = cluster.weights.beta
    sizes, seglists = [], []
    for chart in cluster.charts:
        if chart.closed:
            raise BadMesh("the junction spectrum solver expects open charts")
        pos = chart.positions[::stride]
        seglists.append(polyline_lengths(pos))
        sizes.append(pos.shape[0])
    offsets = np.concatenate([[0], np.cumsum(sizes)])[:-1].astype(int)
    total = int(np.sum(sizes))
    trip_k, trip_m = _Triplets(), _Triplets()
    for ci, chart in enumerate(cluster.charts):
        g = gamma[chart.tension_index]
        gb = g / beta[chart.tension_index]
        le = seglists[ci]
        i0 = offsets[ci] + np.arange(le.size)
        i1 = i0 + 1
        trip_k.add(i0, i0, g / le)
        trip_k.add(i1, i1, g / le)
        trip_k.add(i0, i1, -g / le)
        trip_k.add(i1, i0, -g / le)
        trip_m.add(i0, i0, gb * le / 3.0)
        trip_m.add(i1, i1, gb * le / 3.0)
        trip_m.add(i0, i1, gb * le / 6.0)
        trip_m.add(i1, i0, gb * le / 6.0)
    constraints, drop = [], []
    for jn in cluster.junctions:
        constraints.append(np.array(
            [offsets[ci] + (0 if end == 0 else sizes[ci] - 1) for ci, end in jn.sheets]))
    for ci, chart in enumerate(cluster.charts):
        for end, desc in enumerate(chart.ends):
            if desc[0] == "pinned":
                drop.append(offsets[ci] + (0 if end == 0 else sizes[ci] - 1))
    return (trip_k.matrix(total), trip_m.matrix(total),
            constraints, np.asarray(drop, dtype=int), total)


def _reduction(total, constraints, drop, gamma):
    """Sparse basis of the admissible subspace (trace sums zero, pinned zero)."""
    tied = np.zeros(total, dtype=bool)
    for idx in constraints:
        tied[idx] = True
    tied[drop] = True
    free = np.nonzero(~tied)[0]
    null = scipy.linalg.null_space(gamma[None, :])  # (3, 2), deterministic
    rows = [free]
    cols = [np.arange(free.size)]
    vals = [np.ones(free.size)]
    nc = free.size
    for idx in constraints:
        for b in null.T:
            rows.append(idx)
            cols.append(np.full(3, nc))
            vals.append(b)
            nc += 1
    return sp.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(total, nc))


@dataclass
class EigenSystem:
    """Junction spectrum: ascending eigenvalues with fine-mesh eigenfields."""

    values: np.ndarray
    modes: list            # per mode: list of per-chart nodal fields
    mass_weights: np.ndarray  # gamma_i / beta_i
    info: dict


def solve_eigen(cluster: ReferenceCluster, weights=None, k: int = 6,
                extrapolate: bool = True, dense_check: bool = False) -> EigenSystem:
    """Lowest junction eigenvalues: the tension-weighted Laplacian with
    weighted trace-sum and flux-matching junction conditions.

    Values carry one step of mesh-halving extrapolation by default (the P1
    eigenvalue error is clean O(h^2)); modes belong to the fine mesh and are
    orthonormal in the mass-weighted product.  `dense_check` recomputes the
    fine-mesh spectrum densely and reports the largest gap in info.
    """
    if weights is not None and not _same_weights(weights, cluster.weights):
        raise ShapeMismatch("weights do not match the ones the cluster was built with")
    _, total_dof = layout(cluster)
    if not 1 <= k <= total_dof // 2:
        raise ShapeMismatch(f"k={k} outside 1..{total_dof // 2}")
    gamma = cluster.weights.gamma

    def spectrum(stride):
        kk, mm, constraints, drop, total = _fem_matrices(cluster, stride)
        z = _reduction(total, constraints, drop, gamma)
        kr = (z.T @ kk @ z).tocsc()
        mr = (z.T @ mm @ z).tocsc()
        nred = kr.shape[0]
        ksolve = min(k, nred - 1)
        v0 = np.full(nred, 1.0 / np.sqrt(nred))
        # shift below zero keeps the shifted matrix definite even when the
        # cluster has no pinned end (two per-chart-constant zero modes)
        vals, vecs = spla.eigsh(kr, k=ksolve, M=mr, sigma=-1.0, which="LM", v0=v0)
        order = np.argsort(vals)
        return vals[order], (z @ vecs[:, order]), kr, mr

    vals_h, modes, kr, mr = spectrum(1)
    values = vals_h.copy()
    info = {"extrapolated": False, "raw": vals_h}
    if extrapolate and all((c.n_x - 1) % 2 == 0 for c in cluster.charts):
        vals_2h, _, _, _ = spectrum(2)
        nshared = min(len(vals_h), len(vals_2h))
        values = (4.0 * vals_h[:nshared] - vals_2h[:nshared]) / 3.0
        modes = modes[:, :nshared]
        info["extrapolated"] = True
        info["coarse"] = vals_2h[:nshared]
        info["raw"] = vals_h[:nshared]
    if dense_check:
        dvals = np.sort(scipy.linalg.eigh(
            kr.toarray(), mr.toarray(), eigvals_only=True))
        info["dense_gap"] = float(np.max(np.abs(dvals[: len(info["raw"])] - info["raw"])))
    mode_fields = [unpack(cluster, modes[:, i]) for i in range(modes.shape[1])]
    return EigenSystem(
        values=values, modes=mode_fields,
        mass_weights=cluster.weights.gamma / cluster.weights.beta, info=info)


# ---------------------------------------------------------------------------
# central-difference validation of the height linearizations


def _trace_constrained_fields(gamma, rng, x):
    """Per-chart smooth test fields whose weighted traces vanish at both ends.

    Built as a0 + a1 x + sine modes, so the end traces are a0 and a0 + a1;
    the third chart's linear part is solved from the two junction constraints.
    Returns node values plus analytic first and second x-derivatives.
    """
    a0 = rng.uniform(-1.0, 1.0, 3)
    a1 = rng.uniform(-1.0, 1.0, 3)
    a0[2] = -(gamma[0] * a0[0] + gamma[1] * a0[1]) / gamma[2]
    bot = -(gamma[0] * (a0[0] + a1[0]) + gamma[1] * (a0[1] + a1[1])) / gamma[2]
    a1[2] = bot - a0[2]
    b = rng.uniform(-1.0, 1.0, (3, 2))
    vals, d1, d2 = [], [], []
    for i in range(3):
        w1, w2 = np.pi, 2.0 * np.pi
        vals.append(a0[i] + a1[i] * x
                    + b[i, 0] * np.sin(w1 * x) + b[i, 1] * np.sin(w2 * x))
        d1.append(a1[i] + b[i, 0] * w1 * np.cos(w1 * x)
                  + b[i, 1] * w2 * np.cos(w2 * x))
        d2.append(-b[i, 0] * w1 ** 2 * np.sin(w1 * x)
                  - b[i, 1] * w2 ** 2 * np.sin(w2 * x))
    return vals, d1, d2


def _chart_arc_geometry(positions, orientation):
    """(signed curvature, arc length) of a chart sampled from one circle.

    The circumcircle through three spread nodes is exact for such charts;
    collinear charts get curvature zero and the polyline length.
    """
    p0, pm, p1 = positions[0], positions[len(positions) // 2], positions[-1]
    d1, d2 = pm - p0, p1 - p0
    cross = d1[0] * d2[1] - d1[1] * d2[0]
    chords = np.linalg.norm(np.diff(positions, axis=0), axis=1)
    span = np.linalg.norm(d1) * np.linalg.norm(d2)
    if abs(cross) <= 1e-12 * span:
        return 0.0, float(chords.sum())
    radius = (np.linalg.norm(d1) * np.linalg.norm(d2) * np.linalg.norm(p1 - pm)
              / (2.0 * abs(cross)))
    from .geometry import curve_fields
    mid_curv = curve_fields(positions, orientation, False)["mean_curv"][len(positions) // 2]
    length = float(np.sum(2.0 * radius * np.arcsin(
        np.clip(chords / (2.0 * radius), -1.0, 1.0))))
    return float(np.sign(mid_curv) / radius), length


def linearization_sweep(weights=None, n: int = 2400,
                        eps=(0.03, 0.01, 0.003, 0.001, 3e-4, 1e-4),
                        seed: int = 0) -> dict:
    """Central-difference check of the three height linearizations.

    On an equal-area double-bubble reference perturbed by analytic heights
    eps*u (with the attachment map applied), verifies that

      velocity:   the motion field of an admissible direction v paired with
                  the evolved unit normal, symmetrized over +-eps, returns v;
      curvature:  the centered difference of the evolved curvature returns
                  u'' (arclength) + kappa^2 u plus the drift coupling;
      angle rows: the centered difference of the junction rotation defects
                  returns the conormal-jump rows q^1-q^2, q^2-q^3 with
                  q^i = du^i/dnu + kappa^i mu^i.

    All targets are closed-form (the charts are circular arcs), so the error
    curves decay at slope 2 in eps down to the stencil floor.  Returns the
    error curves, fitted slopes, and smallest relative errors.
    """
    from .geometry import make_double_bubble
    from .shape import make_state, shape_quantities, junction_rotation_defects
    from .attachment import mu_from_rho

    if weights is None:
        from .weights import derive_angles
        weights = derive_angles((1.0, 1.0, 1.0))
    cluster = make_double_bubble(weights, n=n)
    gamma = np.asarray(weights.gamma, dtype=float)
    rng = np.random.default_rng(seed)
    x = np.linspace(0.0, 1.0, n + 1)
    u, ux, uxx = _trace_constrained_fields(gamma, rng, x)
    v, _, _ = _trace_constrained_fields(gamma, rng, x)

    kappa, length = [], []
    for ci, chart in enumerate(cluster.charts):
        k, ell = _chart_arc_geometry(chart.positions, cluster.orientation[ci])
        kappa.append(k)
        length.append(ell)

    mu_u = [mu_from_rho(weights, cluster.junction_trace(u, jn), sign=jn.chirality)
            for jn in cluster.junctions]
    target_curv = []
    for ci in range(3):
        muf = np.zeros(n + 1)
        for j, sheet, mask in cluster.support[ci]:
            muf[mask] = mu_u[j][sheet]
        target_curv.append(uxx[ci] / length[ci] ** 2 + kappa[ci] ** 2 * u[ci]
                           + cluster.curv_drift[ci] * muf)
    target_rows = []
    for j, jn in enumerate(cluster.junctions):
        q = []
        for i, (ci, end) in enumerate(jn.sheets):
            slope = ux[ci][-1 if end else 0] / length[ci]
            q.append((slope if end else -slope) + kappa[ci] * mu_u[j][i])
        target_rows.append((q[0] - q[1], q[1] - q[2]))

    base = [c.positions for c in cluster.charts]
    from .shape import evaluate_phi
    dphi_v = [pv - p0 for pv, p0 in
              zip(evaluate_phi(cluster, make_state(cluster, rho=v)), base)]

    scale_vel = max(float(np.max(np.abs(f))) for f in v)
    scale_curv = max(float(np.max(np.abs(t))) for t in target_curv)
    scale_rows = max(max(abs(a), abs(b)) for a, b in target_rows)
    err_vel, err_curv, err_rows = [], [], []
    for e in eps:
        qp = shape_quantities(cluster, make_state(cluster, rho=[e * f for f in u]))
        qm = shape_quantities(cluster, make_state(cluster, rho=[-e * f for f in u]))
        worst_v = worst_c = 0.0
        for ci in range(3):
            sym = 0.5 * (
                np.einsum("...i,...i->...", dphi_v[ci], qp.normal[ci])
                + np.einsum("...i,...i->...", dphi_v[ci], qm.normal[ci]))
            worst_v = max(worst_v, float(np.max(np.abs(sym - v[ci]))))
            diff = (qp.mean_curv[ci] - qm.mean_curv[ci]) / (2.0 * e)
            worst_c = max(worst_c, float(np.max(np.abs(
                (diff - target_curv[ci])[2:-2]))))
        dp = junction_rotation_defects(cluster, qp)
        dm = junction_rotation_defects(cluster, qm)
        worst_r = 0.0
        for j in range(len(cluster.junctions)):
            for a, b, t in zip(dp[j], dm[j], target_rows[j]):
                worst_r = max(worst_r, abs((a - b) / (2.0 * e) - t))
        err_vel.append(worst_v / scale_vel)
        err_curv.append(worst_c / scale_curv)
        err_rows.append(worst_r / scale_rows)

    def fit(errors):
        m = max(3, len(eps) // 2)
        return float(np.polyfit(np.log(eps[:m]), np.log(errors[:m]), 1)[0])

    def block(errors):
        return {"errors": [float(v_) for v_ in errors],
                "slope": fit(errors),
                "min_rel_error": float(min(errors))}

    return {"n": int(n), "seed": int(seed), "eps": [float(e) for e in eps],
            "velocity": block(err_vel), "curvature": block(err_curv),
            "angle_rows": block(err_rows)}
