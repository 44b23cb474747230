"""Solvability certificates for the junction boundary conditions.

The linearized step is parabolic-solvable exactly when a 3x3 boundary
determinant, built from the decaying characteristic roots of the per-sheet
symbol ODEs, stays away from zero over the admissible frequency set.  This
module computes the roots and the determinant, scans coefficient/frequency
grids with a seeded low-discrepancy sampler, and independently certifies the
half-line boundary value problem by an energy identity: its variational
discretization must have a smallest singular value bounded away from zero,
and the exponential-ansatz boundary system must be nonsingular with a
determinant equal to minus the root determinant.
"""

from dataclasses import dataclass
from math import ceil, log2

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.stats import qmc

from .errors import DomainError, Violation

POWER_TOL = 1e-10
POWER_MAX = 200


@dataclass(frozen=True)
class SymbolSample:
    """One admissible frequency point with everything derived from it."""

    p: complex
    xi_prime: np.ndarray
    g_tang: np.ndarray       # (3, d, d) inverse tangential metric per sheet
    weights: object
    p_hat: np.ndarray        # (3,) shifted symbols, Re > 0
    phi: np.ndarray          # (3,) phases, in (-pi/2, pi/2)
    tau: np.ndarray          # (3,) roots, Im > 0
    det: complex
    summand_re: np.ndarray   # (3,) real parts of the determinant summands


def _tangential_sq(xi, g_tang):
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if g_tang is None:
        g_tang = np.broadcast_to(np.eye(xi.size), (3, xi.size, xi.size))
    g_tang = np.asarray(g_tang, dtype=float)
    if g_tang.shape != (3, xi.size, xi.size):
        raise DomainError(f"tangential metric shape {g_tang.shape} does not "
                          f"match a frequency of dimension {xi.size}")
    out = np.einsum("k,skl,l->s", xi, g_tang, xi)
    if xi.size and np.any(np.linalg.eigvalsh(g_tang) <= 0.0):
        raise DomainError("tangential metric must be positive definite")
    return xi, g_tang, out


def make_sample(weights, p, xi_prime=0.0, g_tang=None) -> SymbolSample:
    """Roots and boundary determinant at one frequency point.

    p_hat^i = p + beta^i |xi'|^2 in the sheet metric; the decaying root is
    tau^i = sqrt(|p_hat^i| / beta^i) e^{i(phi^i + pi)/2} with phi^i the phase
    of p_hat^i, and the determinant is
    gamma^1 tau^2 tau^3 + gamma^2 tau^1 tau^3 + gamma^3 tau^1 tau^2.
    """
    p = complex(p)
    if not p.real > 0.0:
        raise DomainError(f"need Re p > 0, got {p}")
    xi, g_tang, xi_sq = _tangential_sq(xi_prime, g_tang)
    beta = np.asarray(weights.beta, dtype=float)
    gamma = np.asarray(weights.gamma, dtype=float)
    p_hat = p + beta * xi_sq
    phi = np.angle(p_hat)
    assert np.all(np.abs(phi) < 0.5 * np.pi)
    tau = np.sqrt(np.abs(p_hat) / beta) * np.exp(0.5j * (phi + np.pi))
    assert np.all(tau.imag > 0.0)
    summands = np.array([gamma[0] * tau[1] * tau[2],
                         gamma[1] * tau[0] * tau[2],
                         gamma[2] * tau[0] * tau[1]])
    return SymbolSample(p=p, xi_prime=xi, g_tang=g_tang, weights=weights,
                        p_hat=p_hat, phi=phi, tau=tau,
                        det=complex(summands.sum()),
                        summand_re=summands.real.copy())


def roots(weights, p, xi_prime=0.0, g_tang=None) -> np.ndarray:
    return make_sample(weights, p, xi_prime, g_tang).tau


def ls_determinant(sample: SymbolSample):
    """The boundary determinant and its three summands' real parts."""
    return sample.det, sample.summand_re


def check_grid(weights, p_re=(1e-6, 1e3), p_im=(-1e3, 1e3), xi_max=1e3,
               metric_range=(1.0, 1.0), samples: int = 10000, seed: int = 0,
               dim: int = 1) -> dict:
    """Low-discrepancy scan of the determinant positivity over a frequency box.

    Samples Re p log-uniformly, Im p and the dim frequency components
    uniformly, and an isotropic per-sheet metric factor in `metric_range`.
    Returns the worst observations; raises Violation if any determinant
    summand fails Re < 0 or the determinant reaches zero, which would mean
    an implementation bug rather than an admissible coefficient set.
    """
    if not (p_re[0] > 0.0 and p_re[1] >= p_re[0]):
        raise DomainError("the Re p range must stay strictly positive")
    gamma = np.asarray(weights.gamma, dtype=float)
    beta = np.asarray(weights.beta, dtype=float)
    d = 2 + dim + 3
    n = 2 ** int(ceil(log2(max(int(samples), 2))))
    eng = qmc.Sobol(d=d, scramble=True, seed=seed)
    u = eng.random(n)

    lo, hi = np.log10(p_re[0]), np.log10(p_re[1])
    p = 10.0 ** (lo + (hi - lo) * u[:, 0]) + 1j * (
        p_im[0] + (p_im[1] - p_im[0]) * u[:, 1])
    xi = xi_max * (2.0 * u[:, 2:2 + dim] - 1.0)
    r = np.linalg.norm(xi, axis=1)
    over = r > xi_max
    if np.any(over):
        xi[over] *= (xi_max / r[over])[:, None]
    fac = metric_range[0] + (metric_range[1] - metric_range[0]) * u[:, 2 + dim:]
    xi_sq = np.einsum("nk,nk->n", xi, xi)
    xi_sq_sheet = fac.T * xi_sq[None, :]

    p_hat = p[None, :] + beta[:, None] * xi_sq_sheet
    phi = np.angle(p_hat)
    tau = np.sqrt(np.abs(p_hat) / beta[:, None]) * np.exp(0.5j * (phi + np.pi))
    summands = np.stack([gamma[0] * tau[1] * tau[2],
                         gamma[1] * tau[0] * tau[2],
                         gamma[2] * tau[0] * tau[1]])
    det = summands.sum(axis=0)
    neg_re = -summands.real

    # |det| is parabolically homogeneous of degree two: both determinant
    # summands carry one root each and the roots scale linearly.
    scale = np.sqrt(np.abs(p) + np.max(beta[:, None] * xi_sq_sheet, axis=0))
    abs_det = np.abs(det)
    i_det = int(np.argmin(abs_det))
    i_scaled = int(np.argmin(abs_det / scale ** 2))
    i_re = int(np.argmin(neg_re.min(axis=0)))

    def describe(i):
        return {"p": [float(p[i].real), float(p[i].imag)],
                "xi": [float(v) for v in xi[i]],
                "metric_factors": [float(v) for v in fac[i]],
                "det": [float(det[i].real), float(det[i].imag)],
                "min_neg_re": float(neg_re[:, i].min())}

    report = {
        "samples": int(n),
        "seed": int(seed),
        "min_abs_det": float(abs_det[i_det]),
        "min_abs_det_scaled": float((abs_det / scale ** 2)[i_scaled]),
        "min_neg_re": float(neg_re.min()),
        "worst_sample": describe(i_re),
        "worst_det_sample": describe(i_scaled),
    }
    if report["min_neg_re"] <= 0.0 or report["min_abs_det"] <= 0.0:
        raise Violation(
            "determinant positivity failed on an admissible sample: "
            f"{report['worst_sample']}")
    return report


# ---------------------------------------------------------------------------
# half-line boundary value problem


def decay_rates(weights, lam, xi_sq):
    lam = complex(lam)
    beta = np.asarray(weights.beta, dtype=float)
    return np.sqrt((lam + beta * xi_sq) / beta.astype(complex))


def _p1_matrices(N, h):
    main_m = np.full(N + 1, 2.0 * h / 3.0)
    main_m[0] = main_m[-1] = h / 3.0
    off_m = np.full(N, h / 6.0)
    mass = sp.diags([off_m, main_m, off_m], [-1, 0, 1], format="csr")
    main_k = np.full(N + 1, 2.0 / h)
    main_k[0] = main_k[-1] = 1.0 / h
    off_k = np.full(N, -1.0 / h)
    stiff = sp.diags([off_k, main_k, off_k], [-1, 0, 1], format="csr")
    return mass, stiff


def _bvp_system(weights, lam, xi_sq, Y, N):
    """Constrained variational discretization of the three half-line ODEs.

    The trace constraint (tension-weighted sum vanishes) is eliminated, so
    the equal-derivative junction rows are natural conditions of the form;
    decay at Y enters through the exact Robin closure of each sheet.
    Returns (reduced operator, reduced weighted mass, basis, mass, stiffness,
    decay rates, grid step).
    """
    beta = np.asarray(weights.beta, dtype=float)
    gamma = np.asarray(weights.gamma, dtype=float)
    m = decay_rates(weights, lam, xi_sq)
    h = Y / N
    mass, stiff = _p1_matrices(N, h)
    blocks_a, blocks_b = [], []
    for j in range(3):
        robin = sp.csr_matrix(([m[j]], ([N], [N])), shape=(N + 1, N + 1))
        a = ((gamma[j] / beta[j]) * (lam + beta[j] * xi_sq) * mass
             + gamma[j] * (stiff + robin))
        blocks_a.append(a)
        blocks_b.append((gamma[j] / beta[j]) * mass)
    a_full = sp.block_diag(blocks_a, format="csr").astype(complex)
    b_full = sp.block_diag(blocks_b, format="csr")

    size = 3 * (N + 1)
    bound = [j * (N + 1) for j in range(3)]
    drop = bound[2]
    cols = {}
    k = 0
    for i in range(size):
        if i != drop:
            cols[i] = k
            k += 1
    rows = [i for i in range(size) if i != drop] + [drop, drop]
    colidx = [cols[i] for i in range(size) if i != drop] + [
        cols[bound[0]], cols[bound[1]]]
    vals = [1.0] * (size - 1) + [-gamma[0] / gamma[2], -gamma[1] / gamma[2]]
    z = sp.csr_matrix((vals, (rows, colidx)), shape=(size, size - 1))
    a_red = (z.T @ a_full @ z).tocsc()
    b_red = (z.T @ b_full @ z).tocsr()
    return a_red, b_red, z, mass, stiff, m, h


def _sigma_min(a_red, b_red):
    """Smallest singular value of the mass-normalized reduced operator.

    Power iteration on A^{-1} B A^{-H} B, which is self-adjoint positive in
    the B inner product; its largest eigenvalue is sigma_min^{-2}.
    """
    lu = spla.splu(a_red)
    n = a_red.shape[0]
    x = np.ones(n, dtype=complex) / np.sqrt(n)
    lam_prev = 0.0
    its = 0
    for its in range(1, POWER_MAX + 1):
        t = b_red @ x
        u = lu.solve(t, trans="H")
        v = b_red @ u
        w = lu.solve(v, trans="N")
        num = np.vdot(x, b_red @ w).real
        den = np.vdot(x, b_red @ x).real
        lam_est = num / den
        x = w / np.sqrt(np.vdot(w, b_red @ w).real)
        if its > 3 and abs(lam_est - lam_prev) <= POWER_TOL * abs(lam_est):
            break
        lam_prev = lam_est
    return 1.0 / np.sqrt(lam_est), x, its


def ode_energy_check(weights, lam, xi_prime=0.0, Y=None, N: int = 400) -> dict:
    """Certify the half-line system has only the trivial decaying solution.

    Returns the smallest singular value of the reduced variational operator
    measured in the weighted mass norm (bounded away from zero iff the
    boundary conditions are solvable) and the defect of the discrete energy
    identity evaluated on the candidate minimizer: the operator's quadratic
    form must equal the weighted mass term plus the tension-weighted
    Dirichlet term plus the Robin closure minus the junction pairing, which
    vanishes on the constrained space.
    """
    lam = complex(lam)
    xi = np.atleast_1d(np.asarray(xi_prime, dtype=float))
    xi_sq = float(xi @ xi)
    if lam.real < 0.0:
        raise DomainError(f"need Re lambda >= 0, got {lam}")
    if lam == 0.0 and xi_sq == 0.0:
        raise DomainError("the point (lambda, xi') = (0, 0) is excluded")
    if N < 200:
        raise DomainError("need at least 200 intervals")
    m = decay_rates(weights, lam, xi_sq)
    rate = float(np.min(m.real))
    if Y is None:
        Y = 12.0 / rate
    elif Y < 10.0 / rate:
        raise DomainError(f"Y = {Y} resolves less than ten decay lengths")
    a_red, b_red, z, mass, stiff, m, h = _bvp_system(weights, lam, xi_sq, Y, N)
    sigma, x, its = _sigma_min(a_red, b_red)

    gamma = np.asarray(weights.gamma, dtype=float)
    beta = np.asarray(weights.beta, dtype=float)
    phi = z @ x
    per = np.split(phi, 3)
    lhs = np.vdot(x, a_red @ x)
    mass_term = 0.0j
    stiff_term = 0.0j
    robin_term = 0.0j
    scale = 0.0
    for j in range(3):
        p2 = np.vdot(per[j], mass @ per[j]).real
        d2 = np.vdot(per[j], stiff @ per[j]).real
        mass_term += (gamma[j] / beta[j]) * (lam + beta[j] * xi_sq) * p2
        stiff_term += gamma[j] * d2
        robin_term += gamma[j] * m[j] * abs(per[j][-1]) ** 2
        scale += ((abs(lam) + beta[j] * xi_sq) * (gamma[j] / beta[j]) * p2
                  + gamma[j] * d2 + gamma[j] * abs(m[j]) * abs(per[j][-1]) ** 2)
    q = (-3.0 * per[0][0] + 4.0 * per[0][1] - per[0][2]) / (2.0 * h)
    pairing = q * sum(gamma[j] * np.conj(per[j][0]) for j in range(3))
    defect = abs(lhs - mass_term - stiff_term - robin_term + pairing) / scale
    return {"sigma_min": float(sigma), "energy_defect": float(defect),
            "Y": float(Y), "N": int(N), "decay_rates": m,
            "iterations": int(its)}


def singular_floor(weights, Y: float = 12.0, N: int = 400) -> float:
    """sigma_min the pipeline reports for the excluded degenerate point.

    At (lambda, xi') = (0, 0) the constants with vanishing weighted trace sum
    solve the boundary value problem, so the reduced operator is singular and
    the exact factorization may fail outright; a vanishing-lambda probe keeps
    the solve alive and returns the level the pipeline flags as singular.
    Genuine admissible samples must clear ten times this floor.
    """
    for lam in (0.0 + 0.0j, 1e-14 + 0.0j):
        a_red, b_red, *_ = _bvp_system(weights, lam, 0.0, Y, N)
        try:
            sigma, _, _ = _sigma_min(a_red, b_red)
        except RuntimeError:
            continue
        if np.isfinite(sigma) and sigma > 0.0:
            return float(sigma)
    return 0.0


def ansatz_boundary_matrix(weights, lam, xi_sq):
    """3x3 system forcing a pure exponential-decay solution to vanish.

    Rows: weighted trace sum, then the two derivative matches; determinant
    equals minus the root determinant at p = lambda.
    """
    gamma = np.asarray(weights.gamma, dtype=float)
    m = decay_rates(weights, lam, xi_sq)
    return np.array([
        [gamma[0], gamma[1], gamma[2]],
        [m[0], -m[1], 0.0],
        [0.0, m[1], -m[2]],
    ], dtype=complex)
