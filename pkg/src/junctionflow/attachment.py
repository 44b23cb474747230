"""Attachment of tangential junction motion to the three height functions.

When the junction point moves by a vector delta, sheet i sees the normal
offset rho^i = <delta, N*^i> and the tangential offset mu^i = <delta, nu*^i>.
Because the three frames meet at the contact angles, mu is a fixed linear
function of the rho traces: mu = T rho with

    T[i, i+1] =  cos(theta^{i+1}) / sin(theta^i)
    T[i, i+2] = -cos(theta^{i+2}) / sin(theta^i)      (indices mod 3)

and zero diagonal.  The same matrix drives the junction resolvent used by the
nonlocal velocity operator: P(d) = T (Id - diag(d) T)^{-1} for the tangential
feedback coefficients d collected at the junction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch, SingularCoupling
from .weights import AngleWeights

COUPLING_COND_LIMIT = 1e8


def build_coupling(weights: AngleWeights) -> np.ndarray:
    """The 3x3 matrix T with mu = T rho at a junction."""
    t = np.zeros((3, 3))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        t[i, j] = weights.c[j] / weights.s[i]
        t[i, k] = -weights.c[k] / weights.s[i]
    return t


@dataclass(frozen=True)
class JunctionCoupling:
    """T plus the resolvent (Id - diag(d) T)^{-1} factor evaluated on demand."""

    weights: AngleWeights
    matrix: np.ndarray

    def resolvent(self, dag: np.ndarray, sign: int = 1) -> np.ndarray:
        """P(d) = T (Id - diag(d) T)^{-1}; raises when the inverse is unusable.

        `dag` has shape (3,) for a point junction or (3, M) per ring node; the
        result matches with the matrix axes first.  `sign` is the chirality of
        the junction the traces were collected at.
        """
        dag = np.asarray(dag, dtype=float)
        if dag.shape[0] != 3:
            raise ShapeMismatch(f"expected 3 junction traces, got {dag.shape}")
        t = sign * self.matrix
        single = dag.ndim == 1
        cols = dag.reshape(3, -1)
        out = np.empty((3, 3, cols.shape[1]))
        for m in range(cols.shape[1]):
            a = np.eye(3) - cols[:, m, None] * t
            if np.linalg.cond(a) > COUPLING_COND_LIMIT:
                raise SingularCoupling(
                    "junction resolvent is numerically singular; the slope of the "
                    "evolving cluster over the reference is too large"
                )
            out[:, :, m] = np.linalg.solve(a.T, t.T).T
        if single:
            return out[:, :, 0]
        return out.reshape((3, 3) + dag.shape[1:])


def make_coupling(weights: AngleWeights) -> JunctionCoupling:
    return JunctionCoupling(weights=weights, matrix=build_coupling(weights))


def mu_from_rho(weights: AngleWeights, rho_trace: np.ndarray, sign: int = 1) -> np.ndarray:
    """Tangential junction offsets from the three normal-height traces.

    `rho_trace` has shape (3,) or (3, M); the result matches.  `sign` is the
    chirality of the junction (positive for the convention the matrix T is
    written in; clusters store the per-junction value).
    """
    rho_trace = np.asarray(rho_trace, dtype=float)
    if rho_trace.shape[0] != 3:
        raise ShapeMismatch(f"expected 3 height traces, got shape {rho_trace.shape}")
    return sign * np.tensordot(build_coupling(weights), rho_trace, axes=1)


def verify_attachment(cluster, rho, mu) -> dict:
    """Check the two junction attachment identities on given height data.

    `rho` is a per-chart list of height arrays, `mu` a per-junction list of
    (3,) or (3, M) tangential offsets.  Reports the largest weighted-sum
    residual |sum_i gamma^i rho^i| and the largest Euclidean mismatch
    |mu - T rho| over junctions (and ring nodes).
    """
    t = build_coupling(cluster.weights)
    gamma = cluster.weights.gamma
    sum_rho = 0.0
    mismatch = 0.0
    for jn in cluster.junctions:
        tr = cluster.junction_trace(rho, jn)
        sum_rho = max(sum_rho, float(np.max(np.abs(np.tensordot(gamma, tr, axes=1)))))
        diff = np.asarray(mu[jn.index], dtype=float) - jn.chirality * np.tensordot(t, tr, axes=1)
        mismatch = max(mismatch, float(np.max(np.linalg.norm(diff, axis=0))))
    return {"sum_rho": sum_rho, "mu_mismatch": mismatch,
            "ok": sum_rho <= 1e-10 and mismatch <= 1e-10}
