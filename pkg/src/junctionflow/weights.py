"""Surface tensions, mobilities and the contact angles they induce.

A junction carries three positive tensions gamma^i and mobilities beta^i.
Valid tensions satisfy the strict triangle inequality; the contact angles
theta^i then solve

    theta^1 + theta^2 + theta^3 = 2*pi,
    sin(theta^1)/gamma^1 = sin(theta^2)/gamma^2 = sin(theta^3)/gamma^3,

which is the scalar form of the conormal force balance at the junction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTensions

_TWO_PI = 2.0 * np.pi

# Invariants of a constructed AngleWeights are enforced to this tolerance.
INVARIANT_TOL = 1e-12


def _as_triple(v, name: str) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise DegenerateTensions(f"{name} must have exactly three entries, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class AngleWeights:
    """Tensions, mobilities and derived contact angles of one junction type.

    Fields `s` and `c` cache sin(theta) and cos(theta); most junction
    formulas are written in terms of them.
    """

    gamma: np.ndarray
    beta: np.ndarray
    theta: np.ndarray
    s: np.ndarray = field(init=False)
    c: np.ndarray = field(init=False)

    def __post_init__(self):
        gamma = _as_triple(self.gamma, "gamma")
        beta = _as_triple(self.beta, "beta")
        theta = _as_triple(self.theta, "theta")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "s", np.sin(theta))
        object.__setattr__(self, "c", np.cos(theta))
        if np.any(gamma <= 0) or np.any(beta <= 0):
            raise DegenerateTensions("tensions and mobilities must be positive")
        if np.any(theta <= 0) or np.any(theta >= np.pi):
            raise DegenerateTensions(f"contact angles must lie in (0, pi), got {theta}")
        if abs(theta.sum() - _TWO_PI) > INVARIANT_TOL:
            raise DegenerateTensions(f"contact angles must sum to 2*pi, got sum {theta.sum()!r}")
        ratios = self.s / gamma
        if np.max(np.abs(ratios - ratios[0])) > INVARIANT_TOL * max(1.0, np.max(np.abs(ratios))):
            raise DegenerateTensions(
                f"sin(theta)/gamma must be constant across sheets, got {ratios}"
            )


def derive_angles(gamma, beta=(1.0, 1.0, 1.0), tol: float = 1e-14, max_iter: int = 60) -> AngleWeights:
    """Solve for the contact angles induced by the tensions `gamma`.

    Newton iteration on the residual

        r(theta) = (sum(theta) - 2*pi,
                    s^1 gamma^2 - s^2 gamma^1,
                    s^2 gamma^3 - s^3 gamma^2)

    started from the symmetric point (2*pi/3, 2*pi/3, 2*pi/3), with step
    halving to keep the iterate inside (0, pi)^3 and the residual decreasing.
    The solve is deterministic; DegenerateTensions is raised when the triangle
    inequality fails or the iteration stalls.
    """
    gamma = _as_triple(gamma, "gamma")
    beta = _as_triple(beta, "beta")
    if np.any(gamma <= 0):
        raise DegenerateTensions(f"tensions must be positive, got {gamma}")
    if np.any(beta <= 0):
        raise DegenerateTensions(f"mobilities must be positive, got {beta}")
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        if gamma[i] >= gamma[j] + gamma[k] - INVARIANT_TOL * gamma.sum():
            raise DegenerateTensions(
                f"tensions {gamma} violate the strict triangle inequality (index {i})"
            )

    def residual(th):
        s = np.sin(th)
        return np.array([
            th.sum() - _TWO_PI,
            s[0] * gamma[1] - s[1] * gamma[0],
            s[1] * gamma[2] - s[2] * gamma[1],
        ])

    theta = np.full(3, _TWO_PI / 3.0)
    r = residual(theta)
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            break
        c = np.cos(theta)
        jac = np.array([
            [1.0, 1.0, 1.0],
            [c[0] * gamma[1], -c[1] * gamma[0], 0.0],
            [0.0, c[1] * gamma[2], -c[2] * gamma[1]],
        ])
        try:
            step = np.linalg.solve(jac, r)
        except np.linalg.LinAlgError as exc:
            raise DegenerateTensions(f"angle solve became singular for gamma={gamma}") from exc
        lam = 1.0
        norm = np.linalg.norm(r)
        while lam > 1e-12:
            cand = theta - lam * step
            if np.all(cand > 0.0) and np.all(cand < np.pi):
                r_cand = residual(cand)
                if np.linalg.norm(r_cand) < (1.0 - 0.25 * lam) * norm or np.max(np.abs(r_cand)) < tol:
                    theta, r = cand, r_cand
                    break
            lam *= 0.5
        else:
            raise DegenerateTensions(f"angle solve stalled for gamma={gamma}")
    else:
        raise DegenerateTensions(f"angle solve did not converge for gamma={gamma}")
    return AngleWeights(gamma=gamma, beta=beta, theta=theta)


def weights_from_angles(theta, beta=(1.0, 1.0, 1.0)) -> AngleWeights:
    """Build AngleWeights from prescribed angles; tensions are gamma^i = sin(theta^i)."""
    theta = _as_triple(theta, "theta")
    if abs(theta.sum() - _TWO_PI) > 1e-10:
        raise DegenerateTensions(f"contact angles must sum to 2*pi, got {theta}")
    if np.any(theta <= 0) or np.any(theta >= np.pi):
        raise DegenerateTensions(f"contact angles must lie in (0, pi), got {theta}")
    return AngleWeights(gamma=np.sin(theta), beta=_as_triple(beta, "beta"), theta=theta)
