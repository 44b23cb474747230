"""Second-order finite-difference stencils on uniform parameter grids.

Charts are parametrized over [0, 1] with a uniform grid; open directions use
centered differences inside and 3-point (first derivative) / 4-point (second
derivative) one-sided closures at the ends, all second order.  Periodic
directions wrap.
"""

from __future__ import annotations

import numpy as np

from .errors import BadMesh


def grid_step(n_nodes: int) -> float:
    return 1.0 / (n_nodes - 1)


def d1(f: np.ndarray, h: float, axis: int = 0, periodic: bool = False) -> np.ndarray:
    """First derivative along `axis` with spacing `h`."""
    f = np.asarray(f, dtype=float)
    n = f.shape[axis]
    if periodic:
        return (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis)) / (2.0 * h)
    if n < 3:
        raise BadMesh(f"need at least 3 nodes along axis {axis}, got {n}")
    out = np.empty_like(f)
    fm = np.moveaxis(f, axis, 0)
    om = np.moveaxis(out, axis, 0)
    om[1:-1] = (fm[2:] - fm[:-2]) / (2.0 * h)
    om[0] = (-3.0 * fm[0] + 4.0 * fm[1] - fm[2]) / (2.0 * h)
    om[-1] = (3.0 * fm[-1] - 4.0 * fm[-2] + fm[-3]) / (2.0 * h)
    return out


def d2(f: np.ndarray, h: float, axis: int = 0, periodic: bool = False) -> np.ndarray:
    """Second derivative along `axis` with spacing `h`."""
    f = np.asarray(f, dtype=float)
    n = f.shape[axis]
    if periodic:
        return (np.roll(f, -1, axis=axis) - 2.0 * f + np.roll(f, 1, axis=axis)) / (h * h)
    if n < 4:
        raise BadMesh(f"need at least 4 nodes along axis {axis}, got {n}")
    out = np.empty_like(f)
    fm = np.moveaxis(f, axis, 0)
    om = np.moveaxis(out, axis, 0)
    om[1:-1] = (fm[2:] - 2.0 * fm[1:-1] + fm[:-2]) / (h * h)
    om[0] = (2.0 * fm[0] - 5.0 * fm[1] + 4.0 * fm[2] - fm[3]) / (h * h)
    om[-1] = (2.0 * fm[-1] - 5.0 * fm[-2] + 4.0 * fm[-3] - fm[-4]) / (h * h)
    return out


def d11(f: np.ndarray, hx: float, hz: float) -> np.ndarray:
    """Mixed derivative for sheets: open first axis, periodic second axis."""
    return d1(d1(f, hx, axis=0), hz, axis=1, periodic=True)


def one_sided_d1_weights(end: int, h: float):
    """Node offsets and weights of the 3-point boundary first derivative.

    `end` is 0 for the x=0 side and 1 for the x=1 side; offsets count from
    that end into the chart.
    """
    if end == 0:
        return (0, 1, 2), (-3.0 / (2 * h), 4.0 / (2 * h), -1.0 / (2 * h))
    return (0, 1, 2), (3.0 / (2 * h), -4.0 / (2 * h), 1.0 / (2 * h))


def rot90(v: np.ndarray) -> np.ndarray:
    """Counterclockwise quarter turn of planar vectors (last axis has size 2)."""
    out = np.empty_like(v)
    out[..., 0] = -v[..., 1]
    out[..., 1] = v[..., 0]
    return out
