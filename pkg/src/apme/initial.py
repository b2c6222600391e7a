"""Named initial-data generators on a grid."""

from __future__ import annotations

import numpy as np

from .grid import Field, Frame, Grid

GENERATORS = ("gaussian", "bump", "truncated_spike", "from_snapshot")


def _scaled_radius(grid: Grid, widths, center) -> np.ndarray:
    widths = np.broadcast_to(np.asarray(widths, dtype=float), (grid.n,))
    center = np.broadcast_to(np.asarray(center, dtype=float), (grid.n,))
    if np.any(widths <= 0):
        raise ValueError(f"widths must be positive, got {widths}")
    return np.sqrt(sum(((x - c) / w) ** 2 for x, c, w in zip(grid.mesh(), center, widths)))


def gaussian(grid: Grid, amplitude: float = 1.0, widths=1.0, center=0.0) -> np.ndarray:
    """amplitude * exp(-rho^2 / 2), rho^2 = sum ((x_i - c_i)/w_i)^2."""
    rho = _scaled_radius(grid, widths, center)
    return amplitude * np.exp(-0.5 * rho**2)


def bump(grid: Grid, amplitude: float = 1.0, radii=1.0, center=0.0) -> np.ndarray:
    """Compactly supported amplitude * (1 - rho^2)_+^2 on an axis-aligned ellipsoid."""
    rho = _scaled_radius(grid, radii, center)
    return amplitude * np.clip(1.0 - rho**2, 0.0, None) ** 2


def truncated_spike(grid: Grid, amplitude: float = 1.0, power: float = 0.5, radius: float = 1.0,
                    center=0.0) -> np.ndarray:
    """Integrable spike amplitude * r^(-power) * (1 - (r/radius)^2)_+.

    r is the Euclidean distance to ``center``, floored at half the smallest
    spacing so the node at the center stays finite; power < n keeps it
    integrable.
    """
    if not 0 <= power < grid.n:
        raise ValueError(f"power must lie in [0, n) for an integrable spike, got {power}")
    r = _scaled_radius(grid, 1.0, center)
    r = np.maximum(r, 0.5 * min(grid.spacings))
    return amplitude * r ** (-power) * np.clip(1.0 - (r / radius) ** 2, 0.0, None)


def make_field(name: str, grid: Grid, *, frame: Frame = Frame.ORIGINAL, time: float = 0.0,
               **params) -> Field:
    """Build a Field from a generator name and its keyword parameters."""
    if name == "from_snapshot":
        from .snapio import read_snapshot

        snap = read_snapshot(params.pop("path"))
        if params:
            raise TypeError(f"unexpected parameters for from_snapshot: {sorted(params)}")
        if snap.field.grid != grid:
            raise ValueError(f"snapshot grid {snap.field.grid} differs from the configured grid {grid}")
        return snap.field
    funcs = {"gaussian": gaussian, "bump": bump, "truncated_spike": truncated_spike}
    if name not in funcs:
        raise ValueError(f"unknown generator {name!r}; expected one of {GENERATORS}")
    return Field(grid, funcs[name](grid, **params), time, frame)
