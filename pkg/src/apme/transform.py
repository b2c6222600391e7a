"""Self-similar change of variables between the original and rescaled equations.

    h(t) = (1 + beta t)^(1/beta),  tau = ln h,  y_i = x_i h^(-alpha_i),  V = h u.

Because sum_i alpha_i = 1 the Jacobian of x -> y is 1/h, so the map preserves
the integral: int V dy = int u dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .grid import Field, Frame, Grid
from .params import ExponentSet, require_admissible

DEFAULT_MAX_CLIPPED = 1e-3


class CoverageError(ValueError):
    """The target grid misses a non-negligible part of the mapped mass."""

    def __init__(self, fraction: float, limit: float):
        super().__init__(f"target grid misses {fraction:.3e} of the mass (limit {limit:.1e})")
        self.fraction = fraction


@dataclass(frozen=True)
class ScalingMap:
    exponents: ExponentSet

    def __post_init__(self):
        if not self.exponents.beta > 0:
            raise ValueError(f"the map needs beta > 0, got {self.exponents.beta}")

    @classmethod
    def admissible(cls, exponents: ExponentSet) -> "ScalingMap":
        return cls(require_admissible(exponents))

    @property
    def beta(self) -> float:
        return self.exponents.beta

    @property
    def alpha(self) -> np.ndarray:
        return self.exponents.alpha_array

    def tau_of_t(self, t: float) -> float:
        _check_time(t, "t")
        return math.log1p(self.beta * t) / self.beta

    def t_of_tau(self, tau: float) -> float:
        _check_time(tau, "tau")
        return math.expm1(self.beta * tau) / self.beta


def _check_time(value: float, name: str):
    if not value >= 0:
        raise ValueError(f"{name} must be nonnegative, got {value}")


def h_of_t(smap: ScalingMap, t: float) -> float:
    _check_time(t, "t")
    return (1.0 + smap.beta * t) ** (1.0 / smap.beta)


def forward_point(smap: ScalingMap, x, t: float, u_val: float):
    """(x, t, u) -> (y, tau, V)."""
    h = h_of_t(smap, t)
    tau = smap.tau_of_t(t)
    y = np.asarray(x, dtype=float) * np.exp(-smap.alpha * tau)
    return y, tau, h * u_val


def backward_point(smap: ScalingMap, y, tau: float, V_val: float):
    """(y, tau, V) -> (x, t, u), the inverse of :func:`forward_point`."""
    t = smap.t_of_tau(tau)
    x = np.asarray(y, dtype=float) * np.exp(smap.alpha * tau)
    return x, t, math.exp(-tau) * V_val


def _interpolator(f: Field) -> RegularGridInterpolator:
    return RegularGridInterpolator(f.grid.axes, f.values, method="linear",
                                   bounds_error=False, fill_value=0.0)


def _covered(grid: Grid, points: np.ndarray) -> np.ndarray:
    inside = np.ones(points.shape[:-1], dtype=bool)
    for i, L in enumerate(grid.half_widths):
        inside &= np.abs(points[..., i]) <= L * (1 + 1e-12)
    return inside


def _clipped_fraction(src: Field, mapped: np.ndarray, target: Grid) -> float:
    total = float(np.sum(src.values))
    if total == 0:
        return 0.0
    outside = ~_covered(target, mapped)
    return float(np.sum(src.values[outside])) / total


def clipped_mass_fraction(smap: ScalingMap, u_field: Field, target_grid: Grid) -> float:
    """Fraction of the mass of ``u_field`` whose image lands outside ``target_grid``."""
    scale = _point_scale(smap, u_field)
    return _clipped_fraction(u_field, u_field.grid.points() * scale, target_grid)


def _point_scale(smap: ScalingMap, f: Field) -> np.ndarray:
    # factor taking source coordinates to target coordinates
    if f.frame == Frame.ORIGINAL:
        return np.exp(-smap.alpha * smap.tau_of_t(f.time))
    return np.exp(smap.alpha * f.time)


def push_field(smap: ScalingMap, u_field: Field, target_grid: Grid,
               max_clipped: float = DEFAULT_MAX_CLIPPED) -> Field:
    """Resample an original-frame field at time t as the rescaled field at tau = ln h(t).

    Each target node is mapped back to x and u is interpolated multilinearly
    there (zero outside the source box).  Raises :class:`CoverageError` when
    more than ``max_clipped`` of the mass maps outside the target box.
    """
    if u_field.frame != Frame.ORIGINAL:
        raise ValueError("push_field needs an original-frame field")
    if target_grid.n != smap.exponents.n:
        raise ValueError("target grid dimension does not match the exponents")
    t = u_field.time
    h = h_of_t(smap, t)
    tau = smap.tau_of_t(t)
    frac = clipped_mass_fraction(smap, u_field, target_grid)
    if frac > max_clipped:
        raise CoverageError(frac, max_clipped)
    x = target_grid.points() * np.exp(smap.alpha * tau)
    values = h * _interpolator(u_field)(x)
    return Field(target_grid, np.maximum(values, 0.0), tau, Frame.RESCALED)


def pull_field(smap: ScalingMap, V_field: Field, target_grid: Grid,
               max_clipped: float = DEFAULT_MAX_CLIPPED) -> Field:
    """Inverse of :func:`push_field`: rescaled field at tau to the original field at t."""
    if V_field.frame != Frame.RESCALED:
        raise ValueError("pull_field needs a rescaled-frame field")
    if target_grid.n != smap.exponents.n:
        raise ValueError("target grid dimension does not match the exponents")
    tau = V_field.time
    frac = clipped_mass_fraction(smap, V_field, target_grid)
    if frac > max_clipped:
        raise CoverageError(frac, max_clipped)
    y = target_grid.points() * np.exp(-smap.alpha * tau)
    values = math.exp(-tau) * _interpolator(V_field)(y)
    return Field(target_grid, np.maximum(values, 0.0), smap.t_of_tau(tau), Frame.ORIGINAL)
