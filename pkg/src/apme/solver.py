"""Explicit conservative finite differences for the original and rescaled equations.

Original frame:  u_t = sum_i (u^{m_i})_{x_i x_i}
Rescaled frame:  V_tau = sum_i [(V^{m_i})_{y_i y_i} + alpha_i (y_i V)_{y_i}]

Both are written as differences of face fluxes, with zero ghost values outside
the box, so the discrete mass changes only through the boundary faces.  The
drift alpha_i y_i V is upwinded; its velocity points inward at the boundary,
so drift never carries mass out of the box.

For m_i < 1 the flux s^m_i has unbounded slope at 0.  Below the floor
``eps`` it is replaced by its tangent line at ``eps`` (shifted so that 0 maps
to 0), which caps the slope at m_i eps^(m_i-1), the same constant used by
:func:`stable_dt`.  With that the update is a monotone map: ordered inputs stay
ordered and nonnegative inputs stay nonnegative.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .grid import Field, Frame, Grid, mass, sup_norm
from .params import ExponentSet

log = logging.getLogger(__name__)

EPS = 1e-6
SAFETY = 0.9
# dt may exceed stable_dt by this relative amount (roundoff when landing on snapshot times)
DT_RTOL = 1e-12


class StabilityError(ValueError):
    pass


def flux_function(values: np.ndarray, m: float, eps: float = EPS) -> np.ndarray:
    """s^m, with the tangent-line continuation below eps when m < 1 (offset so 0 -> 0)."""
    if m == 1.0:
        return values
    if m > 1.0:
        return np.power(values, m)
    slope = m * eps ** (m - 1.0)
    shift = (1.0 - m) * eps**m
    return np.where(values >= eps, np.power(values, m) - shift, slope * values)


def diffusivity_bounds(u_max: float, exponents: ExponentSet, eps: float = EPS) -> np.ndarray:
    """Per-axis L_i = m_i max(u_max^(m_i-1), eps^(m_i-1)), finite for an all-zero field."""
    out = []
    for mi in exponents.m:
        if mi < 1.0:
            base = min(u_max, eps) if u_max > 0 else eps
        else:
            base = max(u_max, eps)
        out.append(mi * base ** (mi - 1.0))
    return np.asarray(out)


def stable_dt(f: Field, exponents: ExponentSet, eps: float = EPS, safety: float = SAFETY) -> float:
    """Largest step keeping every node's update a convex combination.

    dt = safety / (2 sum_i L_i / dx_i^2 + sum_i alpha_i H_i / dx_i), where H_i
    is the box half width; the drift term alpha_i H_i (largest drift speed)
    is present only in the rescaled frame.  In 1-D, or with equal spacings
    and equal L_i, the diffusion part is safety * dx^2 / (2 n L).
    """
    if f.grid.n != exponents.n:
        raise ValueError("grid and exponents have different dimensions")
    u_max = float(np.max(f.values)) if f.values.size else 0.0
    L = diffusivity_bounds(u_max, exponents, eps)
    dx = np.asarray(f.grid.spacings)
    rate = np.sum(2.0 * L / dx**2)
    if f.frame == Frame.RESCALED:
        half = np.asarray(f.grid.half_widths)
        rate += np.sum(exponents.alpha_array * half / dx)
    return float(safety / rate)


@dataclass
class StepResult:
    field: Field
    boundary_flux: float      # mass per unit time leaving through the box boundary
    clipped: int = 0          # roundoff negatives set to zero


def _face_slices(ndim: int, axis: int):
    def sl(a, b):
        return tuple(slice(a, b) if k == axis else slice(None) for k in range(ndim))
    return sl


def _face_amounts(values: np.ndarray, grid: Grid, exponents: ExponentSet, dt: float,
                  rescaled: bool, eps: float) -> list[np.ndarray]:
    """Per-axis amounts crossing each face during dt, positive in the +axis direction.

    Along axis i the array has sizes_i + 1 entries; entries 0 and -1 are the
    boundary faces next to the zero ghosts.
    """
    ndim = values.ndim
    amounts = []
    for axis in range(ndim):
        dx = grid.spacings[axis]
        pad = [(0, 0)] * ndim
        pad[axis] = (1, 1)
        p = np.pad(flux_function(values, exponents.m[axis], eps), pad)
        F = np.diff(p, axis=axis)
        F *= -dt / dx**2
        if rescaled:
            sl = _face_slices(ndim, axis)
            v = np.pad(values, pad)
            y = grid.coords(axis)
            faces = np.concatenate(([y[0] - dx / 2], y + dx / 2))
            vel = -exponents.alpha[axis] * faces
            shape = [1] * ndim
            shape[axis] = -1
            vel = vel.reshape(shape)
            F += (dt / dx) * (np.maximum(vel, 0.0) * v[sl(0, -1)] + np.minimum(vel, 0.0) * v[sl(1, None)])
        amounts.append(F)
    return amounts


def _advance_values(values: np.ndarray, grid: Grid, exponents: ExponentSet, dt: float,
                    rescaled: bool, eps: float) -> tuple[np.ndarray, float]:
    ndim = values.ndim
    new = values.copy()
    outflow = 0.0
    for axis, F in enumerate(_face_amounts(values, grid, exponents, dt, rescaled, eps)):
        sl = _face_slices(ndim, axis)
        new += F[sl(0, -1)]
        new -= F[sl(1, None)]
        # fixed summation order keeps the flux bit-reproducible
        outflow += float(np.sum(F[sl(-1, None)])) - float(np.sum(F[sl(0, 1)]))
    return new, outflow


def _clip(values: np.ndarray) -> int:
    neg = values < 0
    count = int(np.count_nonzero(neg))
    if count:
        values[neg] = 0.0
    return count


def advance(f: Field, exponents: ExponentSet, dt: float, *, eps: float = EPS,
            safety: float = SAFETY, check: bool = True) -> StepResult:
    """One explicit step of whichever equation matches the field's frame."""
    if dt < 0:
        raise ValueError(f"negative step {dt}")
    if check:
        if np.any(f.values < 0):
            raise ValueError("field has negative values")
        bound = stable_dt(f, exponents, eps, safety)
        if dt > bound * (1 + DT_RTOL):
            raise StabilityError(f"dt={dt:.6g} exceeds the stability bound {bound:.6g}")
    new, outflow = _advance_values(f.values, f.grid, exponents, dt, f.frame == Frame.RESCALED, eps)
    clipped = _clip(new)
    flux = outflow * f.grid.cell_volume / dt if dt > 0 else 0.0
    return StepResult(Field(f.grid, new, f.time + dt, f.frame), flux, clipped)


def step_original(u: Field, exponents: ExponentSet, dt: float, **kw) -> Field:
    if u.frame != Frame.ORIGINAL:
        raise ValueError("step_original needs an original-frame field")
    return advance(u, exponents, dt, **kw).field


def step_rescaled(V: Field, exponents: ExponentSet, dtau: float, **kw) -> Field:
    if V.frame != Frame.RESCALED:
        raise ValueError("step_rescaled needs a rescaled-frame field")
    return advance(V, exponents, dtau, **kw).field


@dataclass
class RunRecord:
    """Snapshots plus one row of scalars per step (row 0 is the initial state)."""

    exponents: ExponentSet
    snapshots: list[Field] = field(default_factory=list)
    time: list[float] = field(default_factory=list)
    mass: list[float] = field(default_factory=list)
    sup_norm: list[float] = field(default_factory=list)
    dt: list[float] = field(default_factory=list)
    flux: list[float] = field(default_factory=list)
    cum_flux: list[float] = field(default_factory=list)
    clipped: int = 0

    def _append(self, t, m, s, dt, flux):
        self.time.append(t)
        self.mass.append(m)
        self.sup_norm.append(s)
        self.dt.append(dt)
        self.flux.append(flux)
        prev = self.cum_flux[-1] if self.cum_flux else 0.0
        self.cum_flux.append(prev + dt * flux)

    def series(self) -> dict[str, np.ndarray]:
        return {k: np.asarray(getattr(self, k)) for k in ("time", "mass", "sup_norm", "dt", "flux", "cum_flux")}

    @property
    def steps(self) -> int:
        return len(self.time) - 1

    def snapshot_at(self, t: float) -> Field:
        for s in self.snapshots:
            if s.time == t:
                return s
        raise KeyError(f"no snapshot at t={t}")

    @property
    def snapshot_times(self) -> list[float]:
        return [s.time for s in self.snapshots]

    def step_defects(self) -> np.ndarray:
        """|mass_k - mass_{k-1} + dt_k flux_k| for every step."""
        s = self.series()
        return np.abs(np.diff(s["mass"]) + s["dt"][1:] * s["flux"][1:])


def _validate_schedule(start: float, t_end: float, snapshot_times) -> list[float]:
    if not t_end > start:
        raise ValueError(f"t_end={t_end} must exceed the start time {start}")
    times = [float(t) for t in snapshot_times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("snapshot times must be strictly increasing")
    if times and times[0] < start:
        raise ValueError(f"snapshot time {times[0]} precedes the start time {start}")
    if times and times[-1] > t_end:
        raise ValueError(f"snapshot time {times[-1]} is after t_end={t_end}")
    stops = [t for t in times if t > start]
    if not stops or stops[-1] < t_end:
        stops.append(float(t_end))
    return stops


def run_ensemble(initials: list[Field], exponents: ExponentSet, t_end: float, snapshot_times=(),
                 *, eps: float = EPS, safety: float = SAFETY, max_steps: int = 10_000_000,
                 progress: int = 0) -> list[RunRecord]:
    """Advance several fields in lockstep with the common (smallest) stable step."""
    if not initials:
        raise ValueError("no initial fields")
    grid, frame, start = initials[0].grid, initials[0].frame, initials[0].time
    for f in initials:
        if f.grid != grid or f.frame != frame or f.time != start:
            raise ValueError("ensemble members must share grid, frame and start time")
        f.check_nonnegative()
    stops = _validate_schedule(start, t_end, snapshot_times)
    wanted = set(float(t) for t in snapshot_times)

    records = [RunRecord(exponents) for _ in initials]
    fields = [f.copy() for f in initials]
    for rec, f in zip(records, fields):
        rec._append(f.time, mass(f), sup_norm(f), 0.0, 0.0)
        if start in wanted:
            rec.snapshots.append(f.copy())

    t = start
    steps = 0
    for stop in stops:
        while t < stop:
            dt = min(stable_dt(f, exponents, eps, safety) for f in fields)
            last = t + dt >= stop
            if last:
                dt = stop - t
            for k, f in enumerate(fields):
                new, outflow = _advance_values(f.values, grid, exponents, dt, frame == Frame.RESCALED, eps)
                flux = outflow * grid.cell_volume / dt
                records[k].clipped += _clip(new)
                f = Field(grid, new, stop if last else t + dt, frame)
                fields[k] = f
                rec = records[k]
                rec._append(f.time, mass(f), sup_norm(f), dt, flux)
            t = stop if last else t + dt
            steps += 1
            if steps > max_steps:
                raise RuntimeError(f"exceeded {max_steps} steps before t={stop}")
            if progress and steps % progress == 0:
                log.info("step %d t=%.6g dt=%.3g sup=%.4g", steps, t, dt, records[0].sup_norm[-1])
        if stop in wanted:
            for rec, f in zip(records, fields):
                rec.snapshots.append(f.copy())
    return records


def run(initial: Field, exponents: ExponentSet, t_end: float, snapshot_times=(), **kw) -> RunRecord:
    """Integrate from ``initial`` to ``t_end`` with adaptive dt = stable_dt.

    Steps are shortened to land exactly on every snapshot time.  Identical
    inputs give bit-identical records.
    """
    return run_ensemble([initial], exponents, t_end, snapshot_times, **kw)[0]
