"""Numerical checks: each turns a qualitative or quantitative property of the
equation into a pass/fail (or informational) report."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import barrier as bar
from .grid import Field, Frame, Grid, l1_distance, mass
from .params import ExponentSet, require_admissible
from .solver import RunRecord, run, run_ensemble
from .transform import ScalingMap, push_field

PASS, FAIL, INFO = "pass", "fail", "informational"
IDENTITY_RTOL = 1e-10
ORDER_RTOL = 1e-12


@dataclass
class CheckReport:
    name: str
    status: str = PASS
    measured: list[tuple[str, object]] = field(default_factory=list)
    expected: list[tuple[str, object, object]] = field(default_factory=list)
    artifacts: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    def measure(self, quantity: str, value):
        self.measured.append((quantity, value))

    def expect(self, quantity: str, value, tolerance):
        self.expected.append((quantity, value, tolerance))

    def format(self) -> str:
        lines = [f"check: {self.name}", f"status: {self.status}"]
        lines += [f"measured.{q}: {_fmt(v)}" for q, v in self.measured]
        lines += [f"expected.{q}: {_fmt(v)} tol {_fmt(t)}" for q, v, t in self.expected]
        lines += [f"artifact: {a}" for a in self.artifacts]
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _status(ok: bool) -> str:
    return PASS if ok else FAIL


# -- conservation -------------------------------------------------------------

def mass_conservation(record: RunRecord, tol: float = 0.005) -> CheckReport:
    """Relative mass drift <= tol and the per-step identity dmass = -dt*flux.

    When the boundary carried more than ``tol`` of the mass out the drift part
    is informational (the box was too small, not the scheme at fault); the
    identity still has to hold.
    """
    s = record.series()
    m0 = s["mass"][0]
    if not m0 > 0:
        raise ValueError("initial mass is zero; relative drift is undefined")
    drift = float(np.max(np.abs(s["mass"] - m0)) / m0)
    defect = float(np.max(record.step_defects(), initial=0.0) / m0)
    out_frac = float(s["cum_flux"][-1] / m0)
    rep = CheckReport("mass_conservation")
    rep.measure("relative_drift", drift)
    rep.measure("identity_defect", defect)
    rep.measure("boundary_outflow_fraction", out_frac)
    rep.measure("clipped_nodes", record.clipped)
    rep.expect("relative_drift", 0.0, tol)
    rep.expect("identity_defect", 0.0, IDENTITY_RTOL)
    identity_ok = defect <= IDENTITY_RTOL and record.clipped == 0
    if not identity_ok:
        rep.status = FAIL
    elif drift <= tol:
        rep.status = PASS
    elif abs(out_frac) > tol:
        rep.status = INFO
        rep.notes.append("support reached the box boundary; drift is boundary outflow")
    else:
        rep.status = FAIL
    return rep


# -- decay --------------------------------------------------------------------

def fit_loglog_slope(times, values, window, samples: int = 64) -> float:
    """Least-squares slope of log(values) against log(times) over ``window``.

    The series is resampled at log-spaced times so dense early steps do not
    dominate the fit.
    """
    lo, hi = window
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if not (0 < lo < hi):
        raise ValueError(f"degenerate window {window}")
    if lo < t[0] or hi > t[-1] * (1 + 1e-12):
        raise ValueError(f"window {window} is not inside the run [{t[0]}, {t[-1]}]")
    keep = (v > 0) & (t > 0)
    if not np.all(keep[(t >= lo) & (t <= hi)]):
        raise ValueError("sup norm vanishes inside the window")
    grid = np.geomspace(lo, min(hi, t[-1]), samples)
    logv = np.interp(np.log(grid), np.log(t[keep]), np.log(v[keep]))
    slope, _ = np.polyfit(np.log(grid), logv, 1)
    return float(slope)


def decay_exponent_fit(record: RunRecord, window=(1.0, 10.0), rel_tol: float = 0.1) -> CheckReport:
    s = record.series()
    target = -1.0 / record.exponents.beta
    slope = fit_loglog_slope(s["time"], s["sup_norm"], window)
    rep = CheckReport("decay_exponent_fit", _status(abs(slope - target) <= rel_tol * abs(target)))
    rep.measure("slope", slope)
    rep.measure("window", list(window))
    rep.expect("slope", target, rel_tol * abs(target))
    return rep


def mass_exponent_probe(initial: Field, exponents: ExponentSet, scalings, t_star: float,
                        workers: int = 1, **run_kw) -> CheckReport:
    """Fit sigma in sup u(t_star) ~ mass(u0)^sigma over scaled copies of ``initial``.

    Always informational; reports the measured sigma next to 2/beta and 2/(n beta).
    The runs are independent, so ``workers`` > 1 spreads them over threads.
    """
    scalings = sorted(float(s) for s in scalings)
    if len(scalings) < 4 or scalings[0] <= 0 or scalings[-1] / scalings[0] < 10 * (1 - 1e-12):
        raise ValueError("need at least 4 positive scalings spanning a decade")

    def one(c):
        rec = run(initial.copy(values=c * initial.values), exponents, initial.time + t_star,
                  [initial.time + t_star], **run_kw)
        return rec.mass[0], float(rec.snapshots[-1].values.max())

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, scalings))
    else:
        results = [one(c) for c in scalings]
    masses = [r[0] for r in results]
    sups = [r[1] for r in results]
    sigma, _ = np.polyfit(np.log(masses), np.log(sups), 1)
    rep = CheckReport("mass_exponent_probe", INFO)
    rep.measure("sigma", float(sigma))
    rep.measure("t_star", t_star)
    rep.measure("masses", masses)
    rep.measure("sup_norms", sups)
    rep.measure("sigma_2_over_beta", 2.0 / exponents.beta)
    rep.measure("sigma_2_over_n_beta", 2.0 / (exponents.n * exponents.beta))
    return rep


# -- comparison ---------------------------------------------------------------

def _order_violations(lower: np.ndarray, upper: np.ndarray, scale: float) -> tuple[int, float]:
    excess = lower - upper
    return int(np.count_nonzero(excess > ORDER_RTOL * scale)), float(np.max(excess))


def comparison_check(run_u: RunRecord, run_v: RunRecord) -> CheckReport:
    """u <= v + 1e-12 * sup v nodewise at every shared snapshot."""
    if run_u.snapshot_times != run_v.snapshot_times or not run_u.snapshots:
        raise ValueError("runs must have the same, nonempty, snapshot times")
    if run_u.snapshots[0].grid != run_v.snapshots[0].grid:
        raise ValueError("runs live on different grids")
    total, worst = 0, -math.inf
    for fu, fv in zip(run_u.snapshots, run_v.snapshots):
        count, excess = _order_violations(fu.values, fv.values, fv.values.max())
        total += count
        worst = max(worst, excess)
    rep = CheckReport("comparison", _status(total == 0))
    rep.measure("violations", total)
    rep.measure("max_excess", worst)
    rep.measure("snapshots", len(run_u.snapshots))
    rep.expect("violations", 0, 0)
    return rep


def barrier_dominance(record: RunRecord, spec: bar.BarrierSpec, tol: float = 1e-3) -> CheckReport:
    """u <= sampled barrier + tol * C0 at every snapshot with t <= T."""
    snaps = [f for f in record.snapshots if f.time <= spec.T]
    if not snaps:
        raise ValueError("no snapshots inside [0, T]")
    pts = snaps[0].grid.points()
    total, worst = 0, -math.inf
    for f in snaps:
        excess = f.values - bar.eval_supersolution(spec, pts, f.time)
        total += int(np.count_nonzero(excess > tol * spec.C0))
        worst = max(worst, float(excess.max()) / spec.C0)
    rep = CheckReport("barrier_dominance", _status(total == 0))
    rep.measure("violations", total)
    rep.measure("max_excess_over_C0", worst)
    rep.measure("snapshots", len(snaps))
    rep.expect("max_excess_over_C0", 0.0, tol)
    return rep


# -- frames -------------------------------------------------------------------

def scaling_equivalence(exponents: ExponentSet, u0: Field, original_grid: Grid, rescaled_grid: Grid,
                        taus, make_initial=None, tol: float = 0.02) -> CheckReport:
    """Original run pushed to the rescaled frame vs a direct rescaled run.

    ``u0`` lives on ``original_grid``; the rescaled run starts from the same
    function sampled on ``rescaled_grid`` (the map is the identity at t = 0),
    either given by ``make_initial(grid)`` or interpolated from ``u0``.
    """
    smap = ScalingMap(require_admissible(exponents))
    taus = [float(t) for t in taus]
    if u0.grid != original_grid or u0.frame != Frame.ORIGINAL or u0.time != 0:
        raise ValueError("u0 must be an original-frame field at t=0 on the original grid")
    if make_initial is not None:
        V0 = Field(rescaled_grid, make_initial(rescaled_grid), 0.0, Frame.RESCALED)
    else:
        V0 = push_field(smap, u0, rescaled_grid)
    ts = [smap.t_of_tau(tau) for tau in taus]
    ro = run(u0, exponents, max(ts), ts)
    rr = run(V0, exponents, max(taus), taus)
    diffs = []
    for t, tau in zip(ts, taus):
        pushed = push_field(smap, ro.snapshot_at(t), rescaled_grid)
        direct = rr.snapshot_at(tau)
        diffs.append(l1_distance(pushed, direct) / mass(direct))
    rep = CheckReport("scaling_equivalence", _status(max(diffs) <= tol))
    rep.measure("taus", taus)
    rep.measure("relative_l1", diffs)
    rep.expect("relative_l1", 0.0, tol)
    return rep


def envelope_check(record: RunRecord, spec: bar.BarrierSpec, C1: float, support_half_widths,
                   R1: float | None = None, tol: float = 1e-3) -> CheckReport:
    """Rescaled snapshots satisfy V <= F + tol * C1 with F the envelope."""
    first = record.snapshots[0] if record.snapshots else None
    if first is None or first.frame != Frame.RESCALED:
        raise ValueError("envelope_check needs rescaled-frame snapshots")
    v0_max = float(first.values.max())
    if C1 < v0_max:
        raise ValueError(f"C1={C1} is below the initial sup {v0_max}")
    if R1 is None:
        R1 = bar.choose_envelope_radius(spec, C1, support_half_widths)
    F = bar.eval_envelope(spec, C1, R1, first.grid.points())
    total, worst = 0, -math.inf
    for f in record.snapshots:
        excess = f.values - F
        total += int(np.count_nonzero(excess > tol * C1))
        worst = max(worst, float(excess.max()) / C1)
    rep = CheckReport("envelope", _status(total == 0))
    rep.measure("violations", total)
    rep.measure("max_excess_over_C1", worst)
    rep.measure("C1", C1)
    rep.measure("R1", R1)
    rep.measure("tau_max", record.snapshots[-1].time)
    rep.expect("max_excess_over_C1", 0.0, tol)
    return rep


# -- approximation ------------------------------------------------------------

def truncate(u0: Field, k: float) -> Field:
    """min(k, u0) times the indicator of the Euclidean ball of radius k."""
    r = np.sqrt(np.sum(u0.grid.points() ** 2, axis=-1))
    return u0.copy(values=np.where(r <= k, np.minimum(k, u0.values), 0.0))


def monotone_approximation(u0: Field, exponents: ExponentSet, k_list, t_end: float,
                           snapshot_times=None, tol: float = 0.01, **run_kw) -> CheckReport:
    """Runs from the truncations of u0 are ordered in k and approach the run from u0."""
    k_list = [float(k) for k in k_list]
    if len(k_list) < 3:
        raise ValueError("need at least 3 truncation levels")
    if any(b <= a for a, b in zip(k_list, k_list[1:])):
        raise ValueError("truncation levels must be increasing")
    if snapshot_times is None:
        snapshot_times = list(np.linspace(0.0, t_end, 5))
    initials = [truncate(u0, k) for k in k_list] + [u0]
    records = run_ensemble(initials, exponents, t_end, snapshot_times, **run_kw)
    full = records[-1]

    violations = 0
    for lo, hi in zip(records[:-1], records[1:]):
        for fl, fh in zip(lo.snapshots, hi.snapshots):
            violations += _order_violations(fl.values, fh.values, fh.values.max())[0]
    ref_mass = mass(full.snapshots[-1])
    gaps = [l1_distance(rec.snapshots[-1], full.snapshots[-1]) / ref_mass for rec in records[:-1]]
    nonincreasing = all(b <= a * (1 + 1e-12) + 1e-15 for a, b in zip(gaps, gaps[1:]))
    masses0 = [rec.mass[0] for rec in records]

    ok = violations == 0 and nonincreasing and gaps[-1] <= tol
    rep = CheckReport("monotone_approximation", _status(ok))
    rep.measure("k", k_list)
    rep.measure("order_violations", violations)
    rep.measure("relative_l1_gaps", gaps)
    rep.measure("gaps_nonincreasing", nonincreasing)
    rep.measure("initial_masses", masses0)
    rep.expect("order_violations", 0, 0)
    rep.expect("final_gap", 0.0, tol)
    return rep
