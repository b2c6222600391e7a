"""Build runs and checks from an :class:`ExperimentConfig`."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import barrier as bar
from . import verify
from .config import ExperimentConfig
from .grid import Field, Frame, Grid
from .initial import gaussian, make_field
from .params import require_admissible
from .solver import RunRecord, run, run_ensemble
from .verify import CheckReport


def initial_field(cfg: ExperimentConfig, grid: Grid | None = None, frame: Frame | None = None) -> Field:
    grid = grid or cfg.grid
    frame = cfg.frame if frame is None else frame
    f = make_field(cfg.get("initial", "generator"), grid, frame=frame, **cfg.generator_params())
    return f.copy(frame=frame) if f.frame != frame else f


def run_kwargs(cfg: ExperimentConfig) -> dict:
    return {"eps": cfg.get("run", "eps"), "safety": cfg.get("run", "safety")}


def snapshot_times(cfg: ExperimentConfig, t_end: float | None = None, count: int = 11) -> list[float]:
    times = cfg.get("run", "snapshot_times")
    t_end = cfg.get("run", "t_end") if t_end is None else t_end
    if times is None:
        return [float(t) for t in np.linspace(0.0, t_end, count)]
    return [t for t in times if t <= t_end]


def solve(cfg: ExperimentConfig) -> RunRecord:
    u0 = initial_field(cfg)
    return run(u0, cfg.exponents, cfg.get("run", "t_end"), snapshot_times(cfg), **run_kwargs(cfg))


def support_half_widths(f: Field) -> np.ndarray:
    """Half widths of the smallest centered box containing supp f."""
    support = f.values > 0
    if not support.any():
        raise ValueError("field has empty support")
    out = []
    for axis, x in enumerate(f.grid.axes):
        other = tuple(k for k in range(f.grid.n) if k != axis)
        hit = np.any(support, axis=other) if other else support
        out.append(float(np.abs(x[hit]).max()))
    return np.asarray(out)


def barrier_spec(cfg: ExperimentConfig, u0: Field, T: float | None = None) -> bar.BarrierSpec:
    """Barrier from the [barrier] section, defaults filled in from the initial data."""
    e = require_admissible(cfg.exponents)
    theta, _ = bar.choose_profile_params(e)
    T = cfg.get("barrier", "T") or T or cfg.get("run", "t_end")
    C0, A, T = bar.default_barrier_params(u0.values, list(u0.grid.axes), T, theta)
    C0 = cfg.get("barrier", "C0") or C0
    A = cfg.get("barrier", "A") or A
    return bar.build_barrier(e, C0, A, T, grouping=cfg.get("barrier", "grouping"))


def random_perturbation(grid: Grid, rng: np.random.Generator, scale: float) -> np.ndarray:
    """A nonnegative Gaussian bump with random height, width and center."""
    half = np.asarray(grid.half_widths)
    center = rng.uniform(-0.5, 0.5, grid.n) * half
    widths = rng.uniform(0.03, 0.15, grid.n) * half
    return gaussian(grid, rng.uniform(0.1, 1.0) * scale, widths, center)


def ordered_pairs(u0: Field, count: int, seed: int) -> list[Field]:
    """u0 followed by ``count`` fields u0 + (random nonnegative perturbation)."""
    rng = np.random.default_rng(seed)
    scale = float(u0.values.max()) or 1.0
    return [u0] + [u0.copy(values=u0.values + random_perturbation(u0.grid, rng, scale))
                   for _ in range(count)]


def comparison_from_pairs(records: list[RunRecord]) -> CheckReport:
    """Merge comparison reports of records[0] against each later record."""
    reports = [verify.comparison_check(records[0], r) for r in records[1:]]
    total = sum(dict(r.measured)["violations"] for r in reports)
    worst = max(dict(r.measured)["max_excess"] for r in reports)
    rep = CheckReport("comparison", verify.PASS if total == 0 else verify.FAIL)
    rep.measure("pairs", len(reports))
    rep.measure("violations", total)
    rep.measure("max_excess", worst)
    rep.expect("violations", 0, 0)
    return rep


def run_check(cfg: ExperimentConfig, name: str, seed: int | None = None,
              workers: int = 1) -> tuple[CheckReport, RunRecord | None]:
    """Run one named check; returns the report and the main run (if any)."""
    seed = cfg.seed if seed is None else seed
    e = cfg.exponents
    kw = run_kwargs(cfg)
    c = cfg.sections["checks"]
    t_end = cfg.get("run", "t_end")

    if name == "certificate":
        spec = barrier_spec(cfg, initial_field(cfg, frame=Frame.ORIGINAL))
        count = cfg.get("barrier", "samples")
        certs = [bar.residual_certificate(spec, count, seed, lam) for lam in (1.0, spec.lam)]
        ok = all(cert["nonpositive"] for cert in certs)
        rep = CheckReport("certificate", verify.PASS if ok else verify.FAIL)
        for cert in certs:
            tag = "lambda_1" if cert["lambda"] == 1.0 else "lambda"
            rep.measure(f"{tag}.max_residual", cert["max_residual"])
            rep.measure(f"{tag}.samples", cert["samples"])
        rep.measure("seed", seed)
        rep.expect("max_residual", 0.0, 0.0)
        return rep, None

    if name == "probe":
        u0 = initial_field(cfg)
        rep = verify.mass_exponent_probe(u0, e, cfg.get("sweep", "scalings"), cfg.get("sweep", "t_star"),
                                         workers=workers, **kw)
        return rep, None

    if name == "envelope":
        u0 = initial_field(cfg, frame=Frame.RESCALED)
        spec = barrier_spec(cfg, u0)
        C1 = c["envelope_C1"] or float(u0.values.max())
        tau = c["envelope_tau"]
        rec = run(u0, e, tau, list(np.linspace(0.0, tau, 7)), **kw)
        return verify.envelope_check(rec, spec, C1, support_half_widths(u0), tol=c["envelope_tol"]), rec

    u0 = initial_field(cfg, frame=Frame.ORIGINAL)
    if name == "mass":
        rec = run(u0, e, t_end, snapshot_times(cfg), **kw)
        return verify.mass_conservation(rec, c["mass_tol"]), rec
    if name == "decay":
        lo, hi = c["decay_window"]
        times = sorted(set(snapshot_times(cfg, max(t_end, hi))) | {lo, hi})
        rec = run(u0, e, max(t_end, hi), times, **kw)
        return verify.decay_exponent_fit(rec, (lo, hi), c["decay_rel_tol"]), rec
    if name == "comparison":
        records = run_ensemble(ordered_pairs(u0, c["comparison_pairs"], seed), e, t_end,
                               snapshot_times(cfg), **kw)
        rep = comparison_from_pairs(records)
        rep.measure("seed", seed)
        rep.measure("perturbation_masses", [r.mass[0] - records[0].mass[0] for r in records[1:]])
        return rep, records[0]
    if name == "dominance":
        spec = barrier_spec(cfg, u0)
        T = min(spec.T, t_end)
        rec = run(u0, e, T, snapshot_times(cfg, T), **kw)
        return verify.barrier_dominance(rec, spec, c["dominance_tol"]), rec
    if name == "equivalence":
        rs, rh = c["rescaled_sizes"], c["rescaled_half_widths"]
        target = Grid(rs, rh) if rs is not None else u0.grid
        rep = verify.scaling_equivalence(e, u0, u0.grid, target, c["equivalence_taus"],
                                         make_initial=lambda g: initial_field(cfg, g, Frame.RESCALED).values,
                                         tol=c["equivalence_tol"])
        return rep, None
    if name == "monotone":
        rep = verify.monotone_approximation(u0, e, c["k_list"], t_end, snapshot_times(cfg),
                                            tol=c["monotone_tol"], **kw)
        return rep, None
    raise ValueError(f"unknown check {name!r}")


def run_checks(cfg: ExperimentConfig, names, seed: int | None = None, workers: int = 1):
    """Run several checks, concurrently when workers > 1; results keep the order of ``names``."""
    if workers <= 1 or len(names) <= 1:
        return [run_check(cfg, n, seed) for n in names]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda n: run_check(cfg, n, seed), names))
