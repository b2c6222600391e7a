"""Command-line front end.

    apme params   --m 0.8,1.2
    apme barrier  --m 0.8,1.2 --C0 2 --A 100 --T 1
    apme transform --input snap.apme --output pushed.apme [--direction push|pull]
    apme solve    --config exp.ini --out DIR
    apme verify   CHECK --config exp.ini --out DIR
    apme sweep    --config exp.ini --out DIR

Exit codes: 0 success / all checks pass, 1 a check failed, 2 usage or config
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import barrier as bar
from . import experiments, params, snapio
from .config import CHECK_NAMES, ConfigError, load_config
from .grid import Frame, Grid
from .transform import CoverageError, ScalingMap, pull_field, push_field

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment config file")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--threads", type=int, default=1, help="worker threads for independent runs")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="apme", description="Anisotropic porous medium laboratory.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("params", parents=[common], help="derived constants and admissibility")
    sp.add_argument("--m", type=_floats, help="exponents, e.g. 0.8,1.2")

    sb = sub.add_parser("barrier", parents=[common], help="barrier parameters and residual certificate")
    sb.add_argument("--m", type=_floats)
    sb.add_argument("--C0", type=float)
    sb.add_argument("--A", type=float)
    sb.add_argument("--T", type=float)
    sb.add_argument("--grouping", choices=("outside", "inside"), default=None)
    sb.add_argument("--samples", type=int, default=None)

    st = sub.add_parser("transform", parents=[common], help="map a snapshot between frames")
    st.add_argument("--input", type=Path, required=True)
    st.add_argument("--output", type=Path, required=True)
    st.add_argument("--direction", choices=("push", "pull"), default=None,
                    help="default: push for original-frame input, pull otherwise")
    st.add_argument("--sizes", type=_ints, help="target grid sizes (default: input grid)")
    st.add_argument("--half-widths", type=_floats, help="target half widths (default: input grid)")

    sub.add_parser("solve", parents=[common], help="integrate the configured experiment")

    sv = sub.add_parser("verify", parents=[common], help="run one check")
    sv.add_argument("check", choices=CHECK_NAMES)

    sub.add_parser("sweep", parents=[common], help="mass-scaling sweep (mass exponent probe)")
    return p


def _config(args):
    if args.config is None:
        raise UsageError("--config is required for this command")
    return load_config(args.config)


def _out_dir(args, cfg=None) -> Path | None:
    out = args.out
    if out is None and cfg is not None:
        out = Path(cfg.get("output", "dir"))
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(text: str, out: Path | None, name: str):
    sys.stdout.write(text)
    if out is not None:
        (out / name).write_text(text)


def cmd_params(args) -> int:
    m = args.m if args.m is not None else (_config(args).m if args.config else None)
    if m is None:
        raise UsageError("give --m or --config")
    e = params.derive_constants(m)
    verdict = params.check_admissible(e)
    _emit(params.format_report(e, verdict), _out_dir(args), "params.txt")
    return EXIT_OK if verdict.admissible else EXIT_FAIL


def cmd_barrier(args) -> int:
    cfg = _config(args) if args.config else None
    seed = args.seed if args.seed is not None else (cfg.seed if cfg else 0)
    if cfg is not None:
        u0 = experiments.initial_field(cfg, frame=Frame.ORIGINAL)
        spec = experiments.barrier_spec(cfg, u0)
        samples = cfg.get("barrier", "samples")
    else:
        if args.m is None or None in (args.C0, args.A, args.T):
            raise UsageError("give --config, or --m with --C0, --A and --T")
        e = params.require_admissible(params.derive_constants(args.m))
        spec = bar.build_barrier(e, args.C0, args.A, args.T, grouping=args.grouping or "outside")
        samples = 10_000
    if args.samples is not None:
        samples = args.samples
    cert = bar.residual_certificate(spec, samples, seed)
    cert_unit = bar.residual_certificate(spec, samples, seed, lam=1.0)
    text = bar.format_report(spec, cert)
    text += f"residual_lambda_1_max_residual: {cert_unit['max_residual']}\n"
    text += f"residual_lambda_1_certificate: {'pass' if cert_unit['nonpositive'] else 'fail'}\n"
    _emit(text, _out_dir(args, cfg), "barrier.txt")
    return EXIT_OK if cert["nonpositive"] and cert_unit["nonpositive"] else EXIT_FAIL


def cmd_transform(args) -> int:
    snap = snapio.read_snapshot(args.input)
    f = snap.field
    e = params.derive_constants(snap.m)
    smap = ScalingMap(params.require_admissible(e))
    if (args.sizes is None) != (args.half_widths is None):
        raise UsageError("--sizes and --half-widths go together")
    target = Grid(args.sizes, args.half_widths) if args.sizes else f.grid
    direction = args.direction or ("push" if f.frame == Frame.ORIGINAL else "pull")
    out = push_field(smap, f, target) if direction == "push" else pull_field(smap, f, target)
    if args.output.suffix == ".csv":
        snapio.write_snapshot_csv(args.output, out, snap.m)
    else:
        snapio.write_snapshot(args.output, out, snap.m)
    sys.stdout.write(f"direction: {direction}\ntime: {out.time!r}\nframe: {out.frame.value}\n"
                     f"output: {args.output}\n")
    return EXIT_OK


def _write_run(out: Path, record, m, prefix: str = ""):
    snapio.write_series(out / f"{prefix}series.csv", record)
    snap_dir = out / f"{prefix}snapshots"
    snap_dir.mkdir(exist_ok=True)
    paths = []
    for k, f in enumerate(record.snapshots):
        paths.append(snapio.write_snapshot(snap_dir / f"snap_{k:04d}.apme", f, m))
        if f.grid.n == 1:
            snapio.write_snapshot_csv(snap_dir / f"snap_{k:04d}.csv", f, m)
    return paths


def cmd_solve(args) -> int:
    cfg = _config(args)
    out = _out_dir(args, cfg)
    rec = experiments.solve(cfg)
    _write_run(out, rec, cfg.m)
    lines = [f"steps: {rec.steps}", f"t_end: {rec.time[-1]!r}", f"mass_initial: {rec.mass[0]!r}",
             f"mass_final: {rec.mass[-1]!r}", f"sup_norm_final: {rec.sup_norm[-1]!r}",
             f"cum_flux: {rec.cum_flux[-1]!r}", f"clipped: {rec.clipped}",
             f"snapshots: {len(rec.snapshots)}"]
    text = "\n".join(lines) + "\n"
    _emit(text, out, "solve.txt")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config(args)
    out = _out_dir(args, cfg)
    rep, rec = experiments.run_check(cfg, args.check, args.seed, workers=args.threads)
    if rec is not None:
        snapio.write_series(out / f"{args.check}_series.csv", rec)
        rep.artifacts.append(f"{args.check}_series.csv")
    _emit(rep.format(), out, f"{args.check}.txt")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_sweep(args) -> int:
    cfg = _config(args)
    out = _out_dir(args, cfg)
    rep, _ = experiments.run_check(cfg, "probe", args.seed, workers=args.threads)
    _emit(rep.format(), out, "probe.txt")
    return EXIT_OK


COMMANDS = {"params": cmd_params, "barrier": cmd_barrier, "transform": cmd_transform,
            "solve": cmd_solve, "verify": cmd_verify, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        sys.stderr.write("error: --threads must be at least 1\n")
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except (OSError, snapio.SnapshotFormatError) as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    except (ConfigError, UsageError, params.AdmissibilityError, CoverageError, ValueError) as exc:
        # ValueError: precondition failures such as an envelope level below the data
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
