"""Experiment configuration: an INI-style ``key = value`` file with [section] headers.

Example::

    [exponents]
    m = 0.8, 1.2

    [grid]
    sizes = 256, 256
    half_widths = 24, 10

    [initial]
    generator = gaussian
    amplitude = 1
    widths = 0.5

    [run]
    t_end = 10
    snapshot_times = 1, 2, 5, 10

Required sections are exponents, grid, initial and run; everything else has a
default (see ``_SCHEMA``).  :func:`parse_config` reports every problem it finds
in one :class:`ConfigError`.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .grid import Frame, Grid
from .initial import GENERATORS
from .params import derive_constants


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("invalid config:\n  " + "\n  ".join(errors))
        self.errors = errors


def _floats(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.replace(";", ",").split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return tuple(float(p) for p in parts)


def _ints(text: str) -> tuple[int, ...]:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise ValueError("expected integers")
    return tuple(int(v) for v in vals)


def _names(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "yes", "true", "on"):
        return True
    if low in ("0", "no", "false", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_PARSERS = {"float": float, "int": int, "floats": _floats, "ints": _ints, "str": str.strip,
            "names": _names, "bool": _bool}

# section -> key -> (type, default); a default of ... marks a required key
_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "exponents": {"m": ("floats", ...), "n": ("int", None)},
    "grid": {"sizes": ("ints", ...), "half_widths": ("floats", ...)},
    "initial": {
        "generator": ("str", ...),
        "amplitude": ("float", None),
        "widths": ("floats", None),
        "radii": ("floats", None),
        "center": ("floats", None),
        "power": ("float", None),
        "radius": ("float", None),
        "path": ("str", None),
    },
    "run": {
        "t_end": ("float", ...),
        "snapshot_times": ("floats", None),
        "frame": ("str", "original"),
        "eps": ("float", 1e-6),
        "safety": ("float", 0.9),
    },
    "barrier": {"C0": ("float", None), "A": ("float", None), "T": ("float", None),
                "grouping": ("str", "outside"), "samples": ("int", 10000)},
    "checks": {
        "names": ("names", ()),
        "mass_tol": ("float", 0.005),
        "decay_window": ("floats", (1.0, 10.0)),
        "decay_rel_tol": ("float", 0.1),
        "comparison_pairs": ("int", 4),
        "dominance_tol": ("float", 1e-3),
        "equivalence_taus": ("floats", (0.2, 0.5, 1.0)),
        "equivalence_tol": ("float", 0.02),
        "rescaled_sizes": ("ints", None),
        "rescaled_half_widths": ("floats", None),
        "envelope_tau": ("float", 3.0),
        "envelope_tol": ("float", 1e-3),
        "envelope_C1": ("float", None),
        "k_list": ("floats", (1.0, 2.0, 4.0, 8.0, 16.0, 64.0)),
        "monotone_tol": ("float", 0.01),
    },
    "sweep": {"scalings": ("floats", (0.25, 0.5, 1.0, 2.0, 4.0)), "t_star": ("float", 1.0)},
    "output": {"dir": ("str", "out"), "seed": ("int", 0)},
}

REQUIRED_SECTIONS = ("exponents", "grid", "initial", "run")
CHECK_NAMES = ("mass", "decay", "probe", "comparison", "dominance", "equivalence", "envelope",
               "monotone", "certificate")
_POSITIVE = {("checks", k) for k in ("mass_tol", "decay_rel_tol", "dominance_tol", "equivalence_tol",
                                     "envelope_tau", "envelope_tol", "monotone_tol")}
_POSITIVE |= {("run", "t_end"), ("run", "eps"), ("run", "safety"), ("sweep", "t_star")}
_GENERATOR_KEYS = {
    "gaussian": {"amplitude", "widths", "center"},
    "bump": {"amplitude", "radii", "center"},
    "truncated_spike": {"amplitude", "power", "radius", "center"},
    "from_snapshot": {"path"},
}


@dataclass
class ExperimentConfig:
    sections: dict[str, dict[str, object]] = field(default_factory=dict)

    def get(self, section: str, key: str):
        return self.sections[section][key]

    @property
    def m(self) -> tuple[float, ...]:
        return self.get("exponents", "m")

    @property
    def exponents(self):
        return derive_constants(self.m)

    @property
    def grid(self) -> Grid:
        return Grid(self.get("grid", "sizes"), self.get("grid", "half_widths"))

    @property
    def frame(self) -> Frame:
        return Frame(self.get("run", "frame"))

    @property
    def seed(self) -> int:
        return self.get("output", "seed")

    def generator_params(self) -> dict:
        init = self.sections["initial"]
        keys = _GENERATOR_KEYS[init["generator"]]
        out = {}
        for k in sorted(keys):
            v = init[k]
            if v is None:
                continue
            if k in ("widths", "radii", "center") and len(v) == 1:
                v = v[0]
            out[k] = v
        return out

    @property
    def checks(self) -> tuple[str, ...]:
        return self.get("checks", "names")


def _format_value(kind: str, value) -> str:
    if kind in ("floats", "ints"):
        return ", ".join(repr(v) for v in value)
    if kind == "names":
        return ", ".join(value)
    if kind == "bool":
        return "true" if value else "false"
    return repr(value) if kind == "float" else str(value)


def parse_config(text: str, base_dir=None) -> ExperimentConfig:
    """Parse and validate; raise ConfigError listing every problem found."""
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",),
                                       comment_prefixes=("#", ";"), inline_comment_prefixes=("#",))
    parser.optionxform = str
    errors: list[str] = []
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from exc

    for sec in parser.sections():
        if sec not in _SCHEMA:
            errors.append(f"[{sec}]: unknown section")
    for sec in REQUIRED_SECTIONS:
        if not parser.has_section(sec):
            errors.append(f"[{sec}]: missing required section")

    sections: dict[str, dict[str, object]] = {}
    for sec, keys in _SCHEMA.items():
        values: dict[str, object] = {}
        raw = parser[sec] if parser.has_section(sec) else {}
        for key in raw:
            if key not in keys:
                errors.append(f"[{sec}] {key}: unknown key")
        for key, (kind, default) in keys.items():
            if key in raw:
                try:
                    values[key] = _PARSERS[kind](raw[key])
                except ValueError as exc:
                    errors.append(f"[{sec}] {key}: expected {kind}, got {raw[key]!r} ({exc})")
                    values[key] = None
            elif default is ...:
                if parser.has_section(sec):
                    errors.append(f"[{sec}] {key}: missing required key")
                values[key] = None
            else:
                values[key] = default
        sections[sec] = values

    cfg = ExperimentConfig(sections)
    errors += _validate(cfg, base_dir)
    if errors:
        raise ConfigError(errors)
    return cfg


def _validate(cfg: ExperimentConfig, base_dir) -> list[str]:
    errors = []
    s = cfg.sections
    for sec, key in sorted(_POSITIVE):
        v = s[sec][key]
        if v is not None and not v > 0:
            errors.append(f"[{sec}] {key}: must be positive, got {v}")

    m, n = s["exponents"]["m"], s["exponents"]["n"]
    if m is not None:
        if n is not None and len(m) != n:
            errors.append(f"[exponents] m: {len(m)} values but n = {n}")
        try:
            derive_constants(m, n if n is not None else None)
        except ValueError as exc:
            if n is None or len(m) == n:
                errors.append(f"[exponents] m: {exc}")
    sizes, half = s["grid"]["sizes"], s["grid"]["half_widths"]
    dim = len(m) if m is not None else None
    grid = None
    if sizes is not None and half is not None:
        if dim is not None and (len(sizes) != dim or len(half) != dim):
            errors.append(f"[grid] sizes/half_widths: need {dim} values each to match m")
        else:
            try:
                grid = Grid(sizes, half)
            except ValueError as exc:
                errors.append(f"[grid]: {exc}")

    frame = s["run"]["frame"]
    if frame not in ("original", "rescaled"):
        errors.append(f"[run] frame: expected original or rescaled, got {frame!r}")
    times, t_end = s["run"]["snapshot_times"], s["run"]["t_end"]
    if times is not None:
        if any(b <= a for a, b in zip(times, times[1:])):
            errors.append("[run] snapshot_times: must be strictly increasing")
        if t_end is not None and (times[0] < 0 or times[-1] > t_end):
            errors.append("[run] snapshot_times: must lie in [0, t_end]")

    errors += _validate_initial(s["initial"], grid, base_dir)

    names = s["checks"]["names"] or ()
    for name in names:
        if name not in CHECK_NAMES:
            errors.append(f"[checks] names: unknown check {name!r}")
    window = s["checks"]["decay_window"]
    if window is not None and (len(window) != 2 or not 0 < window[0] < window[1]):
        errors.append(f"[checks] decay_window: need 0 < t_lo < t_hi, got {window}")
    k_list = s["checks"]["k_list"]
    if k_list is not None and (len(k_list) < 3 or any(b <= a for a, b in zip(k_list, k_list[1:]))):
        errors.append("[checks] k_list: need at least 3 increasing values")
    rs, rh = s["checks"]["rescaled_sizes"], s["checks"]["rescaled_half_widths"]
    if (rs is None) != (rh is None):
        errors.append("[checks] rescaled_sizes and rescaled_half_widths must be given together")
    elif rs is not None and dim is not None and (len(rs) != dim or len(rh) != dim):
        errors.append(f"[checks] rescaled grid: need {dim} values each")
    scal = s["sweep"]["scalings"]
    if scal is not None and (len(scal) < 4 or min(scal) <= 0 or max(scal) / min(scal) < 10):
        errors.append("[sweep] scalings: need at least 4 positive values spanning a decade")
    if s["barrier"]["grouping"] not in ("outside", "inside"):
        errors.append("[barrier] grouping: expected outside or inside")
    for key in ("C0", "A", "T"):
        v = s["barrier"][key]
        if v is not None and not v > 0:
            errors.append(f"[barrier] {key}: must be positive, got {v}")
    return errors


def _validate_initial(init: dict, grid: Grid | None, base_dir) -> list[str]:
    errors = []
    gen = init["generator"]
    if gen is None:
        return errors
    if gen not in GENERATORS:
        return [f"[initial] generator: unknown generator {gen!r}; expected one of {', '.join(GENERATORS)}"]
    allowed = _GENERATOR_KEYS[gen]
    for key, value in init.items():
        if key != "generator" and value is not None and key not in allowed:
            errors.append(f"[initial] {key}: not a parameter of {gen}")
    if gen == "from_snapshot":
        path = init["path"]
        if path is None:
            errors.append("[initial] path: required for from_snapshot")
        else:
            full = Path(base_dir or ".") / path
            if not full.exists():
                errors.append(f"[initial] path: file {full} does not exist")
            else:
                init["path"] = str(full)
        return errors
    for key in ("widths", "radii"):
        v = init[key]
        if v is not None:
            if any(x <= 0 for x in v):
                errors.append(f"[initial] {key}: must be positive")
            if grid is not None and len(v) not in (1, grid.n):
                errors.append(f"[initial] {key}: need 1 or {grid.n} values")
    for key in ("amplitude", "radius"):
        v = init[key]
        if v is not None and not v > 0:
            errors.append(f"[initial] {key}: must be positive")
    center = init["center"]
    if center is not None and grid is not None:
        if len(center) not in (1, grid.n):
            errors.append(f"[initial] center: need 1 or {grid.n} values")
        elif any(abs(c) > L for c, L in zip(center if len(center) > 1 else center * grid.n, grid.half_widths)):
            errors.append("[initial] center: outside the grid box")
    power = init["power"]
    if power is not None and grid is not None and not 0 <= power < grid.n:
        errors.append(f"[initial] power: must lie in [0, {grid.n})")
    return errors


def serialize(cfg: ExperimentConfig) -> str:
    """Canonical text form; parse_config(serialize(cfg)) == cfg."""
    out = []
    for sec, keys in _SCHEMA.items():
        lines = []
        for key, (kind, _default) in keys.items():
            value = cfg.sections[sec][key]
            if value is None or (kind == "names" and not value):
                continue
            lines.append(f"{key} = {_format_value(kind, value)}")
        if lines:
            out.append(f"[{sec}]")
            out += lines
            out.append("")
    return "\n".join(out)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)


__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "serialize", "load_config", "CHECK_NAMES"]

