"""Snapshot files and scalar-series CSV.

Binary snapshot layout (little-endian):

    magic     5 bytes  b"APME1"
    n         uint32
    sizes     n x uint32
    half      n x float64   half widths L_i
    spacing   n x float64   dx_i
    m         n x float64   exponents
    time      float64
    frame     uint8         0 original, 1 rescaled
    values    prod(sizes) x float64, row-major (last axis fastest)

1-D fields may also be written as CSV text (header comment lines, then x,value
rows).
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import Field, Frame, Grid

MAGIC = b"APME1"
_FRAMES = {Frame.ORIGINAL: 0, Frame.RESCALED: 1}
SERIES_COLUMNS = ("time", "mass", "sup_norm", "dt", "cum_flux")


class SnapshotFormatError(ValueError):
    pass


@dataclass
class Snapshot:
    field: Field
    m: tuple[float, ...]


def encode_snapshot(f: Field, m) -> bytes:
    m = tuple(float(v) for v in m)
    n = f.grid.n
    if len(m) != n:
        raise ValueError("exponent count does not match the grid dimension")
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<I", n))
    out.write(struct.pack(f"<{n}I", *f.grid.sizes))
    out.write(struct.pack(f"<{n}d", *f.grid.half_widths))
    out.write(struct.pack(f"<{n}d", *f.grid.spacings))
    out.write(struct.pack(f"<{n}d", *m))
    out.write(struct.pack("<dB", f.time, _FRAMES[f.frame]))
    out.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())
    return out.getvalue()


def decode_snapshot(data: bytes) -> Snapshot:
    if data[:5] != MAGIC:
        raise SnapshotFormatError("bad magic; not an APME1 snapshot")
    pos = 5

    def take(fmt):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(data):
            raise SnapshotFormatError("truncated snapshot header")
        vals = struct.unpack_from(fmt, data, pos)
        pos += size
        return vals

    (n,) = take("<I")
    if not 1 <= n <= 3:
        raise SnapshotFormatError(f"unsupported dimension {n}")
    sizes = take(f"<{n}I")
    half = take(f"<{n}d")
    spacing = take(f"<{n}d")
    m = take(f"<{n}d")
    time, frame = take("<dB")
    if frame not in (0, 1):
        raise SnapshotFormatError(f"bad frame tag {frame}")
    grid = Grid(sizes, half)
    if not np.allclose(grid.spacings, spacing, rtol=1e-12, atol=0):
        raise SnapshotFormatError("stored spacings disagree with sizes and half widths")
    count = int(np.prod(sizes))
    if len(data) - pos != 8 * count:
        raise SnapshotFormatError(f"expected {count} values, found {(len(data) - pos) / 8:g}")
    values = np.frombuffer(data, dtype="<f8", count=count, offset=pos).astype(np.float64)
    fr = Frame.ORIGINAL if frame == 0 else Frame.RESCALED
    return Snapshot(Field(grid, values.reshape(sizes), time, fr), tuple(m))


def write_snapshot(path, f: Field, m) -> Path:
    path = Path(path)
    path.write_bytes(encode_snapshot(f, m))
    return path


def read_snapshot(path) -> Snapshot:
    path = Path(path)
    if path.suffix == ".csv":
        return read_snapshot_csv(path)
    return decode_snapshot(path.read_bytes())


def write_snapshot_csv(path, f: Field, m) -> Path:
    if f.grid.n != 1:
        raise ValueError("CSV snapshots are 1-D only")
    path = Path(path)
    lines = [
        "# APME1 csv",
        f"# sizes={f.grid.sizes[0]}",
        f"# half_width={f.grid.half_widths[0]!r}",
        f"# m={float(m[0])!r}",
        f"# time={f.time!r}",
        f"# frame={f.frame.value}",
        "x,value",
    ]
    lines += [f"{x!r},{v!r}" for x, v in zip(f.grid.coords(0).tolist(), f.values.tolist())]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_snapshot_csv(path) -> Snapshot:
    meta = {}
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            if "=" in line:
                key, val = line[1:].strip().split("=", 1)
                meta[key] = val
        elif line and not line.startswith("x,"):
            rows.append(float(line.split(",")[1]))
    try:
        grid = Grid((int(meta["sizes"]),), (float(meta["half_width"]),))
        f = Field(grid, np.asarray(rows), float(meta["time"]), Frame(meta["frame"]))
        return Snapshot(f, (float(meta["m"]),))
    except (KeyError, ValueError) as exc:
        raise SnapshotFormatError(f"malformed CSV snapshot: {exc}") from exc


def series_csv(record) -> str:
    s = record.series()
    lines = [",".join(SERIES_COLUMNS)]
    for row in zip(*(s[c].tolist() for c in SERIES_COLUMNS)):
        lines.append(",".join(repr(v) for v in row))
    return "\n".join(lines) + "\n"


def write_series(path, record) -> Path:
    path = Path(path)
    path.write_text(series_csv(record))
    return path


def read_series(path) -> dict[str, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {c: data[:, i] for i, c in enumerate(SERIES_COLUMNS)}
