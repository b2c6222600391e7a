import numpy as np
import pytest

from apme.grid import Field, Frame, Grid
from apme.params import derive_constants
from apme.snapio import (
    SnapshotFormatError,
    decode_snapshot,
    encode_snapshot,
    read_series,
    read_snapshot,
    write_series,
    write_snapshot,
    write_snapshot_csv,
)
from apme.solver import run


@pytest.mark.parametrize("n", [1, 2, 3])
def test_binary_round_trip(tmp_path, n):
    rng = np.random.default_rng(n)
    g = Grid((7, 5, 3)[:n], (1.5, 0.25, 3.0)[:n])
    f = Field(g, rng.random(g.shape), time=0.123456789, frame=Frame.RESCALED)
    m = (0.8, 1.2, 1.0)[:n]
    snap = read_snapshot(write_snapshot(tmp_path / "a.apme", f, m))
    assert snap.m == m
    assert snap.field.grid == g
    assert snap.field.time == f.time and snap.field.frame is Frame.RESCALED
    assert np.array_equal(snap.field.values, f.values)


def test_encoding_is_deterministic():
    g = Grid((4,), (1.0,))
    f = Field(g, np.arange(4.0))
    assert encode_snapshot(f, [1.0]) == encode_snapshot(f.copy(), [1.0])
    assert encode_snapshot(f, [1.0])[:5] == b"APME1"


def test_format_errors():
    data = encode_snapshot(Field(Grid((4,), (1.0,)), np.ones(4)), [1.0])
    with pytest.raises(SnapshotFormatError):
        decode_snapshot(b"XXXXX" + data[5:])
    with pytest.raises(SnapshotFormatError):
        decode_snapshot(data[:-8])
    with pytest.raises(SnapshotFormatError):
        decode_snapshot(data[:12])
    with pytest.raises(ValueError):
        encode_snapshot(Field(Grid((4,), (1.0,)), np.ones(4)), [1.0, 2.0])


def test_csv_round_trip(tmp_path):
    g = Grid((9,), (2.0,))
    f = Field(g, np.linspace(0, 1, 9) ** 2, time=0.75)
    snap = read_snapshot(write_snapshot_csv(tmp_path / "a.csv", f, [0.6]))
    assert snap.m == (0.6,)
    assert np.array_equal(snap.field.values, f.values)
    assert snap.field.time == 0.75
    with pytest.raises(ValueError):
        write_snapshot_csv(tmp_path / "b.csv", Field(Grid((3, 3), (1.0, 1.0)), np.ones((3, 3))), [1, 1])
    (tmp_path / "c.csv").write_text("x,value\n0,1\n")
    with pytest.raises(SnapshotFormatError):
        read_snapshot(tmp_path / "c.csv")


def test_series_round_trip(tmp_path):
    g = Grid((21,), (2.0,))
    rec = run(Field(g, np.exp(-g.coords(0) ** 2)), derive_constants([1.0]), 0.05)
    s = read_series(write_series(tmp_path / "s.csv", rec))
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "time,mass,sup_norm,dt,cum_flux"
    ref = rec.series()
    for key, col in s.items():
        assert np.array_equal(col, ref[key])
