import numpy as np
import pytest

from apme.grid import Field, Frame, Grid, l1_distance, mass
from apme.initial import bump, gaussian
from apme.params import derive_constants
from apme.solver import (
    EPS,
    StabilityError,
    advance,
    flux_function,
    run,
    run_ensemble,
    stable_dt,
    step_original,
    step_rescaled,
)

from oracles import barenblatt, heat_kernel

HEAT = derive_constants([1.0])


def field1d(values, half=1.0, **kw):
    return Field(Grid((len(values),), (half,)), np.asarray(values, float), **kw)


def test_stable_dt_heat():
    f = field1d(np.random.default_rng(0).random(101))
    dx = f.grid.spacings[0]
    assert stable_dt(f, HEAT) == pytest.approx(0.9 * dx**2 / 2)


def test_stable_dt_m2():
    values = np.zeros(51)
    values[10] = 4.0
    f = field1d(values)
    dx = f.grid.spacings[0]
    assert stable_dt(f, derive_constants([2.0])) == pytest.approx(0.9 * dx**2 / 16)


def test_stable_dt_quarters_when_spacing_halves():
    g1, g2 = Grid((101,), (1.0,)), Grid((201,), (1.0,))
    e = derive_constants([1.5])
    dt1 = stable_dt(Field(g1, gaussian(g1, 2.0, 0.2)), e)
    dt2 = stable_dt(Field(g2, gaussian(g2, 2.0, 0.2)), e)
    assert dt2 == pytest.approx(dt1 / 4, rel=1e-12)


def test_stable_dt_zero_field_is_finite():
    for m in ([1.0], [2.0], [0.5], [0.8, 1.2]):
        g = Grid((11,) * len(m), (1.0,) * len(m))
        dt = stable_dt(Field(g, np.zeros(g.shape)), derive_constants(m))
        assert np.isfinite(dt) and dt > 0


def test_stable_dt_isotropic_matches_single_constant_rule():
    g = Grid((41, 41), (2.0, 2.0))
    f = Field(g, gaussian(g, 3.0, 0.5))
    e = derive_constants([1.3, 1.3])
    dx = g.spacings[0]
    L = 1.3 * 3.0**0.3
    assert stable_dt(f, e) == pytest.approx(0.9 * dx**2 / (2 * 2 * L))


def test_stable_dt_rescaled_adds_drift_bound():
    g = Grid((81,), (4.0,))
    u = gaussian(g, 1.0, 0.5)
    orig = stable_dt(Field(g, u), HEAT)
    resc = stable_dt(Field(g, u, frame=Frame.RESCALED), HEAT)
    dx = g.spacings[0]
    assert resc < orig
    assert resc * HEAT.alpha[0] * 4.0 <= 0.9 * dx


def test_flux_function_regularization():
    s = np.array([0.0, 1e-9, 0.5 * EPS, EPS, 2 * EPS, 0.3, 4.0])
    m = 0.6
    p = flux_function(s, m)
    assert p[0] == 0.0
    assert np.all(np.diff(p) > 0)
    above = s >= EPS
    assert np.allclose(p[above] - p[above][0], s[above] ** m - EPS**m)
    slopes = np.diff(p) / np.diff(s)
    assert slopes.max() <= m * EPS ** (m - 1) * (1 + 1e-9)
    assert flux_function(s, 1.0) is s
    assert np.array_equal(flux_function(s, 2.0), s**2)


def test_constant_interior_unchanged():
    g = Grid((41, 31), (2.0, 1.5))
    v = np.full(g.shape, 0.7)
    f = Field(g, v)
    out = step_original(f, derive_constants([0.8, 1.2]), stable_dt(f, derive_constants([0.8, 1.2])))
    assert np.array_equal(out.values[1:-1, 1:-1], v[1:-1, 1:-1])
    assert np.all(out.values[0] < 0.7)


def test_zero_stays_zero():
    g = Grid((21, 21), (1.0, 1.0))
    for frame in Frame:
        rec = run(Field(g, np.zeros(g.shape), frame=frame), derive_constants([0.8, 1.2]), 0.1, [0.05, 0.1])
        assert all(not s.values.any() for s in rec.snapshots)
        assert max(rec.flux) == 0.0 and rec.clipped == 0


def test_step_errors():
    f = field1d(gaussian(Grid((51,), (1.0,)), 1.0, 0.3))
    dt = stable_dt(f, HEAT)
    with pytest.raises(StabilityError):
        advance(f, HEAT, 1.01 * dt)
    with pytest.raises(ValueError):
        advance(field1d([0.0, -1.0, 0.0]), HEAT, 1e-6)
    with pytest.raises(ValueError):
        step_rescaled(f, HEAT, dt)
    with pytest.raises(ValueError):
        step_original(f.copy(frame=Frame.RESCALED), HEAT, dt)


def test_run_schedule_errors():
    f = field1d(np.ones(11))
    with pytest.raises(ValueError):
        run(f, HEAT, 0.0)
    with pytest.raises(ValueError):
        run(f.copy(time=1.0), HEAT, 2.0, [0.5, 2.0])
    with pytest.raises(ValueError):
        run(f, HEAT, 1.0, [0.5, 0.2])
    with pytest.raises(ValueError):
        run(f, HEAT, 1.0, [2.0])


def test_snapshots_land_exactly_and_match_series():
    g = Grid.from_spacing([5.0], 0.05)
    times = [0.0, 0.013, 0.1, 0.25]
    rec = run(Field(g, gaussian(g, 1.0, 0.5)), HEAT, 0.3, times)
    assert rec.snapshot_times == times
    assert rec.time[-1] == 0.3
    assert np.all(np.diff(rec.time) > 0)
    for snap in rec.snapshots:
        k = rec.time.index(snap.time)
        assert mass(snap) == pytest.approx(rec.mass[k], rel=1e-12)


def test_run_is_deterministic():
    g = Grid((48, 40), (6.0, 4.0))
    u0 = Field(g, gaussian(g, 1.0, [0.6, 0.4]))
    e = derive_constants([0.8, 1.2])
    a = run(u0, e, 0.3, [0.1, 0.3])
    b = run(u0, e, 0.3, [0.1, 0.3])
    assert a.time == b.time and a.mass == b.mass and a.cum_flux == b.cum_flux
    assert all(np.array_equal(x.values, y.values) for x, y in zip(a.snapshots, b.snapshots))


@pytest.mark.parametrize("m", [(1.0,), (0.6,), (2.0,), (0.8, 1.2), (0.5, 1.0, 1.5)])
@pytest.mark.parametrize("frame", list(Frame))
def test_conservation_identity(m, frame):
    n = len(m)
    g = Grid((64, 24, 12)[:n], (3.0, 2.0, 1.0)[:n])
    # data touching the boundary so there is real outflow
    u0 = Field(g, gaussian(g, 1.0, [1.5, 1.0, 0.5][:n]), frame=frame)
    rec = run(u0, derive_constants(m), 0.05)
    assert rec.clipped == 0
    assert np.max(rec.step_defects()) <= 1e-10 * rec.mass[0]
    s = rec.series()
    assert abs(s["mass"][-1] - s["mass"][0] + s["cum_flux"][-1]) <= 1e-10 * s["mass"][0]
    if frame is Frame.ORIGINAL:
        assert s["cum_flux"][-1] > 0


@pytest.mark.parametrize("m", [(1.0,), (0.6,), (2.0,), (0.8, 1.2), (0.5, 1.0, 1.5)])
@pytest.mark.parametrize("frame", list(Frame))
def test_single_step_is_monotone(m, frame):
    rng = np.random.default_rng(len(m))
    n = len(m)
    g = Grid((30, 20, 10)[:n], (2.0, 1.5, 1.0)[:n])
    e = derive_constants(m)
    for _ in range(10):
        u = rng.random(g.shape) ** 4 * rng.choice([1e-9, 1e-3, 1.0])
        v = u + rng.random(g.shape) * (rng.random(g.shape) < 0.3)
        fu, fv = Field(g, u, frame=frame), Field(g, v, frame=frame)
        dt = min(stable_dt(fu, e), stable_dt(fv, e))
        su, sv = advance(fu, e, dt), advance(fv, e, dt)
        assert np.all(su.field.values <= sv.field.values + 1e-12 * sv.field.values.max())
        assert su.clipped == 0 and su.field.values.min() >= 0


def test_fast_diffusion_keeps_tiny_values_nonnegative():
    g = Grid((51,), (5.0,))
    u0 = Field(g, np.where(np.abs(g.coords(0)) < 0.5, 1.0, 0.0))
    rec = run(u0, derive_constants([0.3]), 0.05, [0.05])
    assert rec.snapshots[-1].values[0] > 0  # infinite speed of propagation
    assert rec.clipped == 0
    assert rec.snapshots[-1].values.min() >= 0


def test_heat_kernel_coarse():
    g = Grid.from_spacing([10.0], 0.05)
    x = g.coords(0)
    rec = run(Field(g, heat_kernel(x, 0.0, s0=0.5)), HEAT, 1.0, [1.0])
    exact = heat_kernel(x, 1.0, s0=0.5)
    assert np.max(np.abs(rec.snapshots[-1].values - exact)) / exact.max() < 1e-3


def test_heat_second_order_in_space():
    errors = []
    for dx in (0.2, 0.1, 0.05):
        g = Grid.from_spacing([10.0], dx)
        x = g.coords(0)
        rec = run(Field(g, heat_kernel(x, 0.0, s0=0.25)), HEAT, 0.5, [0.5])
        errors.append(np.max(np.abs(rec.snapshots[-1].values - heat_kernel(x, 0.5, s0=0.25))))
    ratios = [a / b for a, b in zip(errors, errors[1:])]
    assert all(3.5 < r < 4.5 for r in ratios), ratios


def test_barenblatt_coarse():
    g = Grid.from_spacing([6.0], 0.04)
    x = g.coords(0)
    rec = run(Field(g, barenblatt(x, 1.0), time=1.0), derive_constants([2.0]), 2.0, [2.0])
    exact = barenblatt(x, 2.0)
    assert np.sum(np.abs(rec.snapshots[-1].values - exact)) / np.sum(exact) < 0.02


def test_rescaled_heat_gaussian_is_stationary():
    # V = exp(-y^2/2)/sqrt(2 pi) solves V_tau = V_yy + (y V)_y
    g = Grid.from_spacing([8.0], 0.02)
    y = g.coords(0)
    V0 = np.exp(-y**2 / 2) / np.sqrt(2 * np.pi)
    rec = run(Field(g, V0, frame=Frame.RESCALED), HEAT, 1.0, [1.0])
    assert np.max(np.abs(rec.snapshots[-1].values - V0)) < 5e-3
    assert rec.mass[-1] == pytest.approx(rec.mass[0], rel=1e-12)


def test_rescaled_drift_keeps_mass_inside():
    g = Grid((41, 41), (3.0, 3.0))
    V0 = Field(g, gaussian(g, 1.0, 0.8), frame=Frame.RESCALED)
    rec = run(V0, derive_constants([0.8, 1.2]), 0.5)
    s = rec.series()
    assert abs(s["mass"][-1] + s["cum_flux"][-1] - s["mass"][0]) < 1e-12 * s["mass"][0]


def test_ensemble_uses_common_step():
    g = Grid((101,), (5.0,))
    e = derive_constants([2.0])
    small = Field(g, gaussian(g, 0.1, 0.5))
    big = Field(g, gaussian(g, 2.0, 0.5))
    ra, rb = run_ensemble([small, big], e, 0.05, [0.05])
    assert ra.dt == rb.dt
    assert len(run(small, e, 0.05).dt) < len(ra.dt)
    with pytest.raises(ValueError):
        run_ensemble([small, Field(Grid((51,), (5.0,)), np.zeros(51))], e, 0.05)


def test_bump_interior_run_conserves_mass():
    g = Grid.from_spacing([8.0, 8.0], 0.1)
    u0 = Field(g, bump(g, 1.0, 1.0))
    rec = run(u0, derive_constants([0.8, 1.2]), 0.5)
    assert abs(rec.mass[-1] / rec.mass[0] - 1) < 5e-3
    assert l1_distance(u0, rec.snapshots[-1] if rec.snapshots else u0) >= 0
