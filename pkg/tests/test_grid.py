import numpy as np
import pytest

from apme.grid import Field, Frame, Grid, l1_distance, mass, sup_norm


def test_coordinates_and_spacing():
    g = Grid((5, 3), (2.0, 1.0))
    assert g.spacings == (1.0, 1.0)
    assert g.coords(0).tolist() == [-2.0, -1.0, 0.0, 1.0, 2.0]
    assert g.points().shape == (5, 3, 2)
    assert g.cell_volume == 1.0


def test_from_spacing():
    g = Grid.from_spacing([10.0], 0.01)
    assert g.sizes == (2001,)
    assert g.spacings[0] == pytest.approx(0.01)


@pytest.mark.parametrize("sizes, half", [((1,), (1.0,)), ((3, 3), (1.0,)), ((3,), (0.0,)), ((3,) * 4, (1.0,) * 4)])
def test_grid_validation(sizes, half):
    with pytest.raises(ValueError):
        Grid(sizes, half)


def test_unit_constant_mass_counts_full_end_cells():
    # 101 nodes on [0, 1] (shifted box [-0.5, 0.5]); each node carries a full cell
    g = Grid((101,), (0.5,))
    f = Field(g, np.ones(101))
    assert mass(f) == pytest.approx(1.01)


def test_mass_is_linear_and_sup():
    g = Grid((11, 7), (1.0, 2.0))
    rng = np.random.default_rng(0)
    v = rng.random(g.shape)
    f = Field(g, v)
    assert mass(Field(g, 3.5 * v)) == pytest.approx(3.5 * mass(f))
    assert sup_norm(f) == v.max()
    assert l1_distance(f, f) == 0.0


def test_field_checks():
    g = Grid((4,), (1.0,))
    with pytest.raises(ValueError):
        Field(g, np.zeros(4), time=-1.0)
    with pytest.raises(ValueError):
        Field(g, -np.ones(4)).check_nonnegative()
    f = Field(g, np.arange(4.0), frame="rescaled")
    assert f.frame is Frame.RESCALED
    c = f.copy(time=2.0)
    c.values[0] = 9.0
    assert f.values[0] == 0.0 and c.time == 2.0


def test_l1_distance_needs_same_grid():
    with pytest.raises(ValueError):
        l1_distance(Field(Grid((4,), (1.0,)), np.zeros(4)), Field(Grid((5,), (1.0,)), np.zeros(5)))
