import numpy as np
import pytest

from conslaw.errors import ConfigError
from conslaw.grid import (
    BoundaryKind,
    GridSpec,
    cell_center,
    data_axis,
    field_from_interior,
    fill_axis,
    fill_boundary,
    make_field,
    total_integral,
)


def test_axis_to_array_axis_mapping():
    # x is the fastest (last) numpy axis
    assert data_axis(1, 0) == 1
    assert data_axis(2, 0) == 2
    assert data_axis(2, 1) == 1
    assert data_axis(3, 0) == 3
    assert data_axis(3, 2) == 1


def test_grid_shapes_and_centers():
    g = GridSpec(2, (8, 4), (0.0, -1.0), (2.0, 1.0))
    assert g.deltas == (0.25, 0.25)
    assert g.interior_shape == (4, 8)  # numpy order: (ny, nx)
    assert g.padded == (12, 8)
    assert g.cell_volume == pytest.approx(0.0625)
    assert cell_center(g, (0, 0)) == pytest.approx((0.125, -0.875))
    assert cell_center(g, (7, 3)) == pytest.approx((1.875, -0.125))
    with pytest.raises(ConfigError):
        cell_center(g, (8, 0))


def test_grid_validation():
    with pytest.raises(ConfigError):
        GridSpec(2, (8,), (0.0, 0.0), (1.0, 1.0))
    with pytest.raises(ConfigError):
        GridSpec(1, (0,), (0.0,), (1.0,))
    with pytest.raises(ConfigError):
        GridSpec(1, (8,), (0.0,), (-1.0,))
    with pytest.raises(ConfigError):
        GridSpec(4, (2, 2, 2, 2), (0,) * 4, (1,) * 4)


def test_field_size_cap():
    g = GridSpec(3, (1024, 1024, 1024), (0, 0, 0), (1, 1, 1))
    with pytest.raises(ConfigError, match="cap"):
        make_field(g, 5, 0.0)


def test_periodic_fill_wraps():
    g = GridSpec(1, (8,), (0.0,), (1.0,), ghost_width=2)
    f = make_field(g, 1, 0.0)
    f.interior[0] = np.arange(8.0)
    fill_boundary(f, (BoundaryKind.PERIODIC,))
    assert list(f.data[0, :2]) == [6.0, 7.0]
    assert list(f.data[0, -2:]) == [0.0, 1.0]


def test_outflow_fill_extrapolates():
    g = GridSpec(1, (4,), (0.0,), (1.0,), ghost_width=2)
    f = make_field(g, 1, 0.0)
    f.interior[0] = [3.0, 5.0, 7.0, 9.0]
    fill_boundary(f, (BoundaryKind.OUTFLOW,))
    assert list(f.data[0]) == [3.0, 3.0, 3.0, 5.0, 7.0, 9.0, 9.0, 9.0]


def test_periodic_fill_requires_enough_cells():
    g = GridSpec(1, (1,), (0.0,), (1.0,), ghost_width=2)
    f = make_field(g, 1, 1.0)
    with pytest.raises(ConfigError):
        fill_axis(f.data, g, 0, BoundaryKind.PERIODIC)


def test_corner_ghosts_filled_transitively():
    g = GridSpec(2, (4, 4), (0.0, 0.0), (1.0, 1.0), ghost_width=2)
    f = make_field(g, 1, 0.0)
    f.interior[0] = np.arange(16.0).reshape(4, 4)
    fill_boundary(f, (BoundaryKind.PERIODIC, BoundaryKind.PERIODIC))
    # low-x low-y corner ghost equals the opposite interior corner
    assert f.data[0, 1, 1] == f.interior[0, 3, 3]
    assert f.data[0, 0, 0] == f.interior[0, 2, 2]


def test_total_integral_is_cell_sum_times_volume():
    g = GridSpec(2, (8, 4), (0.0, 0.0), (2.0, 1.0))
    f = make_field(g, 2, 0.0)
    f.interior[0] = 1.0
    f.interior[1] = 3.0
    q = total_integral(f)
    assert q == pytest.approx([2.0, 6.0])


def test_field_from_interior_copies_shape():
    g = GridSpec(1, (6,), (0.0,), (1.0,))
    vals = np.arange(6.0)[None]
    f = field_from_interior(g, vals)
    assert f.interior.shape == (1, 6)
    assert np.array_equal(f.interior[0], vals[0])


def test_deltas_override_is_exact():
    # a subdomain grid built with inherited deltas reproduces them bitwise
    g = GridSpec(1, (3,), (0.0,), (0.3,))
    sub = GridSpec(1, (1,), (0.1,), (0.1,), deltas=g.deltas)
    assert sub.deltas[0] == g.deltas[0]
