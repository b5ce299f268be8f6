"""Grid geometry, cube sets, the sampled flow map, and index pairs."""

import numpy as np
import pytest

from filflow.cubical import (CubicalGrid, CubicalSet, build_outer_map,
                             check_isolating, index_pair, invariant_part)
from filflow.errors import PairConstructionFailed
from filflow.polynomial import Polynomial
from filflow.system import Box, PiecewiseSystem, SmoothField


def make_system(fx, fy, h=None, lo=(-2.0, -2.0), hi=(2.0, 2.0)):
    """Planar helper; the switching surface is pushed out of the way unless
    a custom h is supplied, so the motion is single-field."""
    n = 2
    if h is None:
        h = Polynomial.variable(n, 1) - Polynomial.constant(n, 100)
    return PiecewiseSystem(SmoothField([fx, fy]), SmoothField([fx, fy]), h,
                           Box(lo, hi), name="plain")


def linear_attractor():
    x1 = Polynomial.variable(2, 0)
    x2 = Polynomial.variable(2, 1)
    return make_system(-1 * x1, -1 * x2)


def translation():
    one = Polynomial.constant(2, 1)
    zero = Polynomial.zero(2)
    return make_system(one, zero)


# ---------------------------------------------------------------------------
# grid arithmetic


def test_point_cube_round_trip():
    grid = CubicalGrid(Box((-2.0, -2.0), (2.0, 2.0)), 16)
    rng = np.random.default_rng(2)
    for _ in range(50):
        p = rng.uniform(-1.999, 1.999, size=2)
        c = grid.cube_of_point(p)
        lo, hi = grid.cube_bounds(c)
        assert np.all(lo <= p) and np.all(p <= hi)
    assert grid.cube_of_point((5.0, 0.0)) is None


def test_ids_and_coords_invert():
    grid = CubicalGrid(Box((0.0, 0.0), (1.0, 1.0)), 8)
    for coords in ((0, 0), (7, 7), (3, 5)):
        assert grid.coords_of(grid.id_of(coords)) == coords


def test_set_algebra_and_dilation():
    grid = CubicalGrid(Box((0.0, 0.0), (1.0, 1.0)), 8)
    a = CubicalSet.from_coords(grid, [(3, 3)])
    b = a.dilate(1)
    assert len(b) == 9            # full 3x3 block around the seed
    assert a.ids <= b.ids
    edge = CubicalSet.from_coords(grid, [(0, 0)])
    assert len(edge.dilate(1)) == 4   # clipped at the grid corner
    assert len(b.difference(a.ids)) == 8
    assert b.intersection(a.ids) == a


def test_from_box_covers_overlaps():
    grid = CubicalGrid(Box((0.0, 0.0), (1.0, 1.0)), 4)
    sub = CubicalSet.from_box(grid, Box((0.3, 0.3), (0.6, 0.6)))
    # 0.3..0.6 straddles cube boundaries at 0.25 and 0.5 on each axis
    assert {c for c in sub.coords()} == {(1, 1), (1, 2), (2, 1), (2, 2)}


def test_boundary_collar():
    grid = CubicalGrid(Box((0.0, 0.0), (1.0, 1.0)), 8)
    blk = CubicalSet.from_coords(grid,
                                 [(i, j) for i in range(2, 6)
                                  for j in range(2, 6)])
    collar = blk.boundary_collar()
    assert len(collar) == 12      # 4x4 block minus its 2x2 core
    assert all(c in blk for c in collar.ids)


def test_write_csv(tmp_path):
    grid = CubicalGrid(Box((0.0, 0.0), (1.0, 1.0)), 4)
    s = CubicalSet.from_coords(grid, [(2, 1), (0, 3)])
    path = tmp_path / "cubes.csv"
    s.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "i1,i2"
    assert lines[1:] == ["0,3", "2,1"]


# ---------------------------------------------------------------------------
# sampled flow map on single-field systems


def test_attractor_maps_inward():
    sysm = linear_attractor()
    grid = CubicalGrid(sysm.domain, 16)
    N = CubicalSet.from_box(grid, Box((-1.0, -1.0), (1.0, 1.0)))
    F = build_outer_map(sysm, grid, N, tau=1.0)
    # e^-1-contraction pulls every cube strictly toward the middle
    assert all(F.images[c] <= N.ids for c in N.ids)
    assert not any(F.exits_grid(c) for c in N.ids)
    inv = invariant_part(F, N)
    assert len(inv) > 0
    assert check_isolating(F, N, inv)
    P1, P0 = index_pair(F, N)
    assert len(P0) == 0           # nothing flows out of a trapping block
    assert P1 == N


def test_translation_flows_through():
    # tau moves everything 4 cubes right: well past the 1-cube bloat, so
    # the drift has no combinatorial recurrence at all
    sysm = translation()
    grid = CubicalGrid(sysm.domain, 16)
    N = CubicalSet.full(grid)
    F = build_outer_map(sysm, grid, N, tau=1.0)
    right_edge = [c for c in N.ids
                  if grid.coords_of(c)[0] == 15]
    assert all(F.exits_grid(c) for c in right_edge)
    inv = invariant_part(F, N)
    assert len(inv) == 0
    P1, P0 = index_pair(F, N)
    assert len(P0) > 0
    assert P0.ids <= P1.ids <= N.ids


def test_pair_construction_fails_when_exits_flood_the_core():
    # with tau far below the cube-crossing time every image is just the
    # bloated start cube: the whole block looks invariant, the boundary
    # pokes out, and the exit closure floods inward onto it
    sysm = linear_attractor()
    grid = CubicalGrid(sysm.domain, 16)
    N = CubicalSet.from_box(grid, Box((-1.0, -1.0), (1.0, 1.0)))
    F = build_outer_map(sysm, grid, N, tau=0.01)
    with pytest.raises(PairConstructionFailed):
        index_pair(F, N)


def test_flow_cache_is_reused():
    sysm = linear_attractor()
    grid = CubicalGrid(sysm.domain, 8)
    N = CubicalSet.from_box(grid, Box((-1.0, -1.0), (1.0, 1.0)))
    cache = {}
    build_outer_map(sysm, grid, N, tau=1.0, flow_cache=cache)
    filled = len(cache)
    assert filled > 0
    build_outer_map(sysm, grid, N, tau=1.0, flow_cache=cache,
                    bloat_cells=2)
    assert len(cache) == filled   # second sweep flowed nothing new


def test_bloat_grows_images():
    sysm = linear_attractor()
    grid = CubicalGrid(sysm.domain, 8)
    N = CubicalSet.from_box(grid, Box((-1.0, -1.0), (1.0, 1.0)))
    f1 = build_outer_map(sysm, grid, N, tau=0.5, bloat_cells=1)
    f2 = build_outer_map(sysm, grid, N, tau=0.5, bloat_cells=2)
    assert all(f1.images[c] <= f2.images[c] for c in N.ids)
    assert any(f1.images[c] < f2.images[c] for c in N.ids)