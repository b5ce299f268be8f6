"""Cubical outer approximation of the time-tau flow map.

The region of interest is covered by a regular grid of boxes ("cubes").  The
flow map is sampled on a shared lattice (cube corners, edge midpoints,
centers for the default density), every landing point is assigned to its
cube, and the image set is padded by a Chebyshev collar of `bloat_cells`.
The result is a combinatorial multivalued map suitable for invariant-set
pruning, isolation checks, and index-pair construction.  Sampling is not a
rigorous enclosure: the certificate downstream is numerical evidence, with
the sampling density and the collar width as the robustness dials.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import EscapingPoint, PairConstructionFailed, UnsupportedTangency
from .semiflow import semiflow
from .system import Box, PiecewiseSystem, Tolerances

MAX_CUBES = 2 ** 24


class CubicalGrid:
    """Regular box grid with row-major integer cube ids."""

    def __init__(self, box: Box, resolution):
        self.box = box
        self.lo = np.asarray(box.lo, dtype=float)
        self.hi = np.asarray(box.hi, dtype=float)
        self.dim = len(self.lo)
        if np.isscalar(resolution):
            resolution = (int(resolution),) * self.dim
        self.resolution = tuple(int(r) for r in resolution)
        if len(self.resolution) != self.dim:
            raise ValueError("resolution must give one count per axis")
        if any(r < 4 for r in self.resolution):
            raise ValueError("resolution must be at least 4 cubes per axis")
        total = 1
        for r in self.resolution:
            total *= r
        if total > MAX_CUBES:
            raise ValueError("grid of %d cubes exceeds the %d-cube guard"
                             % (total, MAX_CUBES))
        self.n_cubes = total
        self.widths = (self.hi - self.lo) / np.asarray(self.resolution)
        # row-major strides: last axis varies fastest
        strides = [1] * self.dim
        for i in range(self.dim - 2, -1, -1):
            strides[i] = strides[i + 1] * self.resolution[i + 1]
        self.strides = tuple(strides)

    def id_of(self, coords):
        return int(sum(c * s for c, s in zip(coords, self.strides)))

    def coords_of(self, cube_id):
        out = []
        for s, r in zip(self.strides, self.resolution):
            out.append(int(cube_id // s) % r if s > 1 or True else 0)
            cube_id = cube_id % s
        return tuple(out)

    def cube_of_point(self, point):
        """Cube coords containing a point, or None outside the grid box."""
        p = np.asarray(point, dtype=float)
        rel = (p - self.lo) / self.widths
        coords = np.floor(rel).astype(int)
        for i in range(self.dim):
            if coords[i] == self.resolution[i] and rel[i] <= self.resolution[i] + 1e-9:
                coords[i] -= 1          # landed exactly on the top face
            if coords[i] < 0 or coords[i] >= self.resolution[i]:
                return None
        return tuple(int(c) for c in coords)

    def cube_bounds(self, coords):
        lo = self.lo + np.asarray(coords, dtype=float) * self.widths
        return lo, lo + self.widths

    def cube_center(self, coords):
        return self.lo + (np.asarray(coords, dtype=float) + 0.5) * self.widths

    def in_bounds(self, coords):
        return all(0 <= c < r for c, r in zip(coords, self.resolution))

    def neighbors(self, coords, radius=1):
        """Chebyshev ball around a cube, clipped to the grid, center excluded."""
        rngs = [range(max(0, c - radius), min(r, c + radius + 1))
                for c, r in zip(coords, self.resolution)]
        for other in itertools.product(*rngs):
            if other != tuple(coords):
                yield other

    def lattice_point(self, key, per_axis):
        """Position of a shared sample-lattice node (integer key per axis)."""
        return self.lo + np.asarray(key, dtype=float) * self.widths / per_axis

    def cube_lattice_keys(self, coords, per_axis):
        rngs = [range(c * per_axis, c * per_axis + per_axis + 1) for c in coords]
        return itertools.product(*rngs)

    def to_dict(self):
        return {
            "box": {"lo": [float(v) for v in self.lo],
                    "hi": [float(v) for v in self.hi]},
            "resolution": list(self.resolution),
        }


class CubicalSet:
    """A set of grid cubes, stored by id with coordinate helpers."""

    def __init__(self, grid: CubicalGrid, ids=()):
        self.grid = grid
        self.ids = frozenset(int(i) for i in ids)

    @classmethod
    def from_coords(cls, grid, coords_iterable):
        return cls(grid, (grid.id_of(c) for c in coords_iterable))

    @classmethod
    def full(cls, grid):
        return cls(grid, range(grid.n_cubes))

    @classmethod
    def from_box(cls, grid, box: Box):
        """All cubes whose closed box intersects `box`."""
        lo = np.asarray(box.lo, dtype=float)
        hi = np.asarray(box.hi, dtype=float)
        lo_c = np.floor((lo - grid.lo) / grid.widths - 1e-12).astype(int)
        hi_c = np.ceil((hi - grid.lo) / grid.widths + 1e-12).astype(int) - 1
        lo_c = np.maximum(lo_c, 0)
        hi_c = np.minimum(hi_c, np.asarray(grid.resolution) - 1)
        if np.any(hi_c < lo_c):
            return cls(grid)
        rngs = [range(a, b + 1) for a, b in zip(lo_c, hi_c)]
        return cls.from_coords(grid, itertools.product(*rngs))

    def __len__(self):
        return len(self.ids)

    def __contains__(self, cube_id):
        return int(cube_id) in self.ids

    def __iter__(self):
        return iter(sorted(self.ids))

    def __eq__(self, other):
        return isinstance(other, CubicalSet) and self.ids == other.ids

    def coords(self):
        return [self.grid.coords_of(i) for i in sorted(self.ids)]

    def union(self, other_ids):
        return CubicalSet(self.grid, self.ids | set(int(i) for i in other_ids))

    def intersection(self, other_ids):
        return CubicalSet(self.grid, self.ids & set(int(i) for i in other_ids))

    def difference(self, other_ids):
        return CubicalSet(self.grid, self.ids - set(int(i) for i in other_ids))

    def dilate(self, cells=1):
        """Chebyshev-grow by `cells`, clipped to the grid."""
        grid = self.grid
        out = set(self.ids)
        for i in self.ids:
            c = grid.coords_of(i)
            for other in grid.neighbors(c, radius=cells):
                out.add(grid.id_of(other))
        return CubicalSet(grid, out)

    def boundary_collar(self):
        """Members touching the set's topological boundary: any Moore
        neighbor missing, counting space outside the grid as missing."""
        grid = self.grid
        collar = set()
        for i in self.ids:
            c = grid.coords_of(i)
            if any(v == 0 or v == r - 1
                   for v, r in zip(c, grid.resolution)):
                collar.add(i)
                continue
            for other in grid.neighbors(c, radius=1):
                if grid.id_of(other) not in self.ids:
                    collar.add(i)
                    break
        return CubicalSet(grid, collar)

    def write_csv(self, path):
        """Integer cube coordinates, one row per cube."""
        header = ",".join("i%d" % (k + 1) for k in range(self.grid.dim))
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for c in self.coords():
                fh.write(",".join(str(v) for v in c) + "\n")


@dataclass
class OuterMap:
    """Sampled combinatorial enclosure of the time-tau flow on a cube set."""

    grid: CubicalGrid
    domain: CubicalSet
    images: dict                      # cube id -> frozenset of image ids
    exits: frozenset                  # cubes with a sample leaving the grid
    tau: float
    bloat_cells: int
    samples_per_axis: int

    def image(self, cube_id):
        return self.images[int(cube_id)]

    def exits_grid(self, cube_id):
        return int(cube_id) in self.exits


def build_outer_map(system: PiecewiseSystem, grid: CubicalGrid, N: CubicalSet,
                    tau: float, samples_per_axis: int = 2, bloat_cells: int = 1,
                    tol: Tolerances | None = None,
                    flow_cache: dict | None = None) -> OuterMap:
    """Sample the time-`tau` motion on every cube of `N`.

    Sample nodes form a lattice shared between adjacent cubes
    (`samples_per_axis`+1 nodes per axis per cube; the default 2 gives
    corners, face midpoints, and the center), so each node is flowed once
    even when many cubes share it.  Pass the same `flow_cache` dict across
    calls to reuse finished flows (the cache is keyed by lattice node, so it
    is only valid for one (system, grid, tau) combination).

    A cube is flagged as exiting when any of its samples leaves the grid box,
    leaves the domain box, or reaches a point with no forward motion.
    """
    if tau <= 0.0:
        raise ValueError("tau must be positive")
    tol = tol or system.tol
    cache = flow_cache if flow_cache is not None else {}
    images = {}
    exits = set()
    for cube_id in N.ids:
        coords = grid.coords_of(cube_id)
        hit = set()
        exited = False
        for key in grid.cube_lattice_keys(coords, samples_per_axis):
            if key in cache:
                landing = cache[key]
            else:
                p = grid.lattice_point(key, samples_per_axis)
                if not system.domain.contains(p, slack=1e-12):
                    landing = None
                else:
                    try:
                        traj = semiflow(system, p, tau, tol=tol)
                    except (EscapingPoint, UnsupportedTangency):
                        landing = None
                    else:
                        landing = (None if traj.status == "DomainExit"
                                   else traj.final_point)
                cache[key] = landing
            if landing is None:
                exited = True
                continue
            c = grid.cube_of_point(landing)
            if c is None:
                exited = True
            else:
                hit.add(grid.id_of(c))
        if bloat_cells > 0 and hit:
            padded = set(hit)
            for i in hit:
                c = grid.coords_of(i)
                for other in grid.neighbors(c, radius=bloat_cells):
                    padded.add(grid.id_of(other))
            hit = padded
        images[cube_id] = frozenset(hit)
        if exited:
            exits.add(cube_id)
    return OuterMap(grid=grid, domain=N, images=images,
                    exits=frozenset(exits), tau=float(tau),
                    bloat_cells=int(bloat_cells),
                    samples_per_axis=int(samples_per_axis))


def invariant_part(F: OuterMap, N: CubicalSet) -> CubicalSet:
    """Largest subset of `N` where the combinatorial map runs both ways.

    Cubes are deleted until every survivor has an image cube inside the
    surviving set and a preimage cube inside it (weak forward/backward
    invariance of the multivalued map).
    """
    alive = set(N.ids) & set(F.images)
    changed = True
    while changed:
        changed = False
        preimaged = set()
        for c in alive:
            for i in F.images[c]:
                if i in alive:
                    preimaged.add(i)
        for c in list(alive):
            if c not in preimaged or not (F.images[c] & alive):
                alive.discard(c)
                changed = True
    return CubicalSet(N.grid, alive)


def check_isolating(F: OuterMap, N: CubicalSet,
                    inv: CubicalSet | None = None) -> bool:
    """True when the invariant cubes stay clear of N's boundary collar."""
    if inv is None:
        inv = invariant_part(F, N)
    collar = N.boundary_collar()
    return not (inv.ids & collar.ids)


def index_pair(F: OuterMap, N: CubicalSet):
    """Exit set L and its forward closure inside N.

    L starts from every cube whose image pokes out of `N` (or leaves the grid
    entirely) and absorbs forward images inside N until positively invariant.
    Raises PairConstructionFailed when the closure reaches the invariant
    part, which means `N` cannot carve out an isolated pair at this
    resolution.
    """
    inv = invariant_part(F, N)
    seeds = set()
    for c in N.ids:
        if F.exits_grid(c) or not (F.images[c] <= N.ids):
            seeds.add(c)
    L = set(seeds)
    frontier = list(seeds)
    while frontier:
        c = frontier.pop()
        for i in F.images[c]:
            if i in N.ids and i not in L:
                L.add(i)
                frontier.append(i)
    if L & inv.ids:
        raise PairConstructionFailed(
            "exit closure reached %d invariant cubes; the neighborhood "
            "leaks through its own recurrent core" % len(L & inv.ids))

    # re-verify the pair conditions independently of the construction
    for c in L:
        if not ((F.images[c] & N.ids) <= L):
            raise PairConstructionFailed(
                "exit set is not positively invariant at cube %d" % c)
    for c in N.ids - L:
        if F.exits_grid(c) or not (F.images[c] <= N.ids):
            raise PairConstructionFailed(
                "cube %d exits the neighborhood but escaped the exit set" % c)
    return N, CubicalSet(N.grid, L)
