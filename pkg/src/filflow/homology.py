"""Relative homology of cubical sets over the integers.

Cells are elementary cubes stored in doubled coordinates: along each axis an
even value 2a is the degenerate interval [a, a] and an odd value 2a+1 is the
unit interval [a, a+1].  A full cube contributes the 3^n product of its
lower/upper/spanning intervals as faces.  The relative chain complex of a
pair (N, L) keeps the cells of N that are not cells of L and drops boundary
entries landing in L.

The complex is first shrunk by elementary reductions (removing a face/coface
pair with unit incidence is a change of basis, so integral homology and
torsion survive), then the small leftover boundary matrices go through an
exact integer Smith normal form.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["HomologySummary", "relative_homology", "homology_of_coords"]


def _cells_of_cube(coords):
    """All 3^n faces of a full cube given by integer grid coords."""
    cells = [()]
    for a in coords:
        base = 2 * a
        cells = [c + (v,) for c in cells for v in (base, base + 1, base + 2)]
    return cells


def _cell_dim(cell):
    return sum(1 for v in cell if v % 2 == 1)


def _cell_boundary(cell):
    """Facets with incidence signs, orientation [a, a+1] -> {a+1} - {a}."""
    out = []
    sign = 1
    for i, v in enumerate(cell):
        if v % 2 == 0:
            continue
        upper = cell[:i] + (v + 1,) + cell[i + 1:]
        lower = cell[:i] + (v - 1,) + cell[i + 1:]
        out.append((upper, sign))
        out.append((lower, -sign))
        sign = -sign
    return out


def _reduce_complex(bd, cob):
    """Remove unit-incidence face/coface pairs until none remain."""
    again = True
    while again:
        again = False
        for a in list(bd.keys()):
            if a not in bd:
                continue
            partner = None
            for b in cob[a]:
                if bd[b][a] in (1, -1):
                    partner = b
                    break
            if partner is None:
                continue
            _remove_pair(a, partner, bd, cob)
            again = True


def _remove_pair(a, b, bd, cob):
    lam = bd[b][a]                    # +1 or -1
    chain_b = dict(bd[b])
    for x in list(cob[a]):
        if x == b:
            continue
        factor = bd[x][a] * lam       # = <dx,a>/lam since lam*lam == 1
        row = bd[x]
        for f, cf in chain_b.items():
            new = row.get(f, 0) - factor * cf
            if new == 0:
                if f in row:
                    del row[f]
                    cob[f].discard(x)
            else:
                if f not in row:
                    cob[f].add(x)
                row[f] = new
    for y in cob[b]:
        bd[y].pop(b, None)
    for f in chain_b:
        cob[f].discard(b)
    for f in bd[a]:
        cob[f].discard(a)
    del bd[a], bd[b]
    del cob[a], cob[b]


def _smith_diagonal(mat):
    """Diagonal of the Smith normal form of an integer matrix (abs values)."""
    A = [row[:] for row in mat]
    n_rows = len(A)
    n_cols = len(A[0]) if n_rows else 0
    diag = []
    t = 0
    while t < n_rows and t < n_cols:
        # bring the smallest nonzero entry of the trailing block to (t, t)
        pivot = None
        for i in range(t, n_rows):
            for j in range(t, n_cols):
                if A[i][j] != 0 and (pivot is None or abs(A[i][j]) < abs(A[pivot[0]][pivot[1]])):
                    pivot = (i, j)
        if pivot is None:
            break
        pi, pj = pivot
        A[t], A[pi] = A[pi], A[t]
        for row in A:
            row[t], row[pj] = row[pj], row[t]
        # Euclidean elimination; remainders become the new, smaller pivot
        dirty = False
        for i in range(t + 1, n_rows):
            if A[i][t] != 0:
                q = A[i][t] // A[t][t]
                for j in range(t, n_cols):
                    A[i][j] -= q * A[t][j]
                if A[i][t] != 0:
                    dirty = True
        for j in range(t + 1, n_cols):
            if A[t][j] != 0:
                q = A[t][j] // A[t][t]
                for i in range(t, n_rows):
                    A[i][j] -= q * A[i][t]
                if A[t][j] != 0:
                    dirty = True
        if dirty:
            continue
        # enforce the divisibility chain d_t | d_{t+1} | ...
        fix = None
        for i in range(t + 1, n_rows):
            for j in range(t + 1, n_cols):
                if A[i][j] % A[t][t] != 0:
                    fix = i
                    break
            if fix is not None:
                break
        if fix is not None:
            for j in range(t, n_cols):
                A[t][j] += A[fix][j]
            continue
        diag.append(abs(A[t][t]))
        t += 1
    return diag


@dataclass(frozen=True)
class HomologySummary:
    """Betti numbers and torsion coefficients per degree, plus cell counts."""

    betti: tuple
    torsion: tuple                    # tuple of tuples of ints > 1
    cells_per_degree: tuple           # relative cell counts before reduction

    @property
    def euler(self):
        return sum((-1) ** k * c for k, c in enumerate(self.cells_per_degree))

    def to_dict(self):
        return {
            "bettiPerDegree": list(self.betti),
            "torsion": [list(tk) for tk in self.torsion],
            "euler": self.euler,
        }


def homology_of_coords(n_coords, l_coords=()):
    """Relative integral homology of full-cube sets given by integer coords.

    `l_coords` must be a subset of `n_coords`; the pair is interpreted as
    (union of closed cubes of N, union of closed cubes of L).
    """
    n_coords = [tuple(int(v) for v in c) for c in n_coords]
    l_coords = [tuple(int(v) for v in c) for c in l_coords]
    if not n_coords:
        return HomologySummary(betti=(0,), torsion=((),), cells_per_degree=(0,))
    dim = len(n_coords[0])
    missing = set(l_coords) - set(n_coords)
    if missing:
        raise ValueError("L has %d cubes outside N" % len(missing))

    l_cells = set()
    for c in l_coords:
        l_cells.update(_cells_of_cube(c))
    basis = set()
    for c in n_coords:
        for cell in _cells_of_cube(c):
            if cell not in l_cells:
                basis.add(cell)

    counts = [0] * (dim + 1)
    bd = {}
    cob = {cell: set() for cell in basis}
    for cell in basis:
        counts[_cell_dim(cell)] += 1
        row = {}
        for face, sign in _cell_boundary(cell):
            if face in basis:
                row[face] = sign
        bd[cell] = row
    for cell, row in bd.items():
        for face in row:
            cob[face].add(cell)

    _reduce_complex(bd, cob)

    by_dim = [[] for _ in range(dim + 1)]
    for cell in bd:
        by_dim[_cell_dim(cell)].append(cell)
    for cells in by_dim:
        cells.sort()
    index = [{cell: i for i, cell in enumerate(cells)} for cells in by_dim]

    ranks = [0] * (dim + 2)           # ranks[k] = rank of boundary C_k -> C_{k-1}
    divisors = [[] for _ in range(dim + 2)]
    for k in range(1, dim + 1):
        if not by_dim[k] or not by_dim[k - 1]:
            continue
        mat = [[0] * len(by_dim[k]) for _ in by_dim[k - 1]]
        for j, cell in enumerate(by_dim[k]):
            for face, coef in bd[cell].items():
                mat[index[k - 1][face]][j] = coef
        d = _smith_diagonal(mat)
        ranks[k] = len(d)
        divisors[k] = [v for v in d if v > 1]

    betti = tuple(len(by_dim[k]) - ranks[k] - ranks[k + 1] for k in range(dim + 1))
    torsion = tuple(tuple(divisors[k + 1]) for k in range(dim + 1))
    return HomologySummary(betti=betti, torsion=torsion,
                           cells_per_degree=tuple(counts))


def relative_homology(N, L=None):
    """Relative homology of a cubical-set pair (members of L inside N)."""
    l_coords = L.coords() if L is not None else ()
    return homology_of_coords(N.coords(), l_coords)
