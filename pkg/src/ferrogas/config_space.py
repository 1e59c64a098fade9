"""Marked configurations, the cubic cell partition and fast range queries.

A marked configuration is a finite set of points in R^d, each carrying a
real spin.  Points are binned into cubic cells of side ``l`` so that all
finite-range energy sums and graph constructions only ever scan a bounded
number of neighbouring cells.
"""

import math
from functools import lru_cache

import numpy as np

__all__ = [
    "cell_side",
    "cell_index",
    "cell_indices",
    "cell_center",
    "Region",
    "MarkedConfiguration",
    "validate_growth_exponents",
    "temperedness_F",
    "temperedness_F_alpha",
]


def cell_side(R, d):
    """Cell side l = R / (2 sqrt(d)) tied to the spin-coupling range R."""
    return R / (2.0 * math.sqrt(d))


def cell_index(x, side):
    """Cell key k of a point, with x_i in [side*(k_i - 1/2), side*(k_i + 1/2)).

    Boundary points belong to the upper cell (half-open convention).
    """
    x = np.asarray(x, dtype=float)
    return tuple(int(v) for v in np.floor(x / side + 0.5))


def cell_indices(xs, side):
    """Vectorized cell keys for an (N, d) array of positions."""
    xs = np.asarray(xs, dtype=float)
    return np.floor(xs / side + 0.5).astype(np.int64)


def cell_center(k, side):
    """Center of the cell with key k."""
    return side * np.asarray(k, dtype=float)


class Region:
    """A finite union of cells containing the center cell k = 0."""

    def __init__(self, cells, side):
        cells = {tuple(int(c) for c in k) for k in cells}
        if not cells:
            raise ValueError("region must contain at least one cell")
        d = len(next(iter(cells)))
        if any(len(k) != d for k in cells):
            raise ValueError("inconsistent cell dimensions")
        if (0,) * d not in cells:
            raise ValueError("region must contain the center cell")
        self.cells = frozenset(cells)
        self.side = float(side)
        self.d = d

    @classmethod
    def box(cls, radius_cells, side, d=2):
        """Cube of cells with |k_i| <= radius_cells for each axis."""
        return cls(_offsets(d, int(radius_cells)), side)

    @property
    def volume(self):
        return len(self.cells) * self.side ** self.d

    def contains_cell(self, k):
        return tuple(int(c) for c in k) in self.cells

    def contains_point(self, x):
        return self.contains_cell(cell_index(x, self.side))

    def cell_list(self):
        if not hasattr(self, "_cell_list"):
            self._cell_list = sorted(self.cells)
        return self._cell_list

    @property
    def bounding_box(self):
        """((lo_0, hi_0), ..., (lo_{d-1}, hi_{d-1})) of the covered volume."""
        if not hasattr(self, "_bbox"):
            self._bbox = tuple(
                ((min(k[ax] for k in self.cells) - 0.5) * self.side,
                 (max(k[ax] for k in self.cells) + 0.5) * self.side)
                for ax in range(self.d))
        return self._bbox

    def collar(self, width_cells):
        """Cells outside the region within `width_cells` cells of it (sup norm)."""
        out = set()
        w = int(width_cells)
        for k in self.cells:
            for off in _offsets(self.d, w):
                kk = tuple(a + b for a, b in zip(k, off))
                if kk not in self.cells:
                    out.add(kk)
        return sorted(out)

    def outer_layer(self):
        """Cells of the region having at least one sup-norm neighbour outside."""
        out = []
        for k in self.cells:
            for off in _offsets(self.d, 1):
                if off == (0,) * self.d:
                    continue
                if tuple(a + b for a, b in zip(k, off)) not in self.cells:
                    out.append(k)
                    break
        return sorted(out)


@lru_cache(maxsize=256)
def _offsets(d, w):
    rng = range(-w, w + 1)
    grid = np.stack(np.meshgrid(*([list(rng)] * d), indexing="ij"), axis=-1).reshape(-1, d)
    return [tuple(int(v) for v in row) for row in grid]


class MarkedConfiguration:
    """Finite set of (position, spin) points with a cell map for range queries.

    Positions must be distinct; duplicates are rejected at insertion.
    Backed by growable numpy arrays; removal swaps the last point in, so
    indices are stable only between mutations.
    """

    def __init__(self, d, side, capacity=64):
        self.d = int(d)
        self.side = float(side)
        self.n = 0
        self._pos = np.empty((capacity, d), dtype=float)
        self._spin = np.empty(capacity, dtype=float)
        self._cells = np.empty((capacity, d), dtype=np.int64)
        self.cell_map = {}

    @classmethod
    def from_arrays(cls, positions, spins, side):
        positions = np.atleast_2d(np.asarray(positions, dtype=float))
        spins = np.asarray(spins, dtype=float).ravel()
        if positions.shape[0] != spins.shape[0]:
            raise ValueError("positions and spins length mismatch")
        conf = cls(positions.shape[1] if positions.size else 1, side,
                   capacity=max(64, 2 * len(spins)))
        for x, s in zip(positions, spins):
            conf.add(x, s)
        return conf

    @property
    def positions(self):
        return self._pos[: self.n]

    @property
    def spins(self):
        return self._spin[: self.n]

    def __len__(self):
        return self.n

    def _grow(self):
        cap = 2 * len(self._spin)
        self._pos = np.resize(self._pos, (cap, self.d))
        self._spin = np.resize(self._spin, cap)
        self._cells = np.resize(self._cells, (cap, self.d))

    def add(self, x, spin):
        """Insert a point; returns its index.  Duplicate positions are illegal."""
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)) or not np.isfinite(spin):
            raise ValueError("non-finite position or spin")
        k = cell_index(x, self.side)
        for j in self.cell_map.get(k, ()):
            if np.array_equal(self._pos[j], x):
                raise ValueError("duplicate position %r" % (tuple(x),))
        if self.n == len(self._spin):
            self._grow()
        i = self.n
        self._pos[i] = x
        self._spin[i] = spin
        self._cells[i] = k
        self.cell_map.setdefault(k, []).append(i)
        self.n += 1
        return i

    def remove(self, i):
        """Remove point i (the last point takes its index)."""
        if not 0 <= i < self.n:
            raise IndexError(i)
        ki = tuple(self._cells[i])
        self.cell_map[ki].remove(i)
        if not self.cell_map[ki]:
            del self.cell_map[ki]
        last = self.n - 1
        if i != last:
            kl = tuple(self._cells[last])
            self.cell_map[kl].remove(last)
            self._pos[i] = self._pos[last]
            self._spin[i] = self._spin[last]
            self._cells[i] = self._cells[last]
            self.cell_map.setdefault(kl, []).append(i)
        self.n = last

    def cell_count(self, k):
        return len(self.cell_map.get(tuple(k), ()))

    def cell_points(self, k):
        return list(self.cell_map.get(tuple(k), ()))

    def neighbors_within(self, x, radius, exclude=None):
        """Indices of points y != x with |x - y| <= radius.

        Scans ceil(radius / l) shells of cells around the cell of x.
        """
        x = np.asarray(x, dtype=float)
        shells = int(math.ceil(radius / self.side))
        k0 = cell_index(x, self.side)
        out = []
        r2 = radius * radius
        for off in _offsets(self.d, shells):
            k = tuple(a + b for a, b in zip(k0, off))
            for j in self.cell_map.get(k, ()):
                if j == exclude:
                    continue
                dx = self._pos[j] - x
                d2 = float(dx @ dx)
                if d2 <= r2:
                    if d2 == 0.0 and exclude is None:
                        continue
                    out.append(j)
        return out

    def copy(self):
        conf = MarkedConfiguration(self.d, self.side, capacity=max(64, 2 * self.n))
        conf._pos[: self.n] = self._pos[: self.n]
        conf._spin[: self.n] = self._spin[: self.n]
        conf._cells[: self.n] = self._cells[: self.n]
        conf.n = self.n
        conf.cell_map = {k: list(v) for k, v in self.cell_map.items()}
        return conf

    def to_text(self):
        """Line format: header 'd l N', then one 'x1 ... xd sigma' per point."""
        lines = ["%d %r %d" % (self.d, self.side, self.n)]
        for i in range(self.n):
            coords = " ".join(repr(float(v)) for v in self._pos[i])
            lines.append("%s %r" % (coords, float(self._spin[i])))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        d, side, n = lines[0].split()
        d, side, n = int(d), float(side), int(n)
        conf = cls(d, side, capacity=max(64, 2 * n))
        for ln in lines[1 : 1 + n]:
            vals = [float(v) for v in ln.split()]
            conf.add(vals[:d], vals[d])
        return conf


def validate_growth_exponents(v, w):
    """Check v > 2 and w >= 2(v - 1)/(v - 2) for the temperedness functional."""
    if int(v) != v or v <= 2:
        raise ValueError("v must be an integer > 2")
    if w < 2.0 * (v - 1) / (v - 2):
        raise ValueError("w=%r violates w >= 2(v-1)/(v-2) for v=%r" % (w, v))


def temperedness_F(conf, v, w):
    """Growth functional N^v + sum |sigma|^w of a (single-cell) configuration."""
    validate_growth_exponents(v, w)
    n = len(conf)
    if n == 0:
        return 0.0
    return float(n) ** v + float(np.sum(np.abs(conf.spins) ** w))


def temperedness_F_alpha(conf, v, w, alpha, window):
    """max over cells k in `window` of F(conf restricted to k) * exp(-alpha |k|).

    Diagnostic on a finite window only; |k| is the Euclidean norm of the key.
    """
    validate_growth_exponents(v, w)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    best = 0.0
    for k in window.cells:
        idx = conf.cell_points(k)
        if not idx:
            continue
        f = float(len(idx)) ** v + float(np.sum(np.abs(conf.spins[idx]) ** w))
        best = max(best, f * math.exp(-alpha * float(np.linalg.norm(k))))
    return best
