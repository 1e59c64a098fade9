"""Random geometric graphs, q-thinning, clusters and block variables.

The graph on a configuration gamma has an edge {x, y} whenever
|x - y| <= R.  Thinning deletes each edge independently with probability
1 - q.  Block variables project the continuum picture onto Z^d: with the
cell side l = R / (2 sqrt(d)) every cell induces a complete subgraph and
adjacent nonempty cells are always linked in the unthinned graph.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import spatial

__all__ = [
    "GeometricGraph",
    "ClusterLabels",
    "BlockField",
    "build_rgg",
    "thin_edges",
    "DisjointSet",
    "connected_components",
    "block_variables",
    "connectivity_probability",
    "connectivity_exact_fraction",
    "psi",
    "rho",
    "h",
    "P_SITE",
    "percolation_event",
    "percolation_probability",
    "estimate_p_site_2d",
    "check_domination",
]

# Literature values of the Bernoulli site-percolation threshold on Z^d.
P_SITE = {2: 0.592746, 3: 0.311608}


@dataclass
class GeometricGraph:
    """Vertex positions plus the edge list of the R-neighborhood graph."""

    positions: np.ndarray          # (N, d)
    edges: np.ndarray              # (M, 2) int, i < j, no duplicates
    radius: float

    @property
    def n_vertices(self):
        return len(self.positions)

    @property
    def n_edges(self):
        return len(self.edges)

    def dump(self):
        """Text dump: 'N M' header, vertex lines, then edge lines."""
        lines = ["%d %d" % (self.n_vertices, self.n_edges)]
        for x in self.positions:
            lines.append(" ".join(repr(float(v)) for v in x))
        for i, j in self.edges:
            lines.append("%d %d" % (i, j))
        return "\n".join(lines) + "\n"


@dataclass
class ClusterLabels:
    """Connected-component ids plus boundary-contact flags per vertex."""

    labels: np.ndarray             # component id per vertex
    sizes: np.ndarray              # size per component id
    touches_boundary_collar: np.ndarray  # bool per vertex


@dataclass
class BlockField:
    """Cell occupation/connectivity indicators theta_k and cross indicators."""

    theta: dict                    # CellKey -> 0/1
    cross: dict                    # (CellKey, CellKey) sorted pair -> 0/1


def build_rgg(positions, radius):
    """Exact R-neighborhood graph of a point set (KD-tree pair query)."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    if positions.shape[0] == 0:
        return GeometricGraph(positions.reshape(0, positions.shape[1] if positions.size else 1),
                              np.empty((0, 2), dtype=np.int64), radius)
    tree = spatial.cKDTree(positions)
    pairs = tree.query_pairs(radius, output_type="ndarray")
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    return GeometricGraph(positions, pairs.astype(np.int64), radius)


def thin_edges(graph, q, rng):
    """Keep each edge independently with probability q; vertices unchanged."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    if graph.n_edges == 0 or q == 1.0:
        return GeometricGraph(graph.positions, graph.edges.copy(), graph.radius)
    keep = rng.random(graph.n_edges) < q
    return GeometricGraph(graph.positions, graph.edges[keep], graph.radius)


class DisjointSet:
    """Union-find with path compression and union by size."""

    def __init__(self, n):
        self.parent = np.arange(n, dtype=np.int64)
        self.size = np.ones(n, dtype=np.int64)

    def find(self, i):
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return ri
        if self.size[ri] < self.size[rj]:
            ri, rj = rj, ri
        self.parent[rj] = ri
        self.size[ri] += self.size[rj]
        return ri


def connected_components(graph, boundary_mask=None):
    """Component labels of the graph; flags vertices whose component meets
    the boundary mask (vertices in the outer layer or the collar)."""
    n = graph.n_vertices
    ds = DisjointSet(n)
    for i, j in graph.edges:
        ds.union(int(i), int(j))
    roots = np.array([ds.find(i) for i in range(n)], dtype=np.int64)
    uniq, labels = np.unique(roots, return_inverse=True) if n else (np.array([], dtype=np.int64),
                                                                    np.array([], dtype=np.int64))
    sizes = np.bincount(labels, minlength=len(uniq)) if n else np.array([], dtype=np.int64)
    touches = np.zeros(n, dtype=bool)
    if boundary_mask is not None and n:
        boundary_mask = np.asarray(boundary_mask, dtype=bool)
        hit = np.zeros(len(uniq), dtype=bool)
        hit[labels[boundary_mask]] = True
        touches = hit[labels]
    return ClusterLabels(labels=labels, sizes=sizes,
                         touches_boundary_collar=touches)


def block_variables(conf, graph, spec, n_star, region, check_complete=True):
    """theta_k / cross indicators of the cell projection of a (thinned) graph.

    theta_k = 1 iff the subgraph on the points of cell k is connected and the
    cell holds at least n_star points; cross = 1 for adjacent cells joined by
    at least one edge.  Requires the cell side l = R / (2 sqrt(d)).
    """
    if abs(conf.side - spec.l) > 1e-12 * spec.l:
        raise ValueError("configuration cell side differs from R / (2 sqrt(d))")
    from .config_space import cell_indices

    pos = graph.positions
    keys = [tuple(k) for k in cell_indices(pos, spec.l)] if len(pos) else []
    by_cell = {}
    for i, k in enumerate(keys):
        by_cell.setdefault(k, []).append(i)

    adj = {i: [] for i in range(len(pos))}
    for i, j in graph.edges:
        adj[int(i)].append(int(j))
        adj[int(j)].append(int(i))

    theta = {}
    for k in region.cell_list():
        idx = by_cell.get(k, [])
        if len(idx) < max(1, n_star):
            theta[k] = 0
            continue
        seen = {idx[0]}
        stack = [idx[0]]
        members = set(idx)
        while stack:
            cur = stack.pop()
            for nb in adj[cur]:
                if nb in members and nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        theta[k] = int(len(seen) == len(idx))

    cross = {}
    edge_cells = set()
    for i, j in graph.edges:
        ki, kj = keys[int(i)], keys[int(j)]
        if ki != kj:
            edge_cells.add(tuple(sorted((ki, kj))))
    cells = region.cell_list()
    for a_idx, ka in enumerate(cells):
        for kb in cells[a_idx + 1:]:
            if sum(abs(x - y) for x, y in zip(ka, kb)) == 1:
                pair = tuple(sorted((ka, kb)))
                cross[pair] = int(pair in edge_cells)

    if check_complete and graph.n_edges and _is_full_graph(conf, graph):
        for k, t in theta.items():
            n = len(by_cell.get(k, []))
            assert t == int(n >= n_star), "cell subgraph not complete"
        for (ka, kb), c in cross.items():
            if by_cell.get(ka) and by_cell.get(kb):
                assert c == 1, "adjacent nonempty cells must be linked"
    return BlockField(theta=theta, cross=cross)


def _is_full_graph(conf, graph):
    return graph.n_vertices == len(conf) and len(graph.edges) and graph.radius >= conf.side


def _connected_exact(n, q, one=1.0):
    """phi(n, q) by the component-of-vertex-1 recursion (exact for Fractions)."""
    phis = [None, one]
    for m in range(2, n + 1):
        total = one - one  # zero of the right type
        for k in range(1, m):
            total += (math.comb(m - 1, k - 1) * phis[k]
                      * (one - q) ** (k * (m - k)))
        phis.append(one - total)
    return phis[n]


@lru_cache(maxsize=4096)
def _connected_exact_cached(n, q):
    return _connected_exact(n, float(q), one=1.0)


def connectivity_exact_fraction(n, q):
    """Exact rational phi(n, q) for a Fraction q (oracle-grade)."""
    return _connected_exact(n, Fraction(q), one=Fraction(1))


def connectivity_probability(n, q):
    """(exact phi(n, q) or None, lower bound 1 - (n-1)(1-q^2)^(n-2)).

    The exact value is computed for n <= 12; the bound applies for n >= 3.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    exact = _connected_exact_cached(n, q) if n <= 12 else None
    bound = 1.0 - (n - 1) * (1.0 - q * q) ** (n - 2) if n >= 3 else None
    if exact is not None and bound is not None:
        assert exact >= max(0.0, bound) - 1e-12
    return exact, bound


def psi(n1, n2, q):
    """Probability of at least one edge across an n1 x n2 bipartite pair."""
    if n1 < 1 or n2 < 1:
        raise ValueError("set sizes must be >= 1")
    return 1.0 - (1.0 - q) ** (n1 * n2)


def rho(n, q):
    """inf over m >= n of phi(m, q), made computable.

    Exact phi is used for m <= 12; beyond that the connectivity lower bound
    is minimized over its non-monotone head and clipped at 0, which never
    exceeds the true infimum.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    exact_part = min(_connected_exact_cached(m, q) for m in range(n, 13))
    m_turn = max(13, int(math.ceil(1.0 / (q * q))) + 1)
    tail = min(1.0 - (m - 1) * (1.0 - q * q) ** (m - 2)
               for m in range(13, m_turn + 1))
    return min(exact_part, max(0.0, tail))


def h(n, q):
    """h(n, q) = rho(n, q) * psi(n, n, q), the combined block-opening weight."""
    return rho(n, q) * psi(n, n, q)


def estimate_p_site_2d(L=128, trials=200, rng=None, tol=5e-3):
    """Monte Carlo estimate of the site-percolation threshold on Z^2.

    Bisects on the top-bottom crossing probability of an L x L open-site
    lattice; crude but independent of the embedded literature value.
    """
    rng = np.random.default_rng(rng)

    def crossing_prob(p):
        hits = 0
        for _ in range(trials):
            open_ = rng.random((L, L)) < p
            ds = DisjointSet(L * L + 2)
            top, bottom = L * L, L * L + 1
            idx = lambda i, j: i * L + j
            for i in range(L):
                for j in range(L):
                    if not open_[i, j]:
                        continue
                    if i == 0:
                        ds.union(idx(i, j), top)
                    if i == L - 1:
                        ds.union(idx(i, j), bottom)
                    if i + 1 < L and open_[i + 1, j]:
                        ds.union(idx(i, j), idx(i + 1, j))
                    if j + 1 < L and open_[i, j + 1]:
                        ds.union(idx(i, j), idx(i, j + 1))
            if ds.find(top) == ds.find(bottom):
                hits += 1
        return hits / trials

    lo, hi = 0.5, 0.7
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if crossing_prob(mid) < 0.5:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def percolation_event(positions, graph, region, side):
    """1 if the center cell is nonempty and all of its points reach the
    outer layer of the region through the (thinned) graph."""
    from .config_space import cell_indices

    if len(positions) == 0:
        return 0
    keys = cell_indices(positions, side)
    center = np.all(keys == 0, axis=1)
    if not np.any(center):
        return 0
    outer = set(region.outer_layer())
    mask = np.array([tuple(k) in outer for k in keys])
    labels = connected_components(graph, boundary_mask=mask)
    return int(np.all(labels.touches_boundary_collar[center]))


def percolation_probability(spec, region_cells, boundary_kind, q, chains,
                            sweeps, seed, burn_in=None, snap_every=5,
                            n_star=1, thin_seed=0):
    """Finite-volume percolation estimate at one (z, q, size) grid point.

    Runs `chains` chains on a box of cell radius `region_cells` (>= 3 so
    the center cell cannot itself sit in the outer layer), snapshots the
    configuration every `snap_every` recorded sweeps, thins the
    R-neighborhood graph with probability 1 - q per edge and counts the
    event that every center-cell point reaches the outer layer.  The
    thinning streams depend on (thin_seed, chain, snapshot) only, so runs
    at different activities share their thinning randomness (coupled
    comparison).  Returns (estimate, stderr) with a between-chain stderr.
    """
    from .config_space import Region
    from ._fast import run_chain_fast

    if region_cells < 3:
        raise ValueError("region must be at least 3 cells in radius")
    region = Region.box(region_cells, spec.l, d=spec.d)
    burn_in = sweeps // 2 if burn_in is None else burn_in
    per_chain = []
    for chain in range(chains):
        trace = run_chain_fast(
            spec, region_cells, boundary_kind, seed, chain=chain,
            sweeps=sweeps, burn_in=burn_in, thin=1, n_star=n_star,
            snap_every=snap_every,
            snap_cap=(sweeps - burn_in) // max(1, snap_every) + 1)
        hits = []
        for s_idx in range(len(trace["snap_n"])):
            npts = int(trace["snap_n"][s_idx])
            pts = trace["snap_pos"][s_idx, :npts]
            graph = build_rgg(pts, spec.R)
            rng = np.random.default_rng([thin_seed, chain, s_idx])
            thinned = thin_edges(graph, q, rng)
            hits.append(percolation_event(pts, thinned, region, spec.l))
        per_chain.append(float(np.mean(hits)) if hits else 0.0)
    est = float(np.mean(per_chain))
    if chains > 1:
        se = float(np.std(per_chain, ddof=1) / math.sqrt(chains))
    else:
        se = float("nan")
    return est, se


def check_domination(cell_counts, cell_keys, n_star, q0, floor=None,
                     min_class_samples=50):
    """Empirical occupation-probability check against q0 and the analytic floor.

    `cell_counts` is a (samples, cells) array of per-cell point counts from
    equilibrated chains; conditioning is on the coarse neighborhood class =
    number of axis-adjacent cells meeting the n_star threshold.  Cells or
    classes with too few samples are marked inconclusive.
    """
    counts = np.asarray(cell_counts)
    occupied = counts >= n_star
    keys = [tuple(k) for k in cell_keys]
    key_pos = {k: i for i, k in enumerate(keys)}
    d = len(keys[0])

    neighbor_idx = []
    for k in keys:
        nb = []
        for ax in range(d):
            for sgn in (-1, 1):
                kk = tuple(c + (sgn if ax == j else 0) for j, c in enumerate(k))
                if kk in key_pos:
                    nb.append(key_pos[kk])
        neighbor_idx.append(nb)

    report = {"n_star": n_star, "q0": q0, "floor": floor, "cells": {}}
    all_pass = True
    any_conclusive = False
    for ci, k in enumerate(keys):
        nb = neighbor_idx[ci]
        classes = occupied[:, nb].sum(axis=1) if nb else np.zeros(len(counts), dtype=int)
        cell_rep = {}
        for cls in np.unique(classes):
            sel = classes == cls
            m = int(sel.sum())
            p_hat = float(occupied[sel, ci].mean())
            se = math.sqrt(max(p_hat * (1 - p_hat), 1e-12) / m)
            entry = {"samples": m, "p_hat": p_hat, "stderr": se}
            if m < min_class_samples:
                entry["status"] = "inconclusive"
            else:
                any_conclusive = True
                thresh = q0 if floor is None else max(q0, floor)
                ok = p_hat >= thresh - 3.0 * se
                entry["status"] = "pass" if ok else "fail"
                all_pass = all_pass and ok
            cell_rep[int(cls)] = entry
        report["cells"][str(k)] = cell_rep
    report["passed"] = bool(all_pass and any_conclusive)
    return report
