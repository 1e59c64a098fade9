import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from ferrogas.config_space import MarkedConfiguration, Region
from ferrogas.interaction import ModelSpec
from ferrogas.percolation import (P_SITE, DisjointSet, block_variables,
                                  build_rgg, check_domination,
                                  connected_components,
                                  connectivity_exact_fraction,
                                  connectivity_probability, h,
                                  percolation_event, psi, rho, thin_edges)


def test_build_rgg_line_example():
    g = build_rgg([[0.0, 0.0], [0.5, 0.0], [1.4, 0.0]], 1.0)
    assert g.edges.tolist() == [[0, 1], [1, 2]]


def test_build_rgg_empty():
    g = build_rgg(np.empty((0, 2)), 1.0)
    assert g.n_vertices == 0 and g.n_edges == 0


def test_build_rgg_matches_all_pairs_filter():
    rng = np.random.default_rng(0)
    for _ in range(40):
        n = int(rng.integers(2, 40))
        pts = rng.uniform(0, 3, size=(n, 2))
        radius = float(rng.uniform(0.2, 2.0))
        g = build_rgg(pts, radius)
        want = set()
        for i in range(n):
            for j in range(i + 1, n):
                if np.linalg.norm(pts[i] - pts[j]) <= radius:
                    want.add((i, j))
        assert {tuple(e) for e in g.edges.tolist()} == want


def test_graph_dump_format():
    g = build_rgg([[0.0, 0.0], [0.5, 0.0]], 1.0)
    lines = g.dump().splitlines()
    assert lines[0] == "2 1"
    assert lines[3] == "0 1"


def test_thin_edges_extremes():
    g = build_rgg(np.random.default_rng(1).uniform(0, 2, (30, 2)), 1.0)
    rng = np.random.default_rng(2)
    assert thin_edges(g, 1.0, rng).n_edges == g.n_edges
    assert thin_edges(g, 0.0, rng).n_edges == 0
    with pytest.raises(ValueError):
        thin_edges(g, 1.5, rng)


def test_thin_edges_binomial_mean():
    # 100-edge graph, mean kept count over many thinnings ~ 100 q
    pts = np.stack([np.linspace(0, 99 * 0.5, 100), np.zeros(100)], axis=1)
    g = build_rgg(pts, 0.6)   # path graph, 99 edges
    extra = build_rgg(np.stack([np.arange(101.0), np.zeros(101)], axis=1), 1.0)
    assert g.n_edges == 99 and extra.n_edges == 100
    q = 0.3
    rng = np.random.default_rng(3)
    kept = [thin_edges(extra, q, rng).n_edges for _ in range(10000)]
    mean = np.mean(kept)
    sigma = math.sqrt(100 * q * (1 - q) / 10000)
    assert abs(mean - 100 * q) < 3 * sigma


def test_disjoint_set_basics():
    ds = DisjointSet(5)
    ds.union(0, 1)
    ds.union(3, 4)
    assert ds.find(0) == ds.find(1)
    assert ds.find(2) not in (ds.find(0), ds.find(3))
    ds.union(1, 3)
    assert ds.find(0) == ds.find(4)


def _bfs_labels(n, edges):
    adj = {i: [] for i in range(n)}
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    label = [-1] * n
    cur = 0
    for s in range(n):
        if label[s] != -1:
            continue
        queue = [s]
        label[s] = cur
        while queue:
            v = queue.pop(0)
            for w in adj[v]:
                if label[w] == -1:
                    label[w] = cur
                    queue.append(w)
        cur += 1
    return label


def test_connected_components_examples():
    g = build_rgg([[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]], 0.6)
    labels = connected_components(g)
    assert len(set(labels.labels.tolist())) == 1
    edgeless = build_rgg([[0.0, 0.0], [5.0, 0.0], [10.0, 0.0]], 1.0)
    labels = connected_components(edgeless)
    assert len(set(labels.labels.tolist())) == 3
    assert np.all(labels.sizes == 1)


def test_connected_components_agree_with_bfs():
    rng = np.random.default_rng(7)
    for _ in range(30):
        n = int(rng.integers(1, 50))
        pts = rng.uniform(0, 4, size=(n, 2))
        g = build_rgg(pts, 0.8)
        got = connected_components(g).labels
        want = _bfs_labels(n, g.edges.tolist())
        # same partition up to relabeling
        mapping = {}
        for a, b in zip(got.tolist(), want):
            assert mapping.setdefault(a, b) == b


def test_connected_components_boundary_flags():
    g = build_rgg([[0.0, 0.0], [0.5, 0.0], [3.0, 0.0]], 0.6)
    mask = np.array([False, True, False])
    labels = connected_components(g, boundary_mask=mask)
    assert labels.touches_boundary_collar.tolist() == [True, True, False]


def _spec025():
    return ModelSpec.default(r=0.25, phi_star=3.0)


def test_block_variables_count_threshold():
    spec = _spec025()
    region = Region.box(1, spec.l, d=2)
    conf = MarkedConfiguration(2, spec.l)
    conf.add([0.0, 0.0], 1.0)
    g = build_rgg(conf.positions, spec.R)
    bf = block_variables(conf, g, spec, n_star=2, region=region)
    assert bf.theta[(0, 0)] == 0          # N = n_star - 1
    bf1 = block_variables(conf, g, spec, n_star=1, region=region)
    assert bf1.theta[(0, 0)] == 1


def test_block_variables_unthinned_cross_always_one():
    spec = _spec025()
    region = Region.box(1, spec.l, d=2)
    rng = np.random.default_rng(5)
    conf = MarkedConfiguration(2, spec.l)
    # scatter points in two adjacent cells at worst-case corners
    for p in rng.uniform(-spec.l / 2, spec.l / 2, size=(6, 2)):
        conf.add(p, 1.0)
    for p in rng.uniform(-spec.l / 2, spec.l / 2, size=(6, 2)):
        conf.add(p + [spec.l, 0.0], 1.0)
    g = build_rgg(np.array(conf.positions), spec.R)
    bf = block_variables(conf, g, spec, n_star=1, region=region)
    assert bf.cross[((0, 0), (1, 0))] == 1
    assert bf.theta[(0, 0)] == 1 and bf.theta[(1, 0)] == 1


def test_adjacent_cell_reach_inequality():
    # worst-case separation of points in adjacent cells: l sqrt(d + 3) <= R
    for d in range(1, 7):
        l = 1.0 / (2.0 * math.sqrt(d))   # R = 1
        assert l * math.sqrt(d + 3) <= 1.0 + 1e-12


def test_block_variables_thinned_disconnection():
    spec = _spec025()
    region = Region.box(1, spec.l, d=2)
    conf = MarkedConfiguration(2, spec.l)
    conf.add([-0.1, 0.0], 1.0)
    conf.add([0.1, 0.0], 1.0)
    g = build_rgg(np.array(conf.positions), spec.R)
    thinned = thin_edges(g, 0.0, np.random.default_rng(0))
    bf = block_variables(conf, thinned, spec, n_star=2, region=region,
                         check_complete=False)
    assert bf.theta[(0, 0)] == 0


def test_block_variables_side_mismatch():
    spec = _spec025()
    region = Region.box(1, spec.l, d=2)
    conf = MarkedConfiguration(2, 0.5)
    conf.add([0.0, 0.0], 1.0)
    g = build_rgg(np.array(conf.positions), spec.R)
    with pytest.raises(ValueError):
        block_variables(conf, g, spec, n_star=1, region=region)


def _phi_bruteforce(n, q):
    """Connectivity probability of G(n, q) by edge-subset enumeration."""
    pairs = list(itertools.combinations(range(n), 2))
    total = Fraction(0)
    for bits in range(2 ** len(pairs)):
        edges = [pairs[b] for b in range(len(pairs)) if bits >> b & 1]
        lab = _bfs_labels(n, edges)
        if len(set(lab)) == 1:
            k = len(edges)
            total += q ** k * (1 - q) ** (len(pairs) - k)
    return total


def test_connectivity_small_closed_forms():
    for q in (0.2, 0.5, 0.9):
        assert connectivity_probability(1, q)[0] == pytest.approx(1.0)
        assert connectivity_probability(2, q)[0] == pytest.approx(q)
        exact3 = connectivity_probability(3, q)[0]
        assert exact3 == pytest.approx(3 * q ** 2 - 2 * q ** 3)
    # spec'd spot values
    assert connectivity_probability(3, 0.5)[0] == pytest.approx(0.5)
    bound3 = connectivity_probability(3, 0.5)[1]
    assert bound3 == pytest.approx(1 - 2 * 0.75)


def test_connectivity_exact_fraction_matches_enumeration():
    for n in range(1, 6):
        for q in (Fraction(1, 10), Fraction(1, 2), Fraction(9, 10)):
            assert connectivity_exact_fraction(n, q) == _phi_bruteforce(n, q)


def test_connectivity_recursion_identity():
    # sum_k C(n-1, k-1) phi(k, q) (1-q)^{k(n-k)} = 1
    for n in range(1, 13):
        for q in np.arange(0.1, 1.0, 0.1):
            total = sum(math.comb(n - 1, k - 1)
                        * connectivity_probability(k, q)[0]
                        * (1 - q) ** (k * (n - k))
                        for k in range(1, n + 1))
            assert total == pytest.approx(1.0, abs=1e-10)


def test_connectivity_bound_never_exceeds_exact():
    for n in range(3, 13):
        for q in np.arange(0.1, 1.0, 0.1):
            exact, bound = connectivity_probability(n, float(q))
            assert exact >= bound - 1e-12


def test_psi_values():
    assert psi(1, 1, 0.3) == pytest.approx(0.3)
    assert psi(2, 3, 0.5) == pytest.approx(1 - 2.0 ** -6)


def test_rho_rule_and_h():
    q = 0.9
    exact_vals = [connectivity_probability(m, q)[0] for m in range(3, 13)]
    assert rho(3, q) <= min(exact_vals) + 1e-12
    # at high q the tail bound is benign and rho equals the exact minimum
    assert rho(3, q) == pytest.approx(min(exact_vals))
    assert h(3, q) == pytest.approx(rho(3, q) * psi(3, 3, q))
    assert 0.0 < h(3, q) < 1.0
    with pytest.raises(ValueError):
        rho(3, 1.0)


def test_h_monte_carlo_oracle():
    # phi(3, 0.9) against direct graph sampling
    q = 0.9
    rng = np.random.default_rng(12)
    edges = rng.random((200000, 3)) < q   # K3 edge indicators
    e01, e02, e12 = edges[:, 0], edges[:, 1], edges[:, 2]
    connected = ((e01 & e02) | (e01 & e12) | (e02 & e12))
    est = connected.mean()
    exact = connectivity_probability(3, q)[0]
    se = math.sqrt(exact * (1 - exact) / len(edges))
    assert abs(est - exact) < 3 * se + 1e-9


def test_percolation_event_handcrafted():
    spec = _spec025()
    region = Region.box(3, spec.l, d=2)
    # chain of points from the center cell to the outer layer
    pts = np.stack([np.linspace(0.0, 3 * spec.l, 7), np.zeros(7)], axis=1)
    g = build_rgg(pts, spec.R)
    assert percolation_event(pts, g, region, spec.l) == 1
    # center empty -> 0
    far = pts[3:]
    g2 = build_rgg(far, spec.R)
    assert percolation_event(far, g2, region, spec.l) == 0
    # center occupied but disconnected -> 0
    iso = np.array([[0.0, 0.0]])
    g3 = build_rgg(iso, spec.R)
    assert percolation_event(iso, g3, region, spec.l) == 0
    assert percolation_event(np.empty((0, 2)), build_rgg(np.empty((0, 2)), spec.R),
                             region, spec.l) == 0


def test_p_site_table():
    assert P_SITE[2] == pytest.approx(0.592746)
    assert P_SITE[3] == pytest.approx(0.311608)


def test_check_domination_poisson_oracle():
    # ideal gas: occupation indicators are iid Poisson(mu) tails
    rng = np.random.default_rng(21)
    mu = 2.0
    keys = [(i, j) for i in range(-1, 2) for j in range(-1, 2)]
    counts = rng.poisson(mu, size=(4000, len(keys)))
    tail = 1.0 - math.exp(-mu) * (1 + mu)   # P(N >= 2)
    rep = check_domination(counts, keys, n_star=2, q0=tail - 0.05)
    assert rep["passed"]
    # a q0 far above the true tail must fail
    rep_bad = check_domination(counts, keys, n_star=2, q0=tail + 0.2)
    assert not rep_bad["passed"]


def test_check_domination_inconclusive_on_tiny_sample():
    keys = [(0, 0)]
    counts = np.array([[3]] * 5)
    rep = check_domination(counts, keys, n_star=1, q0=0.5,
                           min_class_samples=50)
    assert not rep["passed"]
    statuses = {e["status"] for e in rep["cells"]["(0, 0)"].values()}
    assert statuses == {"inconclusive"}
