"""Closed-form constants and inequalities of the phase-transition certificate.

Assembles, for a given model, the spin scale a (Wells comparison), the
occupation threshold n_star, the site probability q0, the cell-insertion
lower bound g_star and the resulting activity threshold
z_c = 1 / (t_star (1 - q0)) with t_star = g_star / n_star.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .interaction import ball_volume
from .percolation import P_SITE, h as h_block

__all__ = [
    "wells_threshold",
    "coupling_condition",
    "GStarResult",
    "g_star",
    "g_integral",
    "CriteriaReport",
    "choose_parameters",
]


def wells_threshold(chi, tol=1e-10, bracket_max=1e6):
    """Largest a > 0 with chi([a sqrt(2), inf)) >= chi([0, a]).

    The deficit is monotone, so bisection gives the supremum; for purely
    atomic chi (two_point) the supremum is not attained and a = sup - tol
    is returned.
    """
    if chi.family == "two_point":
        return chi.param - tol

    def deficit(a):
        return chi.upper_mass(a * math.sqrt(2.0)) - chi.interval_mass(0.0, a)

    lo = 0.0
    hi = tol
    while deficit(hi) >= 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > bracket_max:
            raise ValueError("selection rule holds beyond the search bracket")
    if lo == 0.0:
        raise ValueError("selection rule unsatisfiable for any a > 0")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if deficit(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    return lo


def coupling_condition(phi_star, a, q):
    """Strict check phi_star > (a^2 / 2) log((1+q)/(1-q)); returns (ok, slack)."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    threshold = 0.5 * a * a * math.log((1.0 + q) / (1.0 - q))
    slack = phi_star - threshold
    return slack > 0.0, slack


class GStarResult(NamedTuple):
    g_star: float
    c_opt: float
    v_star: float
    C_delta: float
    delta: float
    ok: bool


def _core_volume(spec):
    """Vol(Delta) = (l - 2r)^d, the cell minus an r-thick boundary layer."""
    side = spec.l - 2.0 * spec.r
    if side <= 0.0:
        raise ValueError(
            "cell side l = %.6g does not exceed 2r = %.6g; the insertion "
            "core is empty (reduce r)" % (spec.l, 2.0 * spec.r))
    return side ** spec.d


def g_star(spec, n_star, delta=None, c_grid=400, c_max=60.0):
    """Lower bound sup_c (1/2) e^{-c} (v_star - (n_star - 1) C_delta / c).

    delta defaults to r/2 and is halved until
    v_star = Vol(Delta) - (n_star - 1) Vol(B_delta) is positive.  For
    n_star = 1 the supremum is attained in the limit c -> 0 and equals
    v_star / 2 exactly.
    """
    vol_delta_region = _core_volume(spec)
    delta = spec.r / 2.0 if delta is None else float(delta)
    k = n_star - 1
    for _ in range(60):
        v_star = vol_delta_region - k * ball_volume(spec.d, delta)
        if v_star > 0.0:
            break
        delta *= 0.5
    else:
        raise ValueError("no delta makes v_star positive; shrink n_star")
    c_delta = spec.Phi.tail_integral(delta)

    if k == 0:
        return GStarResult(0.5 * v_star, 0.0, v_star, c_delta, delta, True)

    def f(c):
        return 0.5 * math.exp(-c) * (v_star - k * c_delta / c)

    cs = np.logspace(-6, math.log10(c_max), c_grid)
    vals = np.array([f(c) for c in cs])
    best = int(np.argmax(vals))
    if vals[best] <= 0.0:
        return GStarResult(0.0, float(cs[best]), v_star, c_delta, delta, False)
    lo = cs[max(0, best - 1)]
    hi = cs[min(len(cs) - 1, best + 1)]
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c1 = b - gr * (b - a)
    c2 = a + gr * (b - a)
    for _ in range(200):
        if f(c1) < f(c2):
            a = c1
            c1, c2 = c2, a + gr * (b - a)
        else:
            b = c2
            c2, c1 = c1, b - gr * (b - a)
        if b - a < 1e-12 * b:
            break
    c_opt = 0.5 * (a + b)
    return GStarResult(f(c_opt), c_opt, v_star, c_delta, delta, True)


def _chi_tilt_average(chi, fields):
    """G(h) = integral of exp(s h) chi(ds) for an array of local fields."""
    fields = np.asarray(fields, dtype=float)
    p = chi.param
    if chi.family == "two_point":
        return np.cosh(p * fields)
    if chi.family == "uniform":
        out = np.ones_like(fields)
        nz = fields != 0.0
        out[nz] = np.sinh(p * fields[nz]) / (p * fields[nz])
        return out
    if chi.family == "gaussian":
        return np.exp(0.5 * (p * fields) ** 2)
    # quartic: 1-D quadrature shared across all field values
    s = np.linspace(-chi._cut, chi._cut, 1025)
    dens = np.exp(-chi.param * s ** 4) / chi._norm
    integ = np.exp(np.outer(fields, s)) * dens
    return np.trapezoid(integ, s, axis=-1)


def g_integral(conf, spec, nodes=48, cell=None, with_min_g=False):
    """Numeric insertion integral over the core Delta of a cell.

    Evaluates integral over Delta of exp(-sum_y Phi(x - y)) G(x, conf) dx
    on a tensor midpoint grid, where G averages exp(s * local field) over
    the spin distribution.  Intended for configurations whose target cell
    holds fewer than n_star points.
    """
    d = spec.d
    cell = (0,) * d if cell is None else tuple(cell)
    center = spec.l * np.asarray(cell, dtype=float)
    half = 0.5 * spec.l - spec.r
    if half <= 0:
        raise ValueError("empty insertion core; reduce r")
    axes = [center[i] + (np.arange(nodes) + 0.5) / nodes * 2 * half - half
            for i in range(d)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    weight = (2.0 * half / nodes) ** d

    if len(conf):
        diff = grid[:, None, :] - conf.positions[None, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        phi_pos = np.where(dist <= spec.r, spec.Phi.value(dist), 0.0)
        repulsion = phi_pos.sum(axis=1)
        fields = (spec.phi.value(dist) * conf.spins[None, :]).sum(axis=1)
    else:
        repulsion = np.zeros(len(grid))
        fields = np.zeros(len(grid))

    g_vals = _chi_tilt_average(spec.chi, fields)
    value = float(np.sum(np.exp(-repulsion) * g_vals) * weight)
    if with_min_g:
        return value, float(np.min(g_vals))
    return value


@dataclass
class CriteriaReport:
    """All certificate constants plus the pass/fail status of each inequality."""

    d: int
    q: float
    a: float
    n_star: int
    q0: float
    h_value: float
    p_site: float
    g_star: float
    c_opt: float
    v_star: float
    C_delta: float
    delta: float
    t_star: float
    z_c: float
    theta: float
    m_c: float
    inequalities: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(v["passed"] for v in self.inequalities.values())

    def as_dict(self):
        out = {k: getattr(self, k) for k in (
            "d", "q", "a", "n_star", "q0", "h_value", "p_site", "g_star",
            "c_opt", "v_star", "C_delta", "delta", "t_star", "z_c", "theta",
            "m_c")}
        out["inequalities"] = self.inequalities
        out["passed"] = self.passed
        return out


def choose_parameters(spec, q, n_max=10 ** 6, wells_tol=1e-10):
    """Assemble the full certificate for a model at thinning probability q.

    Picks a from the Wells rule, the smallest n_star opening the block
    condition h(n, q) > p_site(d), the midpoint q0 of its admissible
    interval, then g_star and z_c = 1 / (t_star (1 - q0)).
    """
    d = spec.d
    if d < 2:
        raise ValueError("the percolation certificate needs d >= 2")
    if d not in P_SITE:
        raise ValueError("no embedded site threshold for d = %d" % d)
    p_site = P_SITE[d]

    a = wells_threshold(spec.chi, tol=wells_tol)
    coupling_ok, coupling_slack = coupling_condition(spec.phi.phi_star, a, q)

    n_star = None
    for n in range(1, n_max + 1):
        if h_block(n, q) > p_site:
            n_star = n
            break
    if n_star is None:
        raise ValueError("h(n, q) never exceeds p_site up to n_max")
    h_val = h_block(n_star, q)

    q0 = 0.5 * (p_site / h_val + 1.0)
    gs = g_star(spec, n_star)
    t_star = gs.g_star / n_star if gs.g_star > 0 else 0.0
    z_c = 1.0 / (t_star * (1.0 - q0)) if t_star > 0 else math.inf
    theta = p_site / 2.0
    m_c = a * theta * theta / 2.0

    ineq = {
        "coupling": {"passed": coupling_ok, "slack": coupling_slack,
                     "phi_star": spec.phi.phi_star},
        "block_opening": {"passed": h_val > p_site, "h": h_val,
                          "p_site": p_site},
        "site_condition_A": {"passed": q0 * h_val > p_site,
                             "value": q0 * h_val, "p_site": p_site},
        "q0_admissible": {"passed": 0.0 < q0 < 1.0, "q0": q0},
        "g_star_positive": {"passed": gs.ok and gs.g_star > 0.0,
                            "g_star": gs.g_star},
        "range_relation": {"passed": spec.r < spec.R / 4.0, "r": spec.r,
                           "R_quarter": spec.R / 4.0},
        "theta_interval": {"passed": 0.0 < theta < 0.5, "theta": theta},
    }
    return CriteriaReport(d=d, q=q, a=a, n_star=n_star, q0=q0, h_value=h_val,
                          p_site=p_site, g_star=gs.g_star, c_opt=gs.c_opt,
                          v_star=gs.v_star, C_delta=gs.C_delta, delta=gs.delta,
                          t_star=t_star, z_c=z_c, theta=theta, m_c=m_c,
                          inequalities=ineq)
