"""Pair potentials, energy functionals and model-assumption validation.

The pair interaction is Phi(x - x') - phi(x - x') * sigma * sigma': a
repulsive (superstable) position part of range r and an attractive
ferromagnetic spin coupling of range R, with r < R/4.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .config_space import cell_side

__all__ = [
    "PositionPotential",
    "SpinCoupling",
    "SpinMeasure",
    "ModelSpec",
    "ValidationReport",
    "pair_energy",
    "position_energy",
    "spin_energy",
    "conditional_energies",
    "validate_model",
    "validate_superstability",
    "sphere_area",
    "ball_volume",
]


def sphere_area(d):
    """Surface area of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def ball_volume(d, radius):
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * radius ** d


@dataclass(frozen=True)
class PositionPotential:
    """Repulsive position-position potential, zero beyond range r.

    The built-in family is `singular_truncated`:
        Phi(x) = c * (|x|^(-d(1+eps)) - r^(-d(1+eps)))   for 0 < |x| <= r,
        Phi(x) = 0 for |x| > r,  Phi(0) = +inf.
    It is nonnegative, diverges at the origin and realizes strong
    superstability for any integer v > 2.
    """

    c: float
    eps: float
    r: float
    d: int
    family: str = "singular_truncated"

    def __post_init__(self):
        if self.family not in ("singular_truncated", "zero"):
            raise ValueError("unknown potential family %r" % self.family)
        if self.family == "zero":
            return
        if self.c <= 0 or self.eps <= 0 or self.r <= 0:
            raise ValueError("c, eps, r must be positive")

    @classmethod
    def zero(cls, d, r=1.0):
        """Identically-zero potential (ideal-gas test configurations)."""
        return cls(c=0.0, eps=1.0, r=r, d=d, family="zero")

    @property
    def exponent(self):
        return self.d * (1.0 + self.eps)

    def value(self, dist):
        """Phi at separation `dist` (scalar or array)."""
        dist = np.asarray(dist, dtype=float)
        if self.family == "zero":
            z = np.zeros_like(dist)
            return float(z) if z.ndim == 0 else z
        p = self.exponent
        with np.errstate(divide="ignore"):
            v = self.c * (dist ** -p - self.r ** -p)
        v = np.where(dist > self.r, 0.0, v)
        v = np.where(dist == 0.0, np.inf, v)
        return float(v) if v.ndim == 0 else v

    def tail_integral(self, delta):
        """C_delta = integral of Phi_+ over |x| >= delta (radial quadrature)."""
        if delta <= 0:
            raise ValueError("delta must be positive")
        if delta >= self.r or self.family == "zero":
            return 0.0
        area = sphere_area(self.d)
        val, _ = integrate.quad(
            lambda s: self.value(s) * area * s ** (self.d - 1), delta, self.r,
            limit=200)
        return val


@dataclass(frozen=True)
class SpinCoupling:
    """Ferromagnetic spin-spin coupling phi >= phi_star on |x| <= R, 0 beyond.

    `profile` is either "indicator" (phi = phi_star inside the range) or a
    radial table (radii, values) interpolated linearly, with values >=
    phi_star on [0, R].
    """

    phi_star: float
    R: float
    profile: object = "indicator"

    def __post_init__(self):
        if self.phi_star < 0 or self.R <= 0:
            raise ValueError("phi_star must be >= 0 and R positive")
        if self.phi_star == 0.0 and self.profile != "indicator":
            raise ValueError("zero coupling only supported as an indicator")
        if self.profile != "indicator":
            radii, values = self.profile
            radii = np.asarray(radii, dtype=float)
            values = np.asarray(values, dtype=float)
            if radii[0] != 0.0 or radii[-1] != self.R:
                raise ValueError("profile table must span [0, R]")
            if np.any(values < self.phi_star):
                raise ValueError("profile table must stay >= phi_star on [0, R]")
            object.__setattr__(self, "profile", (radii, values))

    @property
    def maximum(self):
        if self.profile == "indicator":
            return self.phi_star
        return float(np.max(self.profile[1]))

    def value(self, dist):
        dist = np.asarray(dist, dtype=float)
        if self.profile == "indicator":
            v = np.where(dist <= self.R, self.phi_star, 0.0)
        else:
            radii, values = self.profile
            v = np.where(dist <= self.R, np.interp(dist, radii, values), 0.0)
        return float(v) if v.ndim == 0 else v

    def floor(self):
        """The comparison coupling phi~ = phi_star * 1{|x| <= R}."""
        return SpinCoupling(self.phi_star, self.R, "indicator")


class SpinMeasure:
    """Symmetric single-spin distribution chi.

    Families: two_point(a) = (delta_-a + delta_a)/2, uniform(b) on [-b, b],
    quartic(beta) with density proportional to exp(-beta s^4), and
    gaussian(s) used as a closed-form test reference.
    """

    FAMILIES = ("two_point", "uniform", "quartic", "gaussian")

    def __init__(self, family, param):
        if family not in self.FAMILIES:
            raise ValueError("unknown spin measure family %r" % family)
        if param <= 0:
            raise ValueError("family parameter must be positive")
        self.family = family
        self.param = float(param)
        if family == "quartic":
            # normalization and a practical support cutoff for quadrature
            beta = self.param
            self._cut = (40.0 / beta) ** 0.25
            z, _ = integrate.quad(lambda s: math.exp(-beta * s ** 4),
                                  -self._cut, self._cut)
            self._norm = z

    @classmethod
    def two_point(cls, a):
        return cls("two_point", a)

    @classmethod
    def uniform(cls, b):
        return cls("uniform", b)

    @classmethod
    def quartic(cls, beta):
        return cls("quartic", beta)

    @classmethod
    def gaussian(cls, s=1.0):
        return cls("gaussian", s)

    def __repr__(self):
        return "SpinMeasure(%s, %r)" % (self.family, self.param)

    def sample(self, rng, size=None):
        p = self.param
        if self.family == "two_point":
            return p * np.where(rng.random(size) < 0.5, 1.0, -1.0)
        if self.family == "uniform":
            return rng.uniform(-p, p, size)
        if self.family == "gaussian":
            return rng.normal(0.0, p, size)
        # quartic: inverse-CDF on a fixed fine grid
        grid, cdf = self._quartic_cdf_grid()
        u = rng.random(size)
        return np.interp(u, cdf, grid)

    def _quartic_cdf_grid(self, npts=4097):
        grid = np.linspace(-self._cut, self._cut, npts)
        dens = np.exp(-self.param * grid ** 4) / self._norm
        cdf = integrate.cumulative_trapezoid(dens, grid, initial=0.0)
        cdf /= cdf[-1]
        return grid, cdf

    def cdf(self, x):
        """P(sigma <= x)."""
        p = self.param
        if self.family == "two_point":
            if x < -p:
                return 0.0
            if x < p:
                return 0.5
            return 1.0
        if self.family == "uniform":
            return float(np.clip((x + p) / (2.0 * p), 0.0, 1.0))
        if self.family == "gaussian":
            return 0.5 * (1.0 + math.erf(x / (p * math.sqrt(2.0))))
        grid, cdf = self._quartic_cdf_grid()
        return float(np.interp(x, grid, cdf))

    def upper_mass(self, x):
        """chi([x, +inf)); atoms at x are included (two_point family)."""
        if self.family == "two_point":
            p = self.param
            if x <= -p:
                return 1.0
            if x <= p:
                return 0.5
            return 0.0
        return 1.0 - self.cdf(x)

    def interval_mass(self, lo, hi):
        """chi([lo, hi]) with closed endpoints."""
        if self.family == "two_point":
            p = self.param
            return 0.5 * ((lo <= -p <= hi) + (lo <= p <= hi))
        return self.cdf(hi) - self.cdf(lo)

    def exp_moment(self, kappa, u):
        """Numeric integral of exp(kappa |s|^u) chi(ds); inf if divergent."""
        if self.family == "two_point":
            return math.exp(kappa * self.param ** u)
        if self.family == "uniform":
            b = self.param
            val, _ = integrate.quad(
                lambda s: math.exp(kappa * abs(s) ** u) / (2 * b), -b, b)
            return val
        if self.family == "quartic":
            if u >= 4.0:
                return math.inf
            beta = self.param
            f = lambda s: math.exp(kappa * abs(s) ** u - beta * s ** 4) / self._norm
            val, _ = integrate.quad(f, -self._cut, self._cut)
            return val
        # gaussian
        if u >= 2.0:
            return math.inf
        s0 = self.param
        f = lambda s: (math.exp(kappa * abs(s) ** u - s * s / (2 * s0 * s0))
                       / (s0 * math.sqrt(2 * math.pi)))
        val, _ = integrate.quad(f, -10 * s0, 10 * s0)
        return val


@dataclass
class ModelSpec:
    """Full parameter bundle of the model.

    `epsilon` doubles as the singularity margin of the position potential
    and the superstability exponent margin in H >= A sum N^(v+eps) - B N.
    The cell side l = R / (2 sqrt(d)) is derived, never set.
    """

    d: int
    Phi: PositionPotential
    phi: SpinCoupling
    chi: SpinMeasure
    z: float
    v: int = 3
    w: float = 4.0
    u: float = 5.0
    kappa: float = 1.0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.z <= 0:
            raise ValueError("activity z must be positive")
        if self.Phi.d != self.d:
            raise ValueError("potential dimension differs from model dimension")

    @classmethod
    def default(cls, d=2, c=1.0, eps=1.0, r=0.5, R=2.5, phi_star=1.0,
                chi=None, z=1.0, v=3, w=4.0, u=5.0, kappa=1.0,
                phi_profile="indicator"):
        chi = chi if chi is not None else SpinMeasure.two_point(1.0)
        return cls(d=d,
                   Phi=PositionPotential(c=c, eps=eps, r=r, d=d),
                   phi=SpinCoupling(phi_star=phi_star, R=R, profile=phi_profile),
                   chi=chi, z=z, v=v, w=w, u=u, kappa=kappa)

    @property
    def epsilon(self):
        return self.Phi.eps

    @property
    def r(self):
        return self.Phi.r

    @property
    def R(self):
        return self.phi.R

    @property
    def l(self):
        return cell_side(self.R, self.d)

    @property
    def interaction_range(self):
        return max(self.r, self.R)

    def with_activity(self, z):
        return ModelSpec(d=self.d, Phi=self.Phi, phi=self.phi, chi=self.chi,
                         z=z, v=self.v, w=self.w, u=self.u, kappa=self.kappa)


def pair_energy(x, s, x2, s2, spec):
    """Phi(x - x') - phi(x - x') s s'; +inf allowed, coincident points illegal."""
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    dist = float(np.linalg.norm(x - x2))
    if dist == 0.0:
        raise ValueError("coincident positions")
    return spec.Phi.value(dist) - spec.phi.value(dist) * s * s2


def _pair_sums(conf, spec):
    """(sum Phi, sum phi*s*s') over unordered pairs, via the cell map."""
    h = 0.0
    e = 0.0
    rng = spec.interaction_range
    for i in range(len(conf)):
        x = conf.positions[i]
        for j in conf.neighbors_within(x, rng, exclude=i):
            if j <= i:
                continue
            dist = float(np.linalg.norm(conf.positions[j] - x))
            h += spec.Phi.value(dist)
            e += spec.phi.value(dist) * conf.spins[i] * conf.spins[j]
    return h, e


def position_energy(conf, spec):
    """H = sum over pairs of Phi(x - y); may be +inf."""
    return _pair_sums(conf, spec)[0]


def spin_energy(conf, spec):
    """E = -sum over pairs of phi(x - y) sigma_x sigma_y."""
    return -_pair_sums(conf, spec)[1]


def cross_energies(inside, boundary, spec):
    """(sum Phi, -sum phi*s*s') over inside x boundary pairs."""
    h = 0.0
    e = 0.0
    rng = spec.interaction_range
    from .config_space import cell_index

    for i in range(len(inside)):
        x = inside.positions[i]
        si = inside.spins[i]
        for j in boundary.cell_map.get(cell_index(x, boundary.side), ()):
            if np.array_equal(boundary.positions[j], x):
                raise ValueError("inside and boundary configurations overlap")
        for j in boundary.neighbors_within(x, rng):
            dist = float(np.linalg.norm(boundary.positions[j] - x))
            h += spec.Phi.value(dist)
            e -= spec.phi.value(dist) * si * boundary.spins[j]
    return h, e


def conditional_energies(inside, boundary, spec):
    """(H(eta|gamma), E(sigma_eta|sigma_gamma)) with exact finite-range cross terms."""
    h_in, e_pair = _pair_sums(inside, spec)
    h_x, e_x = cross_energies(inside, boundary, spec)
    return h_in + h_x, -e_pair + e_x


@dataclass
class ValidationReport:
    """Pass/fail per model-assumption clause, with the computed numbers."""

    clauses: dict = field(default_factory=dict)

    def record(self, name, passed, **info):
        self.clauses[name] = {"passed": bool(passed), **info}

    @property
    def passed(self):
        return all(c["passed"] for c in self.clauses.values())

    def as_dict(self):
        return {"passed": self.passed, "clauses": self.clauses}


def validate_model(spec, deltas=(0.25, 0.5), n_spin_samples=20000, seed=7):
    """Check every clause of the model assumptions; failures go in the report.

    Clause numbering: (1) finite range of Phi_+, (2) integrability C_delta,
    (3) superstability exponents usable (v > 2), (4) coupling floor,
    (5) symmetry and exponential moment of chi, (6) r < R/4, plus the
    growth-exponent inequalities tying (v, w, u) together.
    """
    rep = ValidationReport()
    r, R = spec.r, spec.R

    rep.record("finite_range", spec.Phi.value(r * 1.0000001) == 0.0, r=r)

    cds = {}
    ok = True
    for delta in deltas:
        cd = spec.Phi.tail_integral(delta)
        cds[delta] = cd
        ok = ok and math.isfinite(cd)
    rep.record("tail_integrals", ok, C_delta=cds)

    rep.record("superstability_exponents", spec.v > 2 and spec.epsilon > 0,
               v=spec.v, eps=spec.epsilon)

    rep.record("coupling_floor",
               spec.phi.value(0.5 * R) >= spec.phi.phi_star
               and spec.phi.value(R * 1.0000001) == 0.0,
               phi_star=spec.phi.phi_star, R=R)

    rng = np.random.default_rng(seed)
    draws = spec.chi.sample(rng, n_spin_samples)
    odd1 = float(np.mean(draws))
    odd3 = float(np.mean(draws ** 3))
    scale = float(np.mean(np.abs(draws))) + 1e-300
    sym_ok = (abs(odd1) < 5.0 * scale / math.sqrt(n_spin_samples)
              and abs(odd3) < 5.0 * float(np.mean(np.abs(draws) ** 3)) /
              math.sqrt(n_spin_samples))
    mom = spec.chi.exp_moment(spec.kappa, spec.u)
    rep.record("spin_measure", sym_ok and math.isfinite(mom)
               and spec.chi.interval_mass(0.0, 0.0) < 1.0,
               odd_moment_1=odd1, odd_moment_3=odd3, exp_moment=mom)

    rep.record("range_relation", r < R / 4.0, r=r, R_quarter=R / 4.0)

    vw_ok = spec.w >= 2.0 * (spec.v - 1) / (spec.v - 2)
    u_ok = spec.u > spec.w
    u_eps_ok = spec.u > 2.0 * (spec.v + spec.epsilon - 1) / (spec.v + spec.epsilon - 2)
    rep.record("growth_exponents", vw_ok and u_ok and u_eps_ok,
               v=spec.v, w=spec.w, u=spec.u, eps=spec.epsilon)
    return rep


def validate_superstability(spec, trials=200, rng=None, points_low=1,
                            points_high=12, cells=2, recheck=None):
    """Empirical certificate for H >= A sum_k N_k^(v+eps) - B N.

    Samples random configurations in a small block of cells, fits the
    largest A compatible with B = A (single-point configurations force
    B >= A), and rechecks the bound on fresh samples.  Returns
    (A_fit, B_fit, passed).
    """
    from .config_space import MarkedConfiguration, cell_indices

    rng = np.random.default_rng(rng)
    l = spec.l
    expo = spec.v + spec.epsilon

    def one_batch(n_trials):
        ratios = []
        stats = []
        for _ in range(n_trials):
            n = int(rng.integers(points_low, points_high + 1))
            pos = rng.uniform(-cells * l / 2.0, cells * l / 2.0, size=(n, spec.d))
            conf = MarkedConfiguration.from_arrays(pos, np.zeros(n), l)
            h = position_energy(conf, spec)
            keys = cell_indices(pos, l)
            _, counts = np.unique(keys, axis=0, return_counts=True)
            s = float(np.sum(counts.astype(float) ** expo))
            stats.append((h, s, n))
            denom = s - n
            if denom > 0 and math.isfinite(h):
                ratios.append(h / denom)
        return stats, ratios

    stats, ratios = one_batch(trials)
    a_fit = min(ratios) if ratios else 0.0
    a_fit = max(a_fit, 0.0)
    b_fit = a_fit
    stats2, _ = one_batch(recheck if recheck is not None else trials)
    passed = all(h + 1e-9 >= a_fit * s - b_fit * n or not math.isfinite(h)
                 for h, s, n in stats + stats2)
    return a_fit, b_fit, passed
