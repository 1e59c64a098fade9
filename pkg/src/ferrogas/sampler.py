"""Reference samplers: Poisson draws, grand-canonical MCMC and spin sweeps.

This module is the slow, fully general implementation; the numba kernels
in `_fast` reproduce it for the two-point spin family at production scale.
One MCMC "sweep" is a fixed number of elementary moves followed by one
systematic heat-bath pass over the spins.
"""

import math
from dataclasses import dataclass

import numpy as np

from .config_space import MarkedConfiguration, Region, cell_center
from .interaction import conditional_energies

__all__ = [
    "BoundaryCondition",
    "MoveMix",
    "ChainState",
    "chain_rng",
    "sample_poisson_marked",
    "mcmc_step",
    "quenched_spin_sweep",
    "ExactSpinMeasure",
    "exact_spin_measure",
    "run_chain",
]


def chain_rng(seed, chain_index=0):
    """The fixed reproducibility contract: Philox keyed by seed XOR chain."""
    return np.random.Generator(np.random.Philox(key=seed ^ chain_index))


def collar_width_cells(spec):
    return int(math.ceil(spec.interaction_range / spec.l))


@dataclass
class BoundaryCondition:
    """Frozen configuration on the collar of cells around the region."""

    collar: MarkedConfiguration
    kind: str                    # plus / minus / free / custom
    n_star: int = 0
    a: float = 0.0

    @classmethod
    def free(cls, region, spec):
        return cls(MarkedConfiguration(spec.d, spec.l), "free")

    @classmethod
    def plus(cls, region, spec, n_star, a, sign=+1):
        """n_star points per collar cell on a centered sub-grid, spins sign*a.

        The sub-grid pitch must exceed the repulsion range r so the frozen
        boundary carries finite position energy.
        """
        m = int(math.ceil(n_star ** (1.0 / spec.d)))
        pitch = spec.l / m
        if pitch <= spec.r:
            raise ValueError("cannot place %d points per cell with pitch > r"
                             % n_star)
        offsets = []
        axes = [np.arange(m) for _ in range(spec.d)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, spec.d)
        for row in grid[:n_star]:
            offsets.append((row + 0.5) * pitch - spec.l / 2.0)
        collar = MarkedConfiguration(spec.d, spec.l)
        for k in region.collar(collar_width_cells(spec)):
            center = cell_center(k, spec.l)
            for off in offsets:
                collar.add(center + off, sign * a)
        kind = "plus" if sign > 0 else "minus"
        return cls(collar, kind, n_star=n_star, a=a)

    @classmethod
    def minus(cls, region, spec, n_star, a):
        return cls.plus(region, spec, n_star, a, sign=-1)


@dataclass
class MoveMix:
    """Move probabilities; birth and death must match for the MH ratios."""

    birth: float = 0.35
    death: float = 0.35
    translate: float = 0.20
    spin_resample: float = 0.10

    def __post_init__(self):
        probs = (self.birth, self.death, self.translate, self.spin_resample)
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError("move probabilities must be >= 0 and sum to 1")
        if abs(self.birth - self.death) > 1e-12:
            raise ValueError("birth and death probabilities must be equal")


class ChainState:
    """One MCMC chain: configuration, boundary, cached energies, RNG stream."""

    def __init__(self, region, spec, boundary, rng, config=None):
        self.region = region
        self.spec = spec
        self.boundary = boundary
        self.rng = rng
        self.config = config if config is not None else MarkedConfiguration(
            spec.d, spec.l)
        self.counters = {"birth": 0, "death": 0, "translate": 0,
                         "spin_resample": 0, "accepted": 0, "rejected": 0}
        self.resync_energy()

    def resync_energy(self):
        h, e = conditional_energies(self.config, self.boundary.collar, self.spec)
        self.H = h
        self.E = e
        return h, e

    def energy_drift(self):
        """Relative mismatch between the cache and a full recomputation."""
        h, e = conditional_energies(self.config, self.boundary.collar, self.spec)
        scale = max(1.0, abs(h) + abs(e))
        return (abs(h - self.H) + abs(e - self.E)) / scale

    def local_energies(self, x, s, exclude=None):
        """(dH, dE) of inserting (x, s): interactions with config and collar."""
        spec = self.spec
        dh = 0.0
        de = 0.0
        for conf in (self.config, self.boundary.collar):
            excl = exclude if conf is self.config else None
            for j in conf.neighbors_within(x, spec.interaction_range, exclude=excl):
                dist = float(np.linalg.norm(conf.positions[j] - x))
                dh += spec.Phi.value(dist)
                de -= spec.phi.value(dist) * s * conf.spins[j]
        return dh, de

    def local_field(self, x, exclude=None):
        """Local spin field h(x) = sum over neighbours of phi(x - y) sigma_y."""
        spec = self.spec
        h = 0.0
        for conf in (self.config, self.boundary.collar):
            excl = exclude if conf is self.config else None
            for j in conf.neighbors_within(x, spec.R, exclude=excl):
                dist = float(np.linalg.norm(conf.positions[j] - x))
                h += spec.phi.value(dist) * conf.spins[j]
        return h


def sample_poisson_marked(z, region, chi, rng, d=None):
    """Poisson(z * Vol) points uniform on the region with i.i.d. chi marks."""
    d = region.d if d is None else d
    conf = MarkedConfiguration(d, region.side)
    vol = region.volume
    if vol == 0.0:
        return conf
    n = rng.poisson(z * vol)
    if n == 0:
        return conf
    cells = region.cell_list()
    picks = rng.integers(0, len(cells), size=n)
    offsets = rng.uniform(-region.side / 2.0, region.side / 2.0, size=(n, d))
    spins = chi.sample(rng, n)
    for i in range(n):
        x = cell_center(cells[picks[i]], region.side) + offsets[i]
        conf.add(x, spins[i])
    return conf


def _uniform_point(region, rng):
    cells = region.cell_list()
    k = cells[rng.integers(0, len(cells))]
    off = rng.uniform(-region.side / 2.0, region.side / 2.0, size=region.d)
    return cell_center(k, region.side) + off


def mcmc_step(state, spec, mix, log=None):
    """One Metropolis-Hastings move preserving the finite-volume Gibbs kernel.

    Birth:  accept with min(1, z Vol / (N+1) * exp(-dH - dE)).
    Death:  accept with min(1, N / (z Vol) * exp(-dH - dE)).
    Translate: Gaussian displacement of step l/4, reflected into the region.
    Spin resample: propose sigma' ~ chi, accept with min(1, exp(-dE)).
    Any move creating infinite energy is auto-rejected.
    """
    rng = state.rng
    conf = state.config
    region = state.region
    vol = region.volume
    u = rng.random()
    mtype = ("birth" if u < mix.birth else
             "death" if u < mix.birth + mix.death else
             "translate" if u < mix.birth + mix.death + mix.translate else
             "spin_resample")
    state.counters[mtype] += 1
    accepted = False

    if mtype == "birth":
        x = _uniform_point(region, rng)
        s = float(spec.chi.sample(rng))
        dh, de = state.local_energies(x, s)
        log_ratio = math.log(spec.z * vol / (len(conf) + 1.0))
        if math.isfinite(dh):
            log_acc = log_ratio - dh - de
            if log_acc >= 0.0 or rng.random() < math.exp(log_acc):
                conf.add(x, s)
                state.H += dh
                state.E += de
                accepted = True
        if log is not None:
            log.append(("birth", dh, de, log_ratio, accepted))

    elif mtype == "death":
        n = len(conf)
        if n > 0:
            i = int(rng.integers(0, n))
            x = conf.positions[i].copy()
            s = float(conf.spins[i])
            dh, de = state.local_energies(x, s, exclude=i)
            log_ratio = math.log(n / (spec.z * vol))
            log_acc = log_ratio + dh + de
            if log_acc >= 0.0 or rng.random() < math.exp(log_acc):
                conf.remove(i)
                state.H -= dh
                state.E -= de
                accepted = True
            if log is not None:
                log.append(("death", dh, de, log_ratio, accepted))

    elif mtype == "translate":
        n = len(conf)
        if n > 0:
            i = int(rng.integers(0, n))
            x_old = conf.positions[i].copy()
            s = float(conf.spins[i])
            x_new = x_old + rng.normal(0.0, spec.l / 4.0, size=spec.d)
            x_new = _reflect(x_new, region)
            if region.contains_point(x_new):
                dh_old, de_old = state.local_energies(x_old, s, exclude=i)
                dh_new, de_new = state.local_energies(x_new, s, exclude=i)
                ddh = dh_new - dh_old
                dde = de_new - de_old
                if math.isfinite(ddh):
                    log_acc = -ddh - dde
                    if log_acc >= 0.0 or rng.random() < math.exp(log_acc):
                        conf.remove(i)
                        conf.add(x_new, s)
                        state.H += ddh
                        state.E += dde
                        accepted = True

    else:  # spin_resample
        n = len(conf)
        if n > 0:
            i = int(rng.integers(0, n))
            x = conf.positions[i]
            s_old = float(conf.spins[i])
            s_new = float(spec.chi.sample(rng))
            h = state.local_field(x, exclude=i)
            dde = -(s_new - s_old) * h
            if dde <= 0.0 or rng.random() < math.exp(-dde):
                conf.spins[i] = s_new
                state.E += dde
                accepted = True

    state.counters["accepted" if accepted else "rejected"] += 1
    return state


def _reflect(x, region):
    """Mirror-reflect a proposal into the bounding box of the region."""
    out = np.array(x, dtype=float)
    for ax, (lo_ax, hi_ax) in enumerate(region.bounding_box):
        span = hi_ax - lo_ax
        v = (out[ax] - lo_ax) % (2.0 * span)
        out[ax] = lo_ax + (v if v <= span else 2.0 * span - v)
    return out


# --- quenched spin layer -----------------------------------------------------

_TILT_CACHE = {}
_TILT_BUCKET = 1e-3
_TILT_NODES = 2048


def _tilted_table(chi, h):
    """Inverse-CDF table of the tilted density exp(h s) chi(ds).

    The field is discretized to buckets of 1e-3; tables are cached per
    bucket and interpolated on 2048 nodes.
    """
    bucket = int(round(h / _TILT_BUCKET))
    key = (chi.family, chi.param, bucket)
    tab = _TILT_CACHE.get(key)
    if tab is not None:
        return tab
    hb = bucket * _TILT_BUCKET
    p = chi.param
    if chi.family == "uniform":
        s = np.linspace(-p, p, _TILT_NODES)
        logw = hb * s
    elif chi.family == "quartic":
        cut = chi._cut + max(0.0, abs(hb) / (4.0 * p)) ** (1.0 / 3.0)
        s = np.linspace(-cut, cut, _TILT_NODES)
        logw = hb * s - p * s ** 4
    elif chi.family == "gaussian":
        s = np.linspace(-8 * p + hb * p * p, 8 * p + hb * p * p, _TILT_NODES)
        logw = hb * s - s * s / (2.0 * p * p)
    else:
        raise ValueError("tilted table only for continuous families")
    logw -= logw.max()
    w = np.exp(logw)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(s))])
    cdf /= cdf[-1]
    # strictly increasing for interpolation
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    tab = (cdf[keep], s[keep])
    if len(_TILT_CACHE) > 8192:
        _TILT_CACHE.clear()
    _TILT_CACHE[key] = tab
    return tab


def heat_bath_draw(chi, h, rng):
    """Draw a spin from the single-site conditional exp(sigma h) chi(dsigma)."""
    if chi.family == "two_point":
        a = chi.param
        p_plus = 1.0 / (1.0 + math.exp(-2.0 * a * h)) if abs(a * h) < 350 else (
            1.0 if h > 0 else 0.0)
        return a if rng.random() < p_plus else -a
    cdf, s = _tilted_table(chi, h)
    return float(np.interp(rng.random(), cdf, s))


def quenched_spin_sweep(conf, boundary, spec, rng):
    """One systematic pass of exact single-site heat-bath updates in place."""
    for i in range(len(conf)):
        x = conf.positions[i]
        h = 0.0
        for other in (conf, boundary.collar):
            excl = i if other is conf else None
            for j in other.neighbors_within(x, spec.R, exclude=excl):
                dist = float(np.linalg.norm(other.positions[j] - x))
                h += spec.phi.value(dist) * other.spins[j]
        conf.spins[i] = heat_bath_draw(spec.chi, h, rng)
    return conf


# --- exact small-system oracle ----------------------------------------------

class ExactSpinMeasure:
    """Exact spin distribution over {-a, +a}^N at frozen positions."""

    def __init__(self, prob, a, n):
        self.prob = prob
        self.a = a
        self.n = n

    def _signs(self, i):
        idx = np.arange(2 ** self.n)
        return np.where((idx >> i) & 1, 1.0, -1.0)

    def marginal_plus(self, i):
        """pi(sigma_i = +a)."""
        return float(self.prob[self._signs(i) > 0].sum())

    def mean_spin(self, i):
        return float(self.a * (self.prob * self._signs(i)).sum())

    def pair_correlation(self, i, j):
        """<s_i s_j> with spins rescaled to +-1."""
        return float((self.prob * self._signs(i) * self._signs(j)).sum())


def exact_spin_measure(conf, boundary, spec, use_floor_coupling=False):
    """Full enumeration of the quenched two-point spin measure (N <= 20)."""
    if spec.chi.family != "two_point":
        raise ValueError("exact enumeration requires the two-point family")
    n = len(conf)
    if n > 20:
        raise ValueError("exact enumeration limited to N <= 20")
    a = spec.chi.param
    coupling = spec.phi.floor() if use_floor_coupling else spec.phi

    K = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist = float(np.linalg.norm(conf.positions[i] - conf.positions[j]))
            K[i, j] = a * a * coupling.value(dist)
    b = np.zeros(n)
    for i in range(n):
        x = conf.positions[i]
        for j in boundary.collar.neighbors_within(x, spec.R):
            dist = float(np.linalg.norm(boundary.collar.positions[j] - x))
            b[i] += a * coupling.value(dist) * (boundary.collar.spins[j] / a
                                                if a else 0.0) * a
    # b_i = a * sum phi * sigma_y; the line above keeps sigma_y in spin units
    idx = np.arange(2 ** n)
    signs = np.where(((idx[:, None] >> np.arange(n)[None, :]) & 1), 1.0, -1.0)
    energy = signs @ b
    for i in range(n):
        for j in range(i + 1, n):
            if K[i, j] != 0.0:
                energy = energy + K[i, j] * signs[:, i] * signs[:, j]
    energy -= energy.max()
    w = np.exp(energy)
    return ExactSpinMeasure(w / w.sum(), a, n)


# --- full two-stage chain ----------------------------------------------------

def run_chain(state, spec, mix, sweeps, burn_in=0, thin=1,
              observables=("N", "M", "H", "E", "cell0_count"),
              moves_per_sweep=None):
    """Run the two-stage chain: per sweep, a fixed number of MH moves
    followed by one spin heat-bath sweep.

    `moves_per_sweep` defaults to 8 per region cell and must never be
    tied to the chain state: a state-dependent move count between
    recordings is a state-dependent time change and biases the recorded
    marginal.  Returns a dict of numpy arrays keyed by observable (plus
    "sweep"), recorded every `thin` sweeps after `burn_in`.
    Deterministic given the state's RNG stream.
    """
    if burn_in >= sweeps and sweeps > 0:
        raise ValueError("burn_in must be smaller than sweeps")
    if moves_per_sweep is None:
        moves_per_sweep = max(16, 8 * len(state.region.cells))
    rows = {name: [] for name in ("sweep",) + tuple(observables)}
    for sweep in range(sweeps):
        for _ in range(moves_per_sweep):
            mcmc_step(state, spec, mix)
        if spec.phi.phi_star > 0:
            quenched_spin_sweep(state.config, state.boundary, spec, state.rng)
            state.resync_energy()
        if sweep >= burn_in and (sweep - burn_in) % thin == 0:
            vals = _observe(state, observables)
            rows["sweep"].append(sweep)
            for name in observables:
                rows[name].append(vals[name])
    return {k: np.asarray(v) for k, v in rows.items()}


def _observe(state, observables):
    conf = state.config
    d = state.spec.d
    out = {}
    for name in observables:
        if name == "N":
            out[name] = len(conf)
        elif name == "M":
            out[name] = float(np.sum(conf.spins[conf.cell_points((0,) * d)]))
        elif name == "H":
            out[name] = state.H
        elif name == "E":
            out[name] = state.E
        elif name == "cell0_count":
            out[name] = conf.cell_count((0,) * d)
        elif name == "cell_counts":
            out[name] = [conf.cell_count(k) for k in state.region.cell_list()]
        else:
            raise ValueError("unknown observable %r" % name)
    return out


def trace_to_csv(trace, path):
    """CSV with columns sweep, N, M, H, E, cell0_count."""
    cols = ["sweep", "N", "M", "H", "E", "cell0_count"]
    lines = [",".join(cols)]
    for i in range(len(trace["sweep"])):
        lines.append(",".join(repr(float(trace[c][i])) if c != "sweep"
                              else str(int(trace[c][i])) for c in cols))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
