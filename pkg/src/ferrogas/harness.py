"""Experiment configuration, the headline experiments, and report emission.

Configs are flat key-value documents with dotted sections; unknown keys
are hard errors (silent typos in physics configs are the classic failure
mode).  Reports are plain dict trees with enough provenance (config
hash, seed) to re-run any row exactly, and serialize byte-identically.
"""

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .config_space import Region
from .criteria import choose_parameters
from .interaction import (ModelSpec, PositionPotential, SpinCoupling,
                          SpinMeasure, validate_model)
from .percolation import percolation_probability
from .sampler import (BoundaryCondition, ChainState, MoveMix, chain_rng,
                      run_chain)

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "ConfigError",
    "run_phase_experiment",
    "run_percolation_experiment",
    "run_criteria",
    "run_validate",
    "emit",
]

VERSION = "0.1.0"


class ConfigError(ValueError):
    pass


# key -> (parser, default).  Lists are comma-separated in the file.
def _floats(s):
    return [float(v) for v in _as_list(s)]


def _ints(s):
    return [int(v) for v in _as_list(s)]


def _strs(s):
    return [str(v) for v in _as_list(s)]


def _as_list(s):
    if isinstance(s, (list, tuple)):
        return list(s)
    s = s.strip()
    if not s:
        return []
    return [v.strip() for v in s.split(",")]


_SCHEMA = {
    "model.d": (int, 2),
    "model.c": (float, 1.0),
    "model.eps": (float, 1.0),
    "model.r": (float, 0.25),
    "model.R": (float, 2.5),
    "model.phi_star": (float, 3.0),
    "model.chi_family": (str, "two_point"),
    "model.chi_param": (float, 1.0),
    "model.z": (float, 1.0),
    "model.v": (int, 3),
    "model.w": (float, 4.0),
    "model.u": (float, 5.0),
    "model.kappa": (float, 1.0),
    "geometry.box_cells": (_ints, [3, 5, 7]),
    "mcmc.sweeps": (int, 400),
    "mcmc.burn_in": (int, 200),
    "mcmc.thin": (int, 1),
    "mcmc.chains": (int, 4),
    "mcmc.seed": (int, 1),
    "mcmc.snap_every": (int, 5),
    "experiment.tag": (str, "phase"),
    "grids.z": (_floats, []),       # empty -> auto: 2 z_c from the criteria
    "grids.q": (_floats, [0.0, 0.5, 0.99]),
    "grids.boundary": (_strs, ["plus", "minus", "free"]),
    "criteria.q": (float, 0.99),
}

_TAGS = ("phase", "percolation", "criteria", "validate")


@dataclass
class ExperimentConfig:
    """Validated flat config; access values via cfg[key]."""

    values: dict = field(default_factory=dict)

    def __post_init__(self):
        full = {k: d for k, (_p, d) in _SCHEMA.items()}
        for k, v in self.values.items():
            if k not in _SCHEMA:
                raise ConfigError("unknown config key %r" % k)
            full[k] = _SCHEMA[k][0](v)
        if full["experiment.tag"] not in _TAGS:
            raise ConfigError("experiment.tag must be one of %s" % (_TAGS,))
        for b in full["grids.boundary"]:
            if b not in ("plus", "minus", "free"):
                raise ConfigError("unknown boundary class %r" % b)
        self.values = full

    def __getitem__(self, key):
        return self.values[key]

    @classmethod
    def from_file(cls, path):
        values = {}
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError("%s:%d: expected 'key = value'"
                                      % (path, lineno))
                k, v = line.split("=", 1)
                values[k.strip()] = v.strip()
        return cls(values)

    def to_text(self):
        lines = ["%s = %s" % (k, _fmt_value(self.values[k]))
                 for k in sorted(self.values)]
        return "\n".join(lines) + "\n"

    def content_hash(self):
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    def model(self, z=None):
        v = self.values
        chi = SpinMeasure(v["model.chi_family"], v["model.chi_param"])
        return ModelSpec(
            d=v["model.d"],
            Phi=PositionPotential(c=v["model.c"], eps=v["model.eps"],
                                  r=v["model.r"], d=v["model.d"]),
            phi=SpinCoupling(phi_star=v["model.phi_star"], R=v["model.R"]),
            chi=chi, z=v["model.z"] if z is None else z,
            v=v["model.v"], w=v["model.w"], u=v["model.u"],
            kappa=v["model.kappa"])

    def with_overrides(self, **kv):
        vals = dict(self.values)
        vals.update(kv)
        return ExperimentConfig(vals)


def _fmt_value(v):
    if isinstance(v, list):
        return ",".join(_fmt_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class ExperimentReport:
    """Rows plus certificate data and run provenance."""

    tag: str
    rows: list
    criteria: dict
    meta: dict

    def as_dict(self):
        return {"tag": self.tag, "rows": self.rows,
                "criteria": self.criteria, "meta": self.meta}


def _provenance(cfg, seed):
    return {"config_hash": cfg.content_hash(), "seed": seed,
            "version": VERSION}


def _validate_or_raise(cfg):
    rep = validate_model(cfg.model())
    if not rep.passed:
        bad = [k for k, c in rep.clauses.items() if not c["passed"]]
        raise ConfigError("model assumptions fail: %s" % ", ".join(bad))
    return rep


def _z_grid(cfg, crit):
    zs = cfg["grids.z"]
    if zs:
        return list(zs)
    if not math.isfinite(crit["z_c"]):
        raise ConfigError("criteria give no finite z_c; set grids.z")
    return [2.0 * crit["z_c"]]


def _run_one_chain(spec, bcells, boundary_kind, seed, chain, sweeps, burn_in,
                   thin, n_star, **extras):
    """One chain via the compiled kernel when it applies, else the
    pure-Python reference sampler."""
    from ._fast import fast_applicable, run_chain_fast

    if fast_applicable(spec, boundary_kind):
        return run_chain_fast(spec, bcells, boundary_kind, seed, chain=chain,
                              sweeps=sweeps, burn_in=burn_in, thin=thin,
                              n_star=n_star, **extras)
    region = Region.box(bcells, spec.l, d=spec.d)
    a = spec.chi.param
    if boundary_kind == "free":
        bc = BoundaryCondition.free(region, spec)
    elif boundary_kind == "plus":
        bc = BoundaryCondition.plus(region, spec, n_star, a)
    else:
        bc = BoundaryCondition.minus(region, spec, n_star, a)
    state = ChainState(region, spec, bc, chain_rng(seed, chain))
    return run_chain(state, spec, MoveMix(), sweeps, burn_in=burn_in,
                     thin=thin)


def _chain_stats(traces, key):
    """(mean, between-chain stderr, split-chain spread statistic).

    The spread statistic is a Gelman-Rubin style ratio of pooled to
    within-chain variance computed from the recorded post-burn-in trace
    of each chain; values near 1 indicate agreement.
    """
    means = np.array([float(np.mean(t[key])) for t in traces])
    variances = np.array([float(np.var(t[key], ddof=1))
                          if len(t[key]) > 1 else 0.0 for t in traces])
    m = len(traces)
    mean = float(np.mean(means))
    stderr = float(np.std(means, ddof=1) / math.sqrt(m)) if m > 1 else float("nan")
    n = min(len(t[key]) for t in traces)
    w = float(np.mean(variances))
    if m > 1 and n > 1:
        b = n * float(np.var(means, ddof=1))
        if w > 0:
            var_hat = (n - 1) / n * w + b / n
            rhat = math.sqrt(var_hat / w)
        else:
            # frozen chains: agreeing means are fine, disagreeing are not
            rhat = 1.0 if b == 0.0 else math.inf
    else:
        rhat = 1.0
    return mean, stderr, rhat


def run_phase_experiment(cfg):
    """Magnetization-splitting table over (z, box size, boundary class).

    For each grid point, independent chains are run to completion and
    aggregated afterwards; M is the total spin of the center cell.  Rows
    whose between-chain spread statistic exceeds 1.1 are flagged as not
    equilibrated.  The sign-symmetry residual <M>_plus + <M>_minus is
    reported per (z, size).
    """
    _validate_or_raise(cfg)
    crit = run_criteria(cfg).criteria
    n_star = crit["n_star"]
    seed = cfg["mcmc.seed"]
    sweeps = cfg["mcmc.sweeps"]
    burn_in = cfg["mcmc.burn_in"]
    thin = cfg["mcmc.thin"]
    chains = cfg["mcmc.chains"]
    boundaries = cfg["grids.boundary"]

    rows = []
    residuals = {}
    for z in _z_grid(cfg, crit):
        spec = cfg.model(z=z)
        for bcells in cfg["geometry.box_cells"]:
            by_boundary = {}
            for b_idx, boundary in enumerate(boundaries):
                traces = []
                for chain in range(chains):
                    # disjoint chain indices per boundary class so plus
                    # and minus runs are statistically independent
                    traces.append(_run_one_chain(
                        spec, bcells, boundary, seed,
                        b_idx * chains + chain, sweeps, burn_in, thin,
                        n_star))
                m_mean, m_se, m_rhat = _chain_stats(traces, "M")
                n_mean, n_se, n_rhat = _chain_stats(traces, "N")
                by_boundary[boundary] = (m_mean, m_se)
                rows.append({
                    "z": z, "box_cells": bcells, "boundary": boundary,
                    "chains": chains, "sweeps": sweeps,
                    "M_mean": m_mean, "M_stderr": m_se,
                    "N_mean": n_mean, "N_stderr": n_se,
                    "equilibrated": int(max(m_rhat, n_rhat) <= 1.1),
                })
            if "plus" in by_boundary and "minus" in by_boundary:
                (mp, sp), (mm, sm) = by_boundary["plus"], by_boundary["minus"]
                residuals["z=%r,box=%d" % (z, bcells)] = {
                    "residual": mp + mm,
                    "stderr": math.hypot(sp if sp == sp else 0.0,
                                         sm if sm == sm else 0.0),
                }
    meta = _provenance(cfg, seed)
    meta["sign_symmetry"] = residuals
    return ExperimentReport("phase", rows, crit, meta)


def run_percolation_experiment(cfg):
    """perc_prob(z, q, size) table against the target level 2 theta.

    Estimates share their thinning randomness across activities, so the
    per-(q, size) estimates are a coupled family and the monotonicity
    flag in the metadata compares like with like.
    """
    _validate_or_raise(cfg)
    crit = run_criteria(cfg).criteria
    if cfg["model.d"] < 2:
        raise ConfigError("percolation experiment needs d >= 2")
    n_star = crit["n_star"]
    two_theta = 2.0 * crit["theta"]
    seed = cfg["mcmc.seed"]
    sweeps = cfg["mcmc.sweeps"]
    chains = cfg["mcmc.chains"]
    zs = _z_grid(cfg, crit)

    rows = []
    for z in zs:
        spec = cfg.model(z=z)
        for bcells in cfg["geometry.box_cells"]:
            for q in cfg["grids.q"]:
                est, se = percolation_probability(
                    spec, bcells, "plus", q, chains, sweeps, seed,
                    burn_in=cfg["mcmc.burn_in"],
                    snap_every=cfg["mcmc.snap_every"], n_star=n_star,
                    thin_seed=seed)
                rows.append({
                    "z": z, "box_cells": bcells, "q": q, "chains": chains,
                    "sweeps": sweeps, "perc_prob": est, "perc_stderr": se,
                    "two_theta": two_theta,
                })
    monotone = True
    for bcells in cfg["geometry.box_cells"]:
        for q in cfg["grids.q"]:
            series = [r["perc_prob"] for r in rows
                      if r["box_cells"] == bcells and r["q"] == q]
            ordered = sorted(range(len(zs)), key=lambda i: zs[i])
            vals = [series[i] for i in ordered]
            if any(b < a - 1e-12 for a, b in zip(vals, vals[1:])):
                monotone = False
    meta = _provenance(cfg, seed)
    meta["monotone_in_z"] = monotone
    return ExperimentReport("percolation", rows, crit, meta)


def run_criteria(cfg):
    """Certificate constants for the configured model."""
    spec = cfg.model()
    report = choose_parameters(spec, cfg["criteria.q"])
    meta = _provenance(cfg, cfg["mcmc.seed"])
    return ExperimentReport("criteria", [], report.as_dict(), meta)


def run_validate(cfg):
    """Model-assumption validation report."""
    rep = validate_model(cfg.model())
    meta = _provenance(cfg, cfg["mcmc.seed"])
    return ExperimentReport("validate", [], rep.as_dict(), meta)


# --- emission ----------------------------------------------------------------

PHASE_COLUMNS = ["z", "box_cells", "boundary", "chains", "sweeps",
                 "M_mean", "M_stderr", "N_mean", "N_stderr", "equilibrated"]
PERC_COLUMNS = ["z", "box_cells", "q", "chains", "sweeps",
                "perc_prob", "perc_stderr", "two_theta"]

_INT_COLUMNS = {"box_cells", "chains", "sweeps", "equilibrated"}


def _csv_cell(col, v):
    if col == "boundary":
        return str(v)
    if col in _INT_COLUMNS:
        return str(int(v))
    return repr(float(v))


def rows_to_csv(rows, columns):
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_csv_cell(c, row[c]) for c in columns))
    return "\n".join(lines) + "\n"


def csv_to_rows(text):
    lines = [ln for ln in text.strip().splitlines() if ln]
    columns = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        row = {}
        for col, cell in zip(columns, ln.split(",")):
            if col == "boundary":
                row[col] = cell
            elif col in _INT_COLUMNS:
                row[col] = int(cell)
            else:
                row[col] = float(cell)
        rows.append(row)
    return rows


def _json_dumps(obj):
    import json

    def clean(o):
        if isinstance(o, dict):
            return {str(k): clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple)):
            return [clean(v) for v in o]
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, np.ndarray):
            return [clean(v) for v in o.tolist()]
        if isinstance(o, float) and not math.isfinite(o):
            return repr(o)
        return o

    return json.dumps(clean(obj), sort_keys=True, indent=1) + "\n"


def emit(report, out_dir):
    """Write CSV table, JSON report and gnuplot-ready series; returns paths.

    Emission is deterministic: re-emitting the same report produces
    byte-identical files.
    """
    import os

    os.makedirs(out_dir, exist_ok=True)
    written = []

    def put(name, text):
        path = os.path.join(out_dir, name)
        try:
            with open(path, "w") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError("cannot write %s: %s" % (path, exc))
        written.append(path)

    if report.tag == "phase":
        put("phase.csv", rows_to_csv(report.rows, PHASE_COLUMNS))
        for boundary in sorted({r["boundary"] for r in report.rows}):
            sel = [r for r in report.rows if r["boundary"] == boundary]
            sel.sort(key=lambda r: (r["z"], r["box_cells"]))
            lines = ["# z  M_mean   (boundary=%s)" % boundary]
            for r in sel:
                lines.append("%r %r" % (float(r["z"]), float(r["M_mean"])))
            put("M_vs_z_%s.dat" % boundary, "\n".join(lines) + "\n")
    elif report.tag == "percolation":
        put("percolation.csv", rows_to_csv(report.rows, PERC_COLUMNS))
    put("report.json", _json_dumps(report.as_dict()))
    return written
