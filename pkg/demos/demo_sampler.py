"""Run a short grand-canonical chain and sanity-check the spin machinery.

Part 1 runs the compiled kernel on a small box and prints trace statistics.
Part 2 freezes a tiny random configuration and compares heat-bath spin
frequencies against the exact 2^N enumeration of the quenched spin measure.
"""

import numpy as np

from ferrogas import ModelSpec
from ferrogas.config_space import MarkedConfiguration, Region
from ferrogas.sampler import (BoundaryCondition, exact_spin_measure,
                              quenched_spin_sweep)
from ferrogas._fast import run_chain_fast

spec = ModelSpec.default(r=0.25, phi_star=3.0, z=20.0)

print("part 1: kernel chain, 3x3 cells, plus boundary, z = %.1f" % spec.z)
trace = run_chain_fast(spec, 1, "plus", seed=11, chain=0,
                       sweeps=2000, burn_in=500)
for key in ("N", "M", "H", "E"):
    x = trace[key]
    print("  %-2s mean %10.4f   sd %9.4f   last %10.4f"
          % (key, x.mean(), x.std(), x[-1]))
print("  magnetization per point: %.4f"
      % (trace["M"].mean() / max(trace["cell0_count"].mean(), 1e-12)))
print()

print("part 2: exact spin measure vs heat-bath frequencies")
spec2 = ModelSpec.default(r=0.25, phi_star=0.12, z=1.0)
region = Region.box(1, spec2.l, d=2)
bc = BoundaryCondition.plus(region, spec2, n_star=1, a=1.0)
rng = np.random.default_rng(3)

conf = MarkedConfiguration(2, spec2.l)
while len(conf) < 6:
    try:
        conf.add(rng.uniform(-1.2, 1.2, 2), float(spec2.chi.sample(rng)))
    except ValueError:
        pass

measure = exact_spin_measure(conf, bc, spec2)
trials = 4000
hits = np.zeros(len(conf))
for _ in range(trials):
    quenched_spin_sweep(conf, bc, spec2, rng)
    hits += conf.spins > 0

print("  site   P(+) exact   P(+) sampled")
for i in range(len(conf)):
    print("  %4d   %10.4f   %12.4f" % (i, measure.marginal_plus(i),
                                       hits[i] / trials))
print("  pair correlation <s0 s1> exact: %.4f"
      % measure.pair_correlation(0, 1))
