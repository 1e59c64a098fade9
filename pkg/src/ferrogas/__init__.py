"""Simulation lab for continuum ferromagnets with unbounded spins.

Marked Gibbs point processes with a superstable position repulsion and a
finite-range ferromagnetic spin coupling: grand-canonical MCMC sampling,
random geometric graph percolation, and the computable constants
(n_star, q0, g_star, z_c) certifying a finite-activity phase transition.
"""

from .config_space import (MarkedConfiguration, Region, cell_index,
                           cell_side, temperedness_F, temperedness_F_alpha)
from .interaction import (ModelSpec, PositionPotential, SpinCoupling,
                          SpinMeasure, validate_model)
from .sampler import (BoundaryCondition, ChainState, MoveMix, chain_rng,
                      exact_spin_measure, run_chain, sample_poisson_marked)
from .percolation import (build_rgg, thin_edges, connected_components,
                          block_variables, connectivity_probability, psi,
                          rho, h, percolation_probability, check_domination,
                          P_SITE)
from .criteria import choose_parameters, g_star, g_integral, wells_threshold
from .harness import (ExperimentConfig, emit, run_criteria,
                      run_percolation_experiment, run_phase_experiment,
                      run_validate)

__version__ = "0.1.0"
