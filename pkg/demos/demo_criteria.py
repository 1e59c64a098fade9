"""Walk through the phase-transition certificate for the default model.

Prints every constant the calculator assembles: the spin scale a from the
Wells comparison, the occupation threshold n_star, the block-opening weight
h(n, q), the site probability q0, the insertion bound g_star and the
resulting activity threshold z_c, together with the pass/fail status of each
inequality.
"""

import numpy as np

from ferrogas import ModelSpec, choose_parameters
from ferrogas.percolation import connectivity_probability, h, psi, rho

spec = ModelSpec.default(r=0.25, phi_star=3.0, z=1.0)
q = 0.99

print("model: d=%d  c=%g  eps=%g  r=%g  R=%g  phi_star=%g  chi=%s(%g)"
      % (spec.d, spec.Phi.c, spec.Phi.eps, spec.r, spec.R,
         spec.phi.phi_star, spec.chi.family, spec.chi.param))
print("cell side l = R / (2 sqrt d) = %.6f" % spec.l)
print()

print("connectivity of the complete graph under q-thinning:")
for n in (2, 3, 5, 8, 12):
    exact, bound = connectivity_probability(n, q)
    print("  phi(%2d, %.2f) = %.6f   (closed-form lower bound %s)"
          % (n, q, exact, "%.6f" % bound if bound is not None else "n/a"))
print("  rho(1, %.2f) = %.6f   psi(1, 1, %.2f) = %.6f   h(1, %.2f) = %.6f"
      % (q, rho(1, q), q, psi(1, 1, q), q, h(1, q)))
print()

crit = choose_parameters(spec, q=q)
print("certificate at thinning probability q = %.2f:" % q)
print("  spin scale a        = %.6f" % crit.a)
print("  threshold n_star    = %d" % crit.n_star)
print("  h(n_star, q)        = %.6f  >  p_site = %.6f" %
      (crit.h_value, crit.p_site))
print("  site probability q0 = %.10f" % crit.q0)
print("  core volume v_star  = %.10f" % crit.v_star)
print("  insertion bound g*  = %.10f   (optimal c = %.3g)" %
      (crit.g_star, crit.c_opt))
print("  t_star              = %.10f" % crit.t_star)
print("  activity threshold  z_c = %.6f" % crit.z_c)
print("  cluster density     theta = %.6f" % crit.theta)
print("  magnetization floor m_c = %.6f" % crit.m_c)
print()

print("inequalities:")
for name, entry in crit.inequalities.items():
    status = "pass" if entry["passed"] else "FAIL"
    print("  %-18s %s" % (name, status))
print()
print("overall: %s" % ("certificate holds" if crit.passed else "NOT certified"))
print()

zs = np.array([0.5, 1.0, 2.0]) * crit.z_c
print("occupation-probability floor 1 - 1/(z t_star) along z:")
for z in zs:
    floor = 1.0 - 1.0 / (z * crit.t_star)
    print("  z = %9.3f  ->  floor = %.4f  (q0 = %.4f, binding: %s)"
          % (z, floor, crit.q0, "floor" if floor > crit.q0 else "q0"))
