"""
Spectrum of the lifted generator
================================

Each sine mode carries a 3x3 block whose eigenvalues are -a mu and the two
roots of lambda^2 + b mu lambda + c^2 mu.  This walk-through prints them for the
first few modes, compares the largest real part with the closed-form bound,
and samples the resolvent ratios over the right half plane.
"""
import numpy as np

from bcw import BoxDomain, MediumParams, mode_eigenvalues, spectral_bound, triggiani_constant
from bcw.generator import max_real_part, verify_resolvent_bounds

domain = BoxDomain.interval(np.pi, 64)
medium = MediumParams(a=1.0, b=2.0, c=1.0)

# mu = 1 sits exactly at critical damping (b^2 mu = 4 c^2): the pair coalesces.
for mu in domain.eigenvalues[:4]:
    ev = mode_eigenvalues(medium, mu)
    print(f"mu={mu:5.1f}  kappa1={ev.kappa1:8.3f}  kappa2={ev.kappa2:.4f}  kappa3={ev.kappa3:.4f}"
          f"  defective={ev.defective}")

# For large mu the slow root tends to -c^2/b, so the bound is approached from below.
s = spectral_bound(medium, domain.mu_min)
print(f"s(A) = {s}, largest real part over 64 modes = {max_real_part(medium, domain.eigenvalues).max():.6f}")

# The two resolvent ratios stay below C and 1 respectively.
report = verify_resolvent_bounds(MediumParams(1.0, 1.0, 1.0), domain.eigenvalues)
print(f"C = {triggiani_constant(MediumParams(1.0, 1.0, 1.0), domain.mu_min):.6f}  "
      f"max |l^2/v| = {report.max_ratio_lambda2:.6f}  max |b l mu/v| = {report.max_ratio_damping:.6f}"
      f"  passed = {report.passed}")
