"""
Discrete energy identities
==========================

Two identities are integrated with the trapezoid rule along forced runs: the
heat-operator identity for v = psi_ttt, and the third-derivative identity for
w = psi_t + a A psi.  Their residuals are pure quadrature error and should fall
by four each time the step is halved.
"""
import numpy as np

from bcw import BoxDomain, MediumParams, SimConfig, heat_identity_residual, run_simulation, third_derivative_check

shape = np.array([1.0, 0.5, 0.25, 0, 0, 0, 0, 0])
base = SimConfig(BoxDomain.interval(np.pi, 8), MediumParams(1.0, 1.0, 1.0, sigma=0.05), t_end=2.0, dt=0.02,
                 psi0=[0.1, 0.05], forcing=lambda t: shape * np.sin(3 * t) * np.exp(-t), stride=1)

previous = None
for dt in (0.02, 0.01, 0.005):
    config = base.replace(dt=dt)
    traj = run_simulation(config).trajectory
    heat = heat_identity_residual(traj, config.medium)
    inequality, identity = third_derivative_check(traj, config.medium)
    line = f"dt={dt:<6} heat residual {heat.residual:.3e}  third-derivative residual {identity.residual:.3e}"
    if previous:
        line += f"  ratios {previous[0] / heat.residual:.2f}, {previous[1] / identity.residual:.2f}"
    print(line + f"  inequality {inequality.lhs:.4f} <= {inequality.rhs:.4f}")
    previous = (heat.residual, identity.residual)
