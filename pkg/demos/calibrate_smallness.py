"""Sweep the size of the initial data and find where the small-data behaviour stops.

For each amplitude scale the run counts as "small" when every step's Picard loop
converges within 5 iterations at tol 1e-10 and Lambda is non-increasing after
t = 0.5.  The largest H^3+H^3+H^1 size that still behaves, rounded down to one
significant digit, is what ``DEFAULT_SMALLNESS_THRESHOLD`` is set to.

    python demos/calibrate_smallness.py
"""
import numpy as np

from bcw import BoxDomain, MediumParams, SimConfig, run_simulation, smallness_check
from bcw.errors import BCWError

SIGMA = 1e-2
SHAPE = np.array([1.0, 0.5, 0.25, 0.125])  # decaying profile over the first modes


def behaves(cfg):
    result = run_simulation(cfg)
    if result.error is not None:
        return False, f"stopped: {result.error}"
    iters = max(d.iterations for d in result.diagnostics)
    t = result.trajectory.times[:: cfg.stride]
    lam = np.array([s.Lambda for s in result.energies])
    late = lam[t >= 0.5]
    monotone = bool(np.all(np.diff(late) <= 0))
    return iters <= 5 and monotone, f"iterations {iters}, monotone {monotone}"


def main():
    dom = BoxDomain.interval(np.pi, 16)
    medium = MediumParams(1.0, 2.0, 1.0, SIGMA)
    base = SimConfig(dom, medium, t_end=10.0, dt=1e-2, stride=1)
    best = 0.0
    for scale in np.logspace(-3, 1, 17):
        cfg = base.replace(psi0=scale * SHAPE, psi1=scale * SHAPE)
        size = smallness_check(*cfg.initial_fields(), medium).norm_sum
        try:
            ok, info = behaves(cfg)
        except BCWError as exc:
            ok, info = False, str(exc)
        print(f"scale {scale:9.3e}  size {size:10.4e}  {'ok ' if ok else 'BAD'}  {info}")
        if not ok:
            break
        best = size
    exponent = np.floor(np.log10(best))
    print(f"largest well-behaved size {best:.4e}; threshold {np.floor(best / 10**exponent) * 10**exponent:.1e}")


if __name__ == "__main__":
    main()
