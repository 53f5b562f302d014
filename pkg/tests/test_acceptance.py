"""End-to-end acceptance criteria, each at its stated tolerance and time budget."""
import time

import numpy as np
import pytest

from bcw import BoxDomain, MediumParams, SimConfig, run_simulation, smallness_check, spectral_bound
from bcw.cli import main
from bcw.energy import fit_decay_rate, heat_identity_residual, third_derivative_check, verify_decay
from bcw.generator import max_real_part, triggiani_constant, verify_resolvent_bounds
from bcw.linear import mode_matrix, propagator
from bcw.nonlinear import DEFAULT_SMALLNESS_THRESHOLD
from bcw.oracle import dense_expm, rk4_reference_trajectory

LINE64 = BoxDomain.interval(np.pi, 64)


def draws(n=100, seed=7):
    rng = np.random.default_rng(seed)
    return [MediumParams(*rng.uniform(0.05, 5.0, 3)) for _ in range(n)]


def test_spectral_bound_equivalence(criterion):
    start = time.perf_counter()
    mu = LINE64.eigenvalues
    mu_min = LINE64.mu_min
    worst_attained, exact, below, n_attained = 0.0, True, True, 0
    for p in draws():
        s = spectral_bound(p, mu_min)
        exact &= s == -min(p.a * mu_min, p.b * mu_min / 2, p.c**2 / p.b)
        brute = float(max_real_part(p, mu).max())
        if min(p.a * mu_min, p.b * mu_min / 2) <= p.c**2 / p.b:
            # the supremum is attained at mu_min, which is enumerated
            n_attained += 1
            worst_attained = max(worst_attained, abs(brute - s))
        else:
            # c^2/b is only approached as mu -> infinity
            below &= brute <= s + 1e-9
    elapsed = time.perf_counter() - start
    ok = exact and below and worst_attained <= 1e-9 and elapsed < 1.0
    criterion(1, "spectral bound equivalence", ok,
              f"max |brute - s(A)| = {worst_attained:.2e} over {n_attained} attained draws, "
              f"closed form exact = {exact}, unattained draws bounded = {below}, {elapsed:.2f} s")


def test_resolvent_bounds(criterion):
    start = time.perf_counter()
    worst1, worst2, ok = 0.0, 0.0, True
    for p in draws():
        rep = verify_resolvent_bounds(p, LINE64.eigenvalues, tol=1e-9)
        C = triggiani_constant(p, LINE64.mu_min)
        worst1 = max(worst1, rep.max_ratio_lambda2 / C)
        worst2 = max(worst2, rep.max_ratio_damping)
        ok &= rep.passed and rep.lambdas.size == 1000
    elapsed = time.perf_counter() - start
    ok = ok and worst1 <= 1 + 1e-9 and worst2 <= 1 + 1e-9 and elapsed < 5.0
    criterion(2, "resolvent bounds", ok,
              f"max |l^2/v|/C = {worst1:.12f}, max |b l mu/v| = {worst2:.12f}, {elapsed:.2f} s")


def test_propagator_against_oracle(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(11)
    worst, n_critical = 0.0, 0
    for i in range(500):
        p = MediumParams(*rng.uniform(0.05, 5.0, 3))
        if i % 5 == 0:
            mu = 4 * p.c**2 / p.b**2
            n_critical += 1
        else:
            mu = 10 ** rng.uniform(-2, 4)
        dt = 10 ** rng.uniform(-4, 0)
        E = dense_expm(mode_matrix(p, mu), dt)
        worst = max(worst, np.linalg.norm(propagator(p, mu, dt) - E) / np.linalg.norm(E))
    elapsed = time.perf_counter() - start
    criterion(3, "propagator vs dense oracle", worst < 1e-10 and elapsed < 2.0,
              f"max relative deviation {worst:.2e} ({n_critical} triples at mu = 4c^2/b^2), {elapsed:.2f} s")


def test_linear_decay_rate(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    cfg = SimConfig(BoxDomain.interval(np.pi, 16), MediumParams(1.0, 2.0, 1.0), t_end=20.0, dt=1e-3,
                    nonlinear_enabled=False, psi0=rng.standard_normal(16), psi1=rng.standard_normal(16),
                    psi2=rng.standard_normal(16), stride=10)
    rep = verify_decay(run_simulation(cfg).trajectory, cfg.medium, rtol=0.05)
    elapsed = time.perf_counter() - start
    r1, r2 = rep.fits["E1"].rate, rep.fits["E2"].rate
    ok = rep.target_rate == 1.0 and rep.passed and elapsed < 10.0
    criterion(4, "linear decay rate", ok,
              f"E1 rate {r1:.4f}, E2 rate {r2:.4f} vs 2|s(A)| = {rep.target_rate}, {elapsed:.2f} s")


def _forced(dt):
    shape = np.array([1.0, 0.5, 0.25, 0, 0, 0, 0, 0])
    return SimConfig(BoxDomain.interval(np.pi, 8), MediumParams(1.0, 1.0, 1.0), t_end=2.0, dt=dt,
                     nonlinear_enabled=False, psi0=[0.1, 0.05],
                     forcing=lambda t: shape * np.sin(3 * t) * np.exp(-t), stride=1)


def test_stepper_order(criterion):
    start = time.perf_counter()
    dt = 0.1
    ref = run_simulation(_forced(dt / 8)).trajectory.states
    errs = []
    for k in (1, 2):
        states = run_simulation(_forced(dt / k)).trajectory.states
        errs.append(np.max(np.abs(states - ref[:: 8 // k])))
    order = np.log2(errs[0] / errs[1])
    rk = [rk4_reference_trajectory(_forced(dt).replace(t_end=1.0), n).states for n in (4, 8, 16)]
    rk_order = np.log2(np.max(np.abs(rk[0] - rk[1])) / np.max(np.abs(rk[1] - rk[2])))
    elapsed = time.perf_counter() - start
    ok = abs(order - 2.0) <= 0.2 and abs(rk_order - 4.0) <= 0.2 and elapsed < 30.0
    criterion(5, "stepper order", ok,
              f"exponential trapezoidal {order:.3f}, RK4 oracle {rk_order:.3f}, {elapsed:.2f} s")


def _small_data(sigma=1e-2, t_end=10.0, dt=1e-2):
    return SimConfig(BoxDomain.interval(np.pi, 16), MediumParams(1.0, 2.0, 1.0, sigma), t_end=t_end, dt=dt,
                     picard_tol=1e-10, psi0=[1e-2], stride=1)


def test_nonlinear_small_data(criterion):
    start = time.perf_counter()
    cfg = _small_data()
    small = smallness_check(*cfg.initial_fields(), cfg.medium, DEFAULT_SMALLNESS_THRESHOLD)
    result = run_simulation(cfg)
    t = result.trajectory.times
    lam = np.array([s.Lambda for s in result.energies])
    max_iter = max(d.iterations for d in result.diagnostics)
    rise = float(np.max(np.diff(lam[t >= 0.5])))
    fit = fit_decay_rate((t, lam))
    elapsed = time.perf_counter() - start
    ok = (small.passed and result.completed and max_iter <= 5 and rise <= 0.0
          and lam[-1] < lam[0] and fit.rate > 0 and elapsed < 60.0)
    criterion(6, "nonlinear small-data regime", ok,
              f"size {small.norm_sum:.4f} <= {small.threshold}, max Picard iterations {max_iter}, "
              f"max Lambda increase after t=0.5 {rise:.2e}, Lambda(10)/Lambda(0) = {lam[-1] / lam[0]:.3e}, "
              f"rate {fit.rate:.4f}, {elapsed:.2f} s")


def test_sigma_scaling(criterion):
    start = time.perf_counter()
    linear = run_simulation(_small_data(sigma=0.0)).trajectory.states
    sigmas = np.array([1e-4, 1e-3, 1e-2])
    dev = [np.max(np.abs(run_simulation(_small_data(s)).trajectory.states - linear)) for s in sigmas]
    slope = np.polyfit(np.log(sigmas), np.log(dev), 1)[0]
    elapsed = time.perf_counter() - start
    criterion(7, "sigma scaling", abs(slope - 1.0) <= 0.1 and elapsed < 60.0,
              f"log-log slope {slope:.5f}, {elapsed:.2f} s")


REGRESSION_RUNS = {
    "forced linear": lambda dt: _forced(dt),
    "forced nonlinear": lambda dt: _forced(dt).replace(nonlinear_enabled=True, medium=MediumParams(1, 1, 1, 0.05)),
    "small-data nonlinear": lambda dt: _small_data(t_end=2.0, dt=dt),
}


def test_energy_identity_residuals(criterion):
    start = time.perf_counter()
    ok, parts = True, []
    for name, make in REGRESSION_RUNS.items():
        heat, third, holds = [], [], True
        for dt in (0.02, 0.01):
            cfg = make(dt)
            traj = run_simulation(cfg).trajectory
            heat.append(heat_identity_residual(traj, cfg.medium).residual)
            ineq, ident = third_derivative_check(traj, cfg.medium)
            third.append(ident.residual)
            holds &= ineq.holds
        h_ratio, t_ratio = heat[0] / heat[1], third[0] / third[1]
        ok &= h_ratio >= 3.5 and t_ratio >= 3.5 and holds
        parts.append(f"{name}: heat x{h_ratio:.2f}, third-derivative x{t_ratio:.2f}, inequality {holds}")
    elapsed = time.perf_counter() - start
    criterion(8, "energy identity residuals", ok, "; ".join(parts) + f", {elapsed:.2f} s")


CONFIG = """domain.lengths = [3.141592653589793]
domain.modes = [16]
medium.a = 1
medium.b = 2
medium.c = 1
medium.sigma = 0.01
time.t_end = 2
time.dt = 1e-2
init.psi0 = [0.01, 0.005]
init.psi1 = [0.002]
output.stride = 5
"""


def test_determinism(criterion, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(CONFIG)
    codes = [main(["simulate", "--config", str(cfg), "--out", str(tmp_path / d)]) for d in ("one", "two")]
    a = (tmp_path / "one" / "energies.csv").read_bytes()
    b = (tmp_path / "two" / "energies.csv").read_bytes()
    criterion(9, "determinism", codes == [0, 0] and a == b and len(a) > 0,
              f"exit codes {codes}, {len(a)} bytes, identical = {a == b}")
