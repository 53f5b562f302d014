"""Energy functionals, decay-rate fits and discrete energy identities.

All norms are L^2 norms of fractional powers of the Dirichlet Laplacian evaluated
by Parseval, ``||A^{s/2} u||^2 = (|box| / 2^d) sum_k mu_k^s u_k^2``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .errors import InsufficientDataError, ShapeError
from .generator import MediumParams, max_real_part, spectral_bound
from .linear import ModalState, Trajectory, derivative_arrays
from .spectral import BoxDomain, SpectralField, weighted_norm_sq

FIELDS = ("t", "E1", "E2", "calE0", "calE", "Epsi", "Lambda", "r", "e")


@dataclass(frozen=True)
class EnergySample:
    t: float
    E1: float
    E2: float
    calE0: float
    calE: float
    Epsi: float
    Lambda: float
    r: float
    e: float

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class DecayFit:
    rate: float
    amplitude: float
    residual: float
    window: tuple
    slope: float


def energy_arrays(domain: BoxDomain, params: MediumParams, values, forcing, forcing_rate=None):
    """Every functional for a stack of states ``(n, 3, m)``; returns a dict of arrays."""
    mu = domain.eigenvalues
    d = derivative_arrays(mu, params, values, forcing, forcing_rate)

    def n2(key, s=0.0):
        return weighted_norm_sq(domain, d[key], s)

    z = values[..., 2, :]
    z2 = weighted_norm_sq(domain, z, 0.0)
    out = {
        "E1": n2("psi", 1) + n2("psit") + z2,
        "E2": n2("psi", 2) + n2("psit") + z2,
        "calE0": 0.5 * (n2("wtt") + n2("wt", 1) + n2("w", 2)),
        "calE": 0.5 * (n2("wtt", 1) + n2("wt", 1) + n2("w", 2)),
        "Epsi": 0.5 * (n2("psittt", 1) + n2("psitt", 2) + n2("psit", 2)),
        "r": (n2("wttt") + n2("wtt", 1) + n2("wt", 2) + n2("w", 2)
              + n2("psitttt") + n2("psittt", 2) + n2("psitt", 3) + n2("psit", 3)),
        "e": n2("psitttt") + n2("psittt", 1) + n2("psitt", 3),
    }
    out["Lambda"] = out["Epsi"] + out["calE"]
    return out


def compute_energies(state: ModalState, forcing: SpectralField, params: MediumParams,
                     forcing_rate: SpectralField | None = None, t: float = 0.0) -> EnergySample:
    """All functionals at one time slice.

    ``forcing`` is the total forcing acting at this state (zero for homogeneous
    runs); ``forcing_rate`` (its time derivative) only enters ``r`` and ``e``.
    """
    if forcing.domain != state.domain or (forcing_rate is not None and forcing_rate.domain != state.domain):
        raise ShapeError("fields live on different domains")
    ft = None if forcing_rate is None else forcing_rate.coefficients
    arr = energy_arrays(state.domain, params, state.values, forcing.coefficients, ft)
    return EnergySample(float(t), **{k: float(v) for k, v in arr.items()})


def trajectory_energies(traj: Trajectory, params: MediumParams, indices=None):
    """Energy arrays at selected nodes of a trajectory, plus the node times."""
    idx = np.arange(len(traj)) if indices is None else np.asarray(indices)
    rates = traj.forcing_rates()
    arr = energy_arrays(traj.domain, params, traj.states[idx], traj.forcings[idx], rates[idx])
    arr["t"] = traj.times[idx]
    return arr


def energy_samples(traj: Trajectory, params: MediumParams, stride: int = 1) -> list[EnergySample]:
    arr = trajectory_energies(traj, params, np.arange(0, len(traj), stride))
    return [EnergySample(*(float(arr[k][i]) for k in FIELDS)) for i in range(arr["t"].size)]


def fit_decay_rate(samples, tail_fraction: float = 0.5) -> DecayFit:
    """Least-squares line through ``(t, log value)`` over the last part of the series.

    ``samples`` is a sequence of ``(t, value)`` pairs or a ``(times, values)`` tuple
    of arrays.  Growth is reported as rate 0 with the (positive) slope kept.
    """
    t, v = _as_series(samples)
    n_tail = max(int(np.ceil(tail_fraction * t.size)), 1)
    t, v = t[-n_tail:], v[-n_tail:]
    keep = np.isfinite(v) & (v > 0)
    t, v = t[keep], v[keep]
    if t.size < 3:
        raise InsufficientDataError(f"need at least 3 positive samples in the tail, got {t.size}")
    logv = np.log(v)
    slope, intercept = np.polyfit(t, logv, 1)
    resid = float(np.sqrt(np.mean((logv - (slope * t + intercept)) ** 2)))
    return DecayFit(max(-float(slope), 0.0), float(np.exp(intercept)), resid,
                    (float(t[0]), float(t[-1])), float(slope))


def _as_series(samples):
    if isinstance(samples, tuple) and len(samples) == 2 and np.ndim(samples[0]) == 1 and np.size(samples[0]) != 2:
        t, v = samples
    else:
        arr = np.asarray(samples, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise InsufficientDataError("samples must be (t, value) pairs")
        t, v = arr[:, 0], arr[:, 1]
    return np.asarray(t, dtype=float), np.asarray(v, dtype=float)


@dataclass
class DecayReport:
    regime: str
    spectral_bound: float
    target_rate: float
    excited_rate: float
    fits: dict
    checks: dict
    passed: bool

    def summary(self) -> dict:
        out = {"regime": self.regime, "spectral_bound": self.spectral_bound,
               "target_rate": self.target_rate, "excited_rate": self.excited_rate}
        for name, fit in self.fits.items():
            out[f"rate_{name}"] = fit.rate
            out[f"fit_residual_{name}"] = fit.residual
        out.update({k: v for k, v in self.checks.items()})
        out["passed"] = self.passed
        return out


def verify_decay(traj: Trajectory, params: MediumParams, mu_min: float | None = None,
                 tail_fraction: float = 0.5, rtol: float = 0.05, nonlinear: bool | None = None,
                 transient: float = 0.5, monotone_rtol: float = 1e-9) -> DecayReport:
    """Compare observed energy decay against the spectral prediction.

    Energies are quadratic in the state, so the linear prediction for the E1/E2
    rate is ``2 |s(A)|``.  ``excited_rate`` is the prediction restricted to the
    modes actually present in the initial state.  In the nonlinear regime the
    check is that Lambda is non-increasing after ``transient``, ends below its
    initial value and has a positive fitted rate.
    """
    mu = traj.domain.eigenvalues
    mu_min = traj.domain.mu_min if mu_min is None else mu_min
    sA = spectral_bound(params, mu_min)
    excited = np.any(traj.states[0] != 0, axis=0)
    excited_rate = float(2 * np.min(-max_real_part(params, mu[excited]))) if excited.any() else float("nan")
    if nonlinear is None:
        nonlinear = params.sigma > 0
    arr = trajectory_energies(traj, params)
    t = arr["t"]
    fits, checks = {}, {}
    if not nonlinear:
        for name in ("E1", "E2"):
            fits[name] = fit_decay_rate((t, arr[name]), tail_fraction)
            checks[f"{name}_rel_error"] = abs(fits[name].rate - 2 * abs(sA)) / (2 * abs(sA))
        passed = all(checks[f"{n}_rel_error"] <= rtol for n in ("E1", "E2"))
        regime = "linear"
    else:
        lam = arr["Lambda"]
        fits["Lambda"] = fit_decay_rate((t, lam), tail_fraction)
        after = lam[t >= transient]
        worst_rise = float(np.max(np.diff(after) / after[:-1])) if after.size > 1 else 0.0
        checks["Lambda_max_relative_rise"] = worst_rise
        checks["Lambda_monotone"] = worst_rise <= monotone_rtol
        checks["Lambda_decreased"] = bool(lam[-1] < lam[0])
        checks["Lambda_rate_positive"] = fits["Lambda"].rate > 0
        passed = checks["Lambda_monotone"] and checks["Lambda_decreased"] and checks["Lambda_rate_positive"]
        regime = "nonlinear"
    return DecayReport(regime, sA, 2 * abs(sA), excited_rate, fits, checks, bool(passed))


# ---------------------------------------------------------------------------
# discrete energy identities


@dataclass(frozen=True)
class IdentityCheck:
    lhs: float
    rhs: float
    residual: float  # |lhs - rhs|
    holds: bool  # for inequalities: lhs <= rhs + tol


def heat_identity(times, v, vt, domain: BoxDomain, a: float) -> IdentityCheck:
    """Trapezoidal check of the heat-operator energy identity

    ``int ||v_t + a A v||^2 = a||A^{1/2} v(t)||^2 - a||A^{1/2} v(0)||^2 + int (||v_t||^2 + a^2 ||A v||^2)``
    for sampled coefficient histories ``v, vt`` of shape ``(n, m)``.
    """
    mu = domain.eigenvalues
    lhs = trapezoid(weighted_norm_sq(domain, vt + a * mu * v), times)
    grad = weighted_norm_sq(domain, v, 1.0)
    rhs = a * (grad[-1] - grad[0]) + trapezoid(weighted_norm_sq(domain, vt) + a**2 * weighted_norm_sq(domain, v, 2.0), times)
    res = abs(lhs - rhs)
    return IdentityCheck(float(lhs), float(rhs), float(res), True)


def heat_identity_residual(traj: Trajectory, params: MediumParams) -> IdentityCheck:
    """Heat identity applied to ``v = psi_ttt`` along a trajectory."""
    d = derivative_arrays(traj.domain.eigenvalues, params, traj.states, traj.forcings, traj.forcing_rates())
    return heat_identity(traj.times, d["psittt"], d["psitttt"], traj.domain, params.a)


def third_derivative_check(traj: Trajectory, params: MediumParams, tol: float = 0.0):
    """Third-derivative estimate for ``D_w w = f`` along a trajectory.

    Returns ``(inequality, identity)``: the inequality
    ``1/2 int||w_ttt||^2 + b/2 ||A^{1/2} w_tt||^2 |_0^t <= c^4 int||A w_t||^2 + int||f_t||^2``
    and the exact identity it is derived from,
    ``int||w_ttt||^2 + b/2 ||A^{1/2} w_tt||^2 |_0^t = int <f_t - c^2 A w_t, w_ttt>``.
    ``f_t`` comes from centred differences of the stored forcing.
    """
    dom, t = traj.domain, traj.times
    mu = dom.eigenvalues
    ft = traj.forcing_rates()
    d = derivative_arrays(mu, params, traj.states, traj.forcings, ft)
    wttt, wtt, wt = d["wttt"], d["wtt"], d["wt"]
    int_wttt = trapezoid(weighted_norm_sq(dom, wttt), t)
    jump = weighted_norm_sq(dom, wtt[-1], 1.0) - weighted_norm_sq(dom, wtt[0], 1.0)
    b, c4 = params.b, params.c**4
    lhs = 0.5 * int_wttt + 0.5 * b * jump
    rhs = c4 * trapezoid(weighted_norm_sq(dom, wt, 2.0), t) + trapezoid(weighted_norm_sq(dom, ft), t)
    ineq = IdentityCheck(float(lhs), float(rhs), float(max(lhs - rhs, 0.0)), bool(lhs <= rhs + tol))

    inner = dom.l2_weight * np.sum((ft - params.c**2 * mu * wt) * wttt, axis=-1)
    id_lhs = int_wttt + 0.5 * b * jump
    id_rhs = trapezoid(inner, t)
    ident = IdentityCheck(float(id_lhs), float(id_rhs), float(abs(id_lhs - id_rhs)), True)
    return ineq, ident


@dataclass(frozen=True)
class EnergyEstimateFit:
    """Fitted surrogate constants for the integrated small-data energy estimate

    ``Lambda(t) + b int (r + Lambda + e) <= C (Lambda(0) + sup E int e)``.
    """

    b_hat: float
    C_hat: float
    holds: bool
    bounded: bool  # Lambda(t) <= 2 max(1, C) Lambda(0)


def fit_energy_estimate(times, Lambda, r, e, Epsi, growth: float = 2.0) -> EnergyEstimateFit:
    """Pick the largest ``b`` on a log grid whose ``C`` stays within ``growth`` times
    the ``b = 0`` value, and report the pair."""
    times = np.asarray(times)
    integral = cumulative_trapezoid(np.asarray(r) + Lambda + e, times, initial=0.0)
    int_e = cumulative_trapezoid(e, times, initial=0.0)
    sup_E = np.maximum.accumulate(Epsi)
    denom = Lambda[0] + sup_E * int_e

    def C_of(bh):
        return float(np.max((Lambda + bh * integral) / denom))

    C0 = C_of(0.0)
    b_hat = 0.0
    for bh in np.logspace(-6, 2, 81):
        if C_of(bh) <= growth * C0:
            b_hat = float(bh)
    C_hat = C_of(b_hat)
    holds = bool(np.all(Lambda + b_hat * integral <= C_hat * denom * (1 + 1e-12)))
    bounded = bool(np.all(Lambda <= 2 * max(1.0, C_hat) * Lambda[0] * (1 + 1e-12)))
    return EnergyEstimateFit(b_hat, C_hat, holds, bounded)
