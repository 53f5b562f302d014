"""Exact per-mode evolution of the lifted first-order system.

The state of one mode is ``(psi, psi_t, z)`` with ``z = psi_tt + c^2 mu psi + b mu psi_t``,
and it evolves by ``Psi' = A_mu Psi + (0, 0, f)``.  Forcing ``f`` is always in the
abstract sign convention ``(d/dt + a A) z = f``.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ShapeError
from .generator import MediumParams, _quadratic_roots
from .spectral import BoxDomain, SpectralField

# closed-form coupling column loses ~log10(max(1,|k1|)/|v(k1)|) digits
COUPLING_MAX_AMPLIFICATION = 1e4


@dataclass(frozen=True, eq=False)
class ModalState:
    """Lifted state for every retained mode; ``values`` has rows (psi, psi_t, z)."""

    domain: BoxDomain
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (3, self.domain.size):
            raise ShapeError(f"expected state of shape (3, {self.domain.size}), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ShapeError("state entries must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def psi(self):
        return self.values[0]

    @property
    def psit(self):
        return self.values[1]

    @property
    def z(self):
        return self.values[2]

    def psitt(self, params: MediumParams) -> np.ndarray:
        mu = self.domain.eigenvalues
        return self.z - params.c**2 * mu * self.psi - params.b * mu * self.psit

    def as_fields(self):
        return tuple(SpectralField(self.domain, row) for row in self.values)


@dataclass(eq=False)
class Trajectory:
    """Uniformly sampled states plus the forcing applied at each node."""

    domain: BoxDomain
    times: np.ndarray
    states: np.ndarray  # (M+1, 3, m)
    forcings: np.ndarray  # (M+1, m)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.states.shape[0] != self.times.size or self.forcings.shape[0] != self.times.size:
            raise ShapeError("snapshot count must match the time grid")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ShapeError("times must be strictly increasing")

    def __len__(self):
        return self.times.size

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self) > 1 else 0.0

    def state(self, i) -> ModalState:
        return ModalState(self.domain, self.states[i])

    def forcing(self, i) -> SpectralField:
        return SpectralField(self.domain, self.forcings[i])

    def forcing_rates(self) -> np.ndarray:
        """``f_t`` at every node by second-order finite differences."""
        f = self.forcings
        if len(self) < 3:
            return np.zeros_like(f)
        return np.gradient(f, self.times, axis=0, edge_order=2)

    def truncated(self, n) -> "Trajectory":
        return Trajectory(self.domain, self.times[:n], self.states[:n], self.forcings[:n])


def _check_fields(*fields):
    dom = fields[0].domain
    for f in fields[1:]:
        if f.domain != dom:
            raise ShapeError("fields live on different domains")
    return dom


def initial_lift(psi0: SpectralField, psi1: SpectralField, psi2: SpectralField,
                 params: MediumParams) -> ModalState:
    """Map ``(psi, psi_t, psi_tt)(0)`` to ``(psi0, psi1, psi2 + c^2 A psi0 + b A psi1)``."""
    dom = _check_fields(psi0, psi1, psi2)
    mu = dom.eigenvalues
    z = psi2.coefficients + params.c**2 * mu * psi0.coefficients + params.b * mu * psi1.coefficients
    return ModalState(dom, np.stack([psi0.coefficients, psi1.coefficients, z]))


def mode_matrix(params: MediumParams, mu):
    """The 3x3 block ``A_mu``; vectorised over an array of ``mu``."""
    mu_arr = np.asarray(mu, dtype=float)
    out = np.zeros(mu_arr.shape + (3, 3))
    out[..., 0, 1] = 1.0
    out[..., 1, 0] = -params.c**2 * mu_arr
    out[..., 1, 1] = -params.b * mu_arr
    out[..., 1, 2] = 1.0
    out[..., 2, 2] = -params.a * mu_arr
    return out


def expm_batch(M: np.ndarray, degree: int = 18) -> np.ndarray:
    """Matrix exponential of a stack of small matrices by scaling and squaring.

    Each matrix is scaled by its own power of two so that its 1-norm is at most
    1/4; the truncated Taylor series is then accurate to well below round-off.
    """
    M = np.asarray(M, dtype=float)
    norms = np.abs(M).sum(axis=-2).max(axis=-1)
    s = np.maximum(0, np.ceil(np.log2(np.maximum(norms, 1e-300) / 0.25))).astype(int)
    X = M / (2.0**s)[..., None, None]
    eye = np.broadcast_to(np.eye(M.shape[-1]), M.shape)
    E = eye.copy()
    for k in range(degree, 0, -1):
        E = eye + (X @ E) / k
    for i in range(int(s.max(initial=0))):
        sq = E @ E
        E = np.where((i < s)[..., None, None], sq, E)
    return E


def _propagators(params: MediumParams, mu: np.ndarray, dt: float) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    t = float(dt)
    b, c2 = params.b, params.c**2
    k1 = -params.a * mu
    k2, k3, disc = _quadratic_roots(b, params.c, mu)
    m = -0.5 * b * mu

    ch = np.empty_like(mu)
    sh = np.empty_like(mu)  # e^{mt} sinh(delta t) / delta
    real = disc >= 0
    if np.any(real):
        k2r, k3r = k2.real[real], k3.real[real]
        delta = 0.5 * np.sqrt(disc[real])
        e2, e3 = np.exp(k2r * t), np.exp(k3r * t)
        ch[real] = 0.5 * (e2 + e3)
        x = np.minimum(2 * delta * t, 0.5)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(delta > 0, np.expm1(x) / (2 * delta), t)
            direct = (e2 - e3) / (2 * delta)
        sh[real] = np.where(2 * delta * t < 0.5, e3 * ratio, direct)
    if np.any(~real):
        omega = 0.5 * np.sqrt(-disc[~real])
        em = np.exp(m[~real] * t)
        ch[~real] = em * np.cos(omega * t)
        sh[~real] = em * np.sin(omega * t) / omega

    P = np.zeros(mu.shape + (3, 3))
    P[..., 0, 0] = ch - m * sh
    P[..., 0, 1] = sh
    P[..., 1, 0] = -c2 * mu * sh
    P[..., 1, 1] = ch + m * sh
    e1 = np.exp(k1 * t)
    P[..., 2, 2] = e1

    # coupling column (E - e^{k1 t} I) (B - k1 I)^{-1} e_2
    det = k1**2 + b * mu * k1 + c2 * mu
    with np.errstate(divide="ignore", invalid="ignore"):
        w0 = -1.0 / det
        w1 = -k1 / det
        P[..., 0, 2] = P[..., 0, 0] * w0 + P[..., 0, 1] * w1 - e1 * w0
        P[..., 1, 2] = P[..., 1, 0] * w0 + P[..., 1, 1] * w1 - e1 * w1

    # The cosh/sinc form above has no 1/(k2 - k3) factor, so coalescing k2, k3
    # needs no special treatment; only a near-resonant k1 does.
    weak = np.maximum(1.0, np.abs(k1)) > COUPLING_MAX_AMPLIFICATION * np.abs(det)
    fallback = weak | ~np.isfinite(P).all(axis=(-1, -2))
    if np.any(fallback):
        P[fallback] = expm_batch(t * mode_matrix(params, mu[fallback]))
    return P


def propagator(params: MediumParams, mu: float, dt: float) -> np.ndarray:
    """``exp(dt * A_mu)`` in closed form.

    The wave block uses ``e^{mt} (cosh(dt delta) I + sinh(dt delta)/delta (B - m I))``,
    which stays accurate through the critically damped case ``mu = 4 c^2 / b^2``.
    The heat-to-wave coupling column falls back to scaling and squaring when
    ``-a mu`` nearly coincides with a wave eigenvalue.
    """
    if dt < 0:
        raise DomainError("dt must be >= 0")
    if dt == 0:
        return np.eye(3)
    return _propagators(params, np.array([float(mu)]), dt)[0]


class LinearStepper:
    """Precomputed exponential-trapezoidal step for one (domain, params, dt).

    ``Psi_{n+1} = P Psi_n + q1 f_n + q2 (f_{n+1} - f_n)`` where ``q1, q2`` are the
    third columns of ``dt phi_1(dt A)`` and ``dt phi_2(dt A)``.
    """

    def __init__(self, domain: BoxDomain, params: MediumParams, dt: float):
        if not dt > 0:
            raise DomainError(f"dt must be positive, got {dt}")
        self.domain, self.params, self.dt = domain, params, float(dt)
        mu = domain.eigenvalues
        self.P = _propagators(params, mu, dt)
        aug = np.zeros((mu.size, 5, 5))
        aug[:, :3, :3] = dt * mode_matrix(params, mu)
        aug[:, 2, 3] = dt
        aug[:, 3, 4] = 1.0
        E = expm_batch(aug)
        self.q1 = E[:, :3, 3].T.copy()  # (3, m)
        self.q2 = E[:, :3, 4].T.copy()

    def homogeneous(self, values: np.ndarray) -> np.ndarray:
        return np.einsum("mij,jm->im", self.P, values)

    def step(self, values, f_begin=None, f_end=None) -> np.ndarray:
        out = self.homogeneous(values)
        if f_begin is not None:
            out += self.q1 * f_begin
            if f_end is not None:
                out += self.q2 * (f_end - f_begin)
        elif f_end is not None:
            out += self.q2 * f_end
        return out


@functools.lru_cache(maxsize=32)
def get_stepper(domain: BoxDomain, params: MediumParams, dt: float) -> LinearStepper:
    return LinearStepper(domain, params, dt)


def step_linear(state: ModalState, forcing_begin: SpectralField, forcing_end: SpectralField,
                dt: float, params: MediumParams) -> ModalState:
    """One exponential-trapezoidal step with forcing interpolated linearly in time."""
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    _check_fields(state, forcing_begin, forcing_end)
    stepper = get_stepper(state.domain, params, float(dt))
    return ModalState(state.domain, stepper.step(state.values, forcing_begin.coefficients,
                                                 forcing_end.coefficients))


def derivative_arrays(mu, params: MediumParams, values, forcing, forcing_rate=None):
    """Time derivatives recovered from the lifted state, as coefficient arrays.

    Works on a single state ``(3, m)`` or a stack ``(n, 3, m)``.  ``forcing_rate``
    (``f_t``) is needed only for the fourth derivative of ``psi`` and third of ``w``.
    """
    a, b, c2 = params.a, params.b, params.c**2
    psi, psit, z = values[..., 0, :], values[..., 1, :], values[..., 2, :]
    psitt = z - c2 * mu * psi - b * mu * psit
    zt = -a * mu * z + forcing
    psittt = zt - c2 * mu * psit - b * mu * psitt
    ftt = 0.0 if forcing_rate is None else forcing_rate
    ztt = -a * mu * zt + ftt
    psitttt = ztt - c2 * mu * psitt - b * mu * psittt
    return {
        "psi": psi, "psit": psit, "psitt": psitt, "psittt": psittt, "psitttt": psitttt,
        "w": psit + a * mu * psi,
        "wt": psitt + a * mu * psit,
        "wtt": psittt + a * mu * psitt,
        "wttt": psitttt + a * mu * psittt,
    }


def reconstruct_derivatives(state: ModalState, forcing: SpectralField, params: MediumParams):
    """Return ``(psi_tt, psi_ttt, w, w_t, w_tt)`` with ``w = psi_t + a A psi``."""
    _check_fields(state, forcing)
    d = derivative_arrays(state.domain.eigenvalues, params, state.values, forcing.coefficients)
    return tuple(SpectralField(state.domain, d[k]) for k in ("psitt", "psittt", "w", "wt", "wtt"))
