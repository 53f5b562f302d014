"""Point spectrum, spectral bound and resolvent estimates of the lifted generator.

Because the Dirichlet Laplacian is diagonal in the sine basis, the generator

    A = [[0, I, 0], [-c^2 A, -b A, I], [0, 0, -a A]]

splits into independent 3x3 blocks, one per eigenvalue ``mu``.  Operator norms of
functions of ``A`` (for instance ``lambda^2 V(lambda)^{-1}`` with
``V(lambda) = lambda^2 + b lambda A + c^2 A``) reduce to suprema of scalar moduli
over ``mu``.  That reduction is what makes the estimates below checkable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError

DEFECTIVE_RTOL = 1e-12


@dataclass(frozen=True)
class MediumParams:
    """Coefficients of the model: ``a`` (thermal relaxation), ``b`` (sound
    diffusivity), ``c`` (sound speed), ``sigma`` (nonlinearity)."""

    a: float
    b: float
    c: float
    sigma: float = 0.0
    nu: float | None = None
    prandtl: float | None = None
    b_over_a: float | None = None

    def __post_init__(self):
        for name in ("a", "b", "c"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                if name == "b":
                    raise DomainError(f"b must be > 0 (strong damping is required), got {value}")
                raise DomainError(f"{name} must be > 0, got {value}")
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")
        if self.nu is not None and self.prandtl is not None:
            if not np.isclose(self.a, self.nu / self.prandtl, rtol=1e-12, atol=0):
                raise DomainError("a is inconsistent with nu / prandtl")
        if self.b_over_a is not None:
            expected = (1.0 + 0.5 * self.b_over_a) / self.c**2
            if not np.isclose(self.sigma, expected, rtol=1e-12, atol=0):
                raise DomainError("sigma is inconsistent with (1 + B/2A) / c^2")

    @classmethod
    def from_physical(cls, nu, prandtl, b, c, b_over_a):
        """Derive ``a = nu / Pr`` and ``sigma = (1 + (B/A)/2) / c^2``."""
        return cls(a=nu / prandtl, b=b, c=c, sigma=(1.0 + 0.5 * b_over_a) / c**2,
                   nu=nu, prandtl=prandtl, b_over_a=b_over_a)

    def replace(self, **changes):
        values = {"a": self.a, "b": self.b, "c": self.c, "sigma": self.sigma}
        values.update(changes)
        return MediumParams(**values)


@dataclass(frozen=True)
class ModeEigenvalues:
    mu: float
    kappa1: float
    kappa2: complex
    kappa3: complex
    defective: bool

    @property
    def kappas(self):
        return (complex(self.kappa1), self.kappa2, self.kappa3)

    @property
    def max_real(self) -> float:
        return max(k.real for k in self.kappas)


def _quadratic_roots(b, c, mu):
    """Roots of ``lambda^2 + b mu lambda + c^2 mu`` (vectorised, cancellation free).

    Returns ``(kappa2, kappa3, disc)`` with ``kappa2`` the root of larger real
    part.
    """
    mu = np.asarray(mu, dtype=float)
    disc = b**2 * mu**2 - 4 * c**2 * mu
    sq = np.sqrt(np.abs(disc))
    real = disc >= 0
    # real branch: kappa3 = (-b mu - sqrt(disc)) / 2, kappa2 from Vieta
    k3_real = -0.5 * (b * mu + sq)
    k2_real = c**2 * mu / k3_real
    k2 = np.where(real, k2_real, -0.5 * b * mu + 0.5j * sq)
    k3 = np.where(real, k3_real, -0.5 * b * mu - 0.5j * sq)
    return k2, k3, disc


def mode_eigenvalues(params: MediumParams, mu: float) -> ModeEigenvalues:
    """Eigenvalues of the 3x3 block of the generator for Laplacian eigenvalue ``mu``."""
    mu = float(mu)
    if not mu > 0:
        raise DomainError(f"mu must be positive, got {mu}")
    k2, k3, disc = _quadratic_roots(params.b, params.c, mu)
    defective = abs(float(disc)) <= DEFECTIVE_RTOL * (params.b * mu) ** 2
    if defective:
        k2 = k3 = complex(-0.5 * params.b * mu)
    return ModeEigenvalues(mu, -params.a * mu, complex(k2), complex(k3), bool(defective))


def max_real_part(params: MediumParams, mu) -> np.ndarray:
    """``max_n Re kappa_n(mu)`` for an array of eigenvalues."""
    k2, _, _ = _quadratic_roots(params.b, params.c, mu)
    return np.maximum(-params.a * np.asarray(mu, dtype=float), k2.real)


def spectral_bound(params: MediumParams, mu_min: float) -> float:
    """``s(A) = -min(a mu_min, b mu_min / 2, c^2 / b)``."""
    if not mu_min > 0:
        raise DomainError(f"mu_min must be positive, got {mu_min}")
    return -min(params.a * mu_min, params.b * mu_min / 2, params.c**2 / params.b)


def triggiani_constant(params: MediumParams, mu_min: float) -> float:
    """Uniform bound on ``|lambda^2 / V(lambda)|`` over the right half plane."""
    b2c2 = params.b**2 / params.c**2
    if b2c2 * mu_min / 2 >= 1:
        return 1.0
    return float((b2c2 * mu_min * (1 - b2c2 * mu_min / 4)) ** -0.5)


@dataclass
class ResolventReport:
    lambdas: np.ndarray = field(repr=False)
    ratio_lambda2: np.ndarray = field(repr=False)  # per sample, max over modes of |lambda^2 / v|
    ratio_damping: np.ndarray = field(repr=False)  # per sample, max over modes of |b lambda mu / v|
    constant: float
    tol: float
    passed: bool

    @property
    def max_ratio_lambda2(self) -> float:
        return float(self.ratio_lambda2.max())

    @property
    def max_ratio_damping(self) -> float:
        return float(self.ratio_damping.max())


def default_lambda_samples(n_moduli=40, n_args=25, eps=1e-3):
    """Log-spaced moduli in [1e-3, 1e6] crossed with arguments in (-pi/2, pi/2)."""
    r = np.logspace(-3, 6, n_moduli)
    theta = np.linspace(-np.pi / 2 + eps, np.pi / 2 - eps, n_args)
    return (r[:, None] * np.exp(1j * theta[None, :])).ravel()


def verify_resolvent_bounds(params: MediumParams, modes: Sequence, lambda_samples=None,
                            tol: float = 1e-9) -> ResolventReport:
    """Evaluate ``|lambda^2/v|`` and ``|b lambda mu/v|`` over all (lambda, mode) pairs.

    ``modes`` may be :class:`~bcw.spectral.Mode` objects or plain eigenvalues.
    The constant is taken at the smallest eigenvalue present.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    mu = np.array([getattr(m, "eigenvalue", m) for m in modes], dtype=float)
    if mu.size == 0 or np.any(mu <= 0):
        raise DomainError("need at least one positive eigenvalue")
    lam = default_lambda_samples() if lambda_samples is None else np.asarray(lambda_samples, dtype=complex)
    lam = lam.ravel()
    if np.any(lam.real <= 0):
        raise DomainError("all lambda samples must satisfy Re(lambda) > 0")

    L = lam[:, None]
    v = L**2 + params.b * L * mu[None, :] + params.c**2 * mu[None, :]
    r1 = np.abs(L**2 / v).max(axis=1)
    r2 = np.abs(params.b * L * mu[None, :] / v).max(axis=1)
    C = triggiani_constant(params, mu.min())
    passed = bool(r1.max() <= C * (1 + tol) and r2.max() <= 1 + tol)
    return ResolventReport(lam, r1, r2, C, tol, passed)
