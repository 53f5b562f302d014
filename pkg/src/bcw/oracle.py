"""Brute-force references for testing.

Nothing here shares code with the production time stepping: the matrix
exponential is a plain Taylor series in extended precision, products of sine
modes come from closed-form triple-product integrals rather than transforms, and
the nonlinear forcing is obtained from a dense linear solve instead of a
fixed-point loop.  The routines are slow by design.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import block_diag

from .errors import DomainError, ShapeError, StabilityError
from .linear import Trajectory

GROWTH_LIMIT = 1e10


def dense_expm(matrix, t: float = 1.0) -> np.ndarray:
    """``exp(t M)`` by scaling and squaring a Taylor series in long double."""
    M = np.asarray(matrix)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {M.shape}")
    if not t >= 0:
        raise DomainError(f"t must be >= 0, got {t}")
    X = M.astype(np.longdouble) * np.longdouble(t)
    n = X.shape[0]
    norm = float(np.max(np.sum(np.abs(X), axis=0))) if n else 0.0
    squarings = max(0, int(np.ceil(np.log2(norm / 0.125)))) if norm > 0.125 else 0
    X = X / np.longdouble(2.0) ** squarings
    result = np.eye(n, dtype=np.longdouble)
    term = np.eye(n, dtype=np.longdouble)
    for k in range(1, 40):
        term = term @ X / k
        result = result + term
        if np.max(np.abs(term)) <= 1e-22 * np.max(np.abs(result)):
            break
    for _ in range(squarings):
        result = result @ result
    return np.asarray(result, dtype=float)


def _mode_block(a, b, c, mu):
    return np.array([[0.0, 1.0, 0.0], [-c * c * mu, -b * mu, 1.0], [0.0, 0.0, -a * mu]])


def _axis_triple_products(n: int) -> np.ndarray:
    """``T[k, i, j] = (2/pi) int_0^pi sin(i x) sin(j x) sin(k x) dx`` for 1 <= i, j, k <= n.

    Uses ``sin i sin j sin k = (sin(k+i-j) + sin(k-i+j) - sin(k+i+j) - sin(k-i-j)) / 4``
    and ``int_0^pi sin(p x) dx = (1 - (-1)^p) / p``.
    """
    r = np.arange(1, n + 1)
    k, i, j = np.meshgrid(r, r, r, indexing="ij")

    def s(p):
        out = np.zeros(p.shape)
        nz = p != 0
        out[nz] = (1.0 - (-1.0) ** p[nz]) / p[nz]
        return out

    return (2.0 / np.pi) * 0.25 * (s(k + i - j) + s(k - i + j) - s(k + i + j) - s(k - i - j))


@dataclass
class DenseSystem:
    """The semidiscrete system with every mode written out explicitly.

    ``matrix`` is the ``3m x 3m`` block-diagonal generator in component-major
    order ``(psi_1..psi_m, psit_1..psit_m, z_1..z_m)``.  Products are projected with
    the triple-product tensor ``tensor[k, i, j]`` (coefficient of mode ``k`` in
    ``phi_i phi_j``).
    """

    mu: np.ndarray
    a: float
    b: float
    c: float
    sigma: float = 0.0
    indices: Optional[np.ndarray] = None
    external: Optional[Callable[[float], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        m = self.mu.size
        blocks = block_diag(*[_mode_block(self.a, self.b, self.c, mu) for mu in self.mu])
        perm = np.arange(3 * m).reshape(m, 3).T.ravel()
        self.matrix = blocks[np.ix_(perm, perm)]
        self._tensor = None

    @classmethod
    def from_domain(cls, domain, params, external=None):
        return cls(domain.eigenvalues, params.a, params.b, params.c, params.sigma,
                   np.asarray(domain.mode_indices), external)

    @property
    def m(self) -> int:
        return self.mu.size

    @property
    def tensor(self) -> np.ndarray:
        if self._tensor is None:
            if self.indices is None:
                raise ShapeError("mode indices are required for the nonlinear term")
            idx = np.asarray(self.indices)
            T = np.ones((self.m,) * 3)
            for axis in range(idx.shape[1]):
                ax = _axis_triple_products(int(idx[:, axis].max()))
                k = idx[:, axis] - 1
                T = T * ax[np.ix_(k, k, k)]
            self._tensor = T
        return self._tensor

    def block(self, k: int) -> np.ndarray:
        sel = [k, self.m + k, 2 * self.m + k]
        return self.matrix[np.ix_(sel, sel)]

    def external_at(self, t):
        return np.zeros(self.m) if self.external is None else np.asarray(self.external(t), dtype=float)

    def forcing(self, y: np.ndarray, t: float) -> np.ndarray:
        """Total forcing ``f`` at state ``y`` (flat, component-major).

        With ``psi_ttt = g + f`` where ``g = -a mu z - c^2 mu psi_t - b mu psi_tt``, the
        relation ``f = f_ext - 2 sigma P(psi_tt^2 + psi_t psi_ttt)`` is linear in ``f``
        and is solved directly.
        """
        m = self.m
        f_ext = self.external_at(t)
        if self.sigma == 0:
            return f_ext
        psi, pt, z = y[:m], y[m:2 * m], y[2 * m:]
        mu = self.mu
        ptt = z - self.c**2 * mu * psi - self.b * mu * pt
        g = -self.a * mu * z - self.c**2 * mu * pt - self.b * mu * ptt
        T = self.tensor
        M_pt = np.einsum("kij,i->kj", T, pt)  # v -> P(psi_t v)
        rhs = f_ext - 2 * self.sigma * (np.einsum("kij,i,j->k", T, ptt, ptt) + M_pt @ g)
        return np.linalg.solve(np.eye(m) + 2 * self.sigma * M_pt, rhs)

    def rhs(self, y: np.ndarray, t: float) -> np.ndarray:
        out = self.matrix @ y
        if self.sigma != 0 or self.external is not None:
            out[2 * self.m:] += self.forcing(y, t)
        return out

    def evolve_linear(self, y0: np.ndarray, t: float) -> np.ndarray:
        return dense_expm(self.matrix, t) @ y0


def rk4_reference_trajectory(config, refinement: int = 16) -> Trajectory:
    """Classical RK4 at ``dt / refinement``, sampled at the main step times."""
    if refinement < 4:
        raise DomainError("refinement must be at least 4 substeps per step")
    dom = config.domain
    params = config.medium if config.nonlinear_enabled else config.medium.replace(sigma=0.0)
    system = DenseSystem.from_domain(dom, params, config.forcing)
    m = dom.size
    psi0, psi1, psi2 = (f.coefficients for f in config.initial_fields())
    mu = dom.eigenvalues
    y = np.concatenate([psi0, psi1, psi2 + params.c**2 * mu * psi0 + params.b * mu * psi1])
    n = config.n_steps
    h = config.dt / refinement
    times = np.arange(n + 1) * config.dt
    states = np.zeros((n + 1, 3, m))
    forcings = np.zeros((n + 1, m))
    states[0] = y.reshape(3, m)
    forcings[0] = system.forcing(y, 0.0)
    scale0 = max(np.max(np.abs(y)), 1.0)
    for i in range(n):
        for s in range(refinement):
            t = times[i] + s * h
            k1 = system.rhs(y, t)
            k2 = system.rhs(y + 0.5 * h * k1, t + 0.5 * h)
            k3 = system.rhs(y + 0.5 * h * k2, t + 0.5 * h)
            k4 = system.rhs(y + h * k3, t + h)
            y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > GROWTH_LIMIT * scale0:
            raise StabilityError(f"RK4 blew up near t={times[i + 1]:.6g}; use more substeps "
                                 f"(h={h:.3g}, stiffest rate {np.max(np.abs(mu)) * max(params.a, params.b):.3g})")
        states[i + 1] = y.reshape(3, m)
        forcings[i + 1] = system.forcing(y, times[i + 1])
    return Trajectory(dom, times, states, forcings)


def compare_trajectories(t1: Trajectory, t2: Trajectory) -> float:
    """Largest state difference over common times, relative to each component's scale.

    The scale of a component (psi, psi_t or z) is its largest magnitude over
    all times and modes of ``t2``.
    """
    if t1.times.shape != t2.times.shape or not np.allclose(t1.times, t2.times, rtol=1e-12, atol=1e-14):
        raise ShapeError("trajectories are sampled on different time grids")
    if t1.states.shape != t2.states.shape:
        raise ShapeError(f"state shapes differ: {t1.states.shape} vs {t2.states.shape}")
    diff = np.abs(t1.states - t2.states)
    scale = np.max(np.abs(t2.states), axis=(0, 2), keepdims=True)
    scale = np.where(scale > 0, scale, 1.0)
    return float(np.max(diff / scale))


def finite_difference(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Second-order time derivative estimate along the first axis."""
    return np.gradient(values, times, axis=0, edge_order=2)
