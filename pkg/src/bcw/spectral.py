"""Sine-basis representation of fields on a rectangular box.

The Dirichlet Laplacian ``A = -Laplace`` on ``[0, L_1] x ... x [0, L_d]`` is diagonal
in the basis ``prod_i sin(pi k_i x_i / L_i)`` with eigenvalue
``mu_k = sum_i (pi k_i / L_i)**2``.  Fields are stored as coefficient vectors in
a fixed mode ordering (ascending eigenvalue, ties broken lexicographically on the
multi-index), which every other module relies on.
"""
from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import fft

from .errors import DomainError, ShapeError


@dataclass(frozen=True)
class Mode:
    index: tuple
    eigenvalue: float


@dataclass(frozen=True)
class BoxDomain:
    """Box ``prod_i [0, L_i]`` truncated to ``N_i`` sine modes per dimension."""

    lengths: tuple
    modes_per_dim: tuple

    def __post_init__(self):
        lengths = tuple(float(x) for x in np.atleast_1d(self.lengths))
        modes = tuple(int(n) for n in np.atleast_1d(self.modes_per_dim))
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "modes_per_dim", modes)
        if len(lengths) not in (1, 2, 3):
            raise DomainError(f"box dimension must be 1, 2 or 3, got {len(lengths)}")
        if len(lengths) != len(modes):
            raise DomainError("lengths and modes_per_dim must have the same arity")
        if not all(np.isfinite(L) and L > 0 for L in lengths):
            raise DomainError(f"all lengths must be positive, got {lengths}")
        if not all(n >= 1 for n in modes):
            raise DomainError(f"all mode counts must be >= 1, got {modes}")

    @classmethod
    def interval(cls, length=np.pi, modes=16):
        return cls((length,), (modes,))

    @property
    def dims(self) -> int:
        return len(self.lengths)

    @property
    def size(self) -> int:
        return int(np.prod(self.modes_per_dim))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def l2_weight(self) -> float:
        """``||prod_i sin(k_i pi x_i / L_i)||^2`` in L^2, i.e. volume / 2^d."""
        return self.volume / 2**self.dims

    # Mode bookkeeping is cached on the instance; the dataclass stays hashable
    # because cached values live in __dict__ and are excluded from eq/hash.
    @functools.cached_property
    def _ordering(self):
        ks = np.array(list(itertools.product(*(range(1, n + 1) for n in self.modes_per_dim))))
        mu = np.sum((np.pi * ks / np.array(self.lengths)) ** 2, axis=1)
        # round before sorting so that float noise cannot break exact ties
        keys = [(float(f"{m:.12e}"), tuple(k)) for m, k in zip(mu, ks)]
        order = sorted(range(len(keys)), key=keys.__getitem__)
        ks = ks[order]
        flat = np.ravel_multi_index(tuple((ks - 1).T), self.modes_per_dim)
        return ks, mu[order], flat

    @property
    def mode_indices(self) -> np.ndarray:
        """``(m, d)`` array of 1-based multi-indices in enumeration order."""
        return self._ordering[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._ordering[1]

    @property
    def mu_min(self) -> float:
        return float(self.eigenvalues[0])

    def to_grid(self, coefficients: np.ndarray) -> np.ndarray:
        """Scatter enumeration-ordered coefficients into an ``N_1 x ... x N_d`` array."""
        out = np.zeros(self.size, dtype=np.result_type(coefficients, float))
        out[self._ordering[2]] = coefficients
        return out.reshape(self.modes_per_dim)

    def from_grid(self, array: np.ndarray) -> np.ndarray:
        return np.asarray(array).reshape(-1)[self._ordering[2]]

    def collocation_points(self):
        """Interior grid ``x_{j,i} = j L_i / (N_i + 1)`` as a list of 1-D arrays."""
        return [np.arange(1, n + 1) * L / (n + 1) for L, n in zip(self.lengths, self.modes_per_dim)]

    def zeros(self) -> "SpectralField":
        return SpectralField(self, np.zeros(self.size))


@dataclass(frozen=True, eq=False)
class SpectralField:
    domain: BoxDomain
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float).reshape(-1)
        if c.size != self.domain.size:
            raise ShapeError(f"expected {self.domain.size} coefficients, got {c.size}")
        if not np.all(np.isfinite(c)):
            raise ShapeError("spectral coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def from_modes(cls, domain: BoxDomain, amplitudes: dict | Sequence[float]):
        """Build a field from ``{multi_index: amplitude}`` or a list in enumeration order."""
        c = np.zeros(domain.size)
        if isinstance(amplitudes, dict):
            lookup = {tuple(k): i for i, k in enumerate(domain.mode_indices)}
            for k, amp in amplitudes.items():
                k = (k,) if np.isscalar(k) else tuple(k)
                if k not in lookup:
                    raise DomainError(f"mode {k} is not in the truncated basis")
                c[lookup[k]] = amp
        else:
            amplitudes = np.asarray(amplitudes, dtype=float)
            if amplitudes.size > domain.size:
                raise ShapeError("more amplitudes than retained modes")
            c[: amplitudes.size] = amplitudes
        return cls(domain, c)

    def _check(self, other):
        if not isinstance(other, SpectralField) or other.domain != self.domain:
            raise ShapeError("fields live on different domains")

    def __add__(self, other):
        self._check(other)
        return SpectralField(self.domain, self.coefficients + other.coefficients)

    def __sub__(self, other):
        self._check(other)
        return SpectralField(self.domain, self.coefficients - other.coefficients)

    def __mul__(self, scalar):
        return SpectralField(self.domain, self.coefficients * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.domain, -self.coefficients)


@dataclass(frozen=True, eq=False)
class PhysicalField:
    domain: BoxDomain
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.size != self.domain.size:
            raise ShapeError(f"expected {self.domain.size} samples, got {v.size}")
        object.__setattr__(self, "values", v.reshape(self.domain.modes_per_dim))


def enumerate_modes(domain: BoxDomain) -> list[Mode]:
    return [Mode(tuple(int(x) for x in k), float(mu))
            for k, mu in zip(domain.mode_indices, domain.eigenvalues)]


def laplacian_eigenvalue(domain: BoxDomain, k) -> float:
    k = np.atleast_1d(np.asarray(k, dtype=int))
    if k.size != domain.dims:
        raise DomainError(f"multi-index {tuple(k)} has wrong arity for a {domain.dims}-D box")
    if np.any(k < 1) or np.any(k > np.array(domain.modes_per_dim)):
        raise DomainError(f"multi-index {tuple(k)} outside 1..{domain.modes_per_dim}")
    return float(np.sum((np.pi * k / np.array(domain.lengths)) ** 2))


def to_physical(field: SpectralField) -> PhysicalField:
    """Synthesis ``psi(x_j) = sum_k c_k prod_i sin(pi k_i x_{j,i} / L_i)``."""
    d = field.domain
    grid = d.to_grid(field.coefficients)
    return PhysicalField(d, fft.dstn(grid, type=1) / 2**d.dims)


def to_spectral(field: PhysicalField) -> SpectralField:
    """Discrete sine analysis, the exact inverse of :func:`to_physical`."""
    d = field.domain
    scale = np.prod(np.array(d.modes_per_dim) + 1.0)
    grid = fft.dstn(field.values, type=1) / scale
    return SpectralField(d, d.from_grid(grid))


def apply_A_power(field: SpectralField, theta: float) -> SpectralField:
    theta = float(theta)
    if not np.isfinite(theta) or theta < 0:
        raise DomainError(f"theta must be finite and >= 0, got {theta}")
    if theta == 0:
        return field
    return SpectralField(field.domain, field.coefficients * field.domain.eigenvalues**theta)


def sobolev_norm(field: SpectralField, s: float) -> float:
    """``||A^{s/2} u||_{L^2}`` evaluated through Parseval."""
    return weighted_norm(field.domain, field.coefficients, s)


def weighted_norm(domain: BoxDomain, coefficients: np.ndarray, s: float = 0.0) -> float:
    return float(np.sqrt(weighted_norm_sq(domain, coefficients, s)))


def weighted_norm_sq(domain: BoxDomain, coefficients, s=0.0):
    """Squared ``||A^{s/2} u||``; ``coefficients`` may carry leading batch axes."""
    w = domain.eigenvalues**s if s else 1.0
    return domain.l2_weight * np.sum(w * np.asarray(coefficients) ** 2, axis=-1)


# ---------------------------------------------------------------------------
# Galerkin products
#
# A product of two sine polynomials of degree <= N is a cosine polynomial of
# degree <= 2N.  Sampling it on the 2N+1 point grid x_j = j L / (2N) recovers its
# cosine coefficients exactly (DCT-I); each cosine is then projected onto the
# retained sines analytically.  The result is the exact L^2 projection.


@functools.lru_cache(maxsize=64)
def _product_operators(n: int, intervals: int):
    """Per-axis synthesis (``(K+1) x n``) and analysis (``n x (K+1)``) matrices."""
    K = intervals
    j = np.arange(K + 1)
    k = np.arange(1, n + 1)
    synth = np.sin(np.pi * np.outer(j, k) / K)

    # values -> cosine coefficients on the DCT-I grid
    p = np.arange(K + 1)
    w = np.ones(K + 1)
    w[[0, K]] = 0.5
    to_cos = (2.0 / K) * np.cos(np.pi * np.outer(p, j) / K) * w
    to_cos[[0, K]] *= 0.5

    # (2/L) int_0^L cos(p pi x/L) sin(n pi x/L) dx, independent of L
    nn, pp = np.meshgrid(k, p, indexing="ij")
    with np.errstate(divide="ignore", invalid="ignore"):
        proj = (2.0 / np.pi) * nn * (1.0 - (-1.0) ** (nn + pp)) / (nn**2 - pp**2)
    proj[nn == pp] = 0.0

    synth.setflags(write=False)
    analysis = proj @ to_cos
    analysis.setflags(write=False)
    return synth, analysis


def _apply_axes(array, matrices):
    for axis, mat in enumerate(matrices):
        array = np.moveaxis(np.tensordot(mat, array, axes=(1, axis)), 0, axis)
    return array


def product_grid_ops(domain: BoxDomain, dealias: bool = True):
    """Return ``(synthesize, analyze)`` callables for the product grid.

    ``synthesize`` maps enumeration-ordered coefficients to samples on the product
    grid; ``analyze`` maps samples of any pointwise combination of such fields back
    to projected sine coefficients.  Without dealiasing the native ``N+1``-point
    grid is used, which is exact only for inputs confined to the lower half band.
    """
    ops = [_product_operators(n, 2 * n if dealias else n) for n in domain.modes_per_dim]
    synths = [s for s, _ in ops]
    analyses = [a for _, a in ops]

    def synthesize(coefficients):
        return _apply_axes(domain.to_grid(coefficients), synths)

    def analyze(samples):
        return domain.from_grid(_apply_axes(samples, analyses))

    return synthesize, analyze


def multiply_fields(u: SpectralField, v: SpectralField, dealias: bool = True) -> SpectralField:
    """Galerkin projection of the pointwise product ``u * v`` onto the retained sines."""
    u._check(v)
    synthesize, analyze = product_grid_ops(u.domain, dealias)
    return SpectralField(u.domain, analyze(synthesize(u.coefficients) * synthesize(v.coefficients)))
