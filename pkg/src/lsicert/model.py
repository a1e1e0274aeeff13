"""Potentials V on R^n, their derivatives, and single-site conditionals.

A :class:`PotentialSpec` describes the Hamiltonian of the Gibbs density
``q(x) = exp(-V(x))``.  Three families are supported:

* ``quadratic``: ``V(x) = x^T M x / 2``,
* ``perturbed_quadratic``: ``V(x) = x^T M x / 2 + sum_i a_i sin(omega_i x_i)``,
* ``lattice``: a quadratic potential with nearest-neighbour couplings on a
  rectangular grid of sites, flattened in lexicographic order.

Sites are 0-based throughout.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import (
    DimensionMismatch,
    NoDecomposition,
    NotNormalizable,
    NotPositiveDefinite,
    SameIndex,
)

__all__ = [
    "Variant",
    "SinePerturbation",
    "LatticeInfo",
    "PotentialSpec",
    "Conditional1D",
    "quadratic",
    "perturbed_quadratic",
    "build_lattice",
    "potential",
    "grad_potential",
    "mixed_partial",
    "conditional",
    "conditional_lsi_rho",
    "lattice_index",
]


class Variant(str, enum.Enum):
    QUADRATIC = "quadratic"
    PERTURBED_QUADRATIC = "perturbed_quadratic"
    LATTICE = "lattice"


@dataclass(frozen=True)
class SinePerturbation:
    """``phi(xi) = a * sin(omega * xi)`` acting on one site.

    The sup-norm bounds of phi and its first two derivatives are exact.
    """

    site: int
    a: float
    omega: float = 1.0

    @property
    def sup_abs(self) -> float:
        return abs(self.a)

    @property
    def sup_d1(self) -> float:
        return abs(self.a * self.omega)

    @property
    def sup_d2(self) -> float:
        return abs(self.a * self.omega**2)

    def value(self, xi):
        return self.a * np.sin(self.omega * xi)

    def d1(self, xi):
        return self.a * self.omega * np.cos(self.omega * xi)

    def d2(self, xi):
        return -self.a * self.omega**2 * np.sin(self.omega * xi)


@dataclass(frozen=True)
class LatticeInfo:
    dims: tuple
    J: float
    h: float


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    variant: Variant
    precision: np.ndarray
    perturbations: tuple = ()
    lattice: Optional[LatticeInfo] = None
    # per-site tuple of perturbations, filled in __post_init__
    _by_site: tuple = field(default=(), repr=False)

    def __post_init__(self):
        M = _frozen(self.precision)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
            raise DimensionMismatch(f"precision must be a non-empty square matrix, got shape {M.shape}")
        if not np.all(np.isfinite(M)):
            raise ValueError("precision has non-finite entries")
        if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(1.0, np.abs(M).max())):
            raise ValueError("precision must be symmetric")
        M = _frozen((M + M.T) / 2)
        object.__setattr__(self, "precision", M)
        object.__setattr__(self, "variant", Variant(self.variant))
        n = M.shape[0]

        perts = tuple(self.perturbations)
        if perts and self.variant is not Variant.PERTURBED_QUADRATIC:
            raise ValueError(f"{self.variant.value} potentials carry no perturbations")
        by_site = [[] for _ in range(n)]
        for p in perts:
            if not 0 <= p.site < n:
                raise DimensionMismatch(f"perturbation site {p.site} outside [0, {n})")
            if not (math.isfinite(p.a) and math.isfinite(p.omega)):
                raise ValueError("perturbation parameters must be finite")
            by_site[p.site].append(p)
        object.__setattr__(self, "perturbations", perts)
        object.__setattr__(self, "_by_site", tuple(tuple(b) for b in by_site))

        if self.variant in (Variant.QUADRATIC, Variant.LATTICE):
            lam = np.linalg.eigvalsh(M)[0]
            if lam <= 0:
                raise NotPositiveDefinite(f"lambda_min(M) = {lam:.6g} <= 0")

    @property
    def n(self) -> int:
        return self.precision.shape[0]

    @property
    def is_gaussian(self) -> bool:
        """True when q is exactly N(0, M^{-1})."""
        return self.variant in (Variant.QUADRATIC, Variant.LATTICE)

    def site_perturbations(self, i: int) -> tuple:
        return self._by_site[i]

    def perturbation_sup(self, i: int) -> float:
        """Upper bound on sup|K_i| for the bounded part at site i."""
        return float(sum(p.sup_abs for p in self._by_site[i]))

    def scaled(self, c: float) -> "PotentialSpec":
        """The potential ``c * V``."""
        perts = tuple(SinePerturbation(p.site, c * p.a, p.omega) for p in self.perturbations)
        lat = None
        if self.lattice is not None:
            lat = LatticeInfo(self.lattice.dims, c * self.lattice.J, c * self.lattice.h)
        return PotentialSpec(self.variant, c * self.precision, perts, lat)

    def gaussian_covariance(self) -> np.ndarray:
        if not self.is_gaussian:
            raise NoDecomposition("q is Gaussian only for quadratic and lattice variants")
        return np.linalg.inv(self.precision)


def quadratic(M) -> PotentialSpec:
    return PotentialSpec(Variant.QUADRATIC, M)


def perturbed_quadratic(M, perturbations: Sequence) -> PotentialSpec:
    """Build a perturbed quadratic; perturbations are SinePerturbation or (site, a, omega)."""
    perts = tuple(p if isinstance(p, SinePerturbation) else SinePerturbation(*p) for p in perturbations)
    return PotentialSpec(Variant.PERTURBED_QUADRATIC, M, perts)


def lattice_index(dims: Sequence[int], node: Sequence[int]) -> int:
    """Position of a lattice node in the lexicographic ordering."""
    return int(np.ravel_multi_index(tuple(node), tuple(dims)))


def build_lattice(dims: Sequence[int], J: float, h: float) -> PotentialSpec:
    """Nearest-neighbour quadratic lattice potential with free boundary.

    Nodes are ordered lexicographically; ``M_ii = h`` and ``M_ik = J`` for
    every pair of nodes differing by one in exactly one coordinate.
    """
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"lattice dims must be positive, got {dims}")
    if not h > 0:
        raise ValueError("self-term h must be positive")
    n = int(np.prod(dims))
    M = np.zeros((n, n))
    np.fill_diagonal(M, h)
    for node in np.ndindex(*dims):
        i = lattice_index(dims, node)
        for axis in range(len(dims)):
            if node[axis] + 1 < dims[axis]:
                nb = list(node)
                nb[axis] += 1
                k = lattice_index(dims, nb)
                M[i, k] = M[k, i] = J
    return PotentialSpec(Variant.LATTICE, M, lattice=LatticeInfo(dims, float(J), float(h)))


def _check_point(spec: PotentialSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (spec.n,):
        raise DimensionMismatch(f"expected trailing dimension {spec.n}, got shape {x.shape}")
    return x


def potential(spec: PotentialSpec, x) -> np.ndarray:
    """V(x); broadcasts over leading axes of ``x``."""
    x = _check_point(spec, x)
    v = 0.5 * np.einsum("...i,ij,...j->...", x, spec.precision, x)
    for p in spec.perturbations:
        v = v + p.value(x[..., p.site])
    return v


def grad_potential(spec: PotentialSpec, x) -> np.ndarray:
    x = _check_point(spec, x)
    g = x @ spec.precision
    for p in spec.perturbations:
        g[..., p.site] += p.d1(x[..., p.site])
    return g


def mixed_partial(spec: PotentialSpec, i: int, k: int, x) -> float:
    """d^2 V / dx_i dx_k at x for i != k.

    Perturbations act on single coordinates, so the result is M_ik for every
    supported variant.
    """
    _check_point(spec, x)
    if i == k:
        raise SameIndex("mixed_partial needs two distinct sites")
    if not (0 <= i < spec.n and 0 <= k < spec.n):
        raise DimensionMismatch(f"sites ({i}, {k}) outside [0, {spec.n})")
    return float(spec.precision[i, k])


@dataclass(frozen=True)
class Conditional1D:
    """Law of X_i given the other coordinates.

    ``logdensity`` is the unnormalized log-density
    ``xi -> -V(x_1, ..., xi, ..., x_n)`` up to an xi-free constant.
    For quadratic-family specs ``mean``/``variance`` are populated.
    """

    site: int
    logdensity: Callable
    curvature: float
    field: float
    perturbations: tuple = ()
    mean: Optional[float] = None
    variance: Optional[float] = None

    @property
    def is_gaussian(self) -> bool:
        return self.mean is not None

    def log_normalizer(self) -> float:
        """log of the integral of exp(logdensity) over R."""
        if self.is_gaussian:
            # logdensity is -(xi - mean)^2 / (2 var) + field^2/(2 curvature)
            return 0.5 * math.log(2 * math.pi * self.variance) + 0.5 * self.field**2 / self.curvature
        center = -self.field / self.curvature
        width = 40.0 / math.sqrt(self.curvature)
        shift = float(self.logdensity(center))
        val, _ = integrate.quad(
            lambda t: math.exp(float(self.logdensity(t)) - shift),
            center - width,
            center + width,
            points=[center],
            epsabs=0,
            epsrel=1e-13,
            limit=400,
        )
        return shift + math.log(val)

    def pdf(self, xi):
        return np.exp(self.logdensity(np.asarray(xi, dtype=float)) - self.log_normalizer())


def conditional(spec: PotentialSpec, i: int, xbar) -> Conditional1D:
    """Conditional law Q_i(. | xbar) where ``xbar`` lists the other n-1 coordinates in order."""
    xbar = np.asarray(xbar, dtype=float)
    if xbar.shape != (spec.n - 1,):
        raise DimensionMismatch(f"xbar must have length {spec.n - 1}, got shape {xbar.shape}")
    if not 0 <= i < spec.n:
        raise DimensionMismatch(f"site {i} outside [0, {spec.n})")
    M = spec.precision
    c = float(M[i, i])
    if c <= 0:
        raise NotNormalizable(f"M[{i},{i}] = {c} is not positive")
    others = np.delete(np.arange(spec.n), i)
    f = float(M[i, others] @ xbar)
    perts = spec.site_perturbations(i)

    def logdensity(xi):
        xi = np.asarray(xi, dtype=float)
        out = -0.5 * c * xi**2 - f * xi
        for p in perts:
            out = out - p.value(xi)
        return out

    if perts:
        return Conditional1D(i, logdensity, c, f, perts)
    return Conditional1D(i, logdensity, c, f, (), mean=-f / c, variance=1.0 / c)


def conditional_lsi_rho(spec: PotentialSpec, i: int) -> float:
    """Uniform lower bound on the LSI constant of Q_i(. | xbar).

    The conditional is ``M_ii``-strongly log-concave up to the bounded
    perturbation at site i, so the constant is ``M_ii * exp(-4 sup|K_i|)``.
    """
    if not isinstance(spec, PotentialSpec):
        raise NoDecomposition(f"unsupported potential {type(spec).__name__}")
    c = float(spec.precision[i, i])
    if c <= 0:
        raise NoDecomposition(f"M[{i},{i}] = {c}: no strongly convex part at site {i}")
    k = spec.perturbation_sup(i)
    if k == 0:
        return c
    return c * math.exp(-4.0 * k)
