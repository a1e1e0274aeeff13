"""Contractivity audit and the certified LSI constant.

The mixed partials of V are split into a strictly upper triangle ``A1`` and
a strictly lower triangle ``A2`` (absolute values, sup over x).  With
``rho`` the uniform conditional LSI constant, the ordering is certified when

    max(||A1||, ||A2||) / rho <= (1 - delta) / 2   for some delta in (0, 1],

and then ``q = exp(-V)`` satisfies an LSI with constant ``rho * delta / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DimensionMismatch, NonCertified, UnsupportedVariant
from .model import PotentialSpec, conditional_lsi_rho

__all__ = [
    "ContractivityMatrices",
    "SpectralNorm",
    "Certificate",
    "LipschitzReport",
    "bound_matrices",
    "spectral_norm",
    "certify",
    "lipschitz_check",
]


@dataclass(frozen=True, eq=False)
class ContractivityMatrices:
    A1: np.ndarray
    A2: np.ndarray


class SpectralNorm(NamedTuple):
    value: float
    frobenius: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class Certificate:
    rho: float
    norm_a1: float
    norm_a2: float
    delta: float
    lsi_lower: Optional[float]
    alt_denominator: float
    lipschitz_bound: Optional[float]
    passed: bool
    norms_converged: bool = True

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "norm_a1": self.norm_a1,
            "norm_a2": self.norm_a2,
            "delta": self.delta,
            "lsi_lower": self.lsi_lower,
            "alt_denominator": self.alt_denominator,
            "lipschitz_bound": self.lipschitz_bound,
            "pass": self.passed,
        }

    def summary(self) -> str:
        lines = [
            f"rho (conditional LSI constant) : {self.rho:.10g}",
            f"||A1||, ||A2||                 : {self.norm_a1:.10g}, {self.norm_a2:.10g}",
            f"delta                          : {self.delta:.10g}",
        ]
        if self.passed:
            lines.append(f"certified LSI constant         : {self.lsi_lower:.10g}")
            lines.append(f"Lipschitz constant             : {self.lipschitz_bound:.10g}")
            lines.append("CERTIFIED")
        else:
            lines.append("NOT CERTIFIED: contractivity condition fails (delta <= 0)")
        if not self.norms_converged:
            lines.append("note: power iteration hit its cap; Frobenius bound used")
        return "\n".join(lines)


def bound_matrices(spec: PotentialSpec) -> ContractivityMatrices:
    """Entrywise sup |d_ik V| split into strict upper (A1) and lower (A2) parts.

    Perturbations are single-site, so the mixed partials are the constant
    off-diagonal entries of M for every supported variant.
    """
    if not isinstance(spec, PotentialSpec):
        raise UnsupportedVariant(f"cannot bound mixed partials of {type(spec).__name__}")
    alpha = np.abs(np.asarray(spec.precision, dtype=float))
    return ContractivityMatrices(np.triu(alpha, 1), np.tril(alpha, -1))


def spectral_norm(A, tol: float = 1e-10, max_iter: Optional[int] = None) -> SpectralNorm:
    """Largest singular value by power iteration on A^T A.

    Seeded with the all-ones vector.  For entrywise nonnegative A (the
    contractivity matrices), A^T A has a nonnegative Perron vector, so the
    seed always overlaps it.  If the relative change does not drop below
    ``tol`` within ``max_iter`` (default 10 * n) iterations, the Frobenius
    norm is returned as a guaranteed upper bound and ``converged`` is False.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DimensionMismatch("spectral_norm needs a matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    fro = float(np.linalg.norm(A))
    if fro == 0.0:
        return SpectralNorm(0.0, 0.0, True, 0)
    n = A.shape[1]
    cap = max_iter if max_iter is not None else 10 * n
    v = np.ones(n) / np.sqrt(n)
    lam = 0.0
    for it in range(1, cap + 1):
        Av = A @ v
        w = A.T @ Av
        lam_new = float(Av @ Av)
        wn = np.linalg.norm(w)
        if wn == 0.0:
            break
        v = w / wn
        if lam_new > 0 and abs(lam_new - lam) <= tol * lam_new:
            return SpectralNorm(float(np.sqrt(lam_new)), fro, True, it)
        lam = lam_new
    return SpectralNorm(fro, fro, False, cap)


def certify(spec: PotentialSpec) -> Certificate:
    """Evaluate the contractivity condition and emit the certified constant."""
    rho = min(conditional_lsi_rho(spec, i) for i in range(spec.n))
    mats = bound_matrices(spec)
    s1 = spectral_norm(mats.A1)
    s2 = spectral_norm(mats.A2)
    worst = max(s1.value, s2.value)
    delta = 1.0 - 2.0 * worst / rho
    passed = delta > 0
    return Certificate(
        rho=rho,
        norm_a1=s1.value,
        norm_a2=s2.value,
        delta=delta,
        lsi_lower=rho * delta / 2 if passed else None,
        alt_denominator=rho - 2.0 * worst,
        lipschitz_bound=(1 - delta) / delta if passed else None,
        passed=passed,
        norms_converged=s1.converged and s2.converged,
    )


class LipschitzReport(NamedTuple):
    w2: float
    distance: float
    ratio: float
    bound: float
    slack: float


def lipschitz_check(spec: PotentialSpec, cert: Certificate, i: int, x, xhat) -> LipschitzReport:
    """Compare W2 of the laws of X_{>i} given two prefixes against (1-delta)/delta.

    ``i`` is the prefix length (1 <= i < n); ``x`` and ``xhat`` hold the
    first ``i`` coordinates.  Only Gaussian q is handled: both conditional
    laws share the covariance ``M_bb^{-1}``, so W2 is the mean displacement.
    """
    if not spec.is_gaussian:
        raise UnsupportedVariant("lipschitz_check needs a quadratic or lattice spec")
    if not cert.passed:
        raise NonCertified("lipschitz_check needs a passing certificate")
    x = np.asarray(x, dtype=float)
    xhat = np.asarray(xhat, dtype=float)
    if not 1 <= i < spec.n or x.shape != (i,) or xhat.shape != (i,):
        raise DimensionMismatch(f"prefixes must have length i in [1, {spec.n - 1}]")
    M = spec.precision
    shift = np.linalg.solve(M[i:, i:], M[i:, :i] @ (x - xhat))
    w2 = float(np.linalg.norm(shift))
    dist = float(np.linalg.norm(x - xhat))
    ratio = w2 / dist if dist > 0 else 0.0
    bound = cert.lipschitz_bound
    return LipschitzReport(w2, dist, ratio, bound, bound * dist - w2)
