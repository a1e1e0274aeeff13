"""The sequential sweep kernel G(v | u) = prod_i Q_i(v_i | v_{<i}, u_{>i})."""

from __future__ import annotations

import math
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import logsumexp

from ..certify import Certificate
from ..errors import DimensionMismatch, IterationCap, NonCertified, UnsupportedVariant
from ..metrics import GaussianDist, GridDist, w2
from ..model import PotentialSpec, potential

__all__ = ["sweep_matrices", "gibbs_grid", "markov_step_G", "contraction_check", "fixed_point", "FixedPoint"]


def sweep_matrices(spec: PotentialSpec) -> tuple:
    """(A, B) with one Gaussian sweep equal to x' = A x + B xi, xi ~ N(0, I)."""
    if not spec.is_gaussian:
        raise UnsupportedVariant("closed-form sweep needs a quadratic or lattice spec")
    M = spec.precision
    DL = np.tril(M)
    U = np.triu(M, 1)
    A = -np.linalg.solve(DL, U)
    B = np.linalg.solve(DL, np.diag(np.sqrt(np.diag(M))))
    return A, B


def gibbs_grid(spec: PotentialSpec, axes) -> GridDist:
    """exp(-V) restricted to the grid points and normalized."""
    return GridDist.from_logdensity(axes, lambda x: -potential(spec, x))


def markov_step_G(law, spec: PotentialSpec):
    """Push a configuration law forward through one sweep."""
    if law.n != spec.n:
        raise DimensionMismatch(f"law has dimension {law.n}, spec {spec.n}")
    if isinstance(law, GaussianDist):
        A, B = sweep_matrices(spec)
        return GaussianDist(A @ law.mean, A @ law.cov @ A.T + B @ B.T)
    if isinstance(law, GridDist):
        mesh = law.mesh()
        logq = -potential(spec, mesh)
        p = law.weights
        for i in range(spec.n):
            Q = np.exp(logq - logsumexp(logq, axis=i, keepdims=True))
            p = p.sum(axis=i, keepdims=True) * Q
        return GridDist(law.axes, p / p.sum())
    raise TypeError(f"unsupported law {type(law).__name__}")


def contraction_check(spec: PotentialSpec, cert: Certificate, sigma, pi) -> float:
    """(1-delta)^2 W2^2(sigma, pi) - W2^2(sigma G, pi G)."""
    if not cert.passed:
        raise NonCertified("contraction bound needs a passing certificate")
    before = w2(sigma, pi) ** 2
    after = w2(markov_step_G(sigma, spec), markov_step_G(pi, spec)) ** 2
    return (1 - cert.delta) ** 2 * before - after


class FixedPoint(NamedTuple):
    law: object
    iterations: int
    step_w2: float


def fixed_point(spec: PotentialSpec, cert: Certificate, init, tol: float, max_iter: Optional[int] = None) -> FixedPoint:
    """Iterate G until the distance to the invariant law is certified below ``tol``.

    Since G contracts W2 by (1 - delta), a step of size d leaves at most
    d (1 - delta) / delta to go; iteration stops once both d and that
    bound are below ``tol``.
    """
    if not cert.passed:
        raise NonCertified("fixed_point needs a passing certificate")
    if not tol > 0:
        raise ValueError("tol must be positive")
    rate = 1 - cert.delta
    factor = max(1.0, rate / cert.delta)
    cur = init
    nxt = markov_step_G(cur, spec)
    d = w2(cur, nxt)
    if max_iter is None:
        need = math.log(tol / (d * factor)) / math.log(rate) if d * factor > tol and rate > 0 else 0.0
        max_iter = int(math.ceil(need)) + 50
    it = 1
    while d * factor >= tol:
        if it >= max_iter:
            raise IterationCap(f"no convergence after {it} sweeps (last step {d:.3g})", achieved=d, iterations=it)
        cur, nxt = nxt, markov_step_G(nxt, spec)
        d = w2(cur, nxt)
        it += 1
    return FixedPoint(nxt, it, d)
