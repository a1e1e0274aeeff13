"""Relative entropy, Fisher information and quadratic Wasserstein distance.

Two backends share one set of entry points:

* :class:`GaussianDist` uses closed forms;
* :class:`GridDist` holds cell weights on a uniform tensor grid (n <= 3,
  at most 64 points per axis).  D is the discrete sum ``p log(p/q)``,
  I uses centred differences of the log-weight ratio (one-sided at the
  boundary), and W2 is exact for the discrete measures.

On Gaussians discretized over a box of ten standard deviations with 48 or
more points per axis, the grid values track the closed forms to 1e-4 in D
(absolute), 1e-3 in I (relative) and one grid spacing in W2.  Measured
errors are far smaller (about 1e-10, 1e-11 and a quarter spacing).

The inequality checkers return slacks: nonnegative means the inequality
holds.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, NonCertified, SupportTooLarge

__all__ = [
    "UNBOUNDED",
    "Unbounded",
    "GaussianDist",
    "Axis",
    "GridDist",
    "Coupling1D",
    "discrete_kl",
    "kl",
    "fisher",
    "w2",
    "w2_entropic",
    "monotone_coupling_1d",
    "check_lsi",
    "check_otto_villani",
    "lemma3_gradient_bound",
    "default_axes",
    "MAX_GRID_DIM",
    "MAX_GRID_POINTS",
    "MAX_EXACT_SUPPORT",
]

MAX_GRID_DIM = 3
MAX_GRID_POINTS = 64
MAX_EXACT_SUPPORT = 4096
EIG_FLOOR = 1e-14


class Unbounded:
    """Tag for an infinite divergence (absolute continuity fails)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __float__(self):
        return math.inf

    def __repr__(self):
        return "UNBOUNDED"

    def __str__(self):
        return "+inf"

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True


UNBOUNDED = Unbounded()
Value = Union[float, Unbounded]


# ---------------------------------------------------------------- Gaussian


@dataclass(frozen=True, eq=False)
class GaussianDist:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.array(self.mean, dtype=float))
        cov = np.atleast_2d(np.array(self.cov, dtype=float))
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise DimensionMismatch(f"mean {mean.shape} and cov {cov.shape} disagree")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max())):
            raise ValueError("covariance must be symmetric")
        cov = (cov + cov.T) / 2
        if np.linalg.eigvalsh(cov)[0] <= 0:
            raise ValueError("covariance must be positive definite")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n(self) -> int:
        return self.mean.size

    @classmethod
    def from_precision(cls, precision, mean=None) -> "GaussianDist":
        precision = np.asarray(precision, dtype=float)
        mean = np.zeros(precision.shape[0]) if mean is None else mean
        return cls(mean, np.linalg.inv(precision))

    def logpdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        d = x - self.mean
        P = np.linalg.inv(self.cov)
        _, logdet = np.linalg.slogdet(self.cov)
        quad = np.einsum("...i,ij,...j->...", d, P, d)
        return -0.5 * (quad + logdet + self.n * math.log(2 * math.pi))


def _sym_sqrt(S: np.ndarray) -> np.ndarray:
    w, U = np.linalg.eigh(S)
    w = np.maximum(w, EIG_FLOOR)
    return (U * np.sqrt(w)) @ U.T


def _gaussian_kl(p: GaussianDist, q: GaussianDist) -> float:
    n = p.n
    Pq = np.linalg.inv(q.cov)
    d = q.mean - p.mean
    _, ld_q = np.linalg.slogdet(q.cov)
    _, ld_p = np.linalg.slogdet(p.cov)
    val = 0.5 * (np.trace(Pq @ p.cov) - n + d @ Pq @ d + ld_q - ld_p)
    return max(float(val), 0.0)


def _gaussian_fisher(p: GaussianDist, q: GaussianDist) -> float:
    # grad log(p/q)(x) = (Pq - Pp) z + Pq (mp - mq) with x = mp + z, z ~ N(0, Sp)
    Pp = np.linalg.inv(p.cov)
    Pq = np.linalg.inv(q.cov)
    A = Pq - Pp
    b = Pq @ (p.mean - q.mean)
    return float(np.trace(A @ p.cov @ A.T) + b @ b)


def _gaussian_w2(p: GaussianDist, q: GaussianDist) -> float:
    # Squared cost of the optimal affine map T from p to q:
    # E|T z - z|^2 = ||Sp^{-1/2} ((Sp^{1/2} Sq Sp^{1/2})^{1/2} - Sp)||_F^2.
    # This avoids the cancellation in the trace form when Sp ~ Sq.
    h = _sym_sqrt(p.cov)
    C = h @ q.cov @ h
    D = _sym_sqrt((C + C.T) / 2) - p.cov
    X = np.linalg.solve(h, D)
    dm = p.mean - q.mean
    return math.sqrt(float(dm @ dm + np.sum(X * X)))


# ---------------------------------------------------------------- grids


@dataclass(frozen=True)
class Axis:
    lo: float
    hi: float
    m: int

    def __post_init__(self):
        if not (self.hi > self.lo) or int(self.m) < 2:
            raise ValueError(f"invalid axis [{self.lo}, {self.hi}] with {self.m} points")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.m)

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.m - 1)


@dataclass(frozen=True, eq=False)
class GridDist:
    axes: tuple
    weights: np.ndarray
    clipped_mass: float = field(default=0.0, compare=False)

    def __post_init__(self):
        axes = tuple(self.axes)
        if not 1 <= len(axes) <= MAX_GRID_DIM:
            raise DimensionMismatch(f"grid dimension must be in [1, {MAX_GRID_DIM}], got {len(axes)}")
        if any(a.m > MAX_GRID_POINTS for a in axes):
            raise ValueError(f"at most {MAX_GRID_POINTS} points per axis")
        w = np.array(self.weights, dtype=float)
        if w.shape != tuple(a.m for a in axes):
            raise DimensionMismatch(f"weights shape {w.shape} does not match axes")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        w.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return len(self.axes)

    def mesh(self) -> np.ndarray:
        """Grid points, shape (m_1, ..., m_n, n)."""
        grids = np.meshgrid(*[a.points for a in self.axes], indexing="ij")
        return np.stack(grids, axis=-1)

    @classmethod
    def from_logdensity(cls, axes: Sequence[Axis], logf: Callable, clipped_mass: float = 0.0) -> "GridDist":
        """Discretize a density given by its (unnormalized) log on the grid points."""
        axes = tuple(axes)
        pts = np.stack(np.meshgrid(*[a.points for a in axes], indexing="ij"), axis=-1)
        lw = np.asarray(logf(pts), dtype=float)
        # floor far tails instead of letting exp underflow to exact zeros, which
        # would make log-ratios (and so I) infinite for a density that is positive
        lw = np.maximum(lw - lw.max(), LOG_WEIGHT_FLOOR)
        w = np.exp(lw)
        return cls(axes, w / w.sum(), clipped_mass)

    @classmethod
    def from_gaussian(cls, g: GaussianDist, axes: Optional[Sequence[Axis]] = None, m: int = 64) -> "GridDist":
        """Discretize a Gaussian; reports an upper bound on the mass outside the box."""
        axes = default_axes([g], m) if axes is None else tuple(axes)
        if len(axes) != g.n:
            raise DimensionMismatch("axes and Gaussian dimension differ")
        sd = np.sqrt(np.diag(g.cov))
        clip = 0.0
        for k, a in enumerate(axes):
            lo = (a.lo - g.mean[k]) / sd[k]
            hi = (g.mean[k] - a.hi) / sd[k]
            clip += 0.5 * (math.erfc(-lo / math.sqrt(2)) + math.erfc(-hi / math.sqrt(2)))
        return cls.from_logdensity(axes, g.logpdf, min(clip, 1.0))

    def marginal(self, keep: Sequence[int]) -> "GridDist":
        keep = tuple(keep)
        drop = tuple(k for k in range(self.n) if k not in keep)
        w = self.weights.sum(axis=drop) if drop else self.weights
        return GridDist(tuple(self.axes[k] for k in keep), w / w.sum())

    def mean(self) -> np.ndarray:
        return np.tensordot(self.weights, self.mesh(), axes=self.n)


LOG_WEIGHT_FLOOR = -700.0


def default_axes(dists: Sequence[GaussianDist], m: int, width: float = 10.0) -> tuple:
    """A shared box covering ``width`` standard deviations of every Gaussian."""
    n = dists[0].n
    sig = max(math.sqrt(np.linalg.eigvalsh(g.cov)[-1]) for g in dists)
    lo = min(float(g.mean.min()) for g in dists) - width * sig
    hi = max(float(g.mean.max()) for g in dists) + width * sig
    return tuple(Axis(lo, hi, m) for _ in range(n))


def _same_axes(p: GridDist, q: GridDist):
    if p.axes != q.axes:
        raise DimensionMismatch("grid backend needs identical axes")


def discrete_kl(p, q) -> Value:
    """sum p log(p/q) over arrays of probabilities."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DimensionMismatch(f"shapes {p.shape} and {q.shape} differ")
    pos = p > 0
    if np.any(q[pos] <= 0):
        return UNBOUNDED
    return max(float(np.sum(p[pos] * np.log(p[pos] / q[pos]))), 0.0)


def _grid_fisher(p: GridDist, q: GridDist) -> Value:
    if np.any(p.weights <= 0):
        return UNBOUNDED
    if np.any(q.weights <= 0):
        return UNBOUNDED
    lr = np.log(p.weights) - np.log(q.weights)
    total = np.zeros_like(lr)
    for k, a in enumerate(p.axes):
        g = np.gradient(lr, a.spacing, axis=k)
        total += g * g
    return float(np.sum(p.weights * total))


def _atoms(d: GridDist):
    pts = d.mesh().reshape(-1, d.n)
    w = d.weights.reshape(-1)
    keep = w > 0
    return pts[keep], w[keep]


def _quantile_w2_sq(x, p, y, q) -> float:
    """W2^2 of two sorted 1-D discrete laws via their quantile functions."""
    Fp = np.cumsum(p)
    Fq = np.cumsum(q)
    Fp /= Fp[-1]
    Fq /= Fq[-1]
    levels = np.union1d(Fp, Fq)
    levels = levels[(levels > 0) & (levels <= 1)]
    lo = np.concatenate(([0.0], levels[:-1]))
    mid = 0.5 * (lo + levels)
    ip = np.minimum(np.searchsorted(Fp, mid, side="left"), len(x) - 1)
    iq = np.minimum(np.searchsorted(Fq, mid, side="left"), len(y) - 1)
    return float(np.sum((levels - lo) * (x[ip] - y[iq]) ** 2))


def _pot():
    for backend in ("TENSORFLOW", "JAX", "PYTORCH", "CUPY"):
        os.environ.setdefault(f"POT_BACKEND_DISABLE_{backend}", "1")
    import ot

    return ot


def _grid_w2(p: GridDist, q: GridDist) -> float:
    if p.n != q.n:
        raise DimensionMismatch("dimensions differ")
    if p.n == 1:
        return math.sqrt(_quantile_w2_sq(p.axes[0].points, p.weights, q.axes[0].points, q.weights))
    xp, wp = _atoms(p)
    xq, wq = _atoms(q)
    if len(wp) > MAX_EXACT_SUPPORT or len(wq) > MAX_EXACT_SUPPORT:
        raise SupportTooLarge(f"exact transport limited to {MAX_EXACT_SUPPORT} atoms per side")
    ot = _pot()
    cost = ot.dist(xp, xq, metric="sqeuclidean")
    val = ot.emd2(wp / wp.sum(), wq / wq.sum(), cost, numItermax=10_000_000)
    return math.sqrt(max(float(val), 0.0))


def w2_entropic(p: GridDist, q: GridDist, reg: float = 1e-2) -> float:
    """Sinkhorn approximation of W2 (approximate; biased upward by the entropy term)."""
    xp, wp = _atoms(p)
    xq, wq = _atoms(q)
    ot = _pot()
    cost = ot.dist(xp, xq, metric="sqeuclidean")
    val = ot.sinkhorn2(wp / wp.sum(), wq / wq.sum(), cost, reg, method="sinkhorn_log", numItermax=10_000)
    return math.sqrt(max(float(val), 0.0))


# ------------------------------------------------------------ public API


def _dispatch(p, q):
    if isinstance(p, GaussianDist) and isinstance(q, GaussianDist):
        if p.n != q.n:
            raise DimensionMismatch(f"dimensions {p.n} and {q.n} differ")
        return "gaussian"
    if isinstance(p, GridDist) and isinstance(q, GridDist):
        return "grid"
    raise TypeError(f"unsupported pair {type(p).__name__}, {type(q).__name__}")


def kl(p, q) -> Value:
    """Relative entropy D(p || q)."""
    if _dispatch(p, q) == "gaussian":
        return _gaussian_kl(p, q)
    _same_axes(p, q)
    return discrete_kl(p.weights, q.weights)


def fisher(p, q) -> Value:
    """Fisher information I(p || q) = E_p |grad log(p/q)|^2."""
    if _dispatch(p, q) == "gaussian":
        return _gaussian_fisher(p, q)
    _same_axes(p, q)
    return _grid_fisher(p, q)


def w2(p, q) -> float:
    """Quadratic Wasserstein distance (not squared)."""
    if _dispatch(p, q) == "gaussian":
        return _gaussian_w2(p, q)
    return _grid_w2(p, q)


@dataclass(frozen=True, eq=False)
class Coupling1D:
    """Monotone (quantile) coupling stored as a sparse list of moves."""

    source: GridDist
    target: GridDist
    src_index: np.ndarray
    tgt_index: np.ndarray
    mass: np.ndarray

    @property
    def cost(self) -> float:
        x = self.source.axes[0].points[self.src_index]
        y = self.target.axes[0].points[self.tgt_index]
        return float(np.sum(self.mass * (x - y) ** 2))

    def dense(self) -> np.ndarray:
        plan = np.zeros((self.source.axes[0].m, self.target.axes[0].m))
        np.add.at(plan, (self.src_index, self.tgt_index), self.mass)
        return plan


def _northwest_corner(p: np.ndarray, q: np.ndarray):
    """Monotone plan between two 1-D weight vectors on sorted supports."""
    i = j = 0
    a, b = float(p[0]), float(q[0])
    src, tgt, mass = [], [], []
    n, m = len(p), len(q)
    while i < n and j < m:
        t = min(a, b)
        if t > 0:
            src.append(i)
            tgt.append(j)
            mass.append(t)
        a -= t
        b -= t
        if a <= b:
            i += 1
            if i < n:
                a = float(p[i])
        else:
            j += 1
            if j < m:
                b = float(q[j])
    return np.array(src, dtype=int), np.array(tgt, dtype=int), np.array(mass)


def monotone_coupling_1d(p: GridDist, q: GridDist) -> Coupling1D:
    if p.n != 1 or q.n != 1:
        raise DimensionMismatch("monotone_coupling_1d needs 1-D grid distributions")
    src, tgt, mass = _northwest_corner(p.weights, q.weights)
    return Coupling1D(p, q, src, tgt, mass)


def _finite(v: Value) -> float:
    return math.inf if v is UNBOUNDED else float(v)


def check_lsi(p, q, constant: float) -> float:
    """I/(2 c) - D.  Nonnegative when the LSI with constant c holds for this pair."""
    if not constant > 0:
        raise ValueError("LSI constant must be positive")
    D = _finite(kl(p, q))
    I = _finite(fisher(p, q))
    if math.isinf(I):
        return math.inf
    return I / (2 * constant) - D


def check_otto_villani(p, q, rho: float) -> float:
    """(2/rho) D - W2^2.  Nonnegative when the transport inequality holds."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    D = _finite(kl(p, q))
    if math.isinf(D):
        return math.inf
    return 2.0 * D / rho - w2(p, q) ** 2


def lemma3_gradient_bound(spec, u1, u2, t1, t2, zeta, cert) -> float:
    """Slack of the pointwise gradient bound for ratios of mixed-argument conditionals.

    Evaluates ``sum_i |d_i log Q_i(zeta_i | u1_{<i}, u2_{>i}) / Q_i(zeta_i | t1_{<i}, t2_{>i})|^2``
    against ``rho^2 (1-delta)^2 / 2 * (|u1-t1|^2 + |u2-t2|^2)``, halved when u1 == t1.
    Returns bound - value.
    """
    from .model import grad_potential

    if not cert.passed:
        raise NonCertified("gradient bound needs a passing certificate")
    arrs = [np.asarray(v, dtype=float) for v in (u1, u2, t1, t2, zeta)]
    n = spec.n
    if any(a.shape != (n,) for a in arrs):
        raise DimensionMismatch(f"all vectors must have length {n}")
    u1, u2, t1, t2, zeta = arrs
    lower = np.tri(n, k=-1, dtype=bool)  # row i selects k < i
    upper = lower.T
    diag = np.eye(n, dtype=bool)
    cu = np.where(lower, u1, np.where(upper, u2, 0.0)) + np.where(diag, zeta, 0.0)
    ct = np.where(lower, t1, np.where(upper, t2, 0.0)) + np.where(diag, zeta, 0.0)
    # d_i log Q_i(zeta_i | c) = -d_i V(c with zeta_i at slot i)
    gu = np.diagonal(grad_potential(spec, cu))
    gt = np.diagonal(grad_potential(spec, ct))
    value = float(np.sum((gt - gu) ** 2))
    bound = 0.5 * cert.rho**2 * (1 - cert.delta) ** 2 * (np.sum((u1 - t1) ** 2) + np.sum((u2 - t2) ** 2))
    if np.array_equal(u1, t1):
        bound /= 2
    return float(bound) - value
