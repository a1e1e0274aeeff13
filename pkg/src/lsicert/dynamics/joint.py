"""Joint laws of several configuration vectors, and the two constructions
used to build the interpolation process:

* the loosely connected copy of a pair ``(Y, S)``: keep the law of S and
  every ``(Y_{<=i}, S_{>i})`` marginal, and make
  ``Y_i -> (Y_{<i}, S_{>i}) -> S_{<=i}`` Markov;
* the Q-extension: attach ``eta`` whose site conditionals given
  ``(Y_{<i}, S_{>i})`` are the Q_i, each joined to Y_i by the W2-optimal
  (monotone) coupling within its condition cell.

Gaussian laws are tracked by mean and covariance (possibly singular); grid
laws by a probability tensor on one shared axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np

from ..errors import CapacityExceeded, DimensionMismatch, UnsupportedVariant
from ..metrics import Axis, GaussianDist, GridDist
from ..model import PotentialSpec, potential
from . import _tensor

__all__ = [
    "GaussianJoint",
    "GridJoint",
    "PairLaw",
    "TripleLaw",
    "QExtension",
    "diagonal_pair",
    "loosely_connected_copy",
    "q_extension",
    "q_extension_map",
    "d_functional",
    "grid_conditionals",
    "MAX_TENSOR_SIZE",
]

MAX_TENSOR_SIZE = 2**24


@dataclass(frozen=True, eq=False)
class GaussianJoint:
    """Jointly Gaussian law of ``blocks`` configuration vectors of length n."""

    n: int
    blocks: int
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        dim = self.n * self.blocks
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.shape != (dim,) or cov.shape != (dim, dim):
            raise DimensionMismatch(f"expected mean ({dim},) and cov ({dim}, {dim})")
        cov = (cov + cov.T) / 2
        if np.linalg.eigvalsh(cov)[0] < -1e-9 * max(1.0, np.abs(cov).max()):
            raise ValueError("covariance is not positive semidefinite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def block_index(self, b: int) -> np.ndarray:
        return np.arange(b * self.n, (b + 1) * self.n)

    def marginal(self, b: int) -> GaussianDist:
        idx = self.block_index(b)
        return GaussianDist(self.mean[idx], self.cov[np.ix_(idx, idx)])

    def select(self, blocks) -> "GaussianJoint":
        idx = np.concatenate([self.block_index(b) for b in blocks])
        return GaussianJoint(self.n, len(blocks), self.mean[idx], self.cov[np.ix_(idx, idx)])

    def regression(self, target: int, cond) -> tuple:
        """(intercept, coefficients, residual variance) of coordinate ``target`` on ``cond``."""
        cond = np.asarray(cond, dtype=int)
        if cond.size == 0:
            return float(self.mean[target]), np.zeros(0), float(self.cov[target, target])
        Scc = self.cov[np.ix_(cond, cond)]
        Sct = self.cov[cond, target]
        coef = np.linalg.lstsq(Scc, Sct, rcond=1e-12)[0]
        var = float(self.cov[target, target] - Sct @ coef)
        a = float(self.mean[target] - coef @ self.mean[cond])
        return a, coef, max(var, 0.0)


@dataclass(frozen=True, eq=False)
class GridJoint:
    """Law of ``blocks`` configurations on a shared 1-D axis, as a tensor with n*blocks axes."""

    n: int
    blocks: int
    axis: Axis
    prob: np.ndarray

    def __post_init__(self):
        prob = np.asarray(self.prob, dtype=float)
        shape = (self.axis.m,) * (self.n * self.blocks)
        if prob.shape != shape:
            raise DimensionMismatch(f"expected tensor shape {shape}, got {prob.shape}")
        if np.any(prob < -1e-15) or abs(prob.sum() - 1) > 1e-9:
            raise ValueError("tensor is not a probability distribution")
        object.__setattr__(self, "prob", np.clip(prob, 0, None))

    @property
    def points(self) -> np.ndarray:
        return self.axis.points

    def marginal_tensor(self, b: int) -> np.ndarray:
        axes = tuple(k for k in range(self.n * self.blocks) if k // self.n != b)
        return self.prob.sum(axis=axes)

    def marginal(self, b: int) -> GridDist:
        w = self.marginal_tensor(b)
        return GridDist((self.axis,) * self.n, w / w.sum())

    def select(self, blocks) -> "GridJoint":
        drop = tuple(k for k in range(self.n * self.blocks) if k // self.n not in blocks)
        P = self.prob.sum(axis=drop) if drop else self.prob
        # axes of P are in sorted block order; reorder to requested order
        perm = [sorted(blocks).index(b) * self.n + i for b in blocks for i in range(self.n)]
        return GridJoint(self.n, len(blocks), self.axis, np.transpose(P, perm))


PairLaw = Union[GaussianJoint, GridJoint]
TripleLaw = Union[GaussianJoint, GridJoint]


def diagonal_pair(p) -> PairLaw:
    """Law of (Y, Y) with Y ~ p."""
    if isinstance(p, GaussianDist):
        return GaussianJoint(p.n, 2, np.tile(p.mean, 2), np.block([[p.cov, p.cov], [p.cov, p.cov]]))
    if isinstance(p, GridDist):
        axis = _shared_axis(p)
        n = p.n
        m = axis.m
        _check_size(m ** (2 * n))
        flat = p.weights.reshape(-1)
        P = np.zeros((m**n, m**n))
        P[np.arange(m**n), np.arange(m**n)] = flat
        return GridJoint(n, 2, axis, P.reshape((m,) * (2 * n)))
    raise TypeError(f"unsupported law {type(p).__name__}")


def _shared_axis(p: GridDist) -> Axis:
    if len(set(p.axes)) != 1:
        raise DimensionMismatch("joint grid laws need the same axis for every coordinate")
    return p.axes[0]


def _check_size(size: int):
    if size > MAX_TENSOR_SIZE:
        raise CapacityExceeded(f"tensor of {size} cells exceeds capacity {MAX_TENSOR_SIZE}")


def _cond_index(n: int, i: int) -> np.ndarray:
    """Flat indices of (Y_{<i}, S_{>i}) inside a pair law."""
    return np.concatenate([np.arange(i), n + np.arange(i + 1, n)]).astype(int)


def grid_conditionals(spec: PotentialSpec, axis: Axis) -> list:
    """Discrete site conditionals of exp(-V) restricted to the grid ``axis^n``."""
    n = spec.n
    _check_size(axis.m**n)
    pts = np.stack(np.meshgrid(*([axis.points] * n), indexing="ij"), axis=-1)
    return _tensor.qcond_from_logweights(-potential(spec, pts))


# --------------------------------------------------------- loose connection


def loosely_connected_copy(joint: PairLaw) -> PairLaw:
    if joint.blocks != 2:
        raise DimensionMismatch("loosely_connected_copy needs a pair law")
    if isinstance(joint, GridJoint):
        return GridJoint(joint.n, 2, joint.axis, _tensor.loosely_connected_copy(joint.prob, joint.n))
    return _gaussian_lcc(joint)


def _gaussian_lcc(joint: GaussianJoint) -> GaussianJoint:
    # Y_i = c_i + B[i] Y + C[i] S + sqrt(v_i) eps_i with B strictly lower triangular
    n = joint.n
    B = np.zeros((n, n))
    C = np.zeros((n, n))
    c = np.zeros(n)
    v = np.zeros(n)
    for i in range(n):
        a, coef, var = joint.regression(i, _cond_index(n, i))
        c[i] = a
        v[i] = var
        B[i, :i] = coef[:i]
        C[i, i + 1 :] = coef[i:]
    s = np.arange(n, 2 * n)
    mS = joint.mean[s]
    SS = joint.cov[np.ix_(s, s)]
    R = np.linalg.inv(np.eye(n) - B)
    mY = R @ (c + C @ mS)
    SYS = R @ C @ SS
    SYY = R @ (C @ SS @ C.T + np.diag(v)) @ R.T
    cov = np.block([[SYY, SYS], [SYS.T, SS]])
    return GaussianJoint(n, 2, np.concatenate([mY, mS]), cov)


# -------------------------------------------------------------- Q-extension


class QExtension(NamedTuple):
    """How eta depends on the pair (Y, S).

    Gaussian: ``eta = F @ (Y, S) + f + G @ xi`` with xi standard normal,
    independent of everything else.  Grid: per-site kernels
    ``K_i(eta_i | y_{<=i}, s_{>i})``.  ``cost`` is E|Y - eta|^2.
    """

    cost: float
    F: Optional[np.ndarray] = None
    f: Optional[np.ndarray] = None
    G: Optional[np.ndarray] = None
    kernels: Optional[list] = None


def q_extension_map(joint: PairLaw, spec: PotentialSpec, qcond: Optional[list] = None) -> QExtension:
    if joint.blocks != 2 or joint.n != spec.n:
        raise DimensionMismatch("Q-extension needs a pair law matching the model dimension")
    if isinstance(joint, GridJoint):
        if qcond is None:
            qcond = grid_conditionals(spec, joint.axis)
        kernels, cost = _tensor.qext_kernels(joint.prob, qcond, joint.points)
        return QExtension(cost, kernels=kernels)
    if not spec.is_gaussian:
        raise UnsupportedVariant("Gaussian Q-extension needs a quadratic or lattice spec")
    n = spec.n
    M = spec.precision
    F = np.zeros((n, 2 * n))
    f = np.zeros(n)
    G = np.zeros((n, n))
    for i in range(n):
        cond = _cond_index(n, i)
        a, coef, var = joint.regression(i, cond)
        e = -np.delete(M[i], i) / M[i, i]
        sq = 1.0 / np.sqrt(M[i, i])
        if var > 1e-14:
            # monotone map between N(a + coef.c, var) and N(e.c, 1/M_ii)
            r = sq / np.sqrt(var)
            F[i, cond] = e - r * coef
            F[i, i] += r
            f[i] = -r * a
        else:
            F[i, cond] = e
            G[i, i] = sq
    L = F.copy()
    L[:, :n] -= np.eye(n)
    diff_mean = L @ joint.mean + f
    cost = float(diff_mean @ diff_mean + np.trace(L @ joint.cov @ L.T) + np.sum(G * G))
    return QExtension(cost, F=F, f=f, G=G)


def q_extension(joint: PairLaw, spec: PotentialSpec) -> TripleLaw:
    """Law of (Y, S, eta)."""
    ext = q_extension_map(joint, spec)
    n = joint.n
    if isinstance(joint, GridJoint):
        m = joint.axis.m
        _check_size(m ** (3 * n))
        y = list(range(n))
        s = list(range(n, 2 * n))
        eta = list(range(2 * n, 3 * n))
        ops = [joint.prob, y + s] + _tensor.kernel_operands(ext.kernels, n, y, s, eta)
        T = np.einsum(*ops, y + s + eta, optimize=True)
        return GridJoint(n, 3, joint.axis, T)
    mean = np.concatenate([joint.mean, ext.F @ joint.mean + ext.f])
    cross = joint.cov @ ext.F.T
    cov = np.block([[joint.cov, cross], [cross.T, ext.F @ joint.cov @ ext.F.T + ext.G @ ext.G.T]])
    return GaussianJoint(n, 3, mean, cov)


# ---------------------------------------------------------------- D_t


def d_functional(joint: PairLaw, spec: PotentialSpec, qcond: Optional[list] = None) -> float:
    """sum_i D(Y_i | Y_{<i}, S_{>i} || Q_i(. | Y_{<i}, S_{>i})) for a pair law (Y, S)."""
    if isinstance(joint, GridJoint):
        if qcond is None:
            qcond = grid_conditionals(spec, joint.axis)
        return _tensor.d_functional(joint.prob, qcond)
    if not spec.is_gaussian:
        raise UnsupportedVariant("Gaussian D_t needs a quadratic or lattice spec")
    n = spec.n
    M = spec.precision
    total = 0.0
    for i in range(n):
        cond = _cond_index(n, i)
        a, coef, var = joint.regression(i, cond)
        if var <= 0:
            return float("inf")
        w = 1.0 / M[i, i]
        e = -np.delete(M[i], i) / M[i, i]
        d = coef - e
        mc = joint.mean[cond]
        Sc = joint.cov[np.ix_(cond, cond)]
        msq = (a + d @ mc) ** 2 + d @ Sc @ d
        total += 0.5 * (var / w - 1.0 - np.log(var / w) + msq / w)
    return max(float(total), 0.0)
