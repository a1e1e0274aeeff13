"""Array primitives for discrete pair laws.

A pair law of two configurations ``(Y, S)`` of n sites is an array with 2n
axes ordered ``(y_0, ..., y_{n-1}, s_0, ..., s_{n-1})``.  For site i the
"condition cell" is ``(y_{<i}, s_{>i})``; the marginal over
``(y_{<=i}, s_{>i})`` has n axes laid out exactly like a configuration with
``y_i`` in slot i, which is also the layout of the conditional tensor
``Q_i(x_i | xbar_i)``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from ..metrics import _northwest_corner

NULL_MASS = 1e-14


def site_marginal(P: np.ndarray, n: int, i: int) -> np.ndarray:
    """Marginal of (y_{<=i}, s_{>i}) from a 2n-axis pair law."""
    drop = tuple(range(i + 1, n)) + tuple(range(n, n + i + 1))
    return P.sum(axis=drop)


def conditional_along(Mi: np.ndarray, i: int, fill=None) -> tuple:
    """Normalize along axis i; null cells take ``fill`` (default uniform)."""
    mass = Mi.sum(axis=i, keepdims=True)
    null = mass < NULL_MASS
    safe = np.where(null, 1.0, mass)
    cond = Mi / safe
    if fill is None:
        fill = np.full_like(Mi, 1.0 / Mi.shape[i])
    cond = np.where(null, fill, cond)
    return cond, mass


def qcond_from_logweights(logq: np.ndarray) -> list:
    """Site conditionals of a discrete law given by (unnormalized) log-weights."""
    n = logq.ndim
    return [np.exp(logq - logsumexp(logq, axis=i, keepdims=True)) for i in range(n)]


def d_functional(P: np.ndarray, qcond: list) -> float:
    """sum_i E_c D(P(y_i | c) || Q_i(. | c)) over condition cells c = (y_{<i}, s_{>i})."""
    n = len(qcond)
    total = 0.0
    for i in range(n):
        Mi = site_marginal(P, n, i)
        cond, _ = conditional_along(Mi, i, fill=qcond[i])
        pos = Mi > 0
        if np.any(qcond[i][pos] <= 0):
            return float("inf")
        total += float(np.sum(Mi[pos] * np.log(cond[pos] / qcond[i][pos])))
    return max(total, 0.0)


def loosely_connected_copy(P: np.ndarray, n: int) -> np.ndarray:
    """Law of S times prod_i P(y_i | y_{<i}, s_{>i})."""
    y = list(range(n))
    s = list(range(n, 2 * n))
    PS = P.sum(axis=tuple(y))
    ops = [PS, s]
    for i in range(n):
        cond, _ = conditional_along(site_marginal(P, n, i), i)
        ops += [cond, y[: i + 1] + s[i + 1 :]]
    return np.einsum(*ops, y + s, optimize=True)


def qext_kernels(P: np.ndarray, qcond: list, points: np.ndarray) -> tuple:
    """Per-site kernels K_i(eta_i | y_{<=i}, s_{>i}) of the Q-extension.

    Within each condition cell, Y_i and eta_i are joined by the monotone
    coupling of P(y_i | c) and Q_i(. | c).  Cells of mass below NULL_MASS
    take Q_i as their conditional.  Returns (kernels, transport cost), the
    cost being E|Y - eta|^2.
    """
    n = len(qcond)
    m = len(points)
    kernels = []
    cost = 0.0
    sq = (points[:, None] - points[None, :]) ** 2
    for i in range(n):
        Mi = site_marginal(P, n, i)
        cond, mass = conditional_along(Mi, i, fill=qcond[i])
        C = np.moveaxis(cond, i, -1).reshape(-1, m)
        Q = np.moveaxis(qcond[i], i, -1).reshape(-1, m)
        W = np.moveaxis(mass, i, -1).reshape(-1)
        K = np.zeros((C.shape[0], m, m))
        for r in range(C.shape[0]):
            src, tgt, w = _northwest_corner(C[r], Q[r])
            plan = np.zeros((m, m))
            np.add.at(plan, (src, tgt), w)
            cost += W[r] * float(np.sum(plan * sq))
            rowmass = C[r]
            nz = rowmass > 0
            K[r][nz] = plan[nz] / rowmass[nz, None]
            K[r][~nz] = Q[r]
        cell_shape = tuple(np.delete(np.array(cond.shape), i))
        K = K.reshape(cell_shape + (m, m))
        kernels.append(np.moveaxis(K, -2, i))
    return kernels, cost


def kernel_operands(kernels: list, n: int, y_labels: list, s_labels: list, eta_labels: list) -> list:
    """einsum operand/sublist pairs attaching Q-extension kernels to given labels."""
    ops = []
    for i, K in enumerate(kernels):
        ops += [K, y_labels[: i + 1] + s_labels[i + 1 :] + [eta_labels[i]]]
    return ops


def markov_extend(Pab: np.ndarray, Pbc: np.ndarray, n: int) -> np.ndarray:
    """Joint of (A, B, C) with A and C conditionally independent given B."""
    a = list(range(n))
    b = list(range(n, 2 * n))
    c = list(range(2 * n, 3 * n))
    Pb = Pbc.sum(axis=tuple(range(n, 2 * n)))
    inv = np.where(Pb > 0, 1.0 / np.where(Pb > 0, Pb, 1.0), 0.0)
    return np.einsum(Pab, a + b, Pbc, b + c, inv, b, a + b + c, optimize=True)
