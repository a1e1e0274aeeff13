"""The interpolation process between p and q and its entropy bookkeeping.

Only the window ``dist(Y(t-2), Y(t-1))``, ``dist(Y(t-1), Y(t))`` is kept.
The start is canonical:

* ``dist(Y(0), Y(1))`` is the loosely connected copy of ``(Y(0), Y(0))``
  with ``Y(0) ~ p``;
* ``eta(1)`` is drawn so that ``(eta(1), Y(0))`` has that same law and
  ``eta(1) -> Y(0) -> Y(1)``; ``dist(Y(1), Y(2))`` is the loosely
  connected copy of ``(eta(1), eta(2))``;
* for t >= 2, ``dist(Y(t), Y(t+1))`` is the loosely connected copy of
  ``(eta(t), eta(t+1))``, where ``eta(s+1)`` is the Q-extension of
  ``(Y(s-1), Y(s))`` and the Y chain is Markov.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np

from ..certify import Certificate
from ..errors import CapacityExceeded, NonCertified, UnsupportedVariant
from ..metrics import GaussianDist, GridDist, discrete_kl, fisher, kl, w2
from ..model import PotentialSpec
from . import _tensor
from .joint import (
    GaussianJoint,
    GridJoint,
    QExtension,
    _check_size,
    d_functional,
    diagonal_pair,
    grid_conditionals,
    loosely_connected_copy,
    q_extension_map,
)
from .sweep import gibbs_grid

__all__ = ["TraceRecord", "Trace", "run_interpolation", "main_lemma_check", "MainLemmaReport", "markov_extend"]

GRID_MAX_SITES = 2
GRID_MAX_POINTS = 16


@dataclass
class TraceRecord:
    t: int
    D: float
    recursion_slack: Optional[float] = None
    skip2_cost: Optional[float] = None  # E|Y(t-2) - eta(t)|^2
    skip2_bound: Optional[float] = None  # (2/rho) D_{t-2}
    w2sq_skip2: Optional[float] = None  # W2^2(Y(t-2), Y(t))
    eta_gap: Optional[float] = None  # distance between dist(eta(t)) and dist(Y(t))


@dataclass
class Trace:
    records: List[TraceRecord]
    certificate: Certificate
    metadata: dict
    d_initial: float  # D(Y(1) || X)
    d_final: float  # D(Y(T+1) || X)
    laws: list = field(default_factory=list, repr=False)

    @property
    def D(self) -> np.ndarray:
        return np.array([r.D for r in self.records])

    @property
    def aux_slack(self) -> float:
        """sum_{t=1}^T D_t + D(Y(T+1)||X) - D(Y(1)||X); nonnegative for any process."""
        return float(self.D[1:].sum() + self.d_final - self.d_initial)

    def csv_rows(self) -> list:
        rows = []
        for r in self.records:
            rows.append([r.t, r.D, r.recursion_slack, r.skip2_bound])
        return rows


CSV_HEADER = ["t", "D_t", "recursion_slack", "w2_skip2_bound"]


def markov_extend(Pab, Pbc):
    """Joint of (A, B, C) from (A, B) and (B, C) laws, A and C independent given B."""
    n = Pab.n
    if isinstance(Pab, GridJoint):
        _check_size(Pab.axis.m ** (3 * n))
        return GridJoint(n, 3, Pab.axis, _tensor.markov_extend(Pab.prob, Pbc.prob, n))
    b = np.arange(n)
    c = np.arange(n, 2 * n)
    SBB = Pbc.cov[np.ix_(b, b)]
    K = np.linalg.lstsq(SBB, Pbc.cov[np.ix_(b, c)], rcond=1e-12)[0].T
    k = Pbc.mean[c] - K @ Pbc.mean[b]
    Omega = Pbc.cov[np.ix_(c, c)] - K @ Pbc.cov[np.ix_(b, c)]
    S = Pab.cov
    top = S @ np.vstack([np.zeros((n, n)), K.T])  # cov((A,B), C)
    mC = K @ Pab.mean[n:] + k
    SCC = K @ S[n:, n:] @ K.T + (Omega + Omega.T) / 2
    cov = np.block([[S, top], [top.T, SCC]])
    return GaussianJoint(n, 3, np.concatenate([Pab.mean, mC]), cov)


def _eta_pair(trip, first: Optional[QExtension], second: QExtension):
    """Law of (eta_a, eta_b): eta_a is block 0 itself (first=None) or the
    extension of blocks (0, 1); eta_b extends blocks (1, 2).  The two etas
    are conditionally independent given the Y chain."""
    n = trip.n
    if isinstance(trip, GridJoint):
        y = [list(range(b * n, (b + 1) * n)) for b in range(3)]
        ea = list(range(3 * n, 4 * n))
        eb = list(range(4 * n, 5 * n))
        ops = [trip.prob, y[0] + y[1] + y[2]]
        if first is None:
            out_a = y[0]
        else:
            ops += _tensor.kernel_operands(first.kernels, n, y[0], y[1], ea)
            out_a = ea
        ops += _tensor.kernel_operands(second.kernels, n, y[1], y[2], eb)
        P = np.einsum(*ops, out_a + eb, optimize=True)
        return GridJoint(n, 2, trip.axis, P / P.sum())
    L = np.zeros((2 * n, 3 * n))
    const = np.zeros(2 * n)
    noise = np.zeros((2 * n, 2 * n))
    if first is None:
        L[:n, :n] = np.eye(n)
    else:
        L[:n, : 2 * n] = first.F
        const[:n] = first.f
        noise[:n, :n] = first.G @ first.G.T
    L[n:, n:] = second.F
    const[n:] = second.f
    noise[n:, n:] = second.G @ second.G.T
    return GaussianJoint(n, 2, L @ trip.mean + const, L @ trip.cov @ L.T + noise)


def _law_gap(a, b) -> float:
    if isinstance(a, GaussianDist):
        return float(max(np.abs(a.mean - b.mean).max(), np.abs(a.cov - b.cov).max()))
    return 0.5 * float(np.abs(a.weights - b.weights).sum())


def run_interpolation(p0, spec: PotentialSpec, cert: Certificate, T: int, keep_laws: bool = False) -> Trace:
    """Run the process for T steps and record D_0, ..., D_T.

    ``p0`` is a GaussianDist (quadratic specs; exact closed forms) or a
    GridDist with one shared axis, n <= 2 and at most 16 points per axis.
    """
    if not cert.passed:
        raise NonCertified("the interpolation process is only analysed for certified specs")
    if T < 1:
        raise ValueError("T must be at least 1")
    rho, delta = cert.rho, cert.delta
    qcond = None
    if isinstance(p0, GaussianDist):
        if not spec.is_gaussian:
            raise UnsupportedVariant("Gaussian backend needs a quadratic or lattice spec")
        q = GaussianDist.from_precision(spec.precision)
        d_of = lambda law: float(kl(law, q))
        meta = {"backend": "gaussian"}
    elif isinstance(p0, GridDist):
        if p0.n > GRID_MAX_SITES or p0.axes[0].m > GRID_MAX_POINTS:
            raise CapacityExceeded(f"grid process limited to n <= {GRID_MAX_SITES}, m <= {GRID_MAX_POINTS}")
        axis = p0.axes[0]
        qcond = grid_conditionals(spec, axis)
        q = gibbs_grid(spec, p0.axes)
        d_of = lambda law: float(discrete_kl(law.weights, q.weights))
        meta = {"backend": "grid", "grid_points": axis.m, "box": [axis.lo, axis.hi]}
    else:
        raise TypeError(f"unsupported initial law {type(p0).__name__}")
    meta.update({"n": spec.n, "steps": T})

    def D(pair):
        return d_functional(pair, spec, qcond)

    def ext(pair):
        return q_extension_map(pair, spec, qcond)

    P1 = loosely_connected_copy(diagonal_pair(p0))
    ext_prev = ext(P1)
    P2 = loosely_connected_copy(_eta_pair(markov_extend(P1, P1), None, ext_prev))
    records = [TraceRecord(0, D(P1)), TraceRecord(1, D(P2))]
    laws = [P1, P2] if keep_laws else []
    prev, cur = P1, P2
    half = 0.5 * (1 - delta) ** 2
    for t in range(2, T + 1):
        ext_cur = ext(cur)
        etas = _eta_pair(markov_extend(prev, cur), ext_prev, ext_cur)
        nxt = loosely_connected_copy(etas)
        Dt = D(nxt)
        d2, d1 = records[t - 2].D, records[t - 1].D
        records.append(
            TraceRecord(
                t,
                Dt,
                recursion_slack=half * (d2 + d1) - Dt,
                skip2_cost=ext_prev.cost,
                skip2_bound=2.0 / rho * d2,
                w2sq_skip2=w2(prev.marginal(0), cur.marginal(1)) ** 2,
                eta_gap=_law_gap(etas.marginal(0), cur.marginal(1)),
            )
        )
        if keep_laws:
            laws.append(nxt)
        prev, cur, ext_prev = cur, nxt, ext_cur
    return Trace(
        records=records,
        certificate=cert,
        metadata=meta,
        d_initial=d_of(P1.marginal(1)),
        d_final=d_of(cur.marginal(1)),
        laws=laws,
    )


class MainLemmaReport(NamedTuple):
    slack: float  # rhs - D(p || q)
    divergence: float  # D(p || q)
    rhs: float  # (D_0 (1-delta)^2 / 2 + D_1) / (1 - (1-delta)^2)
    sum_slack: float  # rhs - sum_{t>=1} D_t (recorded part)
    fisher: float
    d0_bound_slack: float  # I/(2 rho) - D_0
    d1_bound_slack: float  # (1 + (1-delta)^2/4) I / rho - D_1


def main_lemma_check(trace: Trace, spec: PotentialSpec, cert: Certificate, p0) -> MainLemmaReport:
    rho, delta = cert.rho, cert.delta
    if isinstance(p0, GaussianDist):
        q = GaussianDist.from_precision(spec.precision)
    else:
        q = gibbs_grid(spec, p0.axes)
    div = float(kl(p0, q))
    info = float(fisher(p0, q))
    D0, D1 = trace.records[0].D, trace.records[1].D
    r2 = (1 - delta) ** 2
    rhs = (0.5 * r2 * D0 + D1) / (1 - r2)
    return MainLemmaReport(
        slack=rhs - div,
        divergence=div,
        rhs=rhs,
        sum_slack=rhs - float(trace.D[1:].sum()),
        fisher=info,
        d0_bound_slack=info / (2 * rho) - D0,
        d1_bound_slack=(1 + 0.25 * r2) * info / rho - D1,
    )
