"""Finite toy processes for exhaustive checks of the entropy telescoping bound

    D(Y(1) || X) <= sum_{t=1}^s D_t + D(Y(s+1) || X),

with D_t = sum_i D(Y_i(t) | Y_{<i}(t), Y_{>i}(t+1) || Q_i), Q_i the site
conditionals of X.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import CapacityExceeded, DimensionMismatch
from ..metrics import discrete_kl
from . import _tensor

__all__ = ["ToyProcess", "random_toy_process", "aux_theorem_bruteforce"]

MAX_SITES = 3
MAX_ALPHABET = 4
MAX_HORIZON = 3


@dataclass(frozen=True, eq=False)
class ToyProcess:
    """``x_law`` has n axes; ``y_law`` is the joint of Y(1), ..., Y(s+1) with n*(s+1) axes."""

    x_law: np.ndarray
    y_law: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x_law, dtype=float)
        y = np.asarray(self.y_law, dtype=float)
        n, k = x.ndim, x.shape[0]
        if len(set(x.shape)) != 1 or y.ndim % n or y.ndim < 2 * n or set(y.shape) != {k}:
            raise DimensionMismatch("toy laws need one alphabet and n*(s+1) process axes")
        for arr in (x, y):
            if np.any(arr < 0) or abs(arr.sum() - 1) > 1e-12:
                raise ValueError("toy laws must be probability tensors")
        object.__setattr__(self, "x_law", x)
        object.__setattr__(self, "y_law", y)

    @property
    def n(self) -> int:
        return self.x_law.ndim

    @property
    def alphabet(self) -> int:
        return self.x_law.shape[0]

    @property
    def horizon(self) -> int:
        return self.y_law.ndim // self.n - 1

    def time_marginal(self, times) -> np.ndarray:
        n = self.n
        keep = [t * n + i for t in times for i in range(n)]
        drop = tuple(a for a in range(self.y_law.ndim) if a not in keep)
        return self.y_law.sum(axis=drop)


def random_toy_process(rng: np.random.Generator, n: int = 2, alphabet: int = 2, s: int = 2) -> ToyProcess:
    """Strictly positive X and an arbitrary random joint for Y(1..s+1)."""
    _check(n, alphabet, s)
    x = rng.dirichlet(np.ones(alphabet**n)).reshape((alphabet,) * n)
    y = rng.dirichlet(np.ones(alphabet ** (n * (s + 1)))).reshape((alphabet,) * (n * (s + 1)))
    return ToyProcess(x, y)


def _check(n, alphabet, s):
    if n > MAX_SITES or alphabet > MAX_ALPHABET or s > MAX_HORIZON or min(n, alphabet, s) < 1:
        raise CapacityExceeded(
            f"toy processes are limited to n <= {MAX_SITES}, alphabet <= {MAX_ALPHABET}, horizon <= {MAX_HORIZON}"
        )


def aux_theorem_bruteforce(toy: ToyProcess) -> list:
    """Slack of the telescoping bound for each horizon 1..s, by exhaustive summation."""
    n, s = toy.n, toy.horizon
    _check(n, toy.alphabet, s)
    with np.errstate(divide="ignore"):
        qcond = _tensor.qcond_from_logweights(np.log(toy.x_law))
    lhs = discrete_kl(toy.time_marginal([0]), toy.x_law)
    slacks = []
    total = 0.0
    for t in range(s):
        total += _tensor.d_functional(toy.time_marginal([t, t + 1]), qcond)
        tail = discrete_kl(toy.time_marginal([t + 1]), toy.x_law)
        slacks.append(float(total + tail - lhs))
    return slacks
