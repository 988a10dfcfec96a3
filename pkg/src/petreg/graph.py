"""Directed follower topology with leader pinning.

Followers are numbered ``0..n-1`` internally; the leader is a virtual node
outside that range.  ``adjacency[i, j] == 1`` means follower ``i`` receives
from follower ``j``; ``pinning[i] == 1`` means follower ``i`` receives from
the leader.
"""

from collections import deque
from dataclasses import dataclass
from decimal import Decimal

import numpy as np

from . import matops
from .errors import InvalidInputError, PreconditionError


@dataclass(frozen=True, eq=False)
class Graph:
    adjacency: np.ndarray
    pinning: np.ndarray

    def __post_init__(self):
        w = np.array(self.adjacency, dtype=float)
        b = np.array(self.pinning, dtype=float).reshape(-1)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] == 0:
            raise InvalidInputError(f"adjacency must be a non-empty square matrix, got shape {w.shape}")
        if b.shape[0] != w.shape[0]:
            raise InvalidInputError("pinning vector length must equal the number of followers")
        if not np.all(np.isin(w, (0.0, 1.0))) or not np.all(np.isin(b, (0.0, 1.0))):
            raise InvalidInputError("edge weights are restricted to {0, 1}")
        if np.any(np.diag(w) != 0):
            raise InvalidInputError("self-loops are not allowed")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "adjacency", w)
        object.__setattr__(self, "pinning", b)

    @classmethod
    def from_edges(cls, n, edges, pinned):
        """Build from ``(source, target)`` follower pairs (1-based) and pinned ids."""
        w = np.zeros((n, n))
        for src, dst in edges:
            if not (1 <= src <= n and 1 <= dst <= n):
                raise InvalidInputError(f"edge ({src}, {dst}) references an unknown follower")
            w[dst - 1, src - 1] = 1.0
        b = np.zeros(n)
        for i in pinned:
            if not 1 <= i <= n:
                raise InvalidInputError(f"pinned follower {i} out of range")
            b[i - 1] = 1.0
        return cls(w, b)

    @property
    def n(self):
        return self.adjacency.shape[0]

    def edges(self):
        """``(source, target)`` pairs, 0-based, in row-major order of the adjacency."""
        return [(int(j), int(i)) for i, j in zip(*np.nonzero(self.adjacency))]

    def out_neighbors(self, j):
        return [int(i) for i in np.nonzero(self.adjacency[:, j])[0]]

    def permuted(self, perm):
        """Relabel followers so that new follower ``k`` is old follower ``perm[k]``."""
        p = np.asarray(perm)
        return Graph(self.adjacency[np.ix_(p, p)], self.pinning[p])


def build_h(g):
    """Laplacian plus the leader-pinning diagonal."""
    w = g.adjacency
    return np.diag(w.sum(axis=1)) - w + np.diag(g.pinning)


def check_spanning_tree(g):
    """True iff every follower is reachable from the leader."""
    seen = [bool(p) for p in g.pinning]
    queue = deque(i for i, s in enumerate(seen) if s)
    while queue:
        j = queue.popleft()
        for i in g.out_neighbors(j):
            if not seen[i]:
                seen[i] = True
                queue.append(i)
    return all(seen)


def solve_p(h):
    """Symmetric positive-definite ``P`` with ``P H + H^T P = 2 I``."""
    h = matops.as_matrix(h, "h")
    if not matops.is_hurwitz(-h):
        raise PreconditionError("-H is not Hurwitz; run check_spanning_tree on the graph")
    return matops.solve_sym_lyapunov(h, 2.0)


def observer_period_bound(g, mu1, mu2):
    """Supremum of admissible communication periods ``T``.

    ``T`` must satisfy ``T < 1 / (mu_max * (||P H|| + 1) * ||H||)``; the value
    returned is the right-hand side (the open interval's supremum).
    """
    if mu1 <= 0 or mu2 <= 0:
        raise InvalidInputError("observer gains must be positive")
    h = build_h(g)
    p = solve_p(h)
    mu_max = max(mu1, mu2)
    return 1.0 / (mu_max * (matops.spectral_norm(p @ h) + 1.0) * matops.spectral_norm(h))


def snap_period(bound, digits=3):
    """Largest decimal with ``digits`` places strictly below ``bound``.

    >>> snap_period(0.0535)
    0.053
    >>> snap_period(0.05)
    0.049
    """
    if bound <= 0:
        raise InvalidInputError("bound must be positive")
    step = Decimal(1).scaleb(-digits)
    q = (Decimal(repr(bound)) / step).to_integral_value(rounding="ROUND_CEILING") - 1
    if q <= 0:
        raise InvalidInputError(f"no {digits}-digit period fits below {bound}")
    return float(q * step)
