"""Leader exosystem, follower LTI models and regulator-equation solvers."""

from dataclasses import dataclass

import numpy as np

from . import matops
from .errors import InvalidInputError, NoSolutionError


def _vector(x, n, name):
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.shape[0] != n:
        raise InvalidInputError(f"{name}: expected length {n}, got {v.shape[0]}")
    return v


@dataclass(frozen=True, eq=False)
class LeaderModel:
    s_matrix: np.ndarray
    v0: np.ndarray

    def __post_init__(self):
        s = matops.as_matrix(self.s_matrix, "S")
        if s.shape[0] != s.shape[1]:
            raise InvalidInputError("S must be square")
        if not matops.check_neutral_stability(s):
            raise InvalidInputError("S must be skew-symmetric (neutrally stable normal form)")
        object.__setattr__(self, "s_matrix", s)
        object.__setattr__(self, "v0", _vector(self.v0, s.shape[0], "v0"))

    @property
    def nv(self):
        return self.s_matrix.shape[0]


@dataclass(frozen=True, eq=False)
class FollowerModel:
    """``x' = a x + b u + e v``, ``e_reg = c x + d u + f v``, ``y_m = c_m x + d_m u + f_m v``."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    e: np.ndarray
    f: np.ndarray
    c_m: np.ndarray
    d_m: np.ndarray
    f_m: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        names = ("a", "b", "c", "d", "e", "f", "c_m", "d_m", "f_m")
        mats = {k: matops.as_matrix(getattr(self, k), k) for k in names}
        n = mats["a"].shape[0]
        nu = mats["b"].shape[1]
        ne = mats["c"].shape[0]
        ny = mats["c_m"].shape[0]
        nv = mats["e"].shape[1]
        expected = {
            "a": (n, n), "b": (n, nu), "c": (ne, n), "d": (ne, nu), "e": (n, nv),
            "f": (ne, nv), "c_m": (ny, n), "d_m": (ny, nu), "f_m": (ny, nv),
        }
        for k, shape in expected.items():
            if mats[k].shape != shape:
                raise InvalidInputError(f"{k}: expected shape {shape}, got {mats[k].shape}")
            object.__setattr__(self, k, mats[k])
        object.__setattr__(self, "x0", _vector(self.x0, n, "x0"))

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def nu(self):
        return self.b.shape[1]

    @property
    def ne(self):
        return self.c.shape[0]

    @property
    def ny(self):
        return self.c_m.shape[0]

    @property
    def nv(self):
        return self.e.shape[1]


@dataclass(frozen=True)
class RegulatorSolution:
    x_sol: np.ndarray
    u_sol: np.ndarray


def leader_flow(m, t):
    """Leader state ``exp(S t) v0``."""
    if t < 0:
        raise InvalidInputError("t must be non-negative")
    return matops.mat_exp(m.s_matrix * t) @ m.v0


def _check_args(m, x, u, v):
    return _vector(x, m.n, "x"), _vector(u, m.nu, "u"), _vector(v, m.nv, "v")


def follower_derivative(m, x, u, v):
    x, u, v = _check_args(m, x, u, v)
    return m.a @ x + m.b @ u + m.e @ v


def regulation_error(m, x, u, v):
    x, u, v = _check_args(m, x, u, v)
    return m.c @ x + m.d @ u + m.f @ v


def measurement(m, x, u, v):
    x, u, v = _check_args(m, x, u, v)
    return m.c_m @ x + m.d_m @ u + m.f_m @ v


def regulator_operator(m, s):
    """Kronecker operator mapping ``vec([X; U])`` to ``vec([E; F])``.

    ``XS - AX - BU = E`` and ``-(CX + DU) = F`` stacked and vectorized.
    """
    s = matops.as_matrix(s, "S")
    if s.shape != (m.nv, m.nv):
        raise InvalidInputError(f"S: expected shape {(m.nv, m.nv)}, got {s.shape}")
    sel = np.zeros((m.n + m.ne, m.n + m.nu))
    sel[: m.n, : m.n] = np.eye(m.n)
    plant = np.block([[m.a, m.b], [m.c, m.d]])
    return np.kron(s.T, sel) - np.kron(np.eye(m.nv), plant)


def regulator_rhs(m):
    """``vec([E; F])``."""
    return matops.vec_mat(np.vstack([m.e, m.f])).reshape(-1)


def unpack_chi(chi, m):
    """Split ``vec([X; U])`` into ``(X, U)``."""
    z = matops.unvec(chi, m.n + m.nu, m.nv)
    return z[: m.n], z[m.n:]


def pack_chi(x_sol, u_sol):
    return matops.vec_mat(np.vstack([x_sol, u_sol])).reshape(-1)


def solve_regulator_direct(m, s):
    """Solve the regulator equations through their Kronecker vectorization.

    Raises
    ------
    NoSolutionError
        If the operator is rank deficient or the (possibly non-square)
        system is inconsistent.
    """
    op = regulator_operator(m, s)
    beta = regulator_rhs(m)
    if np.linalg.matrix_rank(op) < op.shape[1]:
        raise NoSolutionError("regulator operator is singular; regulator equations not uniquely solvable")
    if op.shape[0] == op.shape[1]:
        chi = np.linalg.solve(op, beta)
    else:
        chi = np.linalg.lstsq(op, beta, rcond=None)[0]
    if np.linalg.norm(op @ chi - beta) > 1e-9 * max(1.0, np.linalg.norm(beta)):
        raise NoSolutionError("regulator equations are inconsistent")
    x_sol, u_sol = unpack_chi(chi, m)
    return RegulatorSolution(x_sol, u_sol)


def regulator_residuals(m, s, sol):
    """Frobenius norms of the two regulator-equation residuals."""
    s = matops.as_matrix(s)
    r1 = sol.x_sol @ s - m.a @ sol.x_sol - m.b @ sol.u_sol - m.e
    r2 = m.c @ sol.x_sol + m.d @ sol.u_sol + m.f
    return matops.frobenius_norm(r1), matops.frobenius_norm(r2)


def adaptive_regulator_step(chi_hat, s_hat, m, kappa):
    """Gradient-flow derivative ``-kappa A^T (A chi - beta)`` with ``A`` built from ``s_hat``."""
    if kappa <= 0:
        raise InvalidInputError("kappa must be positive")
    op = regulator_operator(m, s_hat)
    chi = _vector(chi_hat, op.shape[1], "chi_hat")
    return -kappa * op.T @ (op @ chi - regulator_rhs(m))
