"""Small dense real-matrix utilities.

Everything here works on plain ``numpy`` arrays.  Inputs are validated for
finiteness up front; none of the simulator matrices exceed ~10x10, so the
routines favour accuracy and simplicity over speed.
"""

import numpy as np

from .errors import InvalidInputError, NoSolutionError

__all__ = [
    "as_matrix",
    "spectral_norm",
    "frobenius_norm",
    "kron",
    "vec_mat",
    "unvec",
    "mat_exp",
    "solve_sym_lyapunov",
    "is_hurwitz",
    "check_neutral_stability",
]

HURWITZ_MARGIN = 1e-12
SKEW_TOL = 1e-12

# Pade(13) coefficients and the 1-norm threshold below which the
# approximant is accurate to double precision (Higham 2005).
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA13 = 5.371920351148152


def as_matrix(m, name="matrix"):
    """Coerce ``m`` to a finite 2-D float array.

    Scalars become 1x1 and 1-D arrays become column vectors.
    """
    a = np.asarray(m, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a.reshape(-1, 1)
    elif a.ndim != 2:
        raise InvalidInputError(f"{name}: expected a 2-D array, got ndim={a.ndim}")
    if a.size == 0:
        raise InvalidInputError(f"{name}: zero-sized matrix")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name}: non-finite entries")
    return a


def _square(m, name="matrix"):
    a = as_matrix(m, name)
    if a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"{name}: expected square matrix, got {a.shape}")
    return a


def spectral_norm(m):
    """Largest singular value of ``m``."""
    return float(np.linalg.norm(as_matrix(m), 2))


def frobenius_norm(m):
    return float(np.sqrt(np.sum(as_matrix(m) ** 2)))


def kron(a, b):
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def vec_mat(m):
    """Stack the columns of ``m`` into one column vector."""
    a = as_matrix(m)
    return a.reshape(-1, 1, order="F")


def unvec(v, rows, cols):
    """Inverse of :func:`vec_mat`."""
    a = np.asarray(v, dtype=float).reshape(-1)
    if a.size != rows * cols:
        raise InvalidInputError(f"cannot reshape length {a.size} into {rows}x{cols}")
    return a.reshape(rows, cols, order="F")


def _pade13(a):
    b = _PADE13
    ident = np.eye(a.shape[0])
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (
        a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
        + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident
    )
    v = (
        a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
        + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
    )
    return np.linalg.solve(v - u, v + u)


def mat_exp(m):
    """Matrix exponential by scaling and squaring with a Pade(13) approximant.

    The matrix is scaled by ``2**-s`` so its 1-norm falls below the Pade(13)
    accuracy threshold, the approximant is evaluated, then squared ``s``
    times.

    Parameters
    ----------
    m : array_like
        Square real matrix.

    Returns
    -------
    ndarray
        ``exp(m)``.
    """
    a = _square(m)
    norm1 = np.max(np.sum(np.abs(a), axis=0))
    if norm1 == 0:
        return np.eye(a.shape[0])
    s = 0
    if norm1 > _THETA13:
        s = int(np.ceil(np.log2(norm1 / _THETA13)))
    x = _pade13(a / 2.0**s)
    for _ in range(s):
        x = x @ x
    return x


def solve_sym_lyapunov(m, c):
    """Solve ``X m + m^T X = c I`` for symmetric ``X``.

    The equation is vectorized into ``(m^T (x) I + I (x) m^T) vec(X) = c vec(I)``
    and solved densely.  The result is symmetrized before returning.

    Raises
    ------
    NoSolutionError
        If some pair of eigenvalues of ``m`` sums to zero, making the
        Lyapunov operator singular.
    """
    a = _square(m, "m")
    n = a.shape[0]
    ident = np.eye(n)
    op = np.kron(a.T, ident) + np.kron(ident, a.T)
    # eigenvalue pair sums are the operator spectrum; reject near-singular ones
    lam = np.linalg.eigvals(a)
    pair = np.abs(lam[:, None] + lam[None, :])
    scale = max(1.0, float(np.max(np.abs(lam))))
    if np.min(pair) <= 1e-10 * scale:
        raise NoSolutionError("Lyapunov operator is singular: eigenvalues of m sum to zero pairwise")
    rhs = float(c) * ident.reshape(-1, order="F")
    x = unvec(np.linalg.solve(op, rhs), n, n)
    return 0.5 * (x + x.T)


def is_hurwitz(m):
    """True iff every eigenvalue of ``m`` has real part below ``-1e-12``."""
    a = _square(m)
    return bool(np.all(np.linalg.eigvals(a).real < -HURWITZ_MARGIN))


def check_neutral_stability(s):
    """Accept only skew-symmetric exosystem matrices (zero included).

    A skew-symmetric matrix has a semi-simple, purely imaginary spectrum.
    General neutrally stable matrices that are skew only after a similarity
    transform are rejected.
    """
    a = _square(s, "s")
    return bool(np.all(np.abs(a + a.T) <= SKEW_TOL))
