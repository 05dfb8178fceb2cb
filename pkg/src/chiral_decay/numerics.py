"""Dense complex kernels for the small effective matrices (N <= 64).

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Lower/upper
triangular inputs are detected and handled so that structural zeros survive
exactly, which the chiral (lower triangular) effective Hamiltonians rely on.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    IllConditionedWarning,
    NoConvergence,
    NonSquare,
    NumericalFailure,
    Overflow,
    TooLarge,
)

EXPM_NORM_CAP = 1.0e4
EIG_CONDITION_LIMIT = 1.0e8
PERMANENT_MAX_N = 24

# Pade(13) coefficients and scaling threshold (Higham 2005).
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
_TAYLOR_TERMS = 30
_TAYLOR_NORM = 0.5


def as_complex_matrix(M) -> np.ndarray:
    """Validate ``M`` as a finite square matrix and return a complex copy."""
    A = np.array(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericalFailure("matrix has non-finite entries")
    return A


def is_lower_triangular(A: np.ndarray) -> bool:
    return not np.any(np.triu(A, 1))


def is_upper_triangular(A: np.ndarray) -> bool:
    return not np.any(np.tril(A, -1))


def one_norm(A: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(A), axis=0))) if A.size else 0.0


def _solve(P: np.ndarray, Q: np.ndarray, lower: bool, upper: bool) -> np.ndarray:
    # Triangular solves keep the structural zeros exact.
    if lower:
        return sla.solve_triangular(P, Q, lower=True)
    if upper:
        return sla.solve_triangular(P, Q, lower=False)
    return np.linalg.solve(P, Q)


def _taylor(A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    eye = np.eye(n, dtype=complex)
    F = eye.copy()
    for j in range(_TAYLOR_TERMS, 0, -1):
        F = eye + (A @ F) / j
    return F


def _pade13(A: np.ndarray, lower: bool, upper: bool) -> np.ndarray:
    b = _PADE13
    n = A.shape[0]
    eye = np.eye(n, dtype=complex)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A2 @ A4
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * eye)
    V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * eye
    return _solve(V - U, V + U, lower, upper)


def expm(M, norm_cap: float = EXPM_NORM_CAP) -> np.ndarray:
    """Matrix exponential by scaling and squaring.

    Uses a 30-term Taylor series when the 1-norm is below 0.5 and the
    degree-13 Pade approximant otherwise. Raises :class:`Overflow` when the
    1-norm exceeds ``norm_cap``.
    """
    A = as_complex_matrix(M)
    n = A.shape[0]
    if n == 0:
        return A
    nrm = one_norm(A)
    if nrm > norm_cap:
        raise Overflow(f"1-norm {nrm:.3g} exceeds expm cap {norm_cap:.3g}")
    lower = is_lower_triangular(A)
    upper = is_upper_triangular(A)
    if nrm < _TAYLOR_NORM:
        return _taylor(A)
    s = 0
    if nrm > _THETA13:
        s = max(0, int(np.ceil(np.log2(nrm / _THETA13))))
    F = _pade13(A / 2.0**s, lower, upper)
    for _ in range(s):
        F = F @ F
    if not np.all(np.isfinite(F)):
        raise NumericalFailure("expm produced non-finite entries")
    return F


def eigenvector_condition(M) -> float:
    """2-norm condition number of the (column-normalized) eigenvector matrix."""
    A = as_complex_matrix(M)
    if A.shape[0] <= 1:
        return 1.0
    try:
        _, V = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.linalg.cond(V)
    return float(c) if np.isfinite(c) else float("inf")


def eigvals(M, cond_limit: float = EIG_CONDITION_LIMIT) -> np.ndarray:
    """Eigenvalues with multiplicity.

    Triangular matrices return their diagonal exactly. An
    :class:`IllConditionedWarning` is emitted when the eigenvector condition
    estimate exceeds ``cond_limit`` (near an exceptional point the computed
    values of a non-triangular matrix lose accuracy).
    """
    A = as_complex_matrix(M)
    if is_lower_triangular(A) or is_upper_triangular(A):
        w = np.diag(A).copy()
    else:
        try:
            w = np.linalg.eigvals(A)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(str(exc)) from exc
    cond = eigenvector_condition(A)
    if cond > cond_limit:
        warnings.warn(
            f"eigenvector condition {cond:.3g} exceeds {cond_limit:.1g}; "
            "matrix is close to an exceptional point",
            IllConditionedWarning,
            stacklevel=2,
        )
    return w


@dataclass(frozen=True)
class SingularResult:
    sigma: float
    vector: np.ndarray


def largest_singular(
    M,
    method: str = "eigh",
    tol: float = 1e-12,
    max_iter: int = 200_000,
    x0=None,
) -> SingularResult:
    """Top eigenvalue of ``M^H M`` (the squared largest singular value of M).

    ``method="eigh"`` uses a Hermitian eigensolver; ``method="power"`` runs
    power iteration on ``M^H M`` until the Rayleigh quotient changes by less
    than ``tol`` (relative) and the residual is below ``sqrt(tol)``.
    """
    A = as_complex_matrix(M)
    n = A.shape[0]
    B = A.conj().T @ A
    B = 0.5 * (B + B.conj().T)
    if method == "eigh":
        w, V = np.linalg.eigh(B)
        return SingularResult(float(max(w[-1], 0.0)), V[:, -1])
    if method != "power":
        raise ValueError(f"unknown method {method!r}")
    if x0 is None:
        x = np.ones(n, dtype=complex) + 0.1j * np.arange(n)
    else:
        x = np.asarray(x0, dtype=complex).copy()
    x /= np.linalg.norm(x)
    mu = float(np.real(np.vdot(x, B @ x)))
    for _ in range(max_iter):
        y = B @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return SingularResult(0.0, x)
        x = y / ny
        Bx = B @ x
        mu_new = float(np.real(np.vdot(x, Bx)))
        resid = np.linalg.norm(Bx - mu_new * x)
        if abs(mu_new - mu) <= tol * max(abs(mu_new), 1.0) and resid <= np.sqrt(tol) * max(mu_new, 1.0):
            return SingularResult(max(mu_new, 0.0), x)
        mu = mu_new
    raise NoConvergence(f"power iteration did not converge in {max_iter} steps")


def determinant(M) -> complex:
    """Determinant via LU with partial pivoting (triangular: diagonal product)."""
    A = as_complex_matrix(M)
    if A.shape[0] == 0:
        return 1.0 + 0.0j
    if is_lower_triangular(A) or is_upper_triangular(A):
        return complex(np.prod(np.diag(A)))
    with warnings.catch_warnings():
        # A singular matrix is a legitimate input here; its determinant is 0.
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=False)
    swaps = int(np.count_nonzero(piv != np.arange(A.shape[0])))
    d = complex(np.prod(np.diag(lu)))
    return -d if swaps % 2 else d


def _kahan_add(total: complex, comp: complex, value: complex) -> tuple[complex, complex]:
    y = value - comp
    t = total + y
    comp = (t - total) - y
    return t, comp


def _gray_rowsums(cols: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row sums of all column subsets, in reflected Gray-code order.

    Returns ``(sums, parity)`` with ``sums[i]`` the row-sum vector of the i-th
    subset and ``parity[i]`` its size mod 2.
    """
    n_rows, l = cols.shape
    sums = np.zeros((1, n_rows), dtype=complex)
    parity = np.zeros(1, dtype=np.int8)
    for j in range(l):
        sums = np.concatenate([sums, sums[::-1] + cols[:, j]])
        parity = np.concatenate([parity, 1 - parity[::-1]])
    return sums, parity


def permanent(M) -> complex:
    """Matrix permanent by Ryser's formula with Gray-code ordering.

    The low columns are enumerated as a vectorized Gray-code block, the high
    columns by single-column Gray-code updates; block totals are combined with
    compensated summation. Triangular input returns the diagonal product.
    """
    A = as_complex_matrix(M)
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n > PERMANENT_MAX_N:
        raise TooLarge(f"permanent limited to N <= {PERMANENT_MAX_N}, got {n}")
    if is_lower_triangular(A) or is_upper_triangular(A):
        return complex(np.prod(np.diag(A)))
    l = min(n, 12)
    low, low_par = _gray_rowsums(A[:, :l])
    low_sign = 1.0 - 2.0 * low_par
    high = A[:, l:]
    h = high.shape[1]

    total, comp = 0.0 + 0.0j, 0.0 + 0.0j
    r_high = np.zeros(n, dtype=complex)
    in_set = np.zeros(h, dtype=bool)
    par_high = 0
    for step in range(1 << h):
        if step:
            # Gray code: flip the lowest set bit position of ``step``.
            j = (step & -step).bit_length() - 1
            if in_set[j]:
                r_high -= high[:, j]
            else:
                r_high += high[:, j]
            in_set[j] = not in_set[j]
            par_high ^= 1
        prods = np.prod(low + r_high, axis=1)
        block = np.sum(low_sign * prods)
        if par_high:
            block = -block
        total, comp = _kahan_add(total, comp, complex(block))
    return -total if n % 2 else total
