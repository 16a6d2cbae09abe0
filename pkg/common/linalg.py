"""
Dense linear-algebra kernels shared by the recovery and landscape apps.

Everything here is a pure function of its inputs; random draws take an
explicit ``numpy.random.Generator``. Matrices are plain float64 ndarrays.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

logger = logging.getLogger(__name__)

EPS = np.finfo(np.float64).eps


class LinalgError(Exception):
    """Base exception for numerical kernel failures"""
    pass


class NonFiniteMatrixError(LinalgError):
    """Matrix contains NaN or Inf entries"""
    pass


class DecompositionFailedError(LinalgError):
    """SVD or eigendecomposition did not converge"""
    pass


class SingularSystemError(LinalgError):
    """Linear system is not full row rank; probes treat this as infeasibility"""

    def __init__(self, message, sigma_min=None):
        super().__init__(message)
        self.sigma_min = sigma_min


class NotSymmetricError(LinalgError):
    """Matrix passed where a symmetric one is required"""
    pass


@dataclass(frozen=True)
class SvdResult:
    U: np.ndarray
    S: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.S) @ self.V.T


# ──────────────────────────────────────────────
# Validation helpers
# ──────────────────────────────────────────────

def as_matrix(M) -> np.ndarray:
    """Coerce to a 2-D float64 array and reject non-finite entries."""
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2:
        raise LinalgError(f"Expected a 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteMatrixError(f"Matrix of shape {A.shape} has non-finite entries")
    return A


def sym(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.T)


def rank_tolerance(shape, sigma_max: float) -> float:
    """Singular values at or below this count as zero."""
    return max(shape) * EPS * sigma_max


def _fix_signs(U: np.ndarray, V: np.ndarray):
    # Largest-magnitude entry of every left singular vector is made positive
    if U.shape[1] == 0:
        return U, V
    pivots = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[pivots, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, V * signs


# ──────────────────────────────────────────────
# Decompositions
# ──────────────────────────────────────────────

def _lapack_svd(A: np.ndarray, full_matrices: bool):
    try:
        return scipy.linalg.svd(A, full_matrices=full_matrices, lapack_driver='gesdd')
    except np.linalg.LinAlgError:
        logger.warning(f"gesdd failed on {A.shape} matrix, retrying with gesvd")
    try:
        return scipy.linalg.svd(A, full_matrices=full_matrices, lapack_driver='gesvd')
    except np.linalg.LinAlgError as e:
        raise DecompositionFailedError(f"SVD did not converge for {A.shape} matrix: {e}") from e


def svd(M) -> SvdResult:
    """
    Thin SVD with descending singular values and a deterministic sign convention.

    Raises:
        NonFiniteMatrixError: if M has NaN/Inf entries
        DecompositionFailedError: if both LAPACK drivers fail
    """
    A = as_matrix(M)
    if A.size == 0:
        k = min(A.shape)
        return SvdResult(np.zeros((A.shape[0], k)), np.zeros(k), np.zeros((A.shape[1], k)))
    U, S, Vt = _lapack_svd(A, full_matrices=False)
    U, V = _fix_signs(U, Vt.T)
    return SvdResult(U=U, S=S, V=V)


def numeric_rank(M) -> int:
    A = as_matrix(M)
    if A.size == 0:
        return 0
    S = scipy.linalg.svdvals(A)
    return int(np.sum(S > rank_tolerance(A.shape, S[0])))


def threshold_svd(M, tau: float):
    """
    Truncate M to the singular values strictly above tau.

    At tau below the numeric rank tolerance the tolerance is used instead, so
    tau = 0 gives the numeric rank.

    Returns:
        (M_tau, rank_tau)
    """
    if tau < 0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    res = svd(M)
    if res.S.size == 0:
        return np.zeros_like(as_matrix(M)), 0
    cutoff = max(tau, rank_tolerance((res.U.shape[0], res.V.shape[0]), res.S[0]))
    rank = int(np.sum(res.S > cutoff))
    M_tau = (res.U[:, :rank] * res.S[:rank]) @ res.V[:, :rank].T
    return M_tau, rank


def least_norm_solution(A, b):
    """
    Minimum-norm solution of the underdetermined system A u = b via the SVD
    pseudo-inverse.

    Args:
        A: m×n matrix with m ≤ n
        b: vector of length m

    Returns:
        (u, sigma_min) where sigma_min is the smallest singular value of A

    Raises:
        SingularSystemError: if A is not full row rank (or m > n)
    """
    A = as_matrix(A)
    b = np.asarray(b, dtype=np.float64).ravel()
    m, n = A.shape
    if b.shape[0] != m:
        raise LinalgError(f"Right-hand side has length {b.shape[0]}, expected {m}")
    if m == 0:
        return np.zeros(n), np.inf
    if m > n:
        raise SingularSystemError(f"System with {m} equations in {n} unknowns is overdetermined")

    res = svd(A)
    sigma_min = float(res.S[-1])
    tol = rank_tolerance(A.shape, res.S[0])
    if sigma_min <= tol:
        raise SingularSystemError(
            f"System matrix is rank deficient (sigma_min={sigma_min:.3e}, tol={tol:.3e})",
            sigma_min=sigma_min,
        )
    u = res.V @ ((res.U.T @ b) / res.S)
    return u, sigma_min


def kernel_basis(M) -> np.ndarray:
    """Orthonormal basis (as columns) of ker(M); zero columns when M has full column rank."""
    A = as_matrix(M)
    rows, cols = A.shape
    if rows == 0 or not np.any(A):
        return np.eye(cols)
    _, S, Vt = _lapack_svd(A, full_matrices=True)
    rank = int(np.sum(S > rank_tolerance(A.shape, S[0])))
    return Vt[rank:].T.copy()


def top_p_projection(A, p: int):
    """
    Maximise <A, P> over rank-p orthogonal projections P.

    The maximum is the sum of the p largest eigenvalues, attained by the
    projection onto the corresponding eigenvectors.

    Returns:
        (value, Q) with Q of shape n×p, orthonormal columns ordered by
        decreasing eigenvalue
    """
    A = as_matrix(A)
    n = A.shape[0]
    if A.shape != (n, n):
        raise LinalgError(f"Expected a square matrix, got shape {A.shape}")
    if not 0 <= p <= n:
        raise ValueError(f"p must lie in [0, {n}], got {p}")
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-10 * (1.0 + np.max(np.abs(A), initial=0.0)):
        raise NotSymmetricError("top_p_projection requires a symmetric matrix")
    if p == 0:
        return 0.0, np.zeros((n, 0))

    try:
        w, Q = scipy.linalg.eigh(sym(A), subset_by_index=[n - p, n - 1])
    except np.linalg.LinAlgError as e:
        raise DecompositionFailedError(f"Eigendecomposition failed: {e}") from e
    w, Q = w[::-1], Q[:, ::-1]
    return float(np.sum(w)), Q


# ──────────────────────────────────────────────
# Random matrices
# ──────────────────────────────────────────────

def random_gaussian(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((rows, cols))


def random_orthonormal(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """
    Haar-distributed matrix with orthonormal rows (rows ≤ cols) or orthonormal
    columns (rows > cols).
    """
    n, k = max(rows, cols), min(rows, cols)
    if k == 0:
        return np.zeros((rows, cols))
    G = rng.standard_normal((n, k))
    Q, R = scipy.linalg.qr(G, mode='economic')
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    Q = Q * signs
    return Q if rows >= cols else Q.T.copy()
