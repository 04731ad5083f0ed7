"""Small dense symmetric matrix kernel.

Everything here works on plain ``numpy`` arrays. The matrices involved in
design problems are tiny (parameter dimension rarely above 10), so the
routines favour explicit checks over speed.
"""

import numpy as np

from .errors import NotPositiveDefinite, NotSymmetric, ShapeMismatch

# Relative pivot threshold: a Cholesky pivot L_kk**2 below
# PIVOT_TOL * max(diag(a)) means "not positive definite".
PIVOT_TOL = 1e-12
SYMMETRY_TOL = 1e-12
EIGEN_TOL = 1e-12


def _square(a):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def is_symmetric(a, tol=SYMMETRY_TOL):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return bool(np.all(np.abs(a - a.T) <= tol * np.maximum(1.0, np.abs(a))))


def cholesky(a, pivot_tol=PIVOT_TOL):
    """Lower Cholesky factor of ``a`` with a relative pivot test.

    Raises NotPositiveDefinite when the factorization fails or a pivot falls
    below ``pivot_tol * max(diag(a))``.
    """
    a = _spd_input(a)
    scale = float(np.max(np.diag(a))) if a.size else 0.0
    if scale <= 0.0:
        raise NotPositiveDefinite("non-positive diagonal")
    try:
        low = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if np.min(np.diag(low)) ** 2 < pivot_tol * scale:
        raise NotPositiveDefinite("pivot below threshold")
    return low


def _spd_input(a):
    a = _square(a)
    if not is_symmetric(a):
        raise NotSymmetric("matrix is not symmetric")
    return a


def spd_inverse(a, pivot_tol=PIVOT_TOL):
    """Inverse of a symmetric positive definite matrix via Cholesky."""
    return fast_spd_inverse(_spd_input(a), pivot_tol)


def fast_spd_inverse(a, pivot_tol=PIVOT_TOL):
    """spd_inverse without input validation, for inner loops.

    ``a`` must already be a finite square float array.
    """
    try:
        low = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("factorization failed") from None
    piv = np.diagonal(low)
    if piv.min() ** 2 < pivot_tol * np.diagonal(a).max():
        raise NotPositiveDefinite("pivot below threshold")
    linv = np.linalg.inv(low)
    # (L L^T)^-1 = L^-T L^-1, symmetric by construction
    return linv.T @ linv


def fast_logdet(a, pivot_tol=PIVOT_TOL):
    try:
        low = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("factorization failed") from None
    piv = np.diagonal(low)
    if piv.min() ** 2 < pivot_tol * np.diagonal(a).max():
        raise NotPositiveDefinite("pivot below threshold")
    return 2.0 * float(np.log(piv).sum())


def _sym_eigh(a, tol=EIGEN_TOL):
    a = _square(a)
    if not is_symmetric(a, max(tol, SYMMETRY_TOL)):
        raise NotSymmetric("matrix is not symmetric")
    return np.linalg.eigh(0.5 * (a + a.T))


def spd_sqrt_inverse(a, pivot_tol=PIVOT_TOL):
    """Symmetric inverse square root ``s`` with ``s @ a @ s == I``."""
    vals, vecs = _sym_eigh(a)
    if vals[0] <= pivot_tol * max(vals[-1], 0.0) or vals[-1] <= 0.0:
        raise NotPositiveDefinite("eigenvalue not positive")
    return (vecs / np.sqrt(vals)) @ vecs.T


def logdet(a, pivot_tol=PIVOT_TOL):
    """Natural log of det(a) from the Cholesky factor."""
    return fast_logdet(_spd_input(a), pivot_tol)


def trace_product(a, b):
    """tr(a @ b) without forming the product."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape != b.shape[::-1]:
        raise ShapeMismatch(f"cannot form tr(a b) for shapes {a.shape}, {b.shape}")
    return float(np.einsum("ij,ji->", a, b))


def min_eigenvalue(a):
    vals, _ = _sym_eigh(a)
    return float(vals[0])


def is_psd(a, tol=1e-10):
    return min_eigenvalue(a) >= -tol
