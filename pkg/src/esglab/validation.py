"""Input validation helpers, in the spirit of ``sklearn.utils.validation``."""

import numpy as np

from .exceptions import ValidationError

SYMMETRY_TOL = 1e-10
PSD_TOL = 1e-10


def frozen_array(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def check_finite(a, name):
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} contains non-finite values")
    return a


def check_returns_matrix(X, name="returns", min_rows=1):
    """Coerce ``X`` to a finite float matrix of shape (rows, assets)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValidationError(f"{name} must be a 2-d matrix, got shape {X.shape}")
    if X.shape[0] < min_rows:
        raise ValidationError(f"{name} needs at least {min_rows} rows, got {X.shape[0]}")
    if X.shape[1] < 1:
        raise ValidationError(f"{name} has no columns")
    return check_finite(X, name)


def check_correlation(corr, n=None):
    """Validate a correlation matrix and regularize it if borderline.

    Raises if the matrix is not square of size ``n``, is asymmetric by more
    than 1e-10, has a non-unit diagonal, entries outside [-1, 1], or an
    eigenvalue below -1e-10. Eigenvalues in ``[-1e-10, 0)`` are clipped to
    zero and the result rescaled to unit diagonal.
    """
    c = np.asarray(corr, dtype=float)
    if n is None:
        n = c.shape[0] if c.ndim == 2 else -1
    if c.shape != (n, n):
        raise ValidationError(f"corr must be {n}x{n}, got shape {c.shape}")
    check_finite(c, "corr")
    asym = np.abs(c - c.T)
    if asym.max() > SYMMETRY_TOL:
        i, j = np.unravel_index(np.argmax(asym), asym.shape)
        i, j = min(i, j), max(i, j)
        raise ValidationError(
            f"corr is not symmetric: corr[{i}][{j}]={c[i, j]!r} but corr[{j}][{i}]={c[j, i]!r}"
        )
    if np.abs(np.diag(c) - 1.0).max() > SYMMETRY_TOL:
        raise ValidationError("corr must have a unit diagonal")
    if np.abs(c).max() > 1.0 + SYMMETRY_TOL:
        i, j = np.unravel_index(np.argmax(np.abs(c)), c.shape)
        raise ValidationError(f"corr[{i}][{j}]={c[i, j]!r} lies outside [-1, 1]")
    c = 0.5 * (c + c.T)
    np.fill_diagonal(c, 1.0)
    eigval, eigvec = np.linalg.eigh(c)
    if eigval[0] < -PSD_TOL:
        raise ValidationError(
            f"corr is not positive semidefinite (smallest eigenvalue {eigval[0]:.3e})"
        )
    if eigval[0] < 0:
        c = (eigvec * np.clip(eigval, 0.0, None)) @ eigvec.T
        d = np.sqrt(np.diag(c))
        c = c / np.outer(d, d)
        c = 0.5 * (c + c.T)
        np.fill_diagonal(c, 1.0)
    return np.clip(c, -1.0, 1.0)


def psd_cholesky(a, tol=1e-12):
    """Lower-triangular ``L`` with ``L @ L.T == a`` for a PSD matrix ``a``.

    Unlike ``numpy.linalg.cholesky`` this tolerates singular matrices: a
    pivot below ``tol`` (relative to the largest diagonal entry) zeroes its
    column, which is what perfectly correlated assets need.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    L = np.zeros_like(a)
    scale = max(float(np.max(np.abs(np.diag(a)))), 1.0) if n else 1.0
    for j in range(n):
        d = a[j, j] - L[j, :j] @ L[j, :j]
        if d < -tol * scale:
            raise ValidationError(f"matrix is not positive semidefinite (pivot {d:.3e} at {j})")
        if d <= tol * scale:
            continue
        L[j, j] = np.sqrt(d)
        L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L
