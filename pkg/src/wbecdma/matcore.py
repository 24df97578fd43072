"""Small dense real-matrix kernel shared by the codebook and decoder modules.

Matrices are plain 2-D ``float64`` numpy arrays; :func:`as_matrix` is the
single validation point that enforces shape and finiteness.
"""

from __future__ import annotations

import numpy as np

PIVOT_TOL = 1e-12


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when elimination meets a pivot below :data:`PIVOT_TOL`."""


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D float array, or raise ``ValueError``."""
    m = np.asarray(a, dtype=float)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains NaN or Inf")
    return m


def mat_mul(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return a @ b


def kron(a, b) -> np.ndarray:
    """Kronecker product; block ``(i, j)`` of the result is ``a[i, j] * b``."""
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def invert(a) -> np.ndarray:
    """Inverse by Gauss-Jordan elimination with partial pivoting.

    Raises
    ------
    SingularMatrixError
        If a pivot magnitude drops below ``PIVOT_TOL``.
    """
    a = as_matrix(a, "a")
    n, m = a.shape
    if n != m:
        raise ValueError(f"cannot invert non-square matrix of shape {a.shape}")
    aug = np.hstack([a.copy(), np.eye(n)])
    for col in range(n):
        piv = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[piv, col]) < PIVOT_TOL:
            raise SingularMatrixError(f"pivot {aug[piv, col]:.3e} below {PIVOT_TOL} at column {col}")
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] /= aug[col, col]
        others = np.arange(n) != col
        aug[others] -= np.outer(aug[others, col], aug[col])
    return aug[:, n:]


def is_unitary(q, tol: float = 1e-9) -> bool:
    """True iff ``max |q^T q - I| <= tol`` (real field, so ^H is ^T)."""
    q = as_matrix(q, "q")
    if q.shape[0] != q.shape[1]:
        raise ValueError(f"unitarity is only defined for square matrices, got {q.shape}")
    dev = np.abs(q.T @ q - np.eye(q.shape[0]))
    return bool(dev.max() <= tol)


def sign_vec(z) -> np.ndarray:
    """Componentwise sign into {-1, +1}; zero maps to +1."""
    z = np.asarray(z, dtype=float)
    return np.where(z >= 0, 1.0, -1.0)


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed real orthogonal ``d x d`` matrix."""
    g = rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)
