"""Dense linear algebra for the linear part of the models.

Everything operates on plain float64 numpy arrays: matrices are 2-D and
validated on entry, vectors are 1-D. Nothing here knows about models or
schemes; the three public routines are the building blocks the simulators
assemble per parameter draw.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from .errors import DimensionError, DomainError, NumericError

__all__ = ["matrix_exp", "increment_covariance", "cholesky_psd"]

# Eigenvalues down to -PSD_TOL * ||c|| are treated as rounding noise.
PSD_TOL = 1e-10


def _checked_square(a, name: str) -> np.ndarray:
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} contains non-finite entries")
    return m


def matrix_exp(a, t: float = 1.0) -> np.ndarray:
    """Matrix exponential e^(a t).

    Diagonal input (the zero matrix included) short-circuits to an
    entrywise exp, so diagonal propagators are exact. General matrices go
    through scipy's scaling-and-squaring Pade-13 implementation.
    """
    m = _checked_square(a, "a")
    tf = float(t)
    if not np.isfinite(tf):
        raise DomainError("t must be finite")
    at = m * tf
    if not np.any(at - np.diag(np.diagonal(at))):
        return np.diag(np.exp(np.diagonal(at)))
    return expm(at)


def increment_covariance(a, b, dt: float) -> np.ndarray:
    """Covariance C(dt) of the Gaussian increment of dX = a X dt + b dW.

    C solves C'(t) = a C + C a' + b b', C(0) = 0. It is read off the
    augmented block exponential

        exp([[a, b b'], [0, -a']] h) = [[e^(a h), F], [0, e^(-a' h)]],
        C(h) = F e^(a h)'.

    The block form mixes a decaying and a growing exponential; once
    dt ||a|| is large the growing block swamps double precision. The base
    step h is therefore halved until h ||a||_1 <= 0.5 and the result is
    doubled back up via C(2t) = E C E' + C, E(2t) = E^2, which keeps every
    intermediate bounded.
    """
    am = _checked_square(a, "a")
    bm = np.asarray(b, dtype=float)
    if bm.ndim != 2 or bm.shape[0] != am.shape[0]:
        raise DimensionError(
            f"b must be a matrix with {am.shape[0]} rows, got shape {bm.shape}"
        )
    if not np.all(np.isfinite(bm)):
        raise DomainError("b contains non-finite entries")
    dtf = float(dt)
    if not np.isfinite(dtf) or dtf <= 0.0:
        raise DomainError(f"dt must be positive and finite, got {dt!r}")

    n = am.shape[0]
    h = dtf
    doublings = 0
    a_norm = np.linalg.norm(am, 1)
    while a_norm * h > 0.5 and doublings < 64:
        h *= 0.5
        doublings += 1

    blk = np.zeros((2 * n, 2 * n))
    blk[:n, :n] = am
    blk[:n, n:] = bm @ bm.T
    blk[n:, n:] = -am.T
    e_blk = expm(blk * h)
    prop = e_blk[:n, :n]
    cov = e_blk[:n, n:] @ prop.T
    cov = 0.5 * (cov + cov.T)
    for _ in range(doublings):
        cov = prop @ cov @ prop.T + cov
        cov = 0.5 * (cov + cov.T)
        prop = prop @ prop
    return cov


def cholesky_psd(c) -> np.ndarray:
    """Lower-triangular L with L L' = c for symmetric positive semidefinite c.

    Strictly positive definite input factors directly. A semidefinite
    matrix (singular within rounding) gets a diagonal shift of
    1e-14 trace(c)/n and a retry, so the result stays triangular. Input
    that is indefinite beyond PSD_TOL * ||c|| raises NumericError naming
    the offending eigenvalue estimate.
    """
    m = _checked_square(c, "c")
    m = 0.5 * (m + m.T)
    n = m.shape[0]
    if not m.any():
        return np.zeros_like(m)
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        pass
    shift = 1e-14 * np.trace(m) / n
    if shift > 0.0:
        try:
            return np.linalg.cholesky(m + shift * np.eye(n))
        except np.linalg.LinAlgError:
            pass
    eigs = np.linalg.eigvalsh(m)
    smallest = float(eigs[0])
    scale = float(np.abs(eigs).max())
    if smallest < -PSD_TOL * scale:
        raise NumericError(
            f"matrix is not positive semidefinite: smallest eigenvalue ~ {smallest:.6e}"
        )
    bump = abs(smallest) + max(shift, 0.0) + np.finfo(float).eps * max(scale, 1.0)
    try:
        return np.linalg.cholesky(m + bump * np.eye(n))
    except np.linalg.LinAlgError:
        raise NumericError(
            f"factorization failed despite eigenvalues in [{smallest:.3e}, {scale:.3e}]"
        ) from None
