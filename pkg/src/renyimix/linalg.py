"""Dense Hermitian matrix primitives shared across the package.

All matrix functions go through a full Hermitian eigendecomposition; the
dimensions in play (d <= 64) make this both the simplest and the most
accurate route.
"""

from __future__ import annotations

import warnings

import numpy as np

HERM_TOL = 1e-10
PSD_TOL = 1e-10
TRACE_TOL = 1e-10


class ClampWarning(UserWarning):
    """Eigenvalues slightly below zero were clamped to zero."""


class DimensionMismatchError(ValueError):
    """Operands have incompatible matrix dimensions."""


class DomainError(ValueError):
    """Input lies outside the mathematical domain of an operation."""


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("matrix has non-finite entries")
    return m


def require_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape} vs {b.shape}")


def require_hermitian(a, tol: float = HERM_TOL) -> np.ndarray:
    """Validate Hermiticity within `tol` (max-abs entrywise) and symmetrize."""
    m = as_matrix(a)
    dev = np.max(np.abs(m - dagger(m)))
    if dev > tol:
        raise DomainError(f"matrix is not Hermitian (deviation {dev:.3e} > {tol:.1e})")
    return (m + dagger(m)) / 2


def require_positive(a, tol: float = PSD_TOL, definite: bool = False) -> np.ndarray:
    m = require_hermitian(a)
    w = np.linalg.eigvalsh(m)
    if w[0] < -tol:
        raise DomainError(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    if definite and w[0] <= tol:
        raise DomainError(f"matrix is not positive definite (min eigenvalue {w[0]:.3e})")
    return m


def require_density(a, tol: float = TRACE_TOL) -> np.ndarray:
    m = require_positive(a)
    tr = np.trace(m).real
    if abs(tr - 1.0) > tol:
        raise DomainError(f"trace is {tr!r}, expected 1 within {tol:.1e}")
    return m


def clamp_psd(a, tol: float = PSD_TOL, warn: bool = True) -> np.ndarray:
    """Zero out eigenvalues in [-tol, 0); anything below -tol is an error."""
    m = require_hermitian(a, tol=1e-8)
    w, v = np.linalg.eigh(m)
    if w[0] < -tol:
        raise DomainError(f"negative eigenvalue {w[0]:.3e} beyond clamp tolerance")
    if w[0] < 0:
        if warn:
            warnings.warn(f"clamped eigenvalues in [{w[0]:.3e}, 0) to zero", ClampWarning)
        w = np.maximum(w, 0.0)
        m = (v * w) @ dagger(v)
        m = (m + dagger(m)) / 2
    return m


def herm_fn(a: np.ndarray, fn) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum."""
    w, v = np.linalg.eigh(a)
    out = (v * fn(w)) @ dagger(v)
    return (out + dagger(out)) / 2


def psd_power(a: np.ndarray, r: float, clamp_tol: float = PSD_TOL) -> np.ndarray:
    """a**r for positive semidefinite a; negative r requires strict positivity."""
    w, v = np.linalg.eigh(a)
    if w[0] < -clamp_tol:
        raise DomainError(f"negative eigenvalue {w[0]:.3e} in psd_power")
    w = np.maximum(w, 0.0)
    if r < 0 and w[0] == 0.0:
        raise DomainError("negative power of a singular matrix")
    out = (v * w**r) @ dagger(v)
    return (out + dagger(out)) / 2


def herm_exp(a: np.ndarray) -> np.ndarray:
    return herm_fn(a, np.exp)


def herm_log(a: np.ndarray, floor: float = 0.0) -> np.ndarray:
    """log of a positive definite matrix; `floor` regularizes near-zero modes."""
    w, v = np.linalg.eigh(a)
    if floor > 0.0:
        w = np.maximum(w, floor)
    if w[0] <= 0.0:
        raise DomainError("logarithm of a non-positive matrix")
    out = (v * np.log(w)) @ dagger(v)
    return (out + dagger(out)) / 2


def herm_abs(a: np.ndarray) -> np.ndarray:
    return herm_fn(a, np.abs)


def trace_norm(a: np.ndarray) -> float:
    """Sum of absolute eigenvalues (Hermitian argument)."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(a))))


def operator_norm(a: np.ndarray) -> float:
    m = as_matrix(a)
    if np.max(np.abs(m - dagger(m))) <= 1e-12:
        return float(np.max(np.abs(np.linalg.eigvalsh(m))))
    return float(np.linalg.norm(m, 2))


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization: vec(X)[j*d + i] = X[i, j]."""
    return np.reshape(np.asarray(x, dtype=complex), -1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    d = round(len(v) ** 0.5)
    if d * d != len(v):
        raise DimensionMismatchError(f"vector of length {len(v)} is not a vectorized square matrix")
    return v.reshape((d, d), order="F")


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return (a + dagger(a)) / 2


# ---------------------------------------------------------------------------
# seeded random instances
# ---------------------------------------------------------------------------

def rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_hermitian(d: int, rng, scale: float = 1.0) -> np.ndarray:
    rng = rng_from(rng)
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (g + dagger(g)) / 2


def random_density(d: int, rng, min_eig: float = 0.0) -> np.ndarray:
    """Ginibre-induced random state; `min_eig` mixes in identity to bound the spectrum."""
    rng = rng_from(rng)
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ dagger(g)
    rho /= np.trace(rho).real
    if min_eig > 0.0:
        mu = min_eig * d
        rho = (1 - mu) * rho + mu * np.eye(d) / d
    return hermitian_part(rho)


def random_pure(d: int, rng) -> np.ndarray:
    rng = rng_from(rng)
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    return psi / np.linalg.norm(psi)


def haar_isometry(rows: int, cols: int, rng) -> np.ndarray:
    """Haar-random isometry (rows >= cols) via QR with phase fixing."""
    rng = rng_from(rng)
    g = rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))
