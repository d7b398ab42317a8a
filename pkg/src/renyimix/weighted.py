"""Weighted operator algebra over a full-rank reference state.

A `WeightedSpace` fixes a full-rank density matrix sigma and provides
fractional powers sigma^r, the weighting maps X -> sigma^{r/2} X sigma^{r/2},
the weighted p-norms

    ||X||_{p,sigma} = tr[ |sigma^{1/2p} X sigma^{1/2p}|^p ]^{1/p},

the weighted scalar product <X, Y>_sigma = tr[sigma^{1/2} X† sigma^{1/2} Y]
and the power operator connecting different p-norms.
"""

from __future__ import annotations

import math
import threading

import numpy as np

from .linalg import (
    PSD_TOL,
    DomainError,
    as_matrix,
    dagger,
    hermitian_part,
    operator_norm,
    require_density,
    require_positive,
    require_same_dim,
)

#: exponent sentinel selecting the operator norm
INF = math.inf


class WeightedSpace:
    """Full-rank reference state with a cached eigendecomposition.

    Fractional powers are computed once per exponent and shared; cache
    insertion is lock-protected so instances can be used across threads.
    """

    def __init__(self, sigma):
        sigma = require_density(sigma)
        w, u = np.linalg.eigh(sigma)
        if w[0] <= PSD_TOL:
            raise DomainError(f"reference state must be full rank (min eigenvalue {w[0]:.3e})")
        self.sigma = sigma
        self.dim = sigma.shape[0]
        self.eigenvalues = w
        self.eigenvectors = u
        self._powers: dict[float, np.ndarray] = {0.0: np.eye(self.dim, dtype=complex), 1.0: sigma}
        self._lock = threading.Lock()

    def frac_power(self, r: float) -> np.ndarray:
        """sigma^r through the cached eigendecomposition. Treat as read-only."""
        r = float(r)
        cached = self._powers.get(r)
        if cached is not None:
            return cached
        u = self.eigenvectors
        out = hermitian_part((u * self.eigenvalues**r) @ dagger(u))
        with self._lock:
            self._powers.setdefault(r, out)
        return self._powers[r]

    def gamma(self, x, r: float = 1.0) -> np.ndarray:
        """Weighting map sigma^{r/2} X sigma^{r/2}."""
        x = as_matrix(x)
        require_same_dim(x, self.sigma)
        a = self.frac_power(r / 2.0)
        return a @ x @ a

    def norm(self, x, p: float) -> float:
        """Weighted p-norm; `p = INF` gives the plain operator norm."""
        x = as_matrix(x)
        require_same_dim(x, self.sigma)
        if p == INF:
            return operator_norm(x)
        if p < 1:
            raise DomainError(f"weighted norm requires p >= 1, got {p}")
        a = self.gamma(x, 1.0 / p)
        w = np.linalg.eigvalsh(hermitian_part(a))
        return float(np.sum(np.abs(w) ** p) ** (1.0 / p))

    def norm1_signed(self, x) -> float:
        """tr[Gamma_sigma(X)] — agrees with the 1-norm on positive X."""
        x = as_matrix(x)
        require_same_dim(x, self.sigma)
        return float(np.trace(self.sigma @ x).real)

    def inner(self, x, y) -> complex:
        """Weighted scalar product tr[Gamma_sigma(X†) Y]; sesquilinear in X."""
        x = as_matrix(x)
        y = as_matrix(y)
        require_same_dim(x, self.sigma)
        require_same_dim(x, y)
        half = self.frac_power(0.5)
        return complex(np.trace(half @ dagger(x) @ half @ y))

    def power_operator(self, x, p: float, q: float) -> np.ndarray:
        """I_{p,q}(X) = Gamma^{-1/p}( |Gamma^{1/q}(X)|^{q/p} ) for positive X.

        Satisfies ||I_{p,q}(X)||_{p,sigma}^p = ||X||_{q,sigma}^q.
        """
        if p < 1 or q < 1:
            raise DomainError(f"power operator requires p, q >= 1, got ({p}, {q})")
        x = require_positive(x)
        require_same_dim(x, self.sigma)
        inner_mat = self.gamma(x, 1.0 / q)
        w, v = np.linalg.eigh(hermitian_part(inner_mat))
        w = np.abs(w) ** (q / p)
        powered = hermitian_part((v * w) @ dagger(v))
        return hermitian_part(self.gamma(powered, -1.0 / p))

    def relative_density(self, rho) -> np.ndarray:
        """Gamma^{-1}(rho) = sigma^{-1/2} rho sigma^{-1/2}."""
        return hermitian_part(self.gamma(rho, -1.0))


def conjugate_exponent(p: float) -> float:
    """Holder conjugate q with 1/p + 1/q = 1 (p > 1)."""
    if p <= 1:
        raise DomainError(f"conjugate exponent needs p > 1, got {p}")
    return p / (p - 1.0)
