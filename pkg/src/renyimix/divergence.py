"""Sandwiched Renyi divergence family and supporting distance measures.

All divergences are returned in nats. The single bits-valued quantity
(the channel information radius) converts at its own boundary.
"""

from __future__ import annotations

import math

import numpy as np

from .linalg import (
    DomainError,
    dagger,
    hermitian_part,
    herm_exp,
    psd_power,
    random_pure,
    require_density,
    require_same_dim,
    rng_from,
)
from .multistart import (
    MinimaxOptions,
    OptimOptions,
    hermitian_to_params,
    multistart_minimize,
    params_to_hermitian,
    params_to_pure_state,
    pure_state_to_params,
    spawn_rngs,
)
from .reporting import ConstantEstimate
from .weighted import INF, WeightedSpace

#: eigenvalues of sigma below this fraction of the top one span ker(sigma)
KERNEL_REL_TOL = 1e-12
#: mass of rho on ker(sigma) above this triggers +inf
SUPPORT_MASS_TOL = 1e-10


def _support_data(sigma: np.ndarray):
    w, u = np.linalg.eigh(sigma)
    keep = w > KERNEL_REL_TOL * w[-1]
    return w, u, keep


def _kernel_mass(rho: np.ndarray, u: np.ndarray, keep: np.ndarray) -> float:
    if np.all(keep):
        return 0.0
    k = u[:, ~keep]
    return float(np.trace(dagger(k) @ rho @ k).real)


def sandwiched_divergence(rho, sigma, p: float) -> float:
    """D_p(rho||sigma) = log(tr[(sigma^{(1-p)/2p} rho sigma^{(1-p)/2p})^p]) / (p-1).

    Natural logarithm. Returns +inf when p > 1 and supp(rho) is not contained
    in supp(sigma). p = 1 routes to the Kullback-Leibler divergence.
    """
    if p <= 0:
        raise DomainError(f"sandwiched divergence requires p > 0, got {p}")
    rho = require_density(rho)
    sigma = require_density(sigma)
    require_same_dim(rho, sigma)
    if p == 1:
        return kl_divergence(rho, sigma)

    w, u, keep = _support_data(sigma)
    if p > 1 and _kernel_mass(rho, u, keep) > SUPPORT_MASS_TOL:
        return math.inf

    r = (1.0 - p) / (2.0 * p)
    # negative exponents act on supp(sigma) only; the kernel block is irrelevant
    # once the support condition holds
    powered = np.where(keep, w, np.inf if r < 0 else 0.0) ** r
    if r < 0:
        powered = np.where(keep, powered, 0.0)
    s = (u * powered) @ dagger(u)
    a = hermitian_part(s @ rho @ s)
    lam = np.maximum(np.linalg.eigvalsh(a), 0.0)
    tr = float(np.sum(lam**p))
    if tr <= 0.0:
        return math.inf
    return math.log(tr) / (p - 1.0)


def kl_divergence(rho, sigma) -> float:
    """tr[rho (log rho - log sigma)] with 0 log 0 = 0; +inf off-support."""
    rho = require_density(rho)
    sigma = require_density(sigma)
    require_same_dim(rho, sigma)

    w, u, keep = _support_data(sigma)
    if _kernel_mass(rho, u, keep) > SUPPORT_MASS_TOL:
        return math.inf

    r, v = np.linalg.eigh(rho)
    r = np.maximum(r, 0.0)
    ent = float(np.sum(r[r > 0] * np.log(r[r > 0])))
    log_sigma = (u * np.where(keep, np.log(np.where(keep, w, 1.0)), 0.0)) @ dagger(u)
    cross = float(np.trace(rho @ log_sigma).real)
    return ent - cross


def max_divergence(rho, sigma) -> float:
    """D_inf(rho||sigma) = log ||sigma^{-1/2} rho sigma^{-1/2}||_inf; sigma full rank."""
    rho = require_density(rho)
    sigma = require_density(sigma)
    require_same_dim(rho, sigma)
    w = np.linalg.eigvalsh(sigma)
    if w[0] <= KERNEL_REL_TOL * w[-1]:
        raise DomainError("max divergence needs a full-rank second argument")
    s = psd_power(sigma, -0.5)
    x = hermitian_part(s @ rho @ s)
    return math.log(float(np.max(np.linalg.eigvalsh(x))))


def trace_distance(rho, sigma) -> float:
    """||rho - sigma||_1, in [0, 2]."""
    rho = require_density(rho)
    sigma = require_density(sigma)
    require_same_dim(rho, sigma)
    return float(np.sum(np.abs(np.linalg.eigvalsh(rho - sigma))))


# ---------------------------------------------------------------------------
# channel information radius
# ---------------------------------------------------------------------------


def _sup_divergence_over_pure(channel, sigma: np.ndarray, p: float, rngs, maxfev: int,
                              options: OptimOptions) -> tuple[float, np.ndarray]:
    """Multistart lower estimate of sup over pure rho of D_p(T(rho)||sigma)."""
    d = channel.dim

    def objective(v):
        psi = params_to_pure_state(v, d)
        out = channel.apply(np.outer(psi, psi.conj()))
        val = sandwiched_divergence(hermitian_part(out / np.trace(out).real), sigma, p)
        return -val if np.isfinite(val) else -1e6

    inits = [pure_state_to_params(random_pure(d, rng)) for rng in rngs]
    res = multistart_minimize(objective, inits, options, maxfev)
    return -res.value, params_to_pure_state(res.x, d)


def information_radius(channel, p: float, options: MinimaxOptions | None = None) -> ConstantEstimate:
    """Estimate of the p-information radius min_sigma max_rho D_p(T(rho)||sigma), in bits.

    Alternates an inner multistart maximization over pure input states with a
    simplex descent over log-parametrized full-rank reference states, and
    reports the inner maximum at the final reference state. Heuristic on both
    sides: the inner search is restricted to pure states and the outer descent
    is local, so the value is an upper bound of the true minimax only up to
    the quality of the inner sup.
    """
    if p <= 1:
        raise DomainError(f"information radius requires p > 1, got {p}")
    options = options or MinimaxOptions()
    d = channel.dim
    nm_opts = OptimOptions(seed=options.seed, threads=options.threads)
    inner_maxfev = options.maxfev or 200 * 2 * d
    outer_maxfev = options.maxfev or 300 * d * d

    rng_master = rng_from(options.seed)
    sigma = np.eye(d, dtype=complex) / d
    pool: list[np.ndarray] = [np.eye(d, dtype=complex) / d]

    value = math.nan
    witness_rho = None
    for round_idx in range(options.rounds):
        rngs = spawn_rngs(options.seed + 1000 * round_idx + 1, options.inner_restarts)
        value, psi = _sup_divergence_over_pure(channel, sigma, p, rngs, inner_maxfev, nm_opts)
        witness_rho = np.outer(psi, psi.conj())
        pool.append(channel.apply(witness_rho))
        pool.append(witness_rho)

        def outer_objective(v):
            h = params_to_hermitian(v, d)
            cand = herm_exp(h - np.max(np.linalg.eigvalsh(h)))
            cand = hermitian_part(cand / np.trace(cand).real)
            worst = 0.0
            for rho in pool:
                out = channel.apply(rho)
                dv = sandwiched_divergence(hermitian_part(out / np.trace(out).real), cand, p)
                worst = max(worst, dv if np.isfinite(dv) else 1e6)
            return worst

        start = hermitian_to_params(_safe_log(sigma))
        jitter = 0.05 * rng_master.normal(size=start.shape)
        outer = multistart_minimize(outer_objective, [start, start + jitter], nm_opts, outer_maxfev)
        h = params_to_hermitian(outer.x, d)
        sigma_new = herm_exp(h - np.max(np.linalg.eigvalsh(h)))
        sigma = hermitian_part(sigma_new / np.trace(sigma_new).real)

    # final inner max at the settled reference state
    rngs = spawn_rngs(options.seed + 999_983, options.inner_restarts)
    value, psi = _sup_divergence_over_pure(channel, sigma, p, rngs, inner_maxfev, nm_opts)
    witness_rho = np.outer(psi, psi.conj())
    return ConstantEstimate(
        value=value / math.log(2.0),
        method="optimization-upper-bound",
        witness=witness_rho,
        restarts=options.inner_restarts,
        converged=True,
        diagnostics={
            "units": "bits",
            "inner_search": "pure states only",
            "outer_search": "log-parametrized full-rank reference states",
            "reference_state": sigma,
        },
    )


def _safe_log(sigma: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(sigma)
    w = np.maximum(w, 1e-12)
    return hermitian_part((u * np.log(w)) @ dagger(u))


__all__ = [
    "ConstantEstimate",
    "INF",
    "WeightedSpace",
    "information_radius",
    "kl_divergence",
    "max_divergence",
    "sandwiched_divergence",
    "trace_distance",
]
