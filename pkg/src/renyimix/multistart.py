"""Seeded multistart derivative-free search used by the constant estimators.

Every restart owns its own RNG stream (spawned deterministically from the
base seed), restarts may run on a thread pool, and the reduction to the best
restart is a deterministic min, so results do not depend on thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize


@dataclass
class OptimOptions:
    """Knobs for the multistart simplex searches."""

    restarts: int = 64
    seed: int = 0
    threads: int = 1
    maxfev: int | None = None  # None: 500 * (matrix dim)**2, set by the caller
    xatol: float = 1e-6
    fatol: float = 1e-10


@dataclass
class MinimaxOptions:
    """Knobs for the alternating minimax used by the information radius."""

    rounds: int = 10
    inner_restarts: int = 32
    seed: int = 0
    threads: int = 1
    maxfev: int | None = None


@dataclass
class MultistartResult:
    x: np.ndarray
    value: float
    restart: int
    converged: bool
    values: list = field(default_factory=list)


def _run_one(objective, x0, maxfev, xatol, fatol):
    res = minimize(
        objective,
        np.asarray(x0, dtype=float),
        method="Nelder-Mead",
        options={"maxfev": maxfev, "xatol": xatol, "fatol": fatol, "adaptive": True},
    )
    return res.x, float(res.fun), bool(res.success)


def multistart_minimize(objective, inits, options: OptimOptions, maxfev: int) -> MultistartResult:
    """Minimize `objective` from every start in `inits`; deterministic reduction.

    `inits` is a list of parameter vectors. The objective must be pure.
    """
    if not inits:
        raise ValueError("multistart_minimize needs at least one start")

    def task(idx_x0):
        idx, x0 = idx_x0
        x, fun, ok = _run_one(objective, x0, maxfev, options.xatol, options.fatol)
        return idx, x, fun, ok

    jobs = list(enumerate(inits))
    if options.threads > 1:
        with ThreadPoolExecutor(max_workers=options.threads) as pool:
            results = list(pool.map(task, jobs))
    else:
        results = [task(j) for j in jobs]

    results.sort(key=lambda r: r[0])
    values = [r[2] for r in results]
    best = min(results, key=lambda r: (r[2], r[0]))
    return MultistartResult(x=best[1], value=best[2], restart=best[0], converged=best[3], values=values)


def spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """One independent, reproducible stream per restart."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


# ---------------------------------------------------------------------------
# parameter charts
# ---------------------------------------------------------------------------

def hermitian_to_params(h: np.ndarray) -> np.ndarray:
    """Real chart of a d x d Hermitian matrix: diagonal, then re/im upper triangle."""
    d = h.shape[0]
    iu = np.triu_indices(d, k=1)
    return np.concatenate([np.diag(h).real, h[iu].real, h[iu].imag])


def params_to_hermitian(v: np.ndarray, d: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    h = np.zeros((d, d), dtype=complex)
    iu = np.triu_indices(d, k=1)
    m = d * (d - 1) // 2
    h[iu] = v[d : d + m] + 1j * v[d + m : d + 2 * m]
    h = h + h.conj().T
    h[np.diag_indices(d)] = v[:d]
    return h


def n_hermitian_params(d: int) -> int:
    return d * d


def pure_state_to_params(psi: np.ndarray) -> np.ndarray:
    return np.concatenate([psi.real, psi.imag])


def params_to_pure_state(v: np.ndarray, d: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    psi = v[:d] + 1j * v[d:]
    nrm = np.linalg.norm(psi)
    if nrm < 1e-12:
        psi = np.zeros(d, dtype=complex)
        psi[0] = 1.0
        return psi
    return psi / nrm
