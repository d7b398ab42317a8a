"""Mixing-time and strong-converse bound formulas, plus empirical mixing times.

Formula evaluations return a BoundReport carrying the inputs, the units and
a clamp flag. Empirical mixing times are worst-case searches over pure
states combined with bisection in time, which is sound because the searched
distances are pointwise non-increasing along the evolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import alpha_estimate, beta2_depolarizing_closed_form, beta_discrete, beta_estimate, spectral_gap
from .divergence import sandwiched_divergence, trace_distance
from .dynamics import Channel, Liouvillian, is_reversible
from .functionals import variance
from .linalg import DomainError, hermitian_part, random_density, require_density, rng_from, unvec, vec
from .multistart import (
    OptimOptions,
    multistart_minimize,
    params_to_pure_state,
    pure_state_to_params,
    spawn_rngs,
)
from .reporting import BoundReport
from .weighted import WeightedSpace

MIXING_HORIZON_GAPS = 50.0  # bisection horizon in units of 1/gap
MIXING_TIME_REL_TOL = 1e-3  # bisection tolerance in units of 1/gap


def _log_inv_min_eig(sigma) -> float:
    """log ||sigma^{-1}||_inf for a full-rank state."""
    if isinstance(sigma, WeightedSpace):
        w = sigma.eigenvalues
    else:
        w = np.linalg.eigvalsh(require_density(sigma))
    if w[0] <= 0:
        raise DomainError("bound formulas need a full-rank reference state")
    return float(-math.log(w[0]))


# ---------------------------------------------------------------------------
# closed-form mixing bounds
# ---------------------------------------------------------------------------

def t1_bound_from_beta(beta_p: float, sigma, eps: float) -> BoundReport:
    """t1(eps) <= log(2 log||sigma^{-1}|| / eps^2) / (2 beta_p)."""
    if beta_p <= 0:
        raise DomainError(f"the bound needs a positive decay constant, got {beta_p}")
    if not 0 < eps < 2:
        raise DomainError(f"the trace-norm threshold must lie in (0, 2), got {eps}")
    log_m = _log_inv_min_eig(sigma)
    arg = 2.0 * log_m / eps**2
    clamped = arg <= 1.0
    value = 0.0 if clamped else math.log(arg) / (2.0 * beta_p)
    return BoundReport(
        value=value,
        units="time",
        formula="t1-from-entropic-decay",
        inputs={"beta_p": beta_p, "eps": eps, "log_inv_min_eig": log_m},
        clamped=clamped,
    )


def t1_bound_from_alpha(alpha_p: float, p: float, sigma, eps: float) -> BoundReport:
    """t1(eps) <= p log(2 log||sigma^{-1}|| / eps^2) / (2 alpha_p)."""
    if alpha_p <= 0:
        raise DomainError(f"the bound needs a positive Sobolev constant, got {alpha_p}")
    if not 0 < eps < 2:
        raise DomainError(f"the trace-norm threshold must lie in (0, 2), got {eps}")
    log_m = _log_inv_min_eig(sigma)
    arg = 2.0 * log_m / eps**2
    clamped = arg <= 1.0
    value = 0.0 if clamped else p * math.log(arg) / (2.0 * alpha_p)
    return BoundReport(
        value=value,
        units="time",
        formula="t1-from-log-sobolev",
        inputs={"alpha_p": alpha_p, "p": p, "eps": eps, "log_inv_min_eig": log_m},
        clamped=clamped,
    )


def t2_bound_from_beta2(beta2: float, sigma, eps: float) -> BoundReport:
    """t2(eps) <= log(log||sigma^{-1}|| / log(1+eps)) / (2 beta_2)."""
    if beta2 <= 0:
        raise DomainError(f"the bound needs a positive decay constant, got {beta2}")
    if eps <= 0:
        raise DomainError(f"the variance threshold must be positive, got {eps}")
    log_m = _log_inv_min_eig(sigma)
    denom = math.log1p(eps)
    clamped = denom >= log_m
    value = 0.0 if clamped else math.log(log_m / denom) / (2.0 * beta2)
    return BoundReport(
        value=value,
        units="time",
        formula="t2-from-entropic-decay",
        inputs={"beta2": beta2, "eps": eps, "log_inv_min_eig": log_m},
        clamped=clamped,
    )


# ---------------------------------------------------------------------------
# empirical mixing times
# ---------------------------------------------------------------------------

def _worst_over_pure(metric, d: int, options: OptimOptions, seed_salt: int,
                     warm_starts=()) -> tuple[float, np.ndarray]:
    """Multistart maximization of `metric(psi)` over pure states."""

    def objective(v):
        return -metric(params_to_pure_state(v, d))

    rngs = spawn_rngs(options.seed + seed_salt, options.restarts)
    inits = [pure_state_to_params(w) for w in warm_starts]
    for rng in rngs[: max(options.restarts - len(inits), 1)]:
        psi = rng.normal(size=d) + 1j * rng.normal(size=d)
        inits.append(pure_state_to_params(psi / np.linalg.norm(psi)))
    maxfev = options.maxfev or 150 * 2 * d
    res = multistart_minimize(objective, inits, options, maxfev)
    return -res.value, params_to_pure_state(res.x, d)


def _empirical_mixing(liouvillian: Liouvillian, eps: float, distance_at,
                      formula: str, options: OptimOptions) -> BoundReport:
    report = liouvillian.fixed_point_report
    if not report.primitive:
        raise DomainError("empirical mixing times need a primitive generator")
    lam = spectral_gap(liouvillian).value
    horizon = MIXING_HORIZON_GAPS / lam
    tol = MIXING_TIME_REL_TOL / lam
    d = liouvillian.dim

    warm: list[np.ndarray] = []

    def worst(t: float, salt: int) -> float:
        value, psi = _worst_over_pure(lambda v: distance_at(v, t), d, options, salt, tuple(warm))
        del warm[:]
        warm.append(psi)
        return value

    inputs = {"eps": eps, "gap": lam}
    w0 = worst(0.0, 0)
    if w0 <= eps:
        return BoundReport(0.0, "time", formula, {**inputs, "distance_at_0": w0},
                           note="threshold already met at t = 0")
    if worst(horizon, 1) > eps:
        return BoundReport(math.inf, "time", formula, {**inputs, "horizon": horizon},
                           note="not mixed within horizon")
    lo, hi = 0.0, horizon
    salt = 2
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if worst(mid, salt) <= eps:
            hi = mid
        else:
            lo = mid
        salt += 1
    return BoundReport(hi, "time", formula, inputs)


def empirical_t1(liouvillian: Liouvillian, eps: float,
                 options: OptimOptions | None = None) -> BoundReport:
    """Worst-case trace-distance mixing time, by bisection over pure inputs."""
    options = options or OptimOptions()
    sigma = liouvillian.space.sigma

    def distance_at(psi: np.ndarray, t: float) -> float:
        rho_t = unvec(liouvillian.propagator(t) @ vec(np.outer(psi, psi.conj())))
        return float(np.sum(np.abs(np.linalg.eigvalsh(hermitian_part(rho_t) - sigma))))

    return _empirical_mixing(liouvillian, eps, distance_at, "empirical-t1", options)


def empirical_t2(liouvillian: Liouvillian, eps: float,
                 options: OptimOptions | None = None) -> BoundReport:
    """Worst-case variance mixing time over pure-state relative densities.

    The searched class (relative densities of pure states) attains the
    worst case among all unit-weighted-1-norm densities at t = 0; along the
    flow the estimate is a lower bound on the worst case, which is recorded
    rather than assumed away.
    """
    options = options or OptimOptions()
    space = liouvillian.space
    hat = liouvillian.hat
    sigma_inv_half = space.frac_power(-0.5)
    half = space.frac_power(0.5)
    sigma = space.sigma

    def distance_at(psi: np.ndarray, t: float) -> float:
        x = sigma_inv_half @ np.outer(psi, psi.conj()) @ sigma_inv_half
        x_t = unvec(hat.propagator(t) @ vec(x))
        n2sq = float(np.trace(half @ x_t @ half @ x_t).real)
        n1 = float(np.trace(sigma @ x_t).real)
        return n2sq - n1 * n1

    report = _empirical_mixing(liouvillian, eps, distance_at, "empirical-t2", options)
    report.note = (report.note + "; " if report.note else "") + "worst case searched over pure-state relative densities"
    return report


# ---------------------------------------------------------------------------
# inequality reports linking the constants and the mixing times
# ---------------------------------------------------------------------------

@dataclass
class CheckReport:
    """Outcome of an inequality evaluation with the quantities that entered it."""

    name: str
    holds: bool
    slack: float
    values: dict = field(default_factory=dict)
    heuristic: bool = False
    note: str = ""


def uncertainty_check(liouvillian: Liouvillian, options: OptimOptions | None = None,
                      t2_report: BoundReport | None = None) -> CheckReport:
    """Product of the Sobolev estimate and the variance mixing time is >= 1/2.

    Only the left inequality is asserted: the constants are optimizer upper
    bounds, so their product with the mixing time can only overshoot the true
    product. Requires detailed balance.
    """
    options = options or OptimOptions()
    if not is_reversible(liouvillian, liouvillian.space):
        raise DomainError("the uncertainty check needs a reversible generator")
    alpha = alpha_estimate(liouvillian, 2.0, options)
    beta = beta_estimate(liouvillian, 2.0, options)
    t2 = t2_report or empirical_t2(liouvillian, math.exp(-1.0), options)
    prod_alpha = alpha.value * t2.value
    prod_beta = 2.0 * beta.value * t2.value
    return CheckReport(
        name="uncertainty-product",
        holds=prod_alpha >= 0.5 - 1e-9,
        slack=prod_alpha - 0.5,
        values={
            "alpha2_estimate": alpha.value,
            "beta2_estimate": beta.value,
            "t2_empirical": t2.value,
            "alpha_product": prod_alpha,
            "beta_product": prod_beta,
        },
        heuristic=True,
        note="estimates are upper bounds, so only the lower inequality is assertable",
    )


def alpha2_beta2_sandwich_check(liouvillian: Liouvillian,
                                options: OptimOptions | None = None) -> CheckReport:
    """2 beta_2 >= alpha_2 >= beta_2 log(log||sigma^{-1}|| / log(1+1/e))."""
    options = options or OptimOptions()
    if not is_reversible(liouvillian, liouvillian.space):
        raise DomainError("the sandwich needs a reversible generator")
    space = liouvillian.space
    log_m = _log_inv_min_eig(space)

    heuristic = True
    if liouvillian.tags.get("kind") == "depolarizing":
        beta2 = beta2_depolarizing_closed_form(space.sigma).value
        if space.dim == 2 and abs(space.eigenvalues[0] - 0.5) < 1e-12:
            alpha2 = 1.0  # known exactly for the unital qubit case
            heuristic = False
        else:
            alpha2 = alpha_estimate(liouvillian, 2.0, options).value
    else:
        beta2 = beta_estimate(liouvillian, 2.0, options).value
        alpha2 = alpha_estimate(liouvillian, 2.0, options).value

    factor = math.log(log_m / math.log1p(math.exp(-1.0)))
    factor = max(factor, 0.0)  # degenerate reference states: the right bound is vacuous
    left_slack = 2.0 * beta2 - alpha2
    right_slack = alpha2 - beta2 * factor
    tol = 2e-2 if heuristic else 1e-9
    return CheckReport(
        name="alpha2-beta2-sandwich",
        holds=left_slack >= -tol and right_slack >= -tol,
        slack=min(left_slack, right_slack),
        values={
            "alpha2": alpha2,
            "beta2": beta2,
            "left_slack": left_slack,
            "right_slack": right_slack,
            "factor": factor,
        },
        heuristic=heuristic,
    )


# ---------------------------------------------------------------------------
# discrete time
# ---------------------------------------------------------------------------

def discrete_contraction_check(channel: Channel, n_states: int = 50, seed: int = 0,
                               certified_factor: float | None = None,
                               options: OptimOptions | None = None) -> CheckReport:
    """One-step contraction of the quadratic divergence under a channel.

    Without a certified contraction factor the report only records the worst
    observed ratio against the (upper-bound) estimate; the inequality is
    asserted only against a certified factor.
    """
    report = channel.fixed_point_report
    if not report.primitive:
        raise DomainError("the contraction check needs a primitive channel")
    sigma = channel.space.sigma
    estimate = beta_discrete(channel, options or OptimOptions(restarts=16))
    rng = rng_from(seed)
    worst_ratio = 0.0
    for _ in range(n_states):
        rho = random_density(channel.dim, rng)
        base = sandwiched_divergence(rho, sigma, 2.0)
        if base < 1e-12:
            continue
        out = channel.apply(rho)
        stepped = sandwiched_divergence(hermitian_part(out / np.trace(out).real), sigma, 2.0)
        worst_ratio = max(worst_ratio, stepped / base)
    values = {
        "worst_ratio": worst_ratio,
        "factor_from_estimate": 1.0 - estimate.value,
        "beta_d_estimate": estimate.value,
        "states": n_states,
    }
    if certified_factor is None:
        return CheckReport(
            name="discrete-contraction",
            holds=True,
            slack=(1.0 - estimate.value) - worst_ratio,
            values=values,
            heuristic=True,
            note="no certified contraction factor supplied; ratios reported only",
        )
    values["certified_factor"] = certified_factor
    return CheckReport(
        name="discrete-contraction",
        holds=worst_ratio <= certified_factor + 1e-9,
        slack=certified_factor - worst_ratio,
        values=values,
    )


def discrete_t1_bound(beta_d: float, sigma, eps: float, ceil_steps: bool = False) -> BoundReport:
    """t1(eps) <= -log(2 log||sigma^{-1}|| / eps^2) / log(1 - beta_d), in steps."""
    if not 0.0 < beta_d < 1.0:
        raise DomainError(f"the discrete bound needs beta_d in (0, 1), got {beta_d}")
    if not 0 < eps < 2:
        raise DomainError(f"the trace-norm threshold must lie in (0, 2), got {eps}")
    log_m = _log_inv_min_eig(sigma)
    arg = 2.0 * log_m / eps**2
    clamped = arg <= 1.0
    value = 0.0 if clamped else -math.log(arg) / math.log(1.0 - beta_d)
    if ceil_steps:
        value = float(math.ceil(value))
    return BoundReport(
        value=value,
        units="time",
        formula="discrete-t1-from-contraction",
        inputs={"beta_d": beta_d, "eps": eps, "log_inv_min_eig": log_m, "ceil_steps": ceil_steps},
        clamped=clamped,
    )


def random_pauli_t1_bounds(n: int, eps: float) -> dict:
    """Both published forms of the random-Pauli mixing bound.

    The generic route uses log(2 log||sigma^{-1}||/eps^2) = log(2 n log2 / eps^2);
    the specialized statement uses log(n/eps^2). They differ by a constant
    inside the logarithm; both are reported.
    """
    if n < 1:
        raise DomainError("need at least one qubit")
    beta_d = 1.0 / (2.0 * n * n)
    rate = -math.log(1.0 - beta_d)
    generic = math.log(2.0 * n * math.log(2.0) / eps**2) / rate
    specialized = math.log(n / eps**2) / rate
    return {
        "beta_d_lower": beta_d,
        "steps_generic": generic,
        "steps_specialized": specialized,
    }


def tensorized_contraction_factor(q: float, probabilities) -> float:
    """Contraction factor 1 - q p_min^2 for a random local channel."""
    if q <= 0:
        raise DomainError(f"the tensorized factor needs q > 0, got {q}")
    p = np.asarray(probabilities, dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
        raise DomainError("probabilities must be nonnegative and sum to one")
    return 1.0 - q * float(np.min(p)) ** 2


# ---------------------------------------------------------------------------
# strong converse
# ---------------------------------------------------------------------------

def succ_prob_bound(rate_bits: float, n: int, p: float, c: float, t: float, sigma) -> BoundReport:
    """Success-probability envelope 2^{-n (p-1)/p (R - e^{-2ct} log2||sigma^{-1}||)}."""
    if c <= 0:
        raise DomainError(f"the envelope needs a positive decay constant, got {c}")
    if t < 0:
        raise DomainError(f"the envelope needs t >= 0, got {t}")
    if p <= 1:
        raise DomainError(f"the envelope needs p > 1, got {p}")
    log2_m = _log_inv_min_eig(sigma) / math.log(2.0)
    exponent = -n * ((p - 1.0) / p) * (rate_bits - math.exp(-2.0 * c * t) * log2_m)
    raw = 2.0**exponent
    clamped = raw > 1.0
    return BoundReport(
        value=min(raw, 1.0),
        units="probability",
        formula="success-probability-envelope",
        inputs={"rate_bits": rate_bits, "n": n, "p": p, "c": c, "t": t, "log2_inv_min_eig": log2_m},
        clamped=clamped,
    )


def k_constant(lam: float, sigma, d: int | None = None) -> float:
    """Universal tensor-stable decay constant from the spectral gap.

    General case lam / (2 (log(d^4 ||sigma^{-1}||) + 11)); sharper forms for
    the maximally mixed state, and lam/2 for the unital qubit.
    """
    if lam <= 0:
        raise DomainError(f"the decay constant needs a positive gap, got {lam}")
    sigma = require_density(sigma)
    d = d or sigma.shape[0]
    unital = bool(np.max(np.abs(sigma - np.eye(d) / d)) <= 1e-12)
    if unital and d == 2:
        return lam / 2.0
    if unital:
        corr = 1.0 - 2.0 / d**2
        return lam * corr / (2.0 * (math.log(3.0) * math.log(d**2 - 1.0) + 2.0 * corr))
    m = math.exp(_log_inv_min_eig(sigma))
    return lam / (2.0 * (math.log(d**4 * m) + 11.0))


def capacity_decay_curve(liouvillian: Liouvillian, p: float, t_grid, r_grid, n: int) -> list[dict]:
    """Tabulated success-probability envelope over a (t, R) grid.

    The decay constant is certified: the closed form for depolarizing
    generators, the gap-based universal constant otherwise.
    """
    report = liouvillian.fixed_point_report
    if not report.primitive:
        raise DomainError("the capacity curve needs a primitive generator")
    sigma = liouvillian.space.sigma
    if liouvillian.tags.get("kind") == "depolarizing":
        c = beta2_depolarizing_closed_form(sigma).value
        c_source = "closed-form"
    else:
        c = k_constant(spectral_gap(liouvillian).value, sigma)
        c_source = "gap-universal"
    rows = []
    for t in t_grid:
        for r in r_grid:
            bound = succ_prob_bound(r, n, p, c, t, sigma)
            rows.append({
                "t": float(t),
                "R": float(r),
                "bound": bound.value,
                "clamped": bound.clamped,
                "c": c,
                "c_source": c_source,
            })
    return rows
