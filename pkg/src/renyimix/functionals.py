"""Entropy and energy functionals over a weighted space.

Conventions: for a full-rank reference state sigma and X > 0,

    Var(X)    = ||X||_{2,sigma}^2 - tr[Gamma(X)]^2
    kappa_p(X) = ||X||_p^p log(||X||_p^p / ||X||_1^p) / (p - 1)
    Ent_p(X)  = <I_{q,p}(X), S_p(X)>_sigma - ||X||_p^p log ||X||_p
    E_p(X)    = -p/(2(p-1)) <I_{q,p}(X), Lhat(X)>_sigma

with 1/p + 1/q = 1 and S_p the operator-valued relative entropy, computed by
Richardson-extrapolated central differences of s -> I_{p+s,p}(X).
"""

from __future__ import annotations

import numpy as np

from .linalg import (
    DomainError,
    dagger,
    herm_abs,
    hermitian_part,
    require_density,
    require_hermitian,
    require_positive,
)
from .multistart import (
    OptimOptions,
    hermitian_to_params,
    multistart_minimize,
    params_to_hermitian,
    spawn_rngs,
)
from .reporting import ConstantEstimate, FunctionalValue
from .weighted import WeightedSpace, conjugate_exponent

S_P_STEP = 1e-5  # finite-difference step for the operator-valued entropy
ENTROPY_COND_LIMIT = 1e12


def _log_sigma(space: WeightedSpace) -> np.ndarray:
    u = space.eigenvectors
    return hermitian_part((u * np.log(space.eigenvalues)) @ dagger(u))


def variance(space: WeightedSpace, x) -> float:
    """Var(X) = ||X||_2^2 - tr[Gamma(X)]^2; nonnegative for positive X.

    Accepts any Hermitian X, with the signed tr[Gamma(X)] standing in for
    the 1-norm (they agree when X >= 0).
    """
    x = require_hermitian(x, tol=1e-8)
    n2 = space.inner(x, x).real
    n1 = space.norm1_signed(x)
    return float(n2 - n1 * n1)


def kappa(space: WeightedSpace, x, p: float) -> float:
    """Convergence functional entering the entropic decay constants; >= 0."""
    if p < 1:
        raise DomainError(f"kappa requires p >= 1, got {p}")
    x = require_positive(x)
    if float(np.linalg.norm(x)) < 1e-14:
        raise DomainError("kappa is undefined at X = 0")
    if p == 1:
        return ent_p(space, x, 1.0)
    np_p = space.norm(x, p) ** p
    n1 = space.norm(x, 1.0)
    return float(np_p * (np.log(np_p) - p * np.log(n1)) / (p - 1.0))


def op_valued_entropy(space: WeightedSpace, x, p: float, step: float = S_P_STEP) -> np.ndarray:
    """S_p(X) = -p d/ds I_{p+s,p}(X) at s = 0, by central differences."""
    if p <= 1:
        raise DomainError(f"operator-valued entropy requires p > 1, got {p}")
    x = require_positive(x, definite=True)
    w = np.linalg.eigvalsh(x)
    if w[-1] / w[0] > ENTROPY_COND_LIMIT:
        raise DomainError(f"condition number {w[-1] / w[0]:.2e} too large for S_p")

    def central(h: float) -> np.ndarray:
        plus = space.power_operator(x, p + h, p)
        minus = space.power_operator(x, p - h, p)
        return (plus - minus) / (2.0 * h)

    deriv = (4.0 * central(step / 2.0) - central(step)) / 3.0
    return hermitian_part(-p * deriv)


def ent_p(space: WeightedSpace, x, p: float) -> float:
    """p-relative entropy; the p = 1 branch is the explicit trace formula."""
    if p < 1:
        raise DomainError(f"relative entropy functional requires p >= 1, got {p}")
    if p == 1:
        x = require_positive(x, definite=True)
        gx = space.gamma(x)
        wg, vg = np.linalg.eigh(gx)
        wg = np.maximum(wg, 1e-300)
        log_gx = (vg * np.log(wg)) @ dagger(vg)
        return float(np.trace(gx @ (log_gx - _log_sigma(space))).real)
    q = conjugate_exponent(p)
    iqp = space.power_operator(x, q, p)
    sp = op_valued_entropy(space, x, p)
    norm_p = space.norm(x, p)
    return float(space.inner(iqp, sp).real - norm_p**p * np.log(norm_p))


def ent2_explicit(space: WeightedSpace, x) -> float:
    """Closed form of the 2-relative entropy; tolerates singular positive X."""
    x = require_positive(x)
    m = space.gamma(x, 0.5)
    w, v = np.linalg.eigh(hermitian_part(m))
    w = np.maximum(w, 0.0)
    n2sq = float(np.sum(w**2))
    if n2sq <= 0.0:
        raise DomainError("2-relative entropy is undefined at X = 0")
    wlogw = np.where(w > 0, w**2 * np.log(np.where(w > 0, w, 1.0)), 0.0)
    term1 = float(np.sum(wlogw)) - n2sq * 0.5 * np.log(n2sq)
    msq = (v * w**2) @ dagger(v)
    term2 = 0.5 * float(np.trace(msq @ _log_sigma(space)).real)
    return term1 - term2


def dirichlet_form(liouvillian, x, p: float) -> float:
    """p-Dirichlet form of a primitive generator; nonnegative on positive X."""
    if p < 1:
        raise DomainError(f"Dirichlet form requires p >= 1, got {p}")
    if not liouvillian.fixed_point_report.primitive:
        raise DomainError("Dirichlet form needs a primitive generator")
    space = liouvillian.space
    x = require_positive(x, definite=True)
    lhat_x = liouvillian.hat.apply(x)
    if p == 1:
        gx = space.gamma(x)
        wg, vg = np.linalg.eigh(gx)
        log_gx = (vg * np.log(np.maximum(wg, 1e-300))) @ dagger(vg)
        return float(-0.5 * np.trace(space.gamma(lhat_x) @ (log_gx - _log_sigma(space))).real)
    q = conjugate_exponent(p)
    iqp = x if p == 2 else space.power_operator(x, q, p)
    return float(-(p / (2.0 * (p - 1.0))) * space.inner(iqp, lhat_x).real)


def entropy_production(liouvillian, rho, p: float) -> float:
    """d/dt of the sandwiched divergence to the fixed point at t = 0; <= 0.

    Equals -2 ||X||_p^{-p} E_p(X) for the relative density X.
    """
    if p <= 1:
        raise DomainError(f"entropy production requires p > 1, got {p}")
    if not liouvillian.fixed_point_report.primitive:
        raise DomainError("entropy production needs a primitive generator")
    space = liouvillian.space
    rho = require_density(rho)
    x = space.relative_density(rho)
    x = require_positive(x, definite=True)
    q = conjugate_exponent(p)
    iqp = space.power_operator(x, q, p)
    lhat_x = liouvillian.hat.apply(x)
    norm_p = space.norm(x, p)
    return float((p / (p - 1.0)) * norm_p ** (-p) * space.inner(iqp, lhat_x).real)


def entropy_production_trace_form(liouvillian, rho, p: float) -> float:
    """Same derivative written directly in terms of rho and L(rho)."""
    if p <= 1:
        raise DomainError(f"entropy production requires p > 1, got {p}")
    space = liouvillian.space
    rho = require_density(rho)
    a_exp = (1.0 - p) / (2.0 * p)
    s = space.frac_power(a_exp)
    sandwich = hermitian_part(s @ rho @ s)
    w, v = np.linalg.eigh(sandwich)
    w = np.maximum(w, 0.0)
    powered = (v * w ** (p - 1.0)) @ dagger(v)
    middle = s @ liouvillian.apply(rho) @ s
    numerator = float(np.trace(powered @ middle).real)
    denominator = float(np.sum(w**p))
    return (p / (p - 1.0)) * numerator / denominator


# ---------------------------------------------------------------------------
# p -> q superoperator norms
# ---------------------------------------------------------------------------

def pq_norm(phi, space: WeightedSpace, p: float, q: float,
            options: OptimOptions | None = None) -> ConstantEstimate:
    """Lower estimate of sup ||Phi(Y)||_{q,sigma} / ||Y||_{p,sigma}.

    The search runs over Hermitian Y only; whether general Y can beat the
    Hermitian supremum is recorded in the diagnostics rather than assumed.
    """
    options = options or OptimOptions(restarts=24)
    d = space.dim

    def objective(v):
        y = params_to_hermitian(v, d)
        denom = space.norm(y, p)
        if denom < 1e-12:
            return 0.0
        return -space.norm(phi.apply(y), q) / denom

    inits = [hermitian_to_params(np.eye(d))]
    rngs = spawn_rngs(options.seed, max(options.restarts - 1, 1))
    for i, rng in enumerate(rngs):
        scale = (0.5, 1.0, 2.0)[i % 3]
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        inits.append(hermitian_to_params(scale * hermitian_part(g)))
    maxfev = options.maxfev or 300 * d * d
    res = multistart_minimize(objective, inits, options, maxfev)
    return ConstantEstimate(
        value=-res.value,
        method="optimization-lower-bound",
        witness=params_to_hermitian(res.x, d),
        restarts=len(inits),
        converged=res.converged,
        diagnostics={"search": "hermitian arguments only", "p": p, "q": q},
    )


# ---------------------------------------------------------------------------
# pointwise inequality checks
# ---------------------------------------------------------------------------

class InequalityReport:
    """Outcome of a pointwise inequality check (rhs - lhs is the slack)."""

    def __init__(self, name: str, lhs: float, rhs: float, tol: float = 1e-8):
        self.name = name
        self.lhs = lhs
        self.rhs = rhs
        self.slack = rhs - lhs
        self.holds = self.slack >= -tol

    def __bool__(self) -> bool:
        return self.holds

    def __repr__(self) -> str:
        return f"InequalityReport({self.name}, slack={self.slack:.3e}, holds={self.holds})"


def rothaus_check(space: WeightedSpace, x, tol: float = 1e-8) -> InequalityReport:
    """Ent_2(X) <= Ent_2(|X - E(X)|) + 2 Var(X) with E(X) = tr(sigma X) 1."""
    x = require_positive(x, definite=True)
    mean = space.norm1_signed(x)
    centered = herm_abs(x - mean * np.eye(space.dim))
    lhs = ent2_explicit(space, x)
    rhs = ent2_explicit(space, centered) + 2.0 * variance(space, x)
    return InequalityReport("rothaus", lhs, rhs, tol)


def functional_value(kind: str, space: WeightedSpace, x, p: float = 2.0,
                     liouvillian=None) -> FunctionalValue:
    """Uniform wrapper used by the CLI and the verification suites."""
    diag = {}
    if kind == "var":
        value = variance(space, x)
    elif kind == "kappa":
        value = kappa(space, x, p)
        diag = {"norm_p": space.norm(x, p), "norm_1": space.norm(x, 1.0)}
    elif kind == "ent":
        value = ent_p(space, x, p)
        diag = {"norm_p": space.norm(x, p)}
    elif kind == "dirichlet":
        value = dirichlet_form(liouvillian, x, p)
    else:
        raise DomainError(f"unknown functional kind {kind!r}")
    return FunctionalValue(value=value, functional=kind, p=p, diagnostics=diag)
