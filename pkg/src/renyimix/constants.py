"""Convergence constants of primitive semigroups.

The spectral gap comes out of an exact eigenvalue computation on the
weighted symmetrization of the generator. The entropic decay constants
(beta family) and logarithmic Sobolev constants (alpha family) are infima
of functional ratios; they are estimated from above by multistart simplex
searches over strictly positive witnesses X = exp(H)/tr[sigma exp(H)].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Channel, Liouvillian, gamma_superop, hat_generator
from .functionals import _log_sigma, dirichlet_form, kappa, op_valued_entropy
from .linalg import (
    DomainError,
    dagger,
    herm_log,
    hermitian_part,
    operator_norm,
    random_hermitian,
    require_density,
    unvec,
    vec,
)
from .multistart import (
    OptimOptions,
    hermitian_to_params,
    multistart_minimize,
    params_to_hermitian,
    spawn_rngs,
)
from .reporting import ConstantEstimate
from .weighted import WeightedSpace, conjugate_exponent

RATIO_FLOOR = 1e-12  # candidates with denominator below this are discarded
PROJECTOR_REG = 1e-3  # regularization of the min-eigenvector projector start


# ---------------------------------------------------------------------------
# spectral gap
# ---------------------------------------------------------------------------

def weighted_symmetrized_matrix(liouvillian, space: WeightedSpace) -> np.ndarray:
    """Hilbert-Schmidt-Hermitian form of the sigma-symmetrized hat generator.

    Conjugating (Lhat + Lhat†_sigma)/2 by the square root of the weighting
    superoperator yields a plain Hermitian matrix whose kernel is spanned by
    vec(sigma^{1/2}).
    """
    g_half = gamma_superop(space, 0.5)
    g_half_inv = gamma_superop(space, -0.5)
    k = g_half_inv @ liouvillian.matrix @ g_half
    return hermitian_part(0.5 * (k + dagger(k)))


def _hermitian_eigvec(v: np.ndarray) -> np.ndarray:
    m = unvec(v)
    mh = hermitian_part(m)
    if operator_norm(mh) < 1e-8 * max(operator_norm(m), 1e-300):
        mh = hermitian_part(1j * m)
    return mh / operator_norm(mh)


def _gap_data(liouvillian, space: WeightedSpace, index: int = 1):
    b = weighted_symmetrized_matrix(liouvillian, space)
    w, v = np.linalg.eigh(-b)
    g_half_inv = gamma_superop(space, -0.5)
    witness = _hermitian_eigvec(g_half_inv @ v[:, index])
    return float(w[index]), witness, w


def spectral_gap(liouvillian: Liouvillian) -> ConstantEstimate:
    """Smallest nonzero decay rate, as an exact eigenvalue."""
    if not liouvillian.fixed_point_report.primitive:
        raise DomainError("spectral gap needs a primitive generator")
    space = liouvillian.space
    lam, witness, w = _gap_data(liouvillian, space)
    return ConstantEstimate(
        value=lam,
        method="eigenvalue",
        witness=witness,
        diagnostics={"kernel_eigenvalue": float(w[0])},
    )


# ---------------------------------------------------------------------------
# ratio estimators (beta and alpha families)
# ---------------------------------------------------------------------------

def _witness_from_params(v, d: int, sigma: np.ndarray) -> np.ndarray:
    """X = exp(H) / tr[sigma exp(H)]: strictly positive, unit weighted 1-norm."""
    h = params_to_hermitian(v, d)
    w, u = np.linalg.eigh(h)
    w = w - w[-1]  # overflow guard; the normalization cancels the shift
    x = hermitian_part((u * np.exp(w)) @ dagger(u))
    return x / float(np.trace(sigma @ x).real)


def _make_parts_fn(space: WeightedSpace, hat_matrix: np.ndarray, p: float, kind: str,
                   entropy_step: float = 1e-5):
    """Build f(X) -> (E_p(X), denominator(X)) tuned for the optimizer loop."""
    sigma = space.sigma
    half = space.frac_power(0.5)
    log_sig = _log_sigma(space)

    def lhat_apply(x):
        return unvec(hat_matrix @ vec(x))

    if p == 1.0:
        # beta_1 and alpha_1 share the same ratio E_1 / Ent_1
        def parts(x):
            lx = lhat_apply(x)
            gx = hermitian_part(half @ x @ half)
            wg, vg = np.linalg.eigh(gx)
            if wg[0] <= 0:
                return math.inf, math.inf
            rel_log = (vg * np.log(wg)) @ dagger(vg) - log_sig
            energy = -0.5 * float(np.trace(half @ lx @ half @ rel_log).real)
            ent1 = float(np.trace(gx @ rel_log).real)
            return energy, ent1

        return parts

    q = conjugate_exponent(p)
    s2p = space.frac_power(1.0 / (2.0 * p))
    s2q_inv = space.frac_power(-1.0 / (2.0 * q))

    def norms_and_iqp(x):
        a = hermitian_part(s2p @ x @ s2p)
        w, v = np.linalg.eigh(a)
        w = np.maximum(w, 0.0)
        np_p = float(np.sum(w**p))
        iqp = s2q_inv @ ((v * w ** (p / q)) @ dagger(v)) @ s2q_inv
        return np_p, iqp

    if kind == "kappa":
        if p == 2.0:

            def parts(x):
                lx = lhat_apply(x)
                hxh = half @ x @ half
                n2sq = float(np.trace(hxh @ x).real)
                n1 = float(np.trace(sigma @ x).real)
                den = n2sq * (math.log(n2sq) - 2.0 * math.log(n1))
                energy = -float(np.trace(hxh @ lx).real)
                return energy, den

        else:

            def parts(x):
                lx = lhat_apply(x)
                np_p, iqp = norms_and_iqp(x)
                n1 = float(np.trace(sigma @ x).real)
                den = np_p * (math.log(np_p) - p * math.log(n1)) / (p - 1.0)
                energy = -(p / (2.0 * (p - 1.0))) * float(np.trace(half @ iqp @ half @ lx).real)
                return energy, den

        return parts

    if kind == "entropy":
        if p == 2.0:
            quarter = space.frac_power(0.25)

            def parts(x):
                lx = lhat_apply(x)
                m = hermitian_part(quarter @ x @ quarter)
                w, v = np.linalg.eigh(m)
                w = np.maximum(w, 0.0)
                n2sq = float(np.sum(w**2))
                wlogw = np.where(w > 0, w**2 * np.log(np.where(w > 0, w, 1.0)), 0.0)
                msq = (v * w**2) @ dagger(v)
                ent = float(np.sum(wlogw)) - 0.5 * n2sq * math.log(n2sq)
                ent -= 0.5 * float(np.trace(msq @ log_sig).real)
                energy = -float(np.trace(half @ x @ half @ lx).real)
                return energy, ent

        else:

            def parts(x):
                lx = lhat_apply(x)
                np_p, iqp = norms_and_iqp(x)
                energy = -(p / (2.0 * (p - 1.0))) * float(np.trace(half @ iqp @ half @ lx).real)
                sp = op_valued_entropy(space, x, p, step=entropy_step)
                ent = float(np.trace(half @ iqp @ half @ sp).real)
                ent -= np_p * math.log(np_p) / p
                return energy, float(ent)

        return parts

    raise DomainError(f"unknown ratio kind {kind!r}")


def _initial_points(liouvillian, space: WeightedSpace, options: OptimOptions):
    """Start-point families: gap-eigenvector perturbations, regularized
    min-eigenvector projector, and Gaussian noise."""
    d = space.dim
    special = []
    try:
        _, xgap, _ = _gap_data(liouvillian, space)
        for s in (1e-3, 1e-2, 1e-1, 0.3):
            special.append(hermitian_to_params(herm_log(np.eye(d) + s * xgap)))
    except (DomainError, np.linalg.LinAlgError):
        pass
    kmin = space.eigenvectors[:, 0]
    pmin = np.outer(kmin, kmin.conj())
    for c in (0.5, 1.0, 2.0, 4.0):
        special.append(hermitian_to_params(c * herm_log(pmin + PROJECTOR_REG * np.eye(d))))

    n_random = max(options.restarts - len(special), 1)
    rngs = spawn_rngs(options.seed, n_random)
    scales = (0.5, 1.0, 2.0)
    randoms = [
        hermitian_to_params(random_hermitian(d, rng, scale=scales[i % 3]))
        for i, rng in enumerate(rngs)
    ]
    if options.restarts <= len(special):
        return special[: options.restarts]
    return special + randoms[: options.restarts - len(special)]


def _estimate_ratio_constant(liouvillian, p: float, kind: str, options: OptimOptions | None,
                             space: WeightedSpace | None = None) -> ConstantEstimate:
    if p < 1:
        raise DomainError(f"constant estimation requires p >= 1, got {p}")
    options = options or OptimOptions()
    if space is None:
        if not liouvillian.fixed_point_report.primitive:
            raise DomainError("constant estimation needs a primitive generator")
        space = liouvillian.space
    d = space.dim
    sigma = space.sigma
    hat_matrix = hat_generator(liouvillian, space).matrix
    parts = _make_parts_fn(space, hat_matrix, p, kind)

    def objective(v):
        x = _witness_from_params(v, d, sigma)
        try:
            energy, den = parts(x)
        except (DomainError, np.linalg.LinAlgError):
            return math.inf
        if not np.isfinite(energy) or not np.isfinite(den) or den < RATIO_FLOOR:
            return math.inf
        return energy / den

    inits = _initial_points(liouvillian, space, options)
    maxfev = options.maxfev or 500 * d * d
    res = multistart_minimize(objective, inits, options, maxfev)

    witness = _witness_from_params(res.x, d, sigma)
    # recompute the ratio at the witness; the generic entropy path tightens
    # its finite-difference step for this final evaluation
    tight = _make_parts_fn(space, hat_matrix, p, kind, entropy_step=1e-6)
    energy, den = tight(witness)
    value = energy / den if den >= RATIO_FLOOR else res.value
    return ConstantEstimate(
        value=float(value),
        method="optimization-upper-bound",
        witness=witness,
        restarts=len(inits),
        converged=res.converged,
        diagnostics={"kind": kind, "p": p, "witness_parametrization": "exp(H), unit weighted 1-norm"},
    )


def beta_estimate(liouvillian: Liouvillian, p: float, options: OptimOptions | None = None) -> ConstantEstimate:
    """Upper estimate of the optimal exponent for divergence decay, inf E_p/kappa_p."""
    return _estimate_ratio_constant(liouvillian, p, "kappa", options)


def alpha_estimate(liouvillian: Liouvillian, p: float, options: OptimOptions | None = None) -> ConstantEstimate:
    """Upper estimate of the p-logarithmic Sobolev constant, inf E_p/Ent_p."""
    return _estimate_ratio_constant(liouvillian, p, "entropy", options)


# ---------------------------------------------------------------------------
# closed forms for depolarizing semigroups
# ---------------------------------------------------------------------------

def beta2_depolarizing_closed_form(sigma) -> ConstantEstimate:
    """beta_2 of L(rho) = tr(rho) sigma - rho equals (1 - 1/M)/log M, M = ||sigma^{-1}||."""
    sigma = require_density(sigma)
    w, u = np.linalg.eigh(sigma)
    if w[0] <= 1e-10:
        raise DomainError("closed form needs a full-rank target state")
    m = 1.0 / float(w[0])
    psi = u[:, 0]
    proj = np.outer(psi, psi.conj())
    space = WeightedSpace(sigma)
    witness = space.relative_density(proj)
    return ConstantEstimate(
        value=(1.0 - 1.0 / m) / math.log(m),
        method="closed-form",
        witness=witness,
        diagnostics={"inv_min_eig": m},
    )


def beta_p_unital_depolarizing_bounds(d: int, p: float) -> tuple[float, float]:
    """Bracket for beta_p of depolarizing to 1/d, valid for p >= 2."""
    if p < 2:
        raise DomainError(f"the bracket holds for p >= 2, got {p}")
    if d < 2:
        raise DomainError(f"need dimension >= 2, got {d}")
    pref = p / (2.0 * (p - 1.0))
    upper = pref / math.log(d)
    a = d ** ((p - 1.0) / p)
    lower = pref * (a - 1.0) / (a * math.log(d))
    return lower, upper


# ---------------------------------------------------------------------------
# discrete-time constant
# ---------------------------------------------------------------------------

def one_step_contraction_generator(channel: Channel) -> Liouvillian:
    """Generator whose relative-density picture is T* That - id.

    Built so that its quadratic Dirichlet form is ||X||_2^2 - ||That(X)||_2^2,
    the one-step contraction of the channel.
    """
    report = channel.fixed_point_report
    if not report.primitive:
        raise DomainError("the contraction generator needs a primitive channel")
    space = channel.space
    that = channel.hat_matrix(space)
    k = dagger(channel.matrix) @ that - np.eye(that.shape[0])
    g = gamma_superop(space, 1.0)
    g_inv = gamma_superop(space, -1.0)
    lv = Liouvillian(g @ k @ g_inv, tags={"kind": "discrete-step"})

    # internal consistency: E_2(X) must equal ||X||^2 - ||That(X)||^2
    rng = np.random.default_rng(12345)
    for _ in range(3):
        x = np.eye(space.dim) + 0.3 * random_hermitian(space.dim, rng, scale=0.3)
        x = x / float(np.trace(space.sigma @ x).real)
        hat_x = unvec(that @ vec(x))
        direct = space.inner(x, x).real - space.inner(hat_x, hat_x).real
        hat_k = hat_generator(lv, space).matrix
        via_form = -space.inner(x, unvec(hat_k @ vec(x))).real
        if abs(direct - via_form) > 1e-8 * max(1.0, abs(direct)):
            raise DomainError("discrete-step generator failed its Dirichlet-form consistency check")
    return lv


def beta_discrete(channel: Channel, options: OptimOptions | None = None) -> ConstantEstimate:
    """Discrete-time entropic contraction constant of a primitive channel.

    A nonpositive estimate is reported as computed: strict contraction of the
    quadratic divergence is not implied by primitivity.
    """
    report = channel.fixed_point_report
    if not report.primitive:
        raise DomainError("the discrete constant needs a primitive channel")
    generator = one_step_contraction_generator(channel)
    est = _estimate_ratio_constant(generator, 2.0, "kappa", options, space=channel.space)
    est.diagnostics["source"] = "one-step contraction generator of a channel"
    return est


# ---------------------------------------------------------------------------
# divided differences and second-order expansions
# ---------------------------------------------------------------------------

DIVIDED_DIFF_REL_TOL = 1e-8


def divided_difference_f(p: float, x: float, y: float) -> float:
    """First divided difference of t -> t^{p-1}, with a stable diagonal branch."""
    if x <= 0 or y <= 0:
        raise DomainError("divided differences need positive arguments")
    if abs(x - y) <= DIVIDED_DIFF_REL_TOL * max(x, y):
        mid = 0.5 * (x + y)
        return (p - 1.0) * mid ** (p - 2.0)
    return (x ** (p - 1.0) - y ** (p - 1.0)) / (x - y)


def divided_difference_g(p: float, x: float, y: float) -> float:
    """Second-order kernel ((p-1)x^p - p x^{p-1} y + y^p)/(x-y)^2.

    Together with its transpose it reproduces p times the first kernel:
    g_p(x,y) + g_p(y,x) = p f_p(x,y).
    """
    if x <= 0 or y <= 0:
        raise DomainError("divided differences need positive arguments")
    if abs(x - y) <= DIVIDED_DIFF_REL_TOL * max(x, y):
        mid = 0.5 * (x + y)
        return 0.5 * p * (p - 1.0) * mid ** (p - 2.0)
    return ((p - 1.0) * x**p - p * x ** (p - 1.0) * y + y**p) / (x - y) ** 2


def _kernel_matrix(p: float, s: np.ndarray, kernel) -> np.ndarray:
    n = len(s)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = kernel(p, float(s[i]), float(s[j]))
    return out


@dataclass
class TaylorReport:
    """Second-order expansion of the Dirichlet form and of kappa around 1."""

    eigenvalue: float
    eps: np.ndarray
    dirichlet_direct: np.ndarray
    dirichlet_predicted: np.ndarray
    kappa_direct: np.ndarray
    kappa_predicted: np.ndarray
    ratios: np.ndarray
    slope_dirichlet: float
    slope_kappa: float
    coefficients: dict = field(default_factory=dict)


def _loglog_slope(eps: np.ndarray, residual: np.ndarray) -> float:
    mask = residual > 1e-14
    if np.sum(mask) < 2:
        return math.inf  # residuals at float noise: better than any polynomial order
    return float(np.polyfit(np.log(eps[mask]), np.log(residual[mask]), 1)[0])


def taylor_expansion_check(liouvillian: Liouvillian, p: float, eps_grid,
                           eig_index: int = 1) -> TaylorReport:
    """Compare E_p(1 + eps X) and kappa_p(1 + eps X) against their
    second-order coefficients built from divided differences.

    X is the (real-eigenvalue) eigenvector of the hat generator selected by
    `eig_index` (1 = spectral gap); requires a reversible generator so that
    the symmetrized eigenvector is a genuine eigenvector.
    """
    if p <= 1:
        raise DomainError(f"the expansion needs p > 1, got {p}")
    report = liouvillian.fixed_point_report
    if not report.primitive:
        raise DomainError("the expansion needs a primitive generator")
    space = liouvillian.space
    lam, x, _ = _gap_data(liouvillian, space, index=eig_index)
    hat = liouvillian.hat
    residual = float(np.max(np.abs(hat.apply(x) + lam * x)))
    if residual > max(1e-8, 1e-6 * lam):
        raise DomainError(
            "no real-eigenvalue eigenvector available: generator is not reversible "
            f"(eigenvector residual {residual:.2e})"
        )

    w_sigma = space.eigenvalues
    u = space.eigenvectors
    s = w_sigma ** (1.0 / p)
    b = (dagger(u) @ x @ u) * np.outer(w_sigma ** (1.0 / (2.0 * p)), w_sigma ** (1.0 / (2.0 * p)))
    babs = np.abs(b) ** 2
    c_f = float(np.sum(_kernel_matrix(p, s, divided_difference_f) * babs))
    c_g = float(np.sum(_kernel_matrix(p, s, divided_difference_g) * babs))

    eps = np.asarray(sorted(e for e in np.atleast_1d(eps_grid) if 0 < e < 1.0), dtype=float)
    e_direct = np.empty_like(eps)
    k_direct = np.empty_like(eps)
    for i, e in enumerate(eps):
        y = np.eye(space.dim) + e * x
        e_direct[i] = dirichlet_form(liouvillian, y, p)
        k_direct[i] = kappa(space, y, p)
    e_pred = (p / (2.0 * (p - 1.0))) * lam * eps**2 * c_f
    k_pred = eps**2 * c_g / (p - 1.0)

    return TaylorReport(
        eigenvalue=lam,
        eps=eps,
        dirichlet_direct=e_direct,
        dirichlet_predicted=e_pred,
        kappa_direct=k_direct,
        kappa_predicted=k_pred,
        ratios=e_direct / k_direct,
        slope_dirichlet=_loglog_slope(eps, np.abs(e_direct - e_pred)),
        slope_kappa=_loglog_slope(eps, np.abs(k_direct - k_pred)),
        coefficients={"c_f": c_f, "c_g": c_g},
    )
