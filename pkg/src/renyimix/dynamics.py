"""Liouvillians, channels and their evolution.

Superoperators act on column-vectorized matrices: with vec stacking columns,
the map X -> A X B has matrix B^T (x) A, and a Kraus set {K_i} gives
sum_i conj(K_i) (x) K_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .linalg import (
    DomainError,
    as_matrix,
    clamp_psd,
    dagger,
    haar_isometry,
    hermitian_part,
    random_hermitian,
    require_density,
    require_hermitian,
    rng_from,
    unvec,
    vec,
)
from .weighted import WeightedSpace

ZERO_EIG_REL_TOL = 1e-9       # |eig| below this times the superoperator norm is "zero"
PERIPHERAL_DISC_TOL = 1e-9    # discrete channels: |eig| >= 1 - tol is peripheral
FIXED_POINT_TOL = 1e-8
REVERSIBILITY_TOL = 1e-8
CHOI_CCP_TOL = 1e-7           # min Choi eigenvalue of e^{hL} at h = CCP_STEP
CCP_STEP = 1e-3
VALIDATE_MAX_DIM = 8          # eager invariant checks up to this matrix dimension

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass
class FixedPointReport:
    sigma: np.ndarray | None
    kernel_dim: int
    peripheral_count: int
    primitive: bool
    min_eig_sigma: float


class Superoperator:
    """A linear map on d x d matrices stored as a d^2 x d^2 matrix."""

    def __init__(self, matrix):
        matrix = np.ascontiguousarray(np.asarray(matrix, dtype=complex))
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DomainError(f"superoperator matrix must be square, got {matrix.shape}")
        d = round(matrix.shape[0] ** 0.5)
        if d * d != matrix.shape[0]:
            raise DomainError(f"superoperator size {matrix.shape[0]} is not a perfect square")
        if not np.all(np.isfinite(matrix)):
            raise DomainError("superoperator has non-finite entries")
        self.matrix = matrix
        self.dim = d
        self._spectral = None

    def apply(self, x) -> np.ndarray:
        x = as_matrix(x)
        if x.shape[0] != self.dim:
            raise DomainError(f"expected a {self.dim}x{self.dim} matrix, got {x.shape}")
        return unvec(self.matrix @ vec(x))

    def compose(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.matrix @ other.matrix)

    def adjoint(self) -> "Superoperator":
        """Hilbert-Schmidt adjoint."""
        return Superoperator(dagger(self.matrix))

    def choi(self) -> np.ndarray:
        """Choi matrix sum_ij E_ij (x) S(E_ij), via index reshuffling."""
        d = self.dim
        return np.ascontiguousarray(
            self.matrix.reshape(d, d, d, d).transpose(3, 1, 2, 0).reshape(d * d, d * d)
        )

    def is_completely_positive(self, tol: float = 1e-9) -> bool:
        return float(np.linalg.eigvalsh(hermitian_part(self.choi()))[0]) >= -tol

    def is_trace_preserving(self, tol: float = 1e-9) -> bool:
        ident = vec(np.eye(self.dim))
        return float(np.max(np.abs(dagger(self.matrix) @ ident - ident))) <= tol

    def is_trace_annihilating(self, tol: float = 1e-9) -> bool:
        ident = vec(np.eye(self.dim))
        scale = max(1.0, float(np.linalg.norm(self.matrix, np.inf)))
        return float(np.max(np.abs(dagger(self.matrix) @ ident))) <= tol * scale

    def is_unital(self, tol: float = 1e-9) -> bool:
        ident = vec(np.eye(self.dim))
        return float(np.max(np.abs(self.matrix @ ident - ident))) <= tol

    def _spectral_data(self):
        # eigendecomposition route for exp(tM); fall back to Pade when the
        # eigenvector matrix is ill-conditioned
        if self._spectral is None:
            w, v = np.linalg.eig(self.matrix)
            cond = np.linalg.cond(v)
            if np.isfinite(cond) and cond < 1e10:
                self._spectral = (w, v, np.linalg.inv(v), "eigendecomposition")
            else:
                self._spectral = (None, None, None, "pade")
        return self._spectral

    def propagator(self, t: float) -> np.ndarray:
        """Matrix of exp(t * self) on the vectorization basis."""
        w, v, vinv, method = self._spectral_data()
        if method == "eigendecomposition":
            return (v * np.exp(t * w)) @ vinv
        return scipy.linalg.expm(t * self.matrix)

    @property
    def expm_method(self) -> str:
        return self._spectral_data()[3]


def identity_superop(d: int) -> Superoperator:
    return Superoperator(np.eye(d * d, dtype=complex))


def kraus_to_matrix(kraus_ops) -> np.ndarray:
    ops = [as_matrix(k) for k in kraus_ops]
    d = ops[0].shape[0]
    m = np.zeros((d * d, d * d), dtype=complex)
    for k in ops:
        m += np.kron(k.conj(), k)
    return m


def gamma_superop(space: WeightedSpace, r: float = 1.0) -> np.ndarray:
    """Matrix of X -> sigma^{r/2} X sigma^{r/2} on the vectorization basis."""
    a = space.frac_power(r / 2.0)
    return np.kron(a.T, a)


# ---------------------------------------------------------------------------
# Liouvillians
# ---------------------------------------------------------------------------

class Liouvillian(Superoperator):
    """Generator of a quantum dynamical semigroup e^{tL}.

    Invariants (checked eagerly up to dimension VALIDATE_MAX_DIM): the map
    annihilates traces, and e^{hL} is completely positive for small h > 0.
    """

    def __init__(self, matrix, gkls=None, tags=None, validate=None):
        super().__init__(matrix)
        self.gkls = gkls
        self.tags = dict(tags or {})
        self._fixed_point = None
        self._space = None
        self._hat = None
        if validate is None:
            validate = self.dim <= VALIDATE_MAX_DIM
        if validate:
            self.validate()

    def validate(self) -> None:
        if not self.is_trace_annihilating():
            raise DomainError("generator does not annihilate traces")
        step = Superoperator(self.propagator(CCP_STEP))
        if not step.is_completely_positive(tol=CHOI_CCP_TOL):
            raise DomainError("e^{hL} is not completely positive: not a valid generator")

    @property
    def fixed_point_report(self) -> FixedPointReport:
        if self._fixed_point is None:
            self._fixed_point = fixed_point(self)
        return self._fixed_point

    @property
    def space(self) -> WeightedSpace:
        if self._space is None:
            report = self.fixed_point_report
            if report.sigma is None or report.min_eig_sigma <= 0:
                raise DomainError("no full-rank fixed point available")
            self._space = WeightedSpace(report.sigma)
        return self._space

    @property
    def hat(self) -> Superoperator:
        """Generator of the relative-density evolution, Gamma^{-1} L Gamma."""
        if self._hat is None:
            self._hat = hat_generator(self, self.space)
        return self._hat


def _align_phase(m: np.ndarray) -> np.ndarray:
    tr = np.trace(m)
    if abs(tr) > 1e-12:
        m = m * (tr.conjugate() / abs(tr))
    return m


def _kernel_sigma(matrix: np.ndarray):
    """Null-space analysis of a superoperator matrix via SVD."""
    svals = np.linalg.svd(matrix, compute_uv=False)
    scale = max(1.0, float(svals[0]))
    kernel_dim = int(np.sum(svals <= ZERO_EIG_REL_TOL * scale))
    if kernel_dim == 0:
        return 0, None, 0.0, scale
    _, _, vh = np.linalg.svd(matrix)
    candidate = unvec(vh[-1].conj())
    candidate = hermitian_part(_align_phase(candidate))
    tr = np.trace(candidate).real
    if abs(tr) < 1e-10:
        return kernel_dim, None, 0.0, scale
    sigma = candidate / tr
    min_eig = float(np.linalg.eigvalsh(sigma)[0])
    return kernel_dim, sigma, min_eig, scale


def fixed_point(op: Superoperator) -> FixedPointReport:
    """Fixed-point and primitivity analysis.

    Continuous generators: the kernel of L; primitive iff the kernel is
    one-dimensional, there is no nonzero purely imaginary eigenvalue, and the
    fixed point is positive definite. Channels: eigenvalue-1 subspace, with
    the peripheral spectrum read off at |eig| >= 1 - tol.
    """
    if isinstance(op, Channel):
        shifted = op.matrix - np.eye(op.matrix.shape[0])
        kernel_dim, sigma, min_eig, scale = _kernel_sigma(shifted)
        eigs = np.linalg.eigvals(op.matrix)
        peripheral = np.abs(eigs) >= 1.0 - PERIPHERAL_DISC_TOL
        stray = peripheral & (np.abs(eigs - 1.0) > PERIPHERAL_DISC_TOL * scale)
    else:
        kernel_dim, sigma, min_eig, scale = _kernel_sigma(op.matrix)
        eigs = np.linalg.eigvals(op.matrix)
        tol = ZERO_EIG_REL_TOL * scale
        peripheral = np.abs(eigs.real) <= tol
        stray = peripheral & (np.abs(eigs.imag) > tol)
    if kernel_dim == 0:
        raise DomainError("invalid generator: numerically empty fixed-point space")
    primitive = kernel_dim == 1 and not bool(np.any(stray)) and min_eig > 0.0
    return FixedPointReport(
        sigma=sigma,
        kernel_dim=kernel_dim,
        peripheral_count=int(np.sum(peripheral)),
        primitive=primitive,
        min_eig_sigma=min_eig,
    )


def build_gkls(hamiltonian, lindblad_ops) -> Liouvillian:
    """L(rho) = -i[H, rho] + sum_k (L_k rho L_k† - (1/2){L_k† L_k, rho})."""
    h = require_hermitian(hamiltonian, tol=1e-9)
    d = h.shape[0]
    ident = np.eye(d, dtype=complex)
    m = -1j * (np.kron(ident, h) - np.kron(h.T, ident))
    ops = []
    for op in lindblad_ops:
        op = as_matrix(op)
        if op.shape[0] != d:
            raise DomainError("Lindblad operator dimension mismatch")
        ops.append(op)
        anti = dagger(op) @ op
        m += np.kron(op.conj(), op)
        m -= 0.5 * (np.kron(ident, anti) + np.kron(anti.T, ident))
    return Liouvillian(m, gkls=(h, ops), tags={"kind": "gkls"})


def depolarizing_liouvillian(sigma) -> Liouvillian:
    """L(rho) = tr(rho) sigma - rho, for a full-rank target state."""
    sigma = require_density(sigma)
    d = sigma.shape[0]
    if np.linalg.eigvalsh(sigma)[0] <= 1e-10:
        raise DomainError("depolarizing target must be full rank")
    m = np.outer(vec(sigma), vec(np.eye(d)).conj()) - np.eye(d * d)
    return Liouvillian(m, tags={"kind": "depolarizing", "sigma": sigma})


def hat_generator(liouvillian: Superoperator, sigma) -> Superoperator:
    """Gamma^{-1} o L o Gamma for a full-rank fixed point sigma of L."""
    space = sigma if isinstance(sigma, WeightedSpace) else WeightedSpace(sigma)
    residual = float(np.max(np.abs(liouvillian.apply(space.sigma))))
    if residual > FIXED_POINT_TOL:
        raise DomainError(f"sigma is not a fixed point (||L(sigma)|| = {residual:.3e})")
    g = gamma_superop(space, 1.0)
    ginv = gamma_superop(space, -1.0)
    return Superoperator(ginv @ liouvillian.matrix @ g)


def is_reversible(liouvillian: Superoperator, sigma) -> bool:
    """Detailed balance: Gamma^{-1} L Gamma equals the Hilbert-Schmidt adjoint L*."""
    space = sigma if isinstance(sigma, WeightedSpace) else WeightedSpace(sigma)
    hat = hat_generator(liouvillian, space)
    return float(np.max(np.abs(hat.matrix - dagger(liouvillian.matrix)))) <= REVERSIBILITY_TOL


def evolve(liouvillian: Liouvillian, rho, t: float) -> np.ndarray:
    """e^{tL}(rho); trace renormalized after eigenvalue clamping."""
    if t < 0:
        raise DomainError(f"evolution time must be nonnegative, got {t}")
    rho = require_density(rho)
    out = unvec(liouvillian.propagator(t) @ vec(rho))
    out = clamp_psd(hermitian_part(out), warn=False)
    return out / np.trace(out).real


def reversibilize(liouvillian: Liouvillian) -> Liouvillian:
    """Additive symmetrization (L + Gamma L* Gamma^{-1}) / 2.

    Keeps the fixed point and the quadratic Dirichlet form; the result
    satisfies detailed balance.
    """
    report = liouvillian.fixed_point_report
    if not report.primitive:
        raise DomainError("reversibilization needs a primitive generator")
    space = liouvillian.space
    g = gamma_superop(space, 1.0)
    ginv = gamma_superop(space, -1.0)
    m = 0.5 * (liouvillian.matrix + g @ dagger(liouvillian.matrix) @ ginv)
    return Liouvillian(m, tags={"kind": "reversibilized"})


# ---------------------------------------------------------------------------
# channels
# ---------------------------------------------------------------------------

class Channel(Superoperator):
    """Trace-preserving completely positive map."""

    def __init__(self, matrix, kraus=None, tags=None, validate=None):
        super().__init__(matrix)
        self.kraus = list(kraus) if kraus is not None else None
        self.tags = dict(tags or {})
        self._fixed_point = None
        self._space = None
        if validate is None:
            validate = self.dim <= VALIDATE_MAX_DIM
        if validate:
            self.validate()

    def validate(self) -> None:
        if not self.is_completely_positive(tol=1e-9):
            raise DomainError("Choi matrix is not positive semidefinite")
        if not self.is_trace_preserving(tol=1e-9):
            raise DomainError("map is not trace preserving")

    @classmethod
    def from_kraus(cls, kraus_ops, tags=None) -> "Channel":
        ops = [as_matrix(k) for k in kraus_ops]
        return cls(kraus_to_matrix(ops), kraus=ops, tags=tags)

    @property
    def fixed_point_report(self) -> FixedPointReport:
        if self._fixed_point is None:
            self._fixed_point = fixed_point(self)
        return self._fixed_point

    @property
    def space(self) -> WeightedSpace:
        if self._space is None:
            report = self.fixed_point_report
            if report.sigma is None or report.min_eig_sigma <= 0:
                raise DomainError("no full-rank fixed point available")
            self._space = WeightedSpace(report.sigma)
        return self._space

    def hat_matrix(self, space: WeightedSpace | None = None) -> np.ndarray:
        """Matrix of Gamma^{-1} o T o Gamma."""
        space = space or self.space
        return gamma_superop(space, -1.0) @ self.matrix @ gamma_superop(space, 1.0)


def completely_depolarizing_channel(d: int) -> Channel:
    """T(rho) = tr(rho) 1/d."""
    m = np.outer(vec(np.eye(d) / d), vec(np.eye(d)).conj())
    return Channel(m, tags={"kind": "completely-depolarizing"})


def pauli_noncontractive_channel() -> Channel:
    """Qubit channel with T(1) = 1, T(sx) = T(sy) = 0, T(sz) = sx.

    Primitive with fixed point 1/2 and T^2 completely depolarizing, yet it
    maps the pure state (1 + sz)/2 to the pure state (1 + sx)/2.
    """
    ident = np.eye(2, dtype=complex)
    m = 0.5 * np.outer(vec(ident), vec(ident).conj())
    m += 0.5 * np.outer(vec(PAULI_X), vec(PAULI_Z).conj())
    return Channel(m, tags={"kind": "pauli-noncontractive"})


# ---------------------------------------------------------------------------
# tensor constructions
# ---------------------------------------------------------------------------

def _vec_perm(d: int, n: int) -> np.ndarray:
    """perm[tensor-of-local-vecs index] = global vectorization index."""
    d2 = d * d
    idx = np.arange(d2**n)
    rows = np.zeros_like(idx)
    cols = np.zeros_like(idx)
    rem = idx
    for k in range(n):
        p = d2 ** (n - 1 - k)
        digit = rem // p
        rem = rem % p
        cols = cols * d + digit // d
        rows = rows * d + digit % d
    return cols * (d**n) + rows


def embed_superop(matrix: np.ndarray, d: int, n: int, position: int) -> np.ndarray:
    """Matrix of id^{(x) position} (x) S (x) id^{(x) n-position-1} on d^n."""
    d2 = d * d
    local = np.kron(
        np.eye(d2**position, dtype=complex),
        np.kron(matrix, np.eye(d2 ** (n - position - 1), dtype=complex)),
    )
    perm = _vec_perm(d, n)
    out = np.zeros_like(local)
    out[np.ix_(perm, perm)] = local
    return out


def _check_tensor_guard(d: int, n: int, limit: int = 4096) -> None:
    if d ** (2 * n) > limit:
        raise DomainError(f"tensor construction of dimension {d**n} exceeds the resource guard")


def tensor_power_liouvillian(liouvillian: Liouvillian, n: int) -> Liouvillian:
    """Generator of the n-fold product semigroup sum_i id (x) L (x) id."""
    if n < 1:
        raise DomainError("tensor power needs n >= 1")
    if n == 1:
        return liouvillian
    d = liouvillian.dim
    _check_tensor_guard(d, n)
    m = sum(embed_superop(liouvillian.matrix, d, n, i) for i in range(n))
    return Liouvillian(m, tags={"kind": "tensor-power", "base": liouvillian.tags.get("kind"), "n": n})


def random_local_channel(channel: Channel, probabilities, n: int) -> Channel:
    """sum_i p_i id (x) T (x) id with the single-site channel at position i."""
    p = np.asarray(probabilities, dtype=float)
    if p.ndim != 1 or len(p) != n:
        raise DomainError(f"need {n} probabilities, got shape {p.shape}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
        raise DomainError("probabilities must be nonnegative and sum to one")
    d = channel.dim
    _check_tensor_guard(d, n)
    if n == 1:
        return channel
    m = sum(p[i] * embed_superop(channel.matrix, d, n, i) for i in range(n))
    return Channel(m, tags={"kind": "random-local", "base": channel.tags.get("kind"), "n": n})


def random_pauli_channel(n: int) -> Channel:
    """n qubits, one chosen uniformly at random and completely depolarized."""
    if n < 1 or n > 5:
        raise DomainError("random Pauli channel supports 1 <= n <= 5 qubits")
    base = completely_depolarizing_channel(2)
    return random_local_channel(base, np.full(n, 1.0 / n), n)


# ---------------------------------------------------------------------------
# random instances
# ---------------------------------------------------------------------------

def random_gkls(d: int, n_ops: int = 3, seed=0, hamiltonian_scale: float = 1.0,
                dissipation_scale: float = 1.0) -> Liouvillian:
    """Generic GKLS generator with Ginibre-sampled jump operators."""
    rng = rng_from(seed)
    h = random_hermitian(d, rng, scale=hamiltonian_scale)
    ops = []
    for _ in range(n_ops):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        ops.append(dissipation_scale * g / math.sqrt(2 * d))
    return build_gkls(h, ops)


def random_channel(d: int, env_dim: int = None, seed=0) -> Channel:
    """Haar-random channel via a random Stinespring isometry."""
    rng = rng_from(seed)
    env_dim = env_dim or d
    v = haar_isometry(d * env_dim, d, rng)
    kraus = [v[i * d : (i + 1) * d, :] for i in range(env_dim)]
    return Channel.from_kraus(kraus, tags={"kind": "haar-random"})
