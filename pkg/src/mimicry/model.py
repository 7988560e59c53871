"""Exact solution of the fully connected copying model with frozen nodes.

N variable nodes hold +1/-1. At every step one variable node is picked; with
probability ``p`` it keeps its sign, otherwise it copies a uniformly chosen
neighbour. ``U`` frozen +1 nodes and ``D`` frozen -1 nodes are neighbours of
every variable node. The up-count k is a birth-death chain whose stationary
law is beta-binomial with shapes (U, D).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln, logsumexp

__all__ = [
    "ModelDomainError",
    "DegenerateModelError",
    "MomentRangeError",
    "ModelParams",
    "StationaryDist",
    "EvolutionMatrix",
    "Spectrum",
    "Moments",
    "TopologySpec",
    "WrightFisherParams",
    "stationary_pmf",
    "moments_of",
    "invert_moments",
    "evolution_matrix",
    "eigenvalues",
    "transition_probability",
    "effective_params",
    "wright_fisher_map",
]


class ModelDomainError(ValueError):
    """Parameters outside the domain where a formula is defined."""


class DegenerateModelError(ValueError):
    """The time scale N(N+U+D-1) vanishes."""


class MomentRangeError(ValueError):
    """A variance cannot be produced by any positive U + D.

    ``reason`` is ``"too_small"`` (external influence beyond the model range)
    or ``"too_large"`` (beyond the U, D -> 0 limit).
    """

    def __init__(self, message, reason, c2):
        super().__init__(message)
        self.reason = reason
        self.c2 = c2


@dataclass(frozen=True)
class ModelParams:
    """Model parameters ``(N, U, D, p)``.

    ``u`` and ``d`` are real (analytic continuation). Zero is accepted here
    because the dynamics are defined there (absorbing consensus); operations
    that need a unique stationary law reject it.
    """

    n_nodes: int
    u: float
    d: float
    p: float = 0.0

    def __post_init__(self):
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 1:
            raise ModelDomainError(f"n_nodes must be a positive integer, got {self.n_nodes!r}")
        object.__setattr__(self, "n_nodes", int(self.n_nodes))
        for name in ("u", "d"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value < 0:
                raise ModelDomainError(f"{name} must be a finite non-negative real, got {value!r}")
            object.__setattr__(self, name, value)
        p = float(self.p)
        if not 0.0 <= p <= 1.0:
            raise ModelDomainError(f"p must lie in [0, 1], got {p!r}")
        object.__setattr__(self, "p", p)

    @property
    def xi(self):
        return self.u / (self.u + self.d)

    @property
    def a(self):
        return self.u + self.d

    def _require_positive(self):
        if self.u <= 0 or self.d <= 0:
            raise ModelDomainError(
                f"U and D must be > 0 for a unique stationary law (got U={self.u}, D={self.d}); "
                "U = 0 or D = 0 gives absorbing consensus states"
            )


def _readonly(x):
    x = np.asarray(x, dtype=float)
    x.setflags(write=False)
    return x


@dataclass(frozen=True)
class StationaryDist:
    n_nodes: int
    probs: np.ndarray

    @property
    def support(self):
        return np.arange(self.n_nodes + 1)

    def mean_fraction(self):
        return float(np.dot(self.support / self.n_nodes, self.probs))

    def var_fraction(self):
        x = self.support / self.n_nodes
        m = np.dot(x, self.probs)
        return float(np.dot((x - m) ** 2, self.probs))


def _log_weights(n, u, d):
    # log[C(U+k-1, k) C(N+D-k-1, N-k)] up to a k-independent constant;
    # written as g_U(k) + g_D(N-k) so that U == D gives exact mirror symmetry.
    k = np.arange(n + 1, dtype=float)
    g_up = gammaln(u + k) - gammaln(k + 1.0)
    g_down = gammaln(d + k) - gammaln(k + 1.0)
    return g_up + g_down[::-1]


def stationary_pmf(params: ModelParams) -> StationaryDist:
    """Equilibrium law of the up-count k = 0..N.

    Evaluated in log space with log-gamma, so non-integer ``U``, ``D`` and
    N in the thousands are fine.
    """
    params._require_positive()
    logw = _log_weights(params.n_nodes, params.u, params.d)
    probs = np.exp(logw - logsumexp(logw))
    probs /= probs.sum()
    return StationaryDist(params.n_nodes, _readonly(probs))


@dataclass(frozen=True)
class Moments:
    c1: float
    c2: float
    xi: float
    a: float


def moments_of(params: ModelParams) -> Moments:
    """Mean and variance of the positive fraction k/N at equilibrium."""
    params._require_positive()
    xi, a, n = params.xi, params.a, params.n_nodes
    c2 = xi * (1.0 - xi) * (1.0 + a / n) / (a + 1.0)
    return Moments(c1=xi, c2=c2, xi=xi, a=a)


def invert_moments(c1, c2, n_nodes):
    """Solve the moment equations for ``(xi, a)``.

    Raises
    ------
    MomentRangeError
        If ``c2`` is not strictly between ``c1(1-c1)/N`` and ``c1(1-c1)``.
    """
    if not 0.0 < c1 < 1.0:
        raise ModelDomainError(f"mean fraction must lie in (0, 1), got {c1!r}")
    if n_nodes < 2:
        raise ModelDomainError("moment inversion needs N >= 2 (the variance does not depend on a for N = 1)")
    v = c1 * (1.0 - c1)
    if not c2 > v / n_nodes:
        raise MomentRangeError(
            f"variance {c2!r} is too small: needs > {v / n_nodes!r} "
            "(external influence beyond the model range)",
            "too_small",
            c2,
        )
    if not c2 < v:
        raise MomentRangeError(
            f"variance {c2!r} is too large: needs < {v!r} (exceeds the U, D -> 0 limit)",
            "too_large",
            c2,
        )
    a = (v - c2) / (c2 - v / n_nodes)
    return c1, a


def _time_scale(params):
    denom = params.n_nodes * (params.n_nodes + params.d + params.u - 1.0)
    if denom == 0.0:
        raise DegenerateModelError("N + D + U = 1: evolution matrix undefined")
    return (1.0 - params.p) / denom


@dataclass(frozen=True)
class EvolutionMatrix:
    """Tridiagonal ``T = I - scale * A``.

    ``diag[m]`` is ``T[m, m]``, ``sup[m]`` is ``T[m, m+1]`` and ``sub[m]`` is
    ``T[m+1, m]``; the ``a_*`` arrays hold the same entries of ``A``.
    """

    params: ModelParams
    scale: float
    a_diag: np.ndarray
    a_sup: np.ndarray
    a_sub: np.ndarray

    @property
    def dimension(self):
        return self.params.n_nodes + 1

    @property
    def diag(self):
        return 1.0 - self.scale * self.a_diag

    @property
    def sup(self):
        return -self.scale * self.a_sup

    @property
    def sub(self):
        return -self.scale * self.a_sub

    def dense(self):
        return np.diag(self.diag) + np.diag(self.sup, 1) + np.diag(self.sub, -1)

    def dense_a(self):
        return np.diag(self.a_diag) + np.diag(self.a_sup, 1) + np.diag(self.a_sub, -1)

    def apply(self, vec):
        """``T @ vec`` without forming the dense matrix."""
        vec = np.asarray(vec, dtype=float)
        out = self.diag * vec
        out[:-1] += self.sup * vec[1:]
        out[1:] += self.sub * vec[:-1]
        return out


def evolution_matrix(params: ModelParams) -> EvolutionMatrix:
    n, u, d = params.n_nodes, params.u, params.d
    scale = _time_scale(params)
    m = np.arange(n + 1, dtype=float)
    a_diag = 2.0 * m * (n - m) + u * (n - m) + d * m
    # A[m, m+1] for m = 0..N-1 and A[m, m-1] for m = 1..N
    a_sup = -(m[:-1] + 1.0) * (n + d - m[:-1] - 1.0)
    a_sub = -(n - m[1:] + 1.0) * (u + m[1:] - 1.0)
    return EvolutionMatrix(params, scale, _readonly(a_diag), _readonly(a_sup), _readonly(a_sub))


def analytic_eigenvalues(params: ModelParams) -> np.ndarray:
    r = np.arange(params.n_nodes + 1, dtype=float)
    return 1.0 - _time_scale(params) * r * (r - 1.0 + params.d + params.u)


@dataclass(frozen=True)
class Spectrum:
    """Eigen-decomposition of ``T``.

    ``eigenvalues`` are the closed-form values ``lambda_r`` in decreasing
    order. ``right_vectors[r]`` and ``left_vectors[r]`` are numeric
    eigenvectors normalised so that ``left_vectors[r] @ right_vectors[r] = 1``
    and ``right_vectors[0]`` is the stationary distribution.
    """

    params: ModelParams
    eigenvalues: np.ndarray
    numeric_eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    # orthonormal eigenvectors of the symmetrised matrix, rows indexed by r
    sym_vectors: np.ndarray = field(repr=False)
    # 0.5 * log(rho), the similarity transform between T and its symmetric form
    half_log_rho: np.ndarray = field(repr=False)


def eigenvalues(params: ModelParams) -> Spectrum:
    """Closed-form spectrum plus numerically computed eigenvectors.

    The chain is reversible, so ``T`` is similar to a symmetric tridiagonal
    matrix with off-diagonal ``sqrt(T[m, m+1] T[m+1, m])``; that form is
    diagonalised with a tridiagonal symmetric solver.
    """
    params._require_positive()
    lam = analytic_eigenvalues(params)
    tm = evolution_matrix(params)
    off = np.sqrt(tm.sup * tm.sub)
    w, v = eigh_tridiagonal(tm.diag, off)
    order = np.argsort(w)[::-1]
    w, v = w[order], v[:, order].T
    half_log_rho = 0.5 * np.log(stationary_pmf(params).probs)
    # fix signs so that the stationary vector is positive
    if v[0].sum() < 0:
        v[0] = -v[0]
    with np.errstate(over="ignore", under="ignore"):
        right = v * np.exp(half_log_rho)
        left = v * np.exp(-half_log_rho)
    return Spectrum(
        params,
        _readonly(lam),
        _readonly(w),
        _readonly(right),
        _readonly(left),
        _readonly(v),
        _readonly(half_log_rho),
    )


def _transition_by_powers(params, from_state, to_state, t):
    tm = evolution_matrix(params)
    vec = np.zeros(params.n_nodes + 1)
    vec[from_state] = 1.0
    for _ in range(t):
        vec = tm.apply(vec)
    return float(vec[to_state])


def transition_probability(from_state, to_state, t, params: ModelParams, spectrum: Spectrum | None = None):
    """Probability of being in state ``to_state`` after ``t`` steps from ``from_state``.

    Uses the spectral sum over right/left eigenvectors. For ``U = 0`` or
    ``D = 0`` (no unique stationary law, no symmetric form) it falls back to
    repeated application of ``T`` and warns.
    """
    n = params.n_nodes
    if not (0 <= from_state <= n and 0 <= to_state <= n):
        raise ModelDomainError(f"states must lie in 0..{n}")
    if t < 0 or int(t) != t:
        raise ModelDomainError(f"t must be a non-negative integer, got {t!r}")
    t = int(t)
    if t == 0:
        return 1.0 if from_state == to_state else 0.0
    if params.u <= 0 or params.d <= 0:
        warnings.warn(
            "no symmetric form for U = 0 or D = 0; using repeated matrix application",
            RuntimeWarning,
            stacklevel=2,
        )
        return _transition_by_powers(params, from_state, to_state, t)
    if spectrum is None:
        spectrum = eigenvalues(params)
    v = spectrum.sym_vectors
    lam = spectrum.numeric_eigenvalues
    if not np.all(np.isfinite(v)):
        warnings.warn("eigendecomposition failed; using repeated matrix application", RuntimeWarning, stacklevel=2)
        return _transition_by_powers(params, from_state, to_state, t)
    # a_rL b_rM = v_rL v_rM sqrt(rho_L / rho_M)
    ratio = np.exp(spectrum.half_log_rho[to_state] - spectrum.half_log_rho[from_state])
    terms = v[:, to_state] * v[:, from_state] * np.power(np.clip(lam, 0.0, 1.0), t)
    return float(ratio * terms.sum())


@dataclass(frozen=True)
class TopologySpec:
    """Variable-node graph. Frozen nodes are implicitly linked to every node.

    ``indptr``/``indices`` hold the adjacency in CSR form; they are ``None``
    for the complete graph.
    """

    kind: str
    n_nodes: int
    k_av: float
    indptr: np.ndarray | None = field(default=None, repr=False)
    indices: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("full", "regular", "edges"):
            raise ValueError(f"unknown topology kind {self.kind!r}")
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be >= 1")
        if self.kind == "full" and self.k_av != self.n_nodes - 1:
            raise ValueError("a complete graph has k_av = N - 1")
        if self.n_nodes > 1 and not 1 <= self.k_av <= self.n_nodes - 1:
            raise ValueError(f"k_av must lie in [1, N-1], got {self.k_av}")

    @classmethod
    def full(cls, n_nodes):
        return cls("full", int(n_nodes), float(n_nodes - 1))

    @property
    def rescale_factor(self):
        if self.k_av <= 0:
            raise ModelDomainError("average degree must be positive")
        return (self.n_nodes - 1) / self.k_av

    @property
    def degrees(self):
        if self.indptr is None:
            return np.full(self.n_nodes, self.n_nodes - 1, dtype=np.int64)
        return np.diff(self.indptr)


def effective_params(u, d, topology: TopologySpec):
    """Frozen-node strengths of the fully connected model that mimics ``topology``."""
    if topology.k_av <= 0:
        raise ModelDomainError("k_av = 0: variable nodes have no neighbours")
    f = topology.rescale_factor
    return f * u, f * d


@dataclass(frozen=True)
class WrightFisherParams:
    mu1: float
    mu2: float
    n_pop: int

    def __post_init__(self):
        for name in ("mu1", "mu2"):
            mu = getattr(self, name)
            if not 0.0 <= mu < 0.5:
                raise ModelDomainError(f"{name} must lie in [0, 1/2), got {mu!r}")
        if self.n_pop < 1:
            raise ModelDomainError("n_pop must be a positive integer")


def wright_fisher_map(wf: WrightFisherParams):
    """``(U, D)`` for a two-allele Moran population with mutation.

    ``mu1`` is the A1 -> A2 rate and ``mu2`` the reverse; the up-count then
    counts A1 alleles.
    """
    rest = 1.0 - wf.mu1 - wf.mu2
    if rest <= 0:
        raise ModelDomainError("mu1 + mu2 must be < 1")
    u = 2.0 * wf.mu2 * (wf.n_pop - 1) / rest
    d = 2.0 * wf.mu1 * (wf.n_pop - 1) / rest
    return u, d
