"""Entropies, Petz and sandwiched Renyi divergences, and mutual informations.

All logarithms are base 2. Divergence second arguments may be arbitrary
positive semidefinite operators (not necessarily normalized); infinities
arising from support violations are returned as explicit ``math.inf``
values inside :class:`DivergenceResult`, never as sentinel numbers.

The inner minimizations over an auxiliary state (orders 2 and 1/2) are
evaluated in closed form; the reductions are gated by brute-force grid
oracles in the test suite before use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidOrder, NegativeEpsilon, SupportViolation
from .matcore import (
    RANK_CUT,
    as_cmatrix,
    dag,
    herm_eig,
    kron,
    matrix_power_on_support,
    partial_trace,
    psd_sqrt,
    schatten_norm,
)
from .quantum import DensityOperator

# Mass a state may place on the kernel of the divergence's second argument
# before the support clause is considered violated.
SUPPORT_LEAK_TOL = 1e-10

COND_AC = "absolutely_continuous"
COND_NOT_ORTH = "not_orthogonal"
COND_VIOLATED = "support_violated"


@dataclass(frozen=True)
class DivergenceResult:
    """Divergence value together with the support condition that fired."""

    value: float
    support_condition: str

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)


def _state_matrix(rho) -> np.ndarray:
    if isinstance(rho, DensityOperator):
        return rho.matrix
    return as_cmatrix(rho)


def _psd_eig(p):
    eig = herm_eig(p)
    w = np.clip(eig.eigenvalues.real, 0.0, None)
    return w, eig.eigenvectors


def _kernel_leak(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Mass of rho on the kernel of sigma (0 iff rho << sigma)."""
    w, v = _psd_eig(sigma)
    cut = RANK_CUT * max(float(w[0]), 0.0) if w.size else 0.0
    kernel = v[:, w <= cut]
    if kernel.shape[1] == 0:
        return 0.0
    return float(np.trace(dag(kernel) @ rho @ kernel).real)


def _orthogonal(rho: np.ndarray, sigma: np.ndarray) -> bool:
    scale = max(1.0, float(np.linalg.norm(rho) * np.linalg.norm(sigma)))
    return float(np.linalg.norm(rho @ sigma)) <= 1e-12 * scale


def _log2_on_support(p: np.ndarray) -> np.ndarray:
    w, v = _psd_eig(p)
    cut = RANK_CUT * max(float(w[0]), 0.0)
    out = np.zeros_like(w)
    kept = w > cut
    out[kept] = np.log2(w[kept])
    return (v * out) @ dag(v)


def entropy(rho, alpha: float | None = None) -> float:
    """Von Neumann entropy, or the Renyi entropy of order ``alpha`` if given."""
    m = _state_matrix(rho)
    w, _ = _psd_eig(m)
    w = w[w > RANK_CUT * max(float(w[0]), 0.0)]
    if alpha is None:
        return float(-np.sum(w * np.log2(w)))
    if alpha <= 0 or alpha == 1:
        raise InvalidOrder(f"Renyi order must be in (0,1) or (1,inf), got {alpha}")
    return float(np.log2(np.sum(w**alpha)) / (1 - alpha))


def entropy_derived(rho: DensityOperator, kind: str, cut: str | None = None) -> float:
    """Conditional entropy H(A|B), mutual information I(A:B), or coherent information.

    ``cut`` names the subsystem playing the role of A; it defaults to the
    first label. The state must be bipartite.
    """
    if len(rho.dims) != 2:
        raise DimensionMismatch(f"need a bipartite state, got dims {rho.dims}")
    label_a = cut if cut is not None else rho.labels[0]
    label_b = [l for l in rho.labels if l != label_a][0]
    h_ab = entropy(rho.matrix)
    h_a = entropy(rho.marginal(label_a))
    h_b = entropy(rho.marginal(label_b))
    if kind == "conditional":
        return h_ab - h_b
    if kind == "mutual":
        return h_a + h_b - h_ab
    if kind == "coherent":
        return h_b - h_ab
    raise InvalidOrder(f"unknown derived entropy kind {kind!r}")


def relative_entropy(rho, sigma) -> DivergenceResult:
    """Quantum relative entropy D(rho || sigma) with PSD (not necessarily
    normalized) second argument; +inf unless rho << sigma."""
    r, s = _state_matrix(rho), as_cmatrix(sigma)
    if r.shape != s.shape:
        raise DimensionMismatch(f"shapes {r.shape} and {s.shape} differ")
    if _kernel_leak(r, s) > SUPPORT_LEAK_TOL:
        return DivergenceResult(math.inf, COND_VIOLATED)
    val = np.trace(r @ (_log2_on_support(r) - _log2_on_support(s))).real
    return DivergenceResult(float(val), COND_AC)


def petz_divergence(rho, sigma, alpha: float) -> DivergenceResult:
    """Petz Renyi divergence (1/(alpha-1)) log tr[rho^alpha sigma^(1-alpha)].

    Finite when (alpha < 1 and rho not orthogonal to sigma) or rho << sigma;
    +inf otherwise. alpha = 1 routes to the relative entropy, alpha = 0 to
    its limit -log tr[Pi_rho sigma].
    """
    if alpha < 0:
        raise InvalidOrder(f"Petz order must be >= 0, got {alpha}")
    r, s = _state_matrix(rho), as_cmatrix(sigma)
    if r.shape != s.shape:
        raise DimensionMismatch(f"shapes {r.shape} and {s.shape} differ")
    if alpha == 1:
        return relative_entropy(r, s)
    ac = _kernel_leak(r, s) <= SUPPORT_LEAK_TOL
    if alpha < 1:
        if not ac and _orthogonal(r, s):
            return DivergenceResult(math.inf, COND_VIOLATED)
        condition = COND_AC if ac else COND_NOT_ORTH
    else:
        if not ac:
            return DivergenceResult(math.inf, COND_VIOLATED)
        condition = COND_AC
    if alpha == 0:
        pi = matrix_power_on_support(r, 0.0)
        return DivergenceResult(float(-np.log2(np.trace(pi @ s).real)), condition)
    t = np.trace(
        matrix_power_on_support(r, alpha) @ matrix_power_on_support(s, 1 - alpha)
    ).real
    return DivergenceResult(float(np.log2(t) / (alpha - 1)), condition)


def sandwiched_divergence(rho, sigma, alpha: float) -> DivergenceResult:
    """Sandwiched Renyi divergence via the Schatten norm of
    sigma^((1-alpha)/2alpha) rho sigma^((1-alpha)/2alpha)."""
    if alpha <= 0:
        raise InvalidOrder(f"sandwiched order must be positive, got {alpha}")
    r, s = _state_matrix(rho), as_cmatrix(sigma)
    if r.shape != s.shape:
        raise DimensionMismatch(f"shapes {r.shape} and {s.shape} differ")
    if alpha == 1:
        return relative_entropy(r, s)
    ac = _kernel_leak(r, s) <= SUPPORT_LEAK_TOL
    if alpha < 1:
        if not ac and _orthogonal(r, s):
            return DivergenceResult(math.inf, COND_VIOLATED)
        condition = COND_AC if ac else COND_NOT_ORTH
    else:
        if not ac:
            return DivergenceResult(math.inf, COND_VIOLATED)
        condition = COND_AC
    exponent = (1 - alpha) / (2 * alpha)
    half = matrix_power_on_support(s, exponent)
    inner = half @ r @ half
    val = alpha / (alpha - 1) * np.log2(schatten_norm(inner, alpha))
    return DivergenceResult(float(val), condition)


def _bipartite(state: DensityOperator) -> tuple[np.ndarray, int, int]:
    if len(state.dims) != 2:
        raise DimensionMismatch(f"need a bipartite state, got dims {state.dims}")
    return state.matrix, state.dims[0], state.dims[1]


def min_petz_mi_order2(sigma_rb: DensityOperator, w_r) -> float:
    """Minimized generalized Petz Renyi mutual information of order 2,
    inf over states tau of D_2(sigma_RB || W_R tensor tau).

    Closed form: with Y = tr_R[(W^(-1/2) tensor 1) sigma^2 (W^(-1/2) tensor 1)]
    the minimizer is tau proportional to sqrt(Y) and the value is
    2 log2 tr[sqrt(Y)].
    """
    m, d_r, d_b = _bipartite(sigma_rb)
    w_r = as_cmatrix(w_r)
    if w_r.shape != (d_r, d_r):
        raise DimensionMismatch(f"W_R is {w_r.shape}, expected {(d_r, d_r)}")
    pi_w = matrix_power_on_support(w_r, 0.0)
    leak = np.trace(m @ kron(np.eye(d_r) - pi_w, np.eye(d_b))).real
    if leak > SUPPORT_LEAK_TOL:
        raise SupportViolation(f"state has mass {leak:.3e} outside supp(W_R) tensor 1")
    w_inv_half = kron(matrix_power_on_support(w_r, -0.5), np.eye(d_b))
    y = partial_trace(w_inv_half @ m @ m @ w_inv_half, (d_r, d_b), keep=1)
    return float(2 * np.log2(np.trace(psd_sqrt(y)).real))


def singly_min_petz_mi_half(sigma_re: DensityOperator) -> float:
    """Singly minimized Petz Renyi mutual information of order 1/2,
    inf over states tau of D_{1/2}(sigma_RE || sigma_R tensor tau).

    Closed form: -log2 tr[Z^2] with Z = tr_R[(sigma_R^(1/2) tensor 1) sigma_RE^(1/2)];
    Z is PSD and the supremum of tr[Z tau^(1/2)] over states is its
    Hilbert-Schmidt norm (Cauchy-Schwarz, saturated at tau ~ Z^2).
    """
    m, d_r, d_e = _bipartite(sigma_re)
    sig_r = partial_trace(m, (d_r, d_e), keep=0)
    z = partial_trace(
        kron(psd_sqrt(sig_r), np.eye(d_e)) @ psd_sqrt(m), (d_r, d_e), keep=1
    )
    z = (z + dag(z)) / 2
    return float(-np.log2(np.trace(z @ z).real))


def sandwiched_mi_up(sigma_rb: DensityOperator, w_r) -> float:
    """Non-minimized generalized sandwiched Renyi mutual information of
    order 2, D~_2(sigma_RB || W_R tensor sigma_B)."""
    m, d_r, d_b = _bipartite(sigma_rb)
    w_r = as_cmatrix(w_r)
    if w_r.shape != (d_r, d_r):
        raise DimensionMismatch(f"W_R is {w_r.shape}, expected {(d_r, d_r)}")
    sig_b = partial_trace(m, (d_r, d_b), keep=1)
    second = kron(w_r, sig_b)
    if _kernel_leak(m, second) > SUPPORT_LEAK_TOL:
        raise SupportViolation("state not absolutely continuous w.r.t. W_R tensor sigma_B")
    quarter = kron(
        matrix_power_on_support(w_r, -0.25), matrix_power_on_support(sig_b, -0.25)
    )
    inner = quarter @ m @ quarter
    return float(np.log2(np.trace(inner @ inner).real))


def sandwiched_mi_upup_half(sigma_re: DensityOperator) -> float:
    """Non-minimized sandwiched Renyi mutual information of order 1/2,
    -2 log2 F(sigma_RE, sigma_R tensor sigma_E)."""
    from .matcore import fidelity

    m, d_r, d_e = _bipartite(sigma_re)
    sig_r = partial_trace(m, (d_r, d_e), keep=0)
    sig_e = partial_trace(m, (d_r, d_e), keep=1)
    return float(-2 * np.log2(fidelity(m, kron(sig_r, sig_e))))


def epsilon_sw(sigma_rb: DensityOperator) -> float:
    """Conditional-entropy gap -D(sigma_RB || sigma_R^(-1) tensor sigma_B).

    Equals H(R|B) + H(R) = H(R|B)_sigma - H(R|A)_rho for a purified source;
    the value is reported as computed, without clamping.
    """
    m, d_r, d_b = _bipartite(sigma_rb)
    sig_r = partial_trace(m, (d_r, d_b), keep=0)
    sig_b = partial_trace(m, (d_r, d_b), keep=1)
    second = kron(matrix_power_on_support(sig_r, -1.0), sig_b)
    res = relative_entropy(m, second)
    if not res.is_finite:
        raise SupportViolation("state not absolutely continuous w.r.t. reference")
    return -res.value


def sw_original_bound(eps: float) -> float:
    """Original fidelity lower bound 1 - sqrt(ln(2)/2 * eps), unclamped."""
    if eps < 0:
        raise NegativeEpsilon(f"epsilon must be nonnegative, got {eps}")
    return 1.0 - math.sqrt(math.log(2) / 2 * eps)
