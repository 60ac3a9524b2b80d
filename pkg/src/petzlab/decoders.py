"""Petz, rotated-Petz, twirled-Petz, and Schumacher-Westmoreland decoders.

Decoders are materialized as CPTP Kraus channels from B back to A. Their
entanglement fidelities are available both by direct simulation and, for
the Petz family, through closed-form expressions in the channeled
purification sigma_RB. The twirled decoder integrates rotated decoders
against the density beta0(t) = (pi/2) / (cosh(pi t) + 1).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AlignmentFailure,
    DegenerateChannelOutput,
    DimensionMismatch,
    ToleranceNotMet,
)
from .matcore import (
    RANK_CUT,
    dag,
    herm_eig,
    kron,
    matrix_power_on_support,
    partial_trace,
)
from .quantum import (
    DensityOperator,
    KrausChannel,
    StinespringIsometry,
    channel_from_choi,
    channel_on_purification,
    choi_of_channel,
    purify,
    stinespring_dilation,
    validate_cptp,
)

ALIGNMENT_TOL = 1e-8

# Hard truncation of the beta0 integral at |t| <= 8; the tail mass is
# 1 - tanh(4*pi) ~ 2.4e-11.
_T_MAX = 8.0
_U_MAX = math.tanh(math.pi * _T_MAX / 2)
_GL_NODES = 64
_INITIAL_PANELS = 4
_MAX_DEPTH = 52


@dataclass(frozen=True, eq=False)
class Decoder:
    """A recovery channel B -> A with a provenance tag."""

    channel: KrausChannel
    kind: str  # petz | rotated | twirled | sw | identity | custom
    t: float | None = None


def identity_decoder(dim: int) -> Decoder:
    ch = KrausChannel(
        kraus_ops=(np.eye(dim, dtype=np.complex128),),
        dim_in=dim,
        dim_out=dim,
        label_in="B",
        label_out="A",
    )
    return Decoder(channel=ch, kind="identity")


def _petz_family_kraus(rho_a: DensityOperator, ch: KrausChannel, t: float):
    """Kraus list of the rotated Petz map R^(t/2) plus its kernel completion.

    The map is rho^((1-it)/2) K_i^dagger sigma_B^((-1+it)/2) on the support
    of sigma_B = N(rho); one completion branch measures the kernel projector
    of sigma_B and outputs the maximally mixed state on supp(rho), making
    the channel CPTP everywhere without affecting fidelities.
    """
    if ch.dim_in != rho_a.dim:
        raise DimensionMismatch(f"channel input {ch.dim_in} != source dim {rho_a.dim}")
    sigma_b = np.zeros((ch.dim_out, ch.dim_out), dtype=np.complex128)
    for k in ch.kraus_ops:
        sigma_b += k @ rho_a.matrix @ dag(k)
    eig_b = herm_eig(sigma_b)
    if eig_b.eigenvalues[0] <= 1e-14:
        raise DegenerateChannelOutput("channel output state is numerically zero")
    rho_half = matrix_power_on_support(rho_a.matrix, (1 - 1j * t) / 2)
    sig_inv_half = matrix_power_on_support(sigma_b, (-1 + 1j * t) / 2)
    ops = [rho_half @ dag(k) @ sig_inv_half for k in ch.kraus_ops]

    cut = RANK_CUT * float(eig_b.eigenvalues[0])
    kernel = eig_b.eigenvectors[:, eig_b.eigenvalues <= cut]
    if kernel.shape[1]:
        eig_r = herm_eig(rho_a.matrix)
        cut_r = RANK_CUT * float(eig_r.eigenvalues[0])
        support = eig_r.eigenvectors[:, eig_r.eigenvalues > cut_r]
        r = support.shape[1]
        for m in range(kernel.shape[1]):
            for j in range(r):
                ops.append(np.outer(support[:, j], kernel[:, m].conj()) / math.sqrt(r))
    return ops


def _petz_like(rho_a: DensityOperator, ch: KrausChannel, t: float, kind: str) -> Decoder:
    ops = _petz_family_kraus(rho_a, ch, t)
    dec = KrausChannel(
        kraus_ops=tuple(ops),
        dim_in=ch.dim_out,
        dim_out=ch.dim_in,
        label_in=ch.label_out,
        label_out=ch.label_in,
    )
    validate_cptp(dec)
    return Decoder(channel=dec, kind=kind, t=t if kind == "rotated" else None)


def build_petz(rho_a: DensityOperator, ch: KrausChannel) -> Decoder:
    """Petz decoder X -> rho^(1/2) N^dagger(N(rho)^(-1/2) X N(rho)^(-1/2)) rho^(1/2)."""
    return _petz_like(rho_a, ch, 0.0, "petz")


def build_rotated_petz(rho_a: DensityOperator, ch: KrausChannel, t: float) -> Decoder:
    """Rotated Petz decoder R^(t/2); t = 0 reproduces the Petz decoder exactly."""
    return _petz_like(rho_a, ch, t, "rotated")


class RotatedFidelity:
    """Closed-form entanglement fidelity of the rotated Petz decoders.

    For sigma_RB with marginal eigenvalues {lam_r}, {mu_b}, the fidelity of
    the decoder rotated by t is

        F(t) = sum_jk |S_jk|^2 exp((theta_j + theta_k)/2) exp(i (theta_k - theta_j) t/2)

    where S is sigma_RB in the product eigenbasis restricted to the joint
    support and theta_(r,b) = ln lam_r - ln mu_b. This evaluates the
    squared 2-norm of sigma^(1/2) (sigma_R^((1+it)/2) tensor
    sigma_B^(-(1+it)/2)) sigma^(1/2) spectrally, with kernel directions
    carrying zero weight (powers on the support).
    """

    def __init__(self, sigma_rb: DensityOperator):
        if len(sigma_rb.dims) != 2:
            raise DimensionMismatch(f"need a bipartite RB state, got {sigma_rb.dims}")
        m = sigma_rb.matrix
        sig_r = sigma_rb.marginal(sigma_rb.labels[0])
        sig_b = sigma_rb.marginal(sigma_rb.labels[1])
        eig_r, eig_b = herm_eig(sig_r), herm_eig(sig_b)
        kept_r = eig_r.eigenvalues > RANK_CUT * float(eig_r.eigenvalues[0])
        kept_b = eig_b.eigenvalues > RANK_CUT * float(eig_b.eigenvalues[0])
        v = np.kron(eig_r.eigenvectors[:, kept_r], eig_b.eigenvectors[:, kept_b])
        s = dag(v) @ m @ v
        log_r = np.log(eig_r.eigenvalues[kept_r].real)
        log_b = np.log(eig_b.eigenvalues[kept_b].real)
        theta = (log_r[:, None] - log_b[None, :]).reshape(-1)
        self._coeff = np.abs(s) ** 2 * np.exp((theta[:, None] + theta[None, :]) / 2)
        self._delta = (theta[None, :] - theta[:, None]) / 2

    def value(self, t: float) -> float:
        return float(np.sum(self._coeff * np.exp(1j * self._delta * t)).real)

    def petz(self) -> float:
        return float(np.sum(self._coeff))

    def twirled(self, tol: float = 1e-9) -> float:
        return beta0_quadrature(self.value, tol)


def fe_closed_form(
    sigma_rb: DensityOperator,
    variant: str = "petz",
    t: float = 0.0,
    quad_tol: float = 1e-9,
) -> float:
    """Closed-form decoder fidelity from sigma_RB = N(|rho><rho|).

    ``variant`` is ``petz``, ``rotated`` (uses ``t``), or ``twirled``
    (integrates the rotated expression against beta0 with ``quad_tol``).
    """
    kernel = RotatedFidelity(sigma_rb)
    if variant == "petz":
        return kernel.petz()
    if variant == "rotated":
        return kernel.value(t)
    if variant == "twirled":
        return kernel.twirled(quad_tol)
    raise DimensionMismatch(f"unknown fidelity variant {variant!r}")


@functools.lru_cache(maxsize=8)
def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def _beta0_adaptive(g, tol: float):
    """Adaptive Gauss-Legendre evaluation of integral beta0(t) g(t) dt.

    The substitution u = tanh(pi t / 2) turns the weight into du/2 exactly;
    panels over u are bisected until halving a panel changes its estimate
    by at most its width-proportional share of ``tol``. Returns the value
    together with the accepted nodes t_i and weights w_i, which satisfy
    value = sum_i w_i g(t_i) and are reusable for matrix integrands.
    """
    x, w = _leggauss(_GL_NODES)

    def panel(a: float, b: float):
        mid, half = (a + b) / 2, (b - a) / 2
        u = mid + half * x
        t = 2.0 / math.pi * np.arctanh(u)
        vals = np.array([g(tt) for tt in t], dtype=np.float64)
        weights = 0.5 * half * w
        return float(np.dot(weights, vals)), t, weights

    total_width = 2 * _U_MAX
    edges = np.linspace(-_U_MAX, _U_MAX, _INITIAL_PANELS + 1)
    stack = [(edges[i], edges[i + 1], 0) for i in range(_INITIAL_PANELS)][::-1]
    value = 0.0
    nodes, weights = [], []
    while stack:
        a, b, depth = stack.pop()
        est, _, _ = panel(a, b)
        mid = (a + b) / 2
        est_l, t_l, w_l = panel(a, mid)
        est_r, t_r, w_r = panel(mid, b)
        if abs(est - (est_l + est_r)) <= tol * (b - a) / total_width:
            value += est_l + est_r
            nodes.extend([t_l, t_r])
            weights.extend([w_l, w_r])
        else:
            if depth >= _MAX_DEPTH:
                raise ToleranceNotMet(
                    f"beta0 quadrature did not reach tol {tol:g} at depth {depth}"
                )
            stack.append((mid, b, depth + 1))
            stack.append((a, mid, depth + 1))
    return value, np.concatenate(nodes), np.concatenate(weights)


def beta0_quadrature(g, tol: float = 1e-9) -> float:
    """Integral of beta0(t) g(t) over the real line, absolute error <= tol."""
    value, _, _ = _beta0_adaptive(g, tol)
    return value


def build_twirled_petz(
    rho_a: DensityOperator, ch: KrausChannel, tol: float = 1e-7
) -> Decoder:
    """Twirled Petz decoder, materialized by integrating Choi matrices of
    rotated decoders at the quadrature nodes of the scalar fidelity formula.

    The integrated Choi matrix is renormalized to exact trace preservation;
    the materialized fidelity is checked against the scalar twirled value
    within 10 * tol.
    """
    pur = purify(rho_a)
    sigma_rb = channel_on_purification(pur, ch)
    kernel = RotatedFidelity(sigma_rb)
    quad_tol = min(1e-9, tol / 10)
    scalar_value, nodes, weights = _beta0_adaptive(kernel.value, quad_tol)

    d_in, d_out = ch.dim_out, ch.dim_in
    choi = np.zeros((d_in * d_out, d_in * d_out), dtype=np.complex128)
    for t_i, w_i in zip(nodes, weights):
        rotated = build_rotated_petz(rho_a, ch, float(t_i))
        choi += w_i * choi_of_channel(rotated.channel)
    tr_out = partial_trace(choi, (d_in, d_out), keep=0)
    fix = kron(matrix_power_on_support(tr_out, -0.5), np.eye(d_out))
    choi = fix @ choi @ dag(fix)
    dec = channel_from_choi(choi, (d_in, d_out), label_in=ch.label_out, label_out=ch.label_in)
    decoder = Decoder(channel=dec, kind="twirled")
    materialized = fe_of_decoder(rho_a, ch, decoder)
    if abs(materialized - scalar_value) > 10 * tol:
        raise ToleranceNotMet(
            f"materialized twirled fidelity {materialized:.12g} deviates from "
            f"closed form {scalar_value:.12g} beyond {10 * tol:g}"
        )
    return decoder


def fe_of_decoder(rho_a: DensityOperator, ch: KrausChannel, decoder: Decoder) -> float:
    """Entanglement fidelity of decoder compose channel, by direct simulation."""
    if decoder.channel.dim_in != ch.dim_out or decoder.channel.dim_out != ch.dim_in:
        raise DimensionMismatch("decoder dimensions do not invert the channel")
    pur = purify(rho_a)
    sigma_rb = channel_on_purification(pur, ch)
    vec = pur.vector.reshape(pur.rank, ch.dim_in)
    # <rho|(1 tensor D)(sigma_RB)|rho> = sum_l <w_l|sigma_RB|w_l>
    # with |w_l> = (1 tensor D_l^dagger)|rho>.
    w = np.stack([(vec @ k.conj()).reshape(-1) for k in decoder.channel.kraus_ops])
    val = np.einsum("li,ij,lj->", w.conj(), sigma_rb.matrix, w, optimize=True)
    return float(min(1.0, max(0.0, val.real)))


# ---------------------------------------------------------------------------
# Schumacher-Westmoreland construction
# ---------------------------------------------------------------------------


def _apply_block_kron(a_diag: np.ndarray, b_mat: np.ndarray, x: np.ndarray) -> np.ndarray:
    """(diag(a) tensor B) @ x without forming the Kronecker product."""
    d, cols = a_diag.size, x.shape[1]
    xt = x.reshape(d, b_mat.shape[1], cols)
    out = np.einsum("ef,kfc->kec", b_mat, xt, optimize=True)
    out *= a_diag[:, None, None]
    return out.reshape(d * b_mat.shape[0], cols)


def _complement(columns: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal completion of a set of orthonormal columns."""
    n, r = columns.shape
    if r >= n:
        return np.zeros((n, 0), dtype=np.complex128)
    q = np.linalg.qr(columns, mode="complete")[0]
    return q[:, r:]


class SwConstruction:
    """Intermediate objects of the SW decoder construction.

    Holds the Schmidt data, the Stinespring isometry, the spectral data of
    sigma_E, and rank-factored forms of the overlap matrix M, its polar
    unitary U, and the purification-alignment unitary W. Dense matrices are
    materialized lazily; the decoder itself only needs the columns of U W
    over the physical input block |0>_{R'A'} tensor B.
    """

    def __init__(
        self,
        schmidt_coeffs,
        basis_a,
        isometry,
        env_eigenvalues,
        env_eigenvectors,
        x_coeff,
        u_r,
        s_r,
        v_x,
        m_left,
        m_right,
        m_singular_values,
        u_thin_left,
        u_thin_right,
    ):
        self.schmidt_coeffs = schmidt_coeffs
        self.basis_a = basis_a
        self.isometry: StinespringIsometry = isometry
        self.env_eigenvalues = env_eigenvalues
        self.env_eigenvectors = env_eigenvectors
        self.x_coeff = x_coeff  # coefficient matrix of |sigma> for the (RE)|(B) cut
        self.u_r = u_r  # eigenvectors of sigma_RE on its support
        self.s_r = s_r  # singular values: sqrt of sigma_RE eigenvalues
        self.v_x = v_x  # right Schmidt vectors of |sigma> on B
        self._m_left = m_left  # M = m_left diag(s_r) m_right
        self._m_right = m_right
        self.m_singular_values = m_singular_values
        self._u_thin_left = u_thin_left  # thin SVD factors of M
        self._u_thin_right = u_thin_right
        self.d_code = schmidt_coeffs.size
        self.d_a = basis_a.shape[0]
        self.d_e = env_eigenvalues.size
        self.d_b = isometry.dim_out
        self.dim = self.d_code * self.d_e  # dimension of R'E'
        self.ref_index = 0  # |0>_{R'A'} is the first computational basis vector

    # -- applications of Omega = 1_R' tensor (E E^T) --------------------------

    @functools.cached_property
    def omega_env(self) -> np.ndarray:
        e = self.env_eigenvectors
        return e @ e.T

    def _apply_omega(self, x: np.ndarray, conjugate: bool = False) -> np.ndarray:
        om = self.omega_env.conj() if conjugate else self.omega_env
        return _apply_block_kron(np.ones(self.d_code), om, x)

    # -- lazy completions ------------------------------------------------------

    @functools.cached_property
    def _u_kernel(self) -> np.ndarray:
        return _complement(self._u_thin_left)

    @functools.cached_property
    def _v_kernel(self) -> np.ndarray:
        return _complement(dag(self._u_thin_right))

    @functools.cached_property
    def _u_p_full(self) -> np.ndarray:
        return np.hstack([self.u_r, _complement(self.u_r)])

    @functools.cached_property
    def _v_q_embedded(self) -> np.ndarray:
        v = np.zeros((self.dim, self.v_x.shape[1]), dtype=np.complex128)
        v[: self.d_b, :] = self.v_x
        return v

    @functools.cached_property
    def _v_q_kernel(self) -> np.ndarray:
        return _complement(self._v_q_embedded)

    # -- the alignment unitaries ----------------------------------------------

    @functools.cached_property
    def w_input_block(self) -> np.ndarray:
        """W (|0>_{R'A'} tensor 1_B): the only columns of W the decoder uses."""
        rows = np.hstack([self.v_x, self._v_q_kernel[: self.d_b, :]])  # d_b x dim
        return self._apply_omega(self._u_p_full.conj() @ rows.T)

    @functools.cached_property
    def uw_input_block(self) -> np.ndarray:
        """Columns of U W over the physical input block."""
        w0 = self.w_input_block
        thin = dag(self._u_thin_right) @ (dag(self._u_thin_left) @ w0)
        return thin + self._v_kernel @ (dag(self._u_kernel) @ w0)

    @functools.cached_property
    def m_matrix(self) -> np.ndarray:
        """Overlap matrix M on R'E' (dense)."""
        return (self._m_left * self.s_r) @ self._m_right

    @functools.cached_property
    def u_matrix(self) -> np.ndarray:
        """Alignment unitary U with tr[M U] = ||M||_1 (dense)."""
        return dag(self._u_thin_right) @ dag(self._u_thin_left) + self._v_kernel @ dag(
            self._u_kernel
        )

    @functools.cached_property
    def w_matrix(self) -> np.ndarray:
        """Purification-alignment unitary W (dense)."""
        v_q = np.hstack([self._v_q_embedded, self._v_q_kernel])
        return self._apply_omega(self._u_p_full.conj()) @ v_q.T

    # -- invariants ------------------------------------------------------------

    def psi_sigma_matrix(self) -> np.ndarray:
        """Coefficient matrix of |Psi^sigma> = sigma_RE^(1/2)|Omega> (dense)."""
        left = self.u_r * self.s_r
        right = self._apply_omega(self.u_r.conj()).T  # u_r^dagger applied to Omega
        return left @ right

    def alignment_residual(self) -> float:
        """Frobenius residual of |Psi^sigma> = W (|sigma> tensor |0>)."""
        aligned = self.x_coeff @ self.w_input_block.T
        return float(np.linalg.norm(self.psi_sigma_matrix() - aligned))

    def trace_mu_guard(self) -> tuple[float, float]:
        """tr[M U] as (real, imag); equals ||M||_1 up to roundoff."""
        b2u = (self._m_right @ dag(self._u_thin_right)) @ dag(self._u_thin_left)
        b2u = b2u + (self._m_right @ self._v_kernel) @ dag(self._u_kernel)
        val = complex(np.trace((self.s_r[:, None] * (b2u @ self._m_left)).T))
        return val.real, val.imag

    def decoder_kraus(self) -> list[np.ndarray]:
        """Kraus operators of the decoder, K_l (|0>_{R'A'} tensor 1_B)."""
        t2 = self.uw_input_block.reshape(self.d_code, self.d_e, self.d_b)
        z1 = np.einsum("el,keb->klb", self.env_eigenvectors.conj(), t2, optimize=True)
        ops = np.einsum("ak,klb->lab", self.basis_a, z1, optimize=True)
        return [ops[l] for l in range(self.d_e)]

    def kraus_full(self) -> list[np.ndarray]:
        """Kraus operators K_l of the full R'E' -> A stage (dense)."""
        uw = self.u_matrix @ self.w_matrix
        t2 = uw.reshape(self.d_code, self.d_e, self.dim)
        z1 = np.einsum("el,kec->klc", self.env_eigenvectors.conj(), t2, optimize=True)
        ops = np.einsum("ak,klc->lac", self.basis_a, z1, optimize=True)
        return [ops[l] for l in range(self.d_e)]


def build_sw(rho_a: DensityOperator, ch: KrausChannel) -> tuple[Decoder, SwConstruction]:
    """Schumacher-Westmoreland decoder for (rho_A, N).

    The environment is padded to d_E = d_A d_B and the reference system has
    dimension rank(rho_A). Alignment unitaries come from rank-factored SVDs
    with deterministic null-space completions; the completions do not affect
    the decoder's action on the channel's output support.
    """
    pur = purify(rho_a)
    iso = stinespring_dilation(ch)
    d, d_a, d_b, d_e = pur.rank, ch.dim_in, ch.dim_out, iso.dim_env
    n = d * d_e

    # |sigma>_RBE = (1_R tensor V)|rho>, stored as (R, B, E).
    va = iso.v @ pur.basis_a  # (d_B d_E) x d
    psi3 = (va * np.sqrt(pur.schmidt_coeffs)).T.reshape(d, d_b, d_e)

    sigma_e = np.einsum("kbe,kbf->ef", psi3, psi3.conj(), optimize=True)
    eig_e = herm_eig(sigma_e)
    mu, e_mat = eig_e.eigenvalues, eig_e.eigenvectors

    # Coefficient matrix of |sigma> for the (RE)|(B) cut and its thin SVD;
    # sigma_RE = X X^dagger.
    x = psi3.transpose(0, 2, 1).reshape(n, d_b)
    u_full, s_full, vh_full = np.linalg.svd(x, full_matrices=False)
    rank = int(np.sum(s_full > RANK_CUT * max(float(s_full[0]), 0.0)))
    u_r, s_r, v_x = u_full[:, :rank], s_full[:rank], dag(vh_full[:rank, :])

    # T = sigma_hat^(1/2) sigma_RE^(1/2) = L diag(s_r) U_r^dagger and
    # M = Omega T^T Omega^* = m_left diag(s_r) m_right, all rank-factored.
    sqrt_mu = np.sqrt(np.clip(mu, 0.0, None))
    sqrt_sigma_e = (e_mat * sqrt_mu) @ dag(e_mat)
    ell = _apply_block_kron(np.sqrt(pur.schmidt_coeffs), sqrt_sigma_e, u_r)

    om_e = e_mat @ e_mat.T
    m_left = _apply_block_kron(np.ones(d), om_e, u_r.conj())
    m_right = _apply_block_kron(np.ones(d), om_e.conj(), ell).T

    q1, r1 = np.linalg.qr(m_left)
    q2, r2 = np.linalg.qr(dag(m_right))
    core_u, core_s, core_vh = np.linalg.svd((r1 * s_r) @ dag(r2))
    u_thin_left = q1 @ core_u
    u_thin_right = core_vh @ dag(q2)

    cons = SwConstruction(
        schmidt_coeffs=pur.schmidt_coeffs,
        basis_a=pur.basis_a,
        isometry=iso,
        env_eigenvalues=mu,
        env_eigenvectors=e_mat,
        x_coeff=x,
        u_r=u_r,
        s_r=s_r,
        v_x=v_x,
        m_left=m_left,
        m_right=m_right,
        m_singular_values=core_s,
        u_thin_left=u_thin_left,
        u_thin_right=u_thin_right,
    )

    residual = cons.alignment_residual()
    if residual > ALIGNMENT_TOL:
        raise AlignmentFailure(f"alignment residual {residual:.3e} exceeds {ALIGNMENT_TOL}")
    re_mu, im_mu = cons.trace_mu_guard()
    if re_mu < -1e-9 or abs(im_mu) > 1e-9 * max(1.0, re_mu):
        raise AlignmentFailure(f"tr[MU] = {re_mu:.3e} + {im_mu:.3e}i is not real-positive")

    dec = KrausChannel(
        kraus_ops=tuple(cons.decoder_kraus()),
        dim_in=d_b,
        dim_out=d_a,
        label_in=ch.label_out,
        label_out=ch.label_in,
    )
    validate_cptp(dec, tol=1e-9)
    return Decoder(channel=dec, kind="sw"), cons
