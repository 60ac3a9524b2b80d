"""Independent reference implementations used as test oracles.

Everything here deliberately avoids the code paths under test: eigenvalues
come from characteristic-polynomial roots, partial traces from explicit
index loops, minimizations from parameter grids, integrals from dense
trapezoids, and the SW decoder from a literal dense transcription of its
construction.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from petzlab.matcore import dag, psd_sqrt
from petzlab.quantum import purify, stinespring_dilation

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


# -- random instances --------------------------------------------------------


def random_state(rng, dim, rank=None):
    """Wishart-style random density matrix."""
    rank = rank or dim
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ dag(g)
    return m / np.trace(m).real


def random_kraus(rng, d_in, d_out, n_kraus):
    """Kraus operators of a Haar-ish random CPTP map."""
    n_kraus = max(n_kraus, -(-d_in // d_out))  # trace preservation needs d_out*n >= d_in
    g = rng.standard_normal((d_out * n_kraus, d_in)) + 1j * rng.standard_normal(
        (d_out * n_kraus, d_in)
    )
    q = np.linalg.qr(g)[0][:, :d_in]
    return [q[i * d_out : (i + 1) * d_out, :] for i in range(n_kraus)]


def random_hermitian(rng, dim, scale=1.0):
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * (g + dag(g)) / 2


def random_psd(rng, dim, scale=1.0):
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * (g @ dag(g)) / dim


# -- spectra and traces ------------------------------------------------------


def charpoly_eigenvalues(h):
    """Eigenvalues as characteristic-polynomial roots (Faddeev-LeVerrier
    coefficients, companion-matrix root finder). No call to eigh."""
    n = h.shape[0]
    coeffs = np.zeros(n + 1, dtype=complex)
    coeffs[0] = 1.0
    m = np.zeros_like(h)
    for k in range(1, n + 1):
        m = h @ m + coeffs[k - 1] * np.eye(n)
        coeffs[k] = -np.trace(h @ m) / k
    roots = np.roots(coeffs)
    return np.sort(roots.real)[::-1]


def partial_trace_loops(m, d_a, d_b, keep):
    """Elementwise index-sum partial trace."""
    if keep == 0:
        out = np.zeros((d_a, d_a), dtype=complex)
        for i in range(d_a):
            for j in range(d_a):
                for b in range(d_b):
                    out[i, j] += m[i * d_b + b, j * d_b + b]
    else:
        out = np.zeros((d_b, d_b), dtype=complex)
        for i in range(d_b):
            for j in range(d_b):
                for a in range(d_a):
                    out[i, j] += m[a * d_b + i, a * d_b + j]
    return out


# -- brute-force minimizations over qubit states ------------------------------


def bloch_state(x, y, z):
    r = np.sqrt(x * x + y * y + z * z)
    if r > 1.0 - 1e-9:
        x, y, z = (c * (1.0 - 1e-9) / r for c in (x, y, z))
    return 0.5 * (np.eye(2) + x * PAULI_X + y * PAULI_Y + z * PAULI_Z)


def minimize_over_qubit(f, grid=21):
    """Grid search over the Bloch ball followed by Nelder-Mead refinement."""
    best_val, best_b = np.inf, (0.0, 0.0, 0.0)
    lin = np.linspace(-0.98, 0.98, grid)
    for x in lin:
        for y in lin:
            for z in lin:
                if x * x + y * y + z * z <= 1:
                    v = f(bloch_state(x, y, z))
                    if v < best_val:
                        best_val, best_b = v, (x, y, z)
    res = minimize(
        lambda b: f(bloch_state(*b)),
        best_b,
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000},
    )
    return min(best_val, float(res.fun))


# -- quadrature ---------------------------------------------------------------


def beta0_trapezoid(g, t_max=10.0, n=1_000_001):
    ts = np.linspace(-t_max, t_max, n)
    beta = (np.pi / 2) / (np.cosh(np.pi * ts) + 1)
    vals = np.array([g(t) for t in ts])
    return float(np.trapezoid(beta * vals, ts))


# -- Knill-Laflamme -----------------------------------------------------------


def single_qubit_errors(n_qubits):
    """Identity plus every single-qubit Pauli on n qubits."""
    ops = [np.eye(2**n_qubits, dtype=complex)]
    for site in range(n_qubits):
        for p in (PAULI_X, PAULI_Y, PAULI_Z):
            factors = [np.eye(2, dtype=complex)] * n_qubits
            factors[site] = p
            full = factors[0]
            for f in factors[1:]:
                full = np.kron(full, f)
            ops.append(full)
    return ops


def knill_laflamme_violation(zero, one, errors):
    """max deviation from <i_L|E^dag F|j_L> = c_EF delta_ij."""
    worst = 0.0
    for e in errors:
        for f in errors:
            m = dag(e) @ f
            c00 = np.vdot(zero, m @ zero)
            c11 = np.vdot(one, m @ one)
            c01 = np.vdot(zero, m @ one)
            c10 = np.vdot(one, m @ zero)
            worst = max(worst, abs(c00 - c11), abs(c01), abs(c10))
    return worst


# -- literal dense SW construction --------------------------------------------


def sw_decoder_literal(rho, ch):
    """Dense, step-by-step transcription of the SW decoder construction.

    Uses full SVDs of the overlap matrix and of both purification
    coefficient matrices; suitable only for small dimensions. Returns the
    decoder Kraus operators and the dense (M, U, W).
    """
    pur = purify(rho)
    iso = stinespring_dilation(ch)
    d, d_a, d_b, d_e = pur.rank, ch.dim_in, ch.dim_out, iso.dim_env
    n = d * d_e

    va = iso.v @ pur.basis_a
    psi3 = (va * np.sqrt(pur.schmidt_coeffs)).T.reshape(d, d_b, d_e)

    sigma_re = np.einsum("kbe,lbf->kelf", psi3, psi3.conj()).reshape(n, n)
    sigma_e = np.einsum("kbe,kbf->ef", psi3, psi3.conj())
    sigma_r = np.diag(pur.schmidt_coeffs).astype(complex)

    w_e, v_e = np.linalg.eigh(sigma_e)
    order = np.argsort(w_e)[::-1]
    mu, e_mat = w_e[order], v_e[:, order]

    g = np.kron(np.eye(d), e_mat)
    omega_mat = g @ g.T

    sqrt_sigma = psd_sqrt(sigma_re)
    sqrt_hat = np.kron(psd_sqrt(sigma_r), psd_sqrt(sigma_e))
    t_comp = sqrt_hat @ sqrt_sigma
    m_mat = g @ (dag(g) @ t_comp @ g).T @ dag(g)

    us, _, vh = np.linalg.svd(m_mat)
    u_mat = dag(us @ vh)

    p_coeff = sqrt_sigma @ omega_mat
    x_coeff = psi3.transpose(0, 2, 1).reshape(n, d_b)
    emb = np.zeros((n, d_b), dtype=complex)
    emb[:d_b, :] = np.eye(d_b)
    q_coeff = x_coeff @ emb.T

    up, _, vhp = np.linalg.svd(p_coeff)
    uq, _, vhq = np.linalg.svd(q_coeff)
    w_mat = (dag(vhq) @ dag(uq) @ up @ vhp).T

    kraus = []
    for l in range(d_e):
        s_l = np.kron(pur.basis_a, e_mat[:, l].conj()[None, :])
        k_l = s_l @ u_mat @ w_mat
        kraus.append(k_l @ emb)
    return kraus, m_mat, u_mat, w_mat
