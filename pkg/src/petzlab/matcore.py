"""Dense complex-matrix kernel.

Hermitian eigendecomposition, SVD, matrix powers on the support (including
imaginary exponents), Schatten norms, partial trace, and fidelity. All
functions operate on plain ``numpy`` arrays in row-major dense layout and
reject non-finite input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidOrder,
    NonFinite,
    NotHermitian,
    NotPsd,
    NotState,
)

# Relative eigenvalue threshold below which "power on the support" treats a
# direction as kernel. Matches double-precision spectral accuracy.
RANK_CUT = 1e-12

HERM_TOL = 1e-10
STATE_TOL = 1e-10


def as_cmatrix(x) -> np.ndarray:
    """Validate and return ``x`` as a finite, 2-d complex128 array."""
    m = np.asarray(x, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise NonFinite("matrix contains NaN or Inf entries")
    return m


def dag(x: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return x.conj().T


def herm_part(x: np.ndarray) -> np.ndarray:
    """Hermitian part (X + X^dagger)/2."""
    return (x + dag(x)) / 2


@dataclass(frozen=True)
class HermEig:
    """Spectral decomposition H = V diag(w) V^dagger, eigenvalues descending."""

    eigenvalues: np.ndarray  # real, sorted descending
    eigenvectors: np.ndarray  # unitary, columns are eigenvectors

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dag(v)


@dataclass(frozen=True)
class Svd:
    """Singular value decomposition M = U diag(s) Vh, singular values descending."""

    u: np.ndarray
    singular_values: np.ndarray
    vh: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.singular_values) @ self.vh


def herm_eig(h, tol: float = HERM_TOL) -> HermEig:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    The input must be Hermitian within ``tol`` (Frobenius, relative to the
    matrix scale); small asymmetry is repaired by symmetrization, larger
    asymmetry raises :class:`NotHermitian`.
    """
    h = as_cmatrix(h)
    if h.shape[0] != h.shape[1]:
        raise DimensionMismatch(f"matrix is {h.shape}, not square")
    scale = max(1.0, float(np.linalg.norm(h)))
    asym = float(np.linalg.norm(h - dag(h)))
    if asym > tol * scale:
        raise NotHermitian(f"asymmetry {asym:.3e} exceeds {tol:.1e} * {scale:.3e}")
    w, v = np.linalg.eigh(herm_part(h))
    order = np.argsort(w)[::-1]
    return HermEig(eigenvalues=w[order], eigenvectors=v[:, order])


def svd(m) -> Svd:
    """Full SVD as an :class:`Svd` record."""
    m = as_cmatrix(m)
    u, s, vh = np.linalg.svd(m)
    return Svd(u=u, singular_values=s, vh=vh)


def matrix_power_on_support(p, z: complex, rank_cut: float = RANK_CUT) -> np.ndarray:
    """Power of a PSD matrix taken on its support.

    Eigenvalues below ``rank_cut`` times the largest are treated as kernel
    and mapped to zero, so negative and complex exponents are well defined.
    For purely imaginary ``z`` the result is unitary on the support.
    """
    eig = herm_eig(p)
    w = eig.eigenvalues
    if w.size and w[-1] < -HERM_TOL * max(1.0, float(w[0])):
        raise NotPsd(f"minimum eigenvalue {w[-1]:.3e} is negative beyond tolerance")
    cut = rank_cut * max(float(w[0]), 0.0) if w.size else 0.0
    kept = w > cut
    powered = np.zeros(w.shape, dtype=np.complex128)
    powered[kept] = np.exp(np.asarray(z, dtype=np.complex128) * np.log(w[kept]))
    v = eig.eigenvectors
    return (v * powered) @ dag(v)


def psd_sqrt(p, rank_cut: float = RANK_CUT) -> np.ndarray:
    """Square root of a PSD matrix on its support."""
    return herm_part(matrix_power_on_support(p, 0.5, rank_cut))


def support_projector(p, rank_cut: float = RANK_CUT) -> np.ndarray:
    """Orthogonal projector onto the support of a PSD matrix."""
    return matrix_power_on_support(p, 0.0, rank_cut)


def partial_trace(m, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Trace out one factor of a matrix on a bipartite tensor product.

    ``dims = (d_A, d_B)`` gives the two subsystem dimensions (A is the
    leading factor); ``keep`` selects the factor that survives (0 or 1).
    """
    m = as_cmatrix(m)
    d_a, d_b = dims
    if m.shape != (d_a * d_b, d_a * d_b):
        raise DimensionMismatch(f"matrix is {m.shape}, dims {dims} require {d_a * d_b}")
    if keep not in (0, 1):
        raise DimensionMismatch(f"keep must be 0 or 1, got {keep}")
    t = m.reshape(d_a, d_b, d_a, d_b)
    if keep == 0:
        return np.trace(t, axis1=1, axis2=3)
    return np.trace(t, axis1=0, axis2=2)


def schatten_norm(m, p: float) -> float:
    """Schatten p-norm (quasi-norm for p < 1) from singular values."""
    if not p > 0:
        raise InvalidOrder(f"Schatten order must be positive, got {p}")
    m = as_cmatrix(m)
    s = np.linalg.svd(m, compute_uv=False)
    if np.isinf(p):
        return float(s[0]) if s.size else 0.0
    return float(np.sum(s**p) ** (1.0 / p))


def _check_state(rho: np.ndarray, tol: float = STATE_TOL) -> np.ndarray:
    rho = as_cmatrix(rho)
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > tol * 10:
        raise NotState(f"trace {tr:.6g} is not 1")
    eig = herm_eig(rho)
    if eig.eigenvalues[-1] < -tol * max(1.0, float(eig.eigenvalues[0])):
        raise NotState(f"minimum eigenvalue {eig.eigenvalues[-1]:.3e} is negative")
    return rho


def fidelity(rho, sigma) -> float:
    """Fidelity ||rho^{1/2} sigma^{1/2}||_1 between two density operators."""
    rho, sigma = as_cmatrix(rho), as_cmatrix(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"shapes {rho.shape} and {sigma.shape} differ")
    _check_state(rho)
    _check_state(sigma)
    prod = psd_sqrt(rho) @ psd_sqrt(sigma)
    s = np.linalg.svd(prod, compute_uv=False)
    return float(min(1.0, np.sum(s)))


def kron(*factors: np.ndarray) -> np.ndarray:
    """Kronecker product of two or more matrices."""
    out = np.asarray(factors[0], dtype=np.complex128)
    for f in factors[1:]:
        out = np.kron(out, f)
    return out
