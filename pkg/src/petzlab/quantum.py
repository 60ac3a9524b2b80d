"""States, channels, dilations, purifications, canonical codes and channels.

Tensor factors are always labeled explicitly; no operation infers tensor
order silently. Density operators and channels validate their defining
invariants at construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import matcore
from .errors import (
    DimensionMismatch,
    InvalidParameter,
    NotPsd,
    NotTracePreserving,
    TooManyKraus,
)
from .matcore import RANK_CUT, as_cmatrix, dag, herm_eig, kron

CPTP_TOL = 1e-10
CHOI_TOL = 1e-8

_PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Positive unit-trace operator on a labeled tensor-factor system."""

    matrix: np.ndarray
    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        m = as_cmatrix(self.matrix)
        d = int(np.prod(self.dims))
        if m.shape != (d, d):
            raise DimensionMismatch(f"matrix is {m.shape}, dims {self.dims} require {d}")
        if len(self.labels) != len(self.dims):
            raise DimensionMismatch("labels and dims have different lengths")
        matcore._check_state(m)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def axis_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DimensionMismatch(f"no subsystem labeled {label!r} in {self.labels}")

    def marginal(self, label: str) -> np.ndarray:
        """Reduced density matrix of the labeled subsystem."""
        axis = self.axis_of(label)
        n = len(self.dims)
        t = self.matrix.reshape(self.dims + self.dims)
        for other in reversed([k for k in range(n) if k != axis]):
            t = np.trace(t, axis1=other, axis2=other + (t.ndim // 2))
        return t


def density_operator(matrix, dims=None, labels=None) -> DensityOperator:
    """Build a :class:`DensityOperator`, defaulting to one factor labeled "A"."""
    m = as_cmatrix(matrix)
    if dims is None:
        dims = (m.shape[0],)
    dims = tuple(int(d) for d in dims)
    if labels is None:
        labels = ("A",) if len(dims) == 1 else tuple(f"S{k}" for k in range(len(dims)))
    return DensityOperator(matrix=m, dims=dims, labels=tuple(labels))


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """CPTP map stored as a list of Kraus operators of shape d_out x d_in."""

    kraus_ops: tuple[np.ndarray, ...]
    dim_in: int
    dim_out: int
    label_in: str = "A"
    label_out: str = "B"

    def __post_init__(self):
        if not self.kraus_ops:
            raise DimensionMismatch("a channel needs at least one Kraus operator")
        ops = tuple(as_cmatrix(k) for k in self.kraus_ops)
        for k in ops:
            if k.shape != (self.dim_out, self.dim_in):
                raise DimensionMismatch(
                    f"Kraus operator is {k.shape}, expected {(self.dim_out, self.dim_in)}"
                )
        object.__setattr__(self, "kraus_ops", ops)

    def kraus_sum(self) -> np.ndarray:
        """Sum of K^dagger K over all Kraus operators."""
        out = np.zeros((self.dim_in, self.dim_in), dtype=np.complex128)
        for k in self.kraus_ops:
            out += dag(k) @ k
        return out


def kraus_channel(kraus_ops, label_in="A", label_out="B", check=True) -> KrausChannel:
    """Build a :class:`KrausChannel` and (by default) validate trace preservation."""
    ops = [as_cmatrix(k) for k in kraus_ops]
    d_out, d_in = ops[0].shape
    ch = KrausChannel(
        kraus_ops=tuple(ops),
        dim_in=d_in,
        dim_out=d_out,
        label_in=label_in,
        label_out=label_out,
    )
    if check:
        validate_cptp(ch)
    return ch


def validate_cptp(ch: KrausChannel, tol: float = CPTP_TOL) -> None:
    """Check sum K^dagger K = identity, scaled by the identity's Frobenius norm."""
    residual = float(np.linalg.norm(ch.kraus_sum() - np.eye(ch.dim_in)))
    if residual > tol * math.sqrt(ch.dim_in):
        raise NotTracePreserving(
            f"Kraus sum deviates from identity by {residual:.3e}", residual=residual
        )


def apply_channel(ch: KrausChannel, x, dims=None, acting_on: int = 0) -> np.ndarray:
    """Apply a channel to one tensor factor of a matrix.

    ``dims`` lists the subsystem dimensions of ``x`` (default: a single
    factor equal to the channel input) and ``acting_on`` is the index of the
    factor the channel acts on. Identity channels on the other factors are
    implicit.
    """
    x = as_cmatrix(x)
    if dims is None:
        dims = (ch.dim_in,)
    dims = tuple(int(d) for d in dims)
    if dims[acting_on] != ch.dim_in:
        raise DimensionMismatch(
            f"factor {acting_on} has dim {dims[acting_on]}, channel input is {ch.dim_in}"
        )
    d_total = int(np.prod(dims))
    if x.shape != (d_total, d_total):
        raise DimensionMismatch(f"matrix is {x.shape}, dims {dims} require {d_total}")
    if len(dims) == 1:
        out = np.zeros((ch.dim_out, ch.dim_out), dtype=np.complex128)
        for k in ch.kraus_ops:
            out += k @ x @ dag(k)
        return out
    left = int(np.prod(dims[:acting_on]))
    right = int(np.prod(dims[acting_on + 1 :]))
    d_out_total = left * ch.dim_out * right
    out = np.zeros((d_out_total, d_out_total), dtype=np.complex128)
    eye_l, eye_r = np.eye(left), np.eye(right)
    for k in ch.kraus_ops:
        kk = kron(eye_l, k, eye_r)
        out += kk @ x @ dag(kk)
    return out


def apply_to_density(ch: KrausChannel, rho: DensityOperator, acting_on: str) -> DensityOperator:
    """Apply a channel to the labeled subsystem of a density operator."""
    axis = rho.axis_of(acting_on)
    out = apply_channel(ch, rho.matrix, dims=rho.dims, acting_on=axis)
    dims = list(rho.dims)
    labels = list(rho.labels)
    dims[axis] = ch.dim_out
    labels[axis] = ch.label_out
    return DensityOperator(matrix=out, dims=tuple(dims), labels=tuple(labels))


def adjoint_apply(ch: KrausChannel, y) -> np.ndarray:
    """Adjoint (Heisenberg) action sum K^dagger Y K."""
    y = as_cmatrix(y)
    if y.shape != (ch.dim_out, ch.dim_out):
        raise DimensionMismatch(f"operator is {y.shape}, channel output is {ch.dim_out}")
    out = np.zeros((ch.dim_in, ch.dim_in), dtype=np.complex128)
    for k in ch.kraus_ops:
        out += dag(k) @ y @ k
    return out


def tensor_power(ch: KrausChannel, n: int) -> KrausChannel:
    """n-fold tensor power; the Kraus set is all n-fold Kronecker products."""
    if n < 1:
        raise InvalidParameter(f"tensor power must be >= 1, got {n}")
    ops = list(ch.kraus_ops)
    for _ in range(n - 1):
        ops = [np.kron(a, b) for a in ops for b in ch.kraus_ops]
    return KrausChannel(
        kraus_ops=tuple(ops),
        dim_in=ch.dim_in**n,
        dim_out=ch.dim_out**n,
        label_in=ch.label_in,
        label_out=ch.label_out,
    )


@dataclass(frozen=True, eq=False)
class StinespringIsometry:
    """Isometry V: A -> B tensor E with the environment as the trailing factor."""

    v: np.ndarray  # (d_B * d_E) x d_A
    dim_in: int
    dim_out: int
    dim_env: int


def stinespring_dilation(ch: KrausChannel) -> StinespringIsometry:
    """Dilation V = sum_l K_l tensor |l>_E, zero-padded to d_E = d_A * d_B.

    The environment dimension is fixed to d_A*d_B so that downstream
    constructions have deterministic dimensional bookkeeping.
    """
    d_a, d_b = ch.dim_in, ch.dim_out
    d_e = d_a * d_b
    ops = list(ch.kraus_ops)
    if len(ops) > d_e:
        reduced = channel_from_choi(choi_of_channel(ch), (d_a, d_b))
        ops = list(reduced.kraus_ops)
        if len(ops) > d_e:
            raise TooManyKraus(f"{len(ops)} Kraus operators exceed d_A*d_B = {d_e}")
    v = np.zeros((d_b, d_e, d_a), dtype=np.complex128)
    for l, k in enumerate(ops):
        v[:, l, :] = k
    v = v.reshape(d_b * d_e, d_a)
    return StinespringIsometry(v=v, dim_in=d_a, dim_out=d_b, dim_env=d_e)


def complementary_channel(ch: KrausChannel, label_env: str = "E") -> KrausChannel:
    """Channel to the environment of the Stinespring dilation, X -> tr_B[V X V^dagger]."""
    iso = stinespring_dilation(ch)
    vt = iso.v.reshape(iso.dim_out, iso.dim_env, iso.dim_in)
    ops = tuple(vt[b] for b in range(iso.dim_out))
    return KrausChannel(
        kraus_ops=ops,
        dim_in=ch.dim_in,
        dim_out=iso.dim_env,
        label_in=ch.label_in,
        label_out=label_env,
    )


def choi_of_channel(ch: KrausChannel) -> np.ndarray:
    """Choi matrix sum_ij |i><j| tensor N(|i><j|), input factor first."""
    d_in, d_out = ch.dim_in, ch.dim_out
    c = np.zeros((d_in * d_out, d_in * d_out), dtype=np.complex128)
    for k in ch.kraus_ops:
        w = k.T.reshape(-1)
        c += np.outer(w, w.conj())
    return c


def channel_from_choi(
    c, dims: tuple[int, int], label_in="A", label_out="B", tol: float = CHOI_TOL
) -> KrausChannel:
    """Recover a Kraus channel from a Choi matrix (input factor first)."""
    d_in, d_out = dims
    c = as_cmatrix(c)
    if c.shape != (d_in * d_out, d_in * d_out):
        raise DimensionMismatch(f"Choi matrix is {c.shape}, dims {dims} need {d_in * d_out}")
    eig = herm_eig(c, tol=tol)
    w = eig.eigenvalues
    if w[-1] < -tol * max(1.0, float(w[0])):
        raise NotPsd(f"Choi matrix has eigenvalue {w[-1]:.3e}")
    tr_out = matcore.partial_trace(c, (d_in, d_out), keep=0)
    residual = float(np.linalg.norm(tr_out - np.eye(d_in)))
    if residual > tol * math.sqrt(d_in):
        raise NotTracePreserving(
            f"Choi partial trace deviates from identity by {residual:.3e}", residual=residual
        )
    cut = RANK_CUT * max(float(w[0]), 0.0)
    ops = []
    for lam, vec in zip(w, eig.eigenvectors.T):
        if lam > cut:
            ops.append(math.sqrt(lam) * vec.reshape(d_in, d_out).T)
    if not ops:
        raise NotPsd("Choi matrix is numerically zero")
    return KrausChannel(
        kraus_ops=tuple(ops),
        dim_in=d_in,
        dim_out=d_out,
        label_in=label_in,
        label_out=label_out,
    )


@dataclass(frozen=True, eq=False)
class PurifiedSource:
    """A source state with its canonical purification |rho>_{RA} and Schmidt data.

    The reference system R has dimension equal to the numerical rank of the
    state; its Schmidt basis is the computational basis of R and the A-side
    Schmidt basis consists of eigenvectors of the state, eigenvalues
    descending.
    """

    rho: DensityOperator
    vector: np.ndarray  # unit vector on R tensor A
    schmidt_coeffs: np.ndarray  # probabilities, descending
    basis_r: np.ndarray  # d_R x d_R (identity by convention)
    basis_a: np.ndarray  # d_A x d_R, orthonormal columns
    label_r: str = "R"

    @property
    def rank(self) -> int:
        return int(self.schmidt_coeffs.size)

    @property
    def dim_a(self) -> int:
        return self.rho.dim


def purify(rho: DensityOperator, label_r: str = "R") -> PurifiedSource:
    """Canonical purification in the eigenbasis of the state."""
    eig = herm_eig(rho.matrix)
    w = eig.eigenvalues
    cut = RANK_CUT * max(float(w[0]), 0.0)
    kept = w > cut
    lam = np.clip(w[kept].real, 0.0, None)
    lam = lam / lam.sum()
    basis_a = eig.eigenvectors[:, kept]
    d_r = int(lam.size)
    vec = (basis_a * np.sqrt(lam)).T.reshape(-1)  # index (r, a), row-major
    return PurifiedSource(
        rho=rho,
        vector=vec,
        schmidt_coeffs=lam,
        basis_r=np.eye(d_r, dtype=np.complex128),
        basis_a=basis_a,
        label_r=label_r,
    )


def channel_on_purification(pur: PurifiedSource, ch: KrausChannel) -> DensityOperator:
    """Send the A part of |rho><rho|_{RA} through a channel; returns the RB state."""
    if ch.dim_in != pur.dim_a:
        raise DimensionMismatch(f"channel input {ch.dim_in} != source dim {pur.dim_a}")
    d_r = pur.rank
    psi = pur.vector.reshape(d_r, pur.dim_a)
    out = np.zeros((d_r * ch.dim_out, d_r * ch.dim_out), dtype=np.complex128)
    for k in ch.kraus_ops:
        branch = (psi @ k.T).reshape(-1)
        out += np.outer(branch, branch.conj())
    return DensityOperator(
        matrix=out, dims=(d_r, ch.dim_out), labels=(pur.label_r, ch.label_out)
    )


def entanglement_fidelity_direct(rho: DensityOperator, ch: KrausChannel) -> float:
    """Entanglement fidelity <rho| (id tensor M)(|rho><rho|) |rho>.

    Computed from the canonical purification; the value is invariant under
    the choice of purification.
    """
    if ch.dim_in != ch.dim_out or ch.dim_in != rho.dim:
        raise DimensionMismatch("channel must be endomorphic on the source system")
    pur = purify(rho)
    out = channel_on_purification(pur, ch)
    val = np.vdot(pur.vector, out.matrix @ pur.vector)
    return float(min(1.0, max(0.0, val.real)))


def make_channel(kind: str, p: float = 0.0, n: int = 1) -> KrausChannel:
    """Named single-qubit channel families, optionally tensor-powered.

    ``kind`` is one of ``bitflip``, ``amplitude_damping``, ``identity``,
    ``depolarizing``; ``p`` is the noise parameter in [0, 1].
    """
    if not 0.0 <= p <= 1.0:
        raise InvalidParameter(f"noise parameter must be in [0, 1], got {p}")
    eye = _PAULI["I"]
    if kind == "bitflip":
        ops = [math.sqrt(1 - p) * eye, math.sqrt(p) * _PAULI["X"]]
    elif kind == "amplitude_damping":
        k0 = np.array([[1, 0], [0, math.sqrt(1 - p)]], dtype=np.complex128)
        k1 = np.array([[0, math.sqrt(p)], [0, 0]], dtype=np.complex128)
        ops = [k0, k1]
    elif kind == "identity":
        ops = [eye]
    elif kind == "depolarizing":
        ops = [
            math.sqrt(1 - 3 * p / 4) * eye,
            math.sqrt(p / 4) * _PAULI["X"],
            math.sqrt(p / 4) * _PAULI["Y"],
            math.sqrt(p / 4) * _PAULI["Z"],
        ]
    else:
        raise InvalidParameter(f"unknown channel kind {kind!r}")
    ops = [k for k in ops if np.linalg.norm(k) > 0]
    ch = kraus_channel(ops, label_in="A", label_out="B")
    if n > 1:
        ch = tensor_power(ch, n)
        validate_cptp(ch)
    return ch


def pauli_string(s: str) -> np.ndarray:
    """Tensor product of single-qubit Paulis, e.g. ``"XZZXI"``."""
    out = None
    for c in s:
        out = _PAULI[c] if out is None else np.kron(out, _PAULI[c])
    return out


_FIVEQUBIT_STABILIZERS = ("XZZXI", "IXZZX", "XIXZZ", "ZXIXZ")


def code_logical_states(kind: str) -> tuple[np.ndarray, np.ndarray, int]:
    """Logical |0_L>, |1_L> and qubit count for the named code."""
    if kind == "bitflip3":
        zero = np.zeros(8, dtype=np.complex128)
        one = np.zeros(8, dtype=np.complex128)
        zero[0b000] = 1.0
        one[0b111] = 1.0
        return zero, one, 3
    if kind == "lncy4":
        zero = np.zeros(16, dtype=np.complex128)
        one = np.zeros(16, dtype=np.complex128)
        zero[0b0000] = zero[0b1111] = 1 / math.sqrt(2)
        one[0b0011] = one[0b1100] = 1 / math.sqrt(2)
        return zero, one, 4
    if kind == "fivequbit":
        # Project |00000> onto the code space of the standard cyclic
        # stabilizer generators; the logical X is X^{tensor 5}.
        vec = np.zeros(32, dtype=np.complex128)
        vec[0] = 1.0
        for s in _FIVEQUBIT_STABILIZERS:
            vec = (vec + pauli_string(s) @ vec) / 2
        zero = vec / np.linalg.norm(vec)
        one = pauli_string("XXXXX") @ zero
        return zero, one, 5
    raise InvalidParameter(f"unknown code kind {kind!r}")


def make_code_source(kind: str) -> DensityOperator:
    """Maximally mixed state on the code space, (|0_L><0_L| + |1_L><1_L|)/2."""
    zero, one, _ = code_logical_states(kind)
    m = (np.outer(zero, zero.conj()) + np.outer(one, one.conj())) / 2
    return density_operator(m)
