import numpy as np
import pytest

from petzlab.errors import (
    DimensionMismatch,
    InvalidParameter,
    NotPsd,
    NotTracePreserving,
)
from petzlab.matcore import dag, kron, partial_trace
from petzlab.quantum import (
    DensityOperator,
    KrausChannel,
    adjoint_apply,
    apply_channel,
    apply_to_density,
    channel_from_choi,
    channel_on_purification,
    choi_of_channel,
    complementary_channel,
    density_operator,
    entanglement_fidelity_direct,
    kraus_channel,
    make_channel,
    make_code_source,
    code_logical_states,
    purify,
    stinespring_dilation,
    tensor_power,
    validate_cptp,
)

import oracles


def _random_channel(rng, d_in, d_out, n_kraus, **labels):
    return kraus_channel(oracles.random_kraus(rng, d_in, d_out, n_kraus), **labels)


# -- validate_cptp ------------------------------------------------------------


def test_validate_identity_channel():
    validate_cptp(kraus_channel([np.eye(2)]))


def test_validate_bitflip():
    validate_cptp(make_channel("bitflip", 0.3))


def test_validate_rejects_double_identity():
    ch = KrausChannel(kraus_ops=(np.eye(2), np.eye(2)), dim_in=2, dim_out=2)
    with pytest.raises(NotTracePreserving) as err:
        validate_cptp(ch)
    assert err.value.residual > 1.0


# -- apply_channel / adjoint --------------------------------------------------


def test_apply_identity():
    x = np.arange(4).reshape(2, 2).astype(complex)
    ch = kraus_channel([np.eye(2)])
    assert np.allclose(apply_channel(ch, x), x)


def test_apply_amplitude_damping_full():
    ch = make_channel("amplitude_damping", 1.0)
    rho = np.array([[0.3, 0.2], [0.2, 0.7]], dtype=complex)
    out = apply_channel(ch, rho)
    assert np.allclose(out, np.diag([1.0, 0.0]))


def test_apply_bitflip_by_hand():
    p = 0.3
    ch = make_channel("bitflip", p)
    zero = np.diag([1.0, 0.0]).astype(complex)
    out = apply_channel(ch, zero)
    assert np.allclose(out, np.diag([1 - p, p]))


def test_apply_on_labeled_slot(rng):
    rho_a = oracles.random_state(rng, 2)
    rho_b = oracles.random_state(rng, 3)
    state = DensityOperator(
        matrix=kron(rho_a, rho_b), dims=(2, 3), labels=("R", "A")
    )
    ch = _random_channel(rng, 3, 2, 2, label_in="A", label_out="B")
    out = apply_to_density(ch, state, acting_on="A")
    assert out.dims == (2, 2)
    assert out.labels == ("R", "B")
    assert np.allclose(out.marginal("R"), rho_a)


def test_adjoint_identity():
    y = np.arange(4).reshape(2, 2).astype(complex)
    assert np.allclose(adjoint_apply(kraus_channel([np.eye(2)]), y), y)


def test_adjoint_unital(rng):
    ch = _random_channel(rng, 3, 4, 2)
    assert np.allclose(adjoint_apply(ch, np.eye(4)), np.eye(3), atol=1e-10)


def test_adjoint_duality(rng):
    ch = _random_channel(rng, 3, 4, 2)
    x = oracles.random_psd(rng, 3)
    y = oracles.random_psd(rng, 4)
    lhs = np.trace(y @ apply_channel(ch, x))
    rhs = np.trace(adjoint_apply(ch, y) @ x)
    assert abs(lhs - rhs) <= 1e-10 * abs(lhs)


# -- tensor_power --------------------------------------------------------------


def test_tensor_power_identity():
    ch = tensor_power(kraus_channel([np.eye(2)]), 3)
    assert ch.dim_in == 8
    x = np.arange(64).reshape(8, 8).astype(complex)
    assert np.allclose(apply_channel(ch, x), x)


def test_tensor_power_bitflip_weights():
    p = 0.3
    ch = tensor_power(make_channel("bitflip", p), 2)
    weights = sorted(np.trace(k @ dag(k)).real / 4 for k in ch.kraus_ops)
    assert np.allclose(weights, sorted([(1 - p) ** 2, p * (1 - p), p * (1 - p), p**2]))


def test_tensor_power_amplitude_damping_cptp():
    ch = tensor_power(make_channel("amplitude_damping", 0.37), 4)
    assert len(ch.kraus_ops) == 16
    validate_cptp(ch)


def test_tensor_power_matches_iterated_kron(rng):
    base = make_channel("amplitude_damping", 0.2)
    ch3 = tensor_power(base, 3)
    x = oracles.random_psd(rng, 8)
    by_slots = x
    for slot in range(3):
        by_slots = apply_channel(base, by_slots, dims=(2, 2, 2), acting_on=slot)
    assert np.linalg.norm(apply_channel(ch3, x) - by_slots) <= 1e-9


def test_tensor_power_invalid():
    with pytest.raises(InvalidParameter):
        tensor_power(make_channel("bitflip", 0.1), 0)


# -- Stinespring and complementary channel ------------------------------------


def test_stinespring_identity_qubit():
    iso = stinespring_dilation(kraus_channel([np.eye(2)]))
    assert iso.dim_env == 4
    assert np.allclose(dag(iso.v) @ iso.v, np.eye(2), atol=1e-12)


def test_stinespring_amplitude_damping_active_slots():
    iso = stinespring_dilation(make_channel("amplitude_damping", 0.5))
    assert iso.dim_env == 4
    vt = iso.v.reshape(2, 4, 2)
    active = [l for l in range(4) if np.linalg.norm(vt[:, l, :]) > 0]
    assert active == [0, 1]


def test_stinespring_reconstructs_channel(rng):
    ch = make_channel("bitflip", 0.3)
    iso = stinespring_dilation(ch)
    for i in range(2):
        for j in range(2):
            basis = np.zeros((2, 2), dtype=complex)
            basis[i, j] = 1.0
            big = iso.v @ basis @ dag(iso.v)
            rec = partial_trace(big, (2, iso.dim_env), keep=0)
            assert np.linalg.norm(rec - apply_channel(ch, basis)) <= 1e-10


def test_complementary_of_identity_is_constant(rng):
    comp = complementary_channel(kraus_channel([np.eye(2)]))
    x = oracles.random_state(rng, 2)
    out = apply_channel(comp, x)
    expected = np.zeros((4, 4), dtype=complex)
    expected[0, 0] = 1.0
    assert np.allclose(out, expected, atol=1e-12)
    assert np.linalg.matrix_rank(out) == 1


def test_complementary_consistency(rng):
    ch = _random_channel(rng, 3, 2, 3)
    comp = complementary_channel(ch)
    iso = stinespring_dilation(ch)
    x = oracles.random_psd(rng, 3)
    big = iso.v @ x @ dag(iso.v)
    assert np.linalg.norm(
        partial_trace(big, (2, iso.dim_env), keep=0) - apply_channel(ch, x)
    ) <= 1e-9
    assert np.linalg.norm(
        partial_trace(big, (2, iso.dim_env), keep=1) - apply_channel(comp, x)
    ) <= 1e-9


def test_complementary_preserves_trace(rng):
    comp = complementary_channel(make_channel("amplitude_damping", 0.4))
    x = oracles.random_psd(rng, 2)
    assert np.trace(apply_channel(comp, x)) == pytest.approx(np.trace(x).real)


# -- Choi ----------------------------------------------------------------------


def test_choi_identity_channel():
    c = choi_of_channel(kraus_channel([np.eye(2)]))
    phi = np.array([1, 0, 0, 1], dtype=complex)
    assert np.allclose(c, np.outer(phi, phi))
    assert np.trace(c).real == pytest.approx(2.0)
    assert np.linalg.matrix_rank(c) == 1


def test_choi_fully_depolarizing():
    c = choi_of_channel(make_channel("depolarizing", 1.0))
    assert np.allclose(c, np.eye(4) / 2, atol=1e-12)


def test_choi_round_trip(rng):
    ch = make_channel("bitflip", 0.2)
    back = channel_from_choi(choi_of_channel(ch), (2, 2))
    for i in range(2):
        for j in range(2):
            basis = np.zeros((2, 2), dtype=complex)
            basis[i, j] = 1.0
            assert np.linalg.norm(
                apply_channel(back, basis) - apply_channel(ch, basis)
            ) <= 1e-9


def test_channel_from_choi_rejects_bad_input():
    with pytest.raises(NotPsd):
        channel_from_choi(np.diag([1.0, 1.0, 1.0, -1.0]), (2, 2))
    with pytest.raises(NotTracePreserving):
        channel_from_choi(np.eye(4), (2, 2))


# -- purification --------------------------------------------------------------


def test_purify_pure_state():
    pur = purify(density_operator(np.diag([1.0, 0.0])))
    assert pur.rank == 1
    assert np.allclose(np.abs(pur.vector), [1.0, 0.0])


def test_purify_maximally_mixed():
    pur = purify(density_operator(np.eye(2) / 2))
    assert pur.rank == 2
    assert np.allclose(pur.schmidt_coeffs, [0.5, 0.5])


def test_purify_code_source():
    rho = make_code_source("bitflip3")
    pur = purify(rho)
    assert pur.rank == 2
    proj = np.outer(pur.vector, pur.vector.conj())
    rec = partial_trace(proj, (2, 8), keep=1)
    assert np.linalg.norm(rec - rho.matrix) <= 1e-12


def test_purification_invariance_of_entanglement_fidelity(rng):
    # fidelity from a rotated purification matches the canonical one
    for _ in range(20):
        rho = density_operator(oracles.random_state(rng, 3))
        ch = _random_channel(rng, 3, 3, 2)
        direct = entanglement_fidelity_direct(rho, ch)
        pur = purify(rho)
        g = rng.standard_normal((pur.rank, pur.rank)) + 1j * rng.standard_normal(
            (pur.rank, pur.rank)
        )
        u = np.linalg.qr(g)[0]
        rotated = (kron(u, np.eye(3)) @ pur.vector).reshape(pur.rank, 3)
        out = np.zeros((pur.rank * 3, pur.rank * 3), dtype=complex)
        for k in ch.kraus_ops:
            branch = (rotated @ k.T).reshape(-1)
            out += np.outer(branch, branch.conj())
        alt = np.vdot(rotated.reshape(-1), out @ rotated.reshape(-1)).real
        assert abs(direct - alt) <= 1e-10


# -- named channels and codes ---------------------------------------------------


def test_bitflip_zero_is_identity(rng):
    ch = make_channel("bitflip", 0.0)
    x = oracles.random_psd(rng, 2)
    assert np.allclose(apply_channel(ch, x), x)


def test_amplitude_damping_kraus_forms():
    p = 0.36
    ch = make_channel("amplitude_damping", p)
    k0, k1 = ch.kraus_ops
    assert np.allclose(k0, np.diag([1.0, np.sqrt(1 - p)]))
    expected = np.zeros((2, 2))
    expected[0, 1] = np.sqrt(p)
    assert np.allclose(k1, expected)


def test_depolarizing_full():
    ch = make_channel("depolarizing", 1.0)
    for m in (np.diag([1.0, 0.0]), np.array([[0.5, 0.5], [0.5, 0.5]])):
        assert np.allclose(apply_channel(ch, m.astype(complex)), np.eye(2) / 2, atol=1e-12)


def test_make_channel_rejects_bad_parameter():
    with pytest.raises(InvalidParameter):
        make_channel("bitflip", 1.5)
    with pytest.raises(InvalidParameter):
        make_channel("unknown", 0.5)


def test_bitflip3_source_support():
    rho = make_code_source("bitflip3")
    support = np.flatnonzero(np.abs(np.diag(rho.matrix)) > 1e-12)
    assert list(support) == [0b000, 0b111]
    assert np.trace(rho.matrix).real == pytest.approx(1.0)


def test_lncy4_logical_amplitudes():
    zero, one, _ = code_logical_states("lncy4")
    amp = 1 / np.sqrt(2)
    assert zero[0b0000] == pytest.approx(amp)
    assert zero[0b1111] == pytest.approx(amp)
    assert one[0b0011] == pytest.approx(amp)
    assert one[0b1100] == pytest.approx(amp)


def test_fivequbit_knill_laflamme():
    zero, one, n = code_logical_states("fivequbit")
    assert abs(np.vdot(zero, one)) <= 1e-12
    errors = oracles.single_qubit_errors(n)
    assert len(errors) == 16
    assert oracles.knill_laflamme_violation(zero, one, errors) <= 1e-10


def test_code_source_rank_two():
    for kind in ("bitflip3", "lncy4", "fivequbit"):
        rho = make_code_source(kind)
        assert np.linalg.matrix_rank(rho.matrix, tol=1e-10) == 2


# -- entanglement fidelity -------------------------------------------------------


def test_ef_identity_channel(rng):
    rho = density_operator(oracles.random_state(rng, 3))
    assert entanglement_fidelity_direct(rho, kraus_channel([np.eye(3)])) == pytest.approx(1.0)


def test_ef_depolarizing_maximally_mixed():
    rho = density_operator(np.eye(2) / 2)
    assert entanglement_fidelity_direct(rho, make_channel("depolarizing", 1.0)) == pytest.approx(
        0.25, abs=1e-12
    )


def test_ef_amplitude_damping_no_decoder():
    rho = density_operator(np.eye(2) / 2)
    ch = make_channel("amplitude_damping", 0.36)
    val = entanglement_fidelity_direct(rho, ch)
    # Kraus-trace identity: F_e = sum_k |tr(rho K_k)|^2
    oracle = sum(abs(np.trace(rho.matrix @ k)) ** 2 for k in ch.kraus_ops)
    assert val == pytest.approx(0.81, abs=1e-12)
    assert val == pytest.approx(oracle, abs=1e-12)


def test_ef_requires_endomorphic():
    rho = density_operator(np.eye(2) / 2)
    ch = KrausChannel(kraus_ops=(np.zeros((3, 2), dtype=complex),), dim_in=2, dim_out=3)
    with pytest.raises(DimensionMismatch):
        entanglement_fidelity_direct(rho, ch)


def test_bitflip3_perfect_at_zero_noise():
    rho = make_code_source("bitflip3")
    ch = make_channel("bitflip", 0.0, n=3)
    assert entanglement_fidelity_direct(rho, ch) == pytest.approx(1.0, abs=1e-10)


def test_channel_on_purification_marginals(rng):
    rho = density_operator(oracles.random_state(rng, 3))
    ch = _random_channel(rng, 3, 2, 2)
    srb = channel_on_purification(purify(rho), ch)
    assert srb.dims == (3, 2)
    assert srb.labels == ("R", "B")
    assert np.allclose(srb.marginal("B"), apply_channel(ch, rho.matrix), atol=1e-10)
    assert np.trace(srb.matrix).real == pytest.approx(1.0, abs=1e-10)


def test_stinespring_reduces_redundant_kraus(rng):
    # six redundant Kraus operators for a qubit channel still dilate into d_E = 4
    base = make_channel("depolarizing", 0.5)
    redundant = [k / np.sqrt(2) for k in base.kraus_ops] + [
        k / np.sqrt(2) for k in base.kraus_ops
    ]
    ch = kraus_channel(redundant)
    assert len(ch.kraus_ops) == 8
    iso = stinespring_dilation(ch)
    assert iso.dim_env == 4
    assert np.allclose(dag(iso.v) @ iso.v, np.eye(2), atol=1e-10)
    x = oracles.random_psd(rng, 2)
    big = iso.v @ x @ dag(iso.v)
    assert np.linalg.norm(
        partial_trace(big, (2, 4), keep=0) - apply_channel(ch, x)
    ) <= 1e-9
