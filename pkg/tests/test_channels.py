import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qovk import channels, clinalg, qstates
from qovk.errors import DomainError, ValidityError


def test_identity_and_trivial_pauli(rng):
    rho = qstates.random_density(2, 2, rng)
    np.testing.assert_allclose(channels.apply(channels.identity_channel(2), rho), rho)
    np.testing.assert_allclose(channels.apply(channels.pauli_channel([1, 0, 0, 0]), rho), rho, atol=1e-15)


def test_bit_flip():
    out = channels.apply(channels.pauli_channel([0, 1, 0, 0]), np.diag([1, 0]))
    np.testing.assert_allclose(out, np.diag([0, 1]), atol=1e-15)


def test_kraus_and_choi_application_agree(rng):
    for dim in (2, 4):
        ch = channels.random_pauli_channel(dim, rng)
        ch_j = channels.QuantumChannel(dim, dim, choi=channels.to_choi(ch))
        rho = qstates.random_density(dim, dim, rng)
        np.testing.assert_allclose(channels.apply(ch, rho), channels.apply(ch_j, rho), atol=1e-13)


def test_choi_examples():
    j = channels.to_choi(channels.identity_channel(2))
    expect = np.zeros((4, 4))
    for i in (0, 3):
        for k in (0, 3):
            expect[i, k] = 1
    np.testing.assert_allclose(j, expect)
    np.testing.assert_allclose(channels.to_choi(channels.depolarizing_channel(2, 1.0)), np.eye(4) / 2, atol=1e-15)


def test_choi_matches_definition_for_rectangular_kraus(rng):
    # isometry C^2 -> C^3 plus explicit sum over matrix units
    v = np.linalg.qr(rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2)))[0]
    ch = channels.kraus_channel([v])
    expect = np.zeros((6, 6), dtype=complex)
    for i in range(2):
        for j in range(2):
            e = np.zeros((2, 2)); e[i, j] = 1
            expect += np.kron(e, v @ e @ v.conj().T)
    np.testing.assert_allclose(channels.to_choi(ch), expect, atol=1e-14)
    assert channels.tp_deviation(ch) <= 1e-12


def test_choi_kraus_roundtrip(rng):
    for dim in (2, 4):
        ch = channels.random_pauli_channel(dim, rng)
        j = channels.to_choi(ch)
        back = channels.to_kraus(channels.from_choi(j, dim, dim))
        assert clinalg.max_abs(channels.to_choi(back) - j) <= 1e-10
        rho = qstates.random_density(dim, dim, rng)
        assert clinalg.max_abs(channels.apply(back, rho) - channels.apply(ch, rho)) <= 1e-10


def test_from_choi_reports_invalid_matrix():
    with pytest.raises(ValidityError) as info:
        channels.from_choi(np.eye(4), 2, 2)
    assert info.value.diagnostics["tp_deviation"] == pytest.approx(1.0)
    with pytest.raises(ValidityError):
        channels.from_choi(np.diag([1.0, 0, 0, -0.5]), 2, 2)


def test_recovery_error_example():
    err = channels.recovery_error(channels.identity_channel(2), channels.depolarizing_channel(2, 1.0))
    assert err == pytest.approx(np.sqrt(3), abs=1e-12)
    assert channels.recovery_error(channels.identity_channel(2), channels.identity_channel(2)) == 0.0


def test_all_generated_channels_trace_preserving():
    rng = np.random.default_rng(9)
    for _ in range(30):
        for dim in (2, 4):
            ch = channels.random_pauli_channel(dim, rng)
            assert channels.tp_deviation(ch) <= 1e-10
            rho = qstates.random_density(dim, dim, rng)
            assert abs(np.trace(channels.apply(ch, rho)) - 1) <= 1e-10
    for lam in (0.0, 0.3, 1.0):
        assert channels.tp_deviation(channels.depolarizing_channel(4, lam)) <= 1e-10


def test_depolarize_examples():
    rho = np.diag([1.0, 0.0])
    np.testing.assert_allclose(channels.depolarize(rho, 0.0), rho)
    np.testing.assert_allclose(channels.depolarize(rho, 1.0), np.eye(2) / 2)
    with pytest.raises(DomainError):
        channels.depolarize(rho, 1.5)


def test_depolarizing_kraus_matches_formula(rng):
    rho = qstates.random_density(4, 4, rng)
    ch = channels.depolarizing_channel(4, 0.37)
    np.testing.assert_allclose(channels.apply(ch, rho), channels.depolarize(rho, 0.37), atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1), st.integers(0, 2 ** 32 - 1))
def test_depolarize_contraction_identity(lam, seed):
    rng = np.random.default_rng(seed)
    rho = qstates.random_density(2, 2, rng)
    d = channels.depolarize(rho, lam)
    lhs = clinalg.frobenius_norm(d - np.eye(2) / 2)
    rhs = (1 - lam) * clinalg.frobenius_norm(rho - np.eye(2) / 2)
    assert abs(lhs - rhs) <= 1e-12


def test_probe_states_are_complete_densities():
    for dim in (2, 4):
        probes = channels.probe_states(dim)
        assert len(probes) == dim * dim
        assert all(clinalg.is_density(p) for p in probes)
        assert np.linalg.matrix_rank(np.stack([p.ravel() for p in probes])) == dim * dim


def test_reconstruct_exact_channel(rng):
    for dim in (2, 4):
        ch = channels.random_pauli_channel(dim, rng)
        cand = channels.reconstruct_channel(lambda r: channels.apply(ch, r), dim)
        assert channels.recovery_error(ch, cand) <= 1e-10
        assert cand.report["valid"]


def test_reconstruct_constant_predictor():
    cand = channels.reconstruct_channel(lambda r: np.eye(2) / 2 * np.trace(r), 2)
    np.testing.assert_allclose(cand.choi, np.eye(4) / 2, atol=1e-14)


def test_reconstruct_perturbed_predictor(rng):
    ch = channels.random_pauli_channel(2, rng)
    noise = 1e-6 * (rng.standard_normal((2, 2)))
    cand = channels.reconstruct_channel(lambda r: channels.apply(ch, r) + noise, 2)
    assert channels.recovery_error(ch, cand) <= 1e-4


def test_reconstruct_reports_invalid_candidate():
    cand = channels.reconstruct_channel(lambda r: -r, 2)
    assert not cand.report["valid"]
    assert cand.report["min_eigenvalue"] < 0


def test_channel_json_roundtrip(rng):
    ch = channels.random_pauli_channel(2, rng)
    for c in (ch, channels.QuantumChannel(2, 2, choi=channels.to_choi(ch))):
        back = channels.channel_from_json(channels.channel_to_json(c))
        assert back.rep == c.rep
        assert channels.recovery_error(c, back) == 0.0
