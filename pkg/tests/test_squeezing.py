import numpy as np
import pytest

from tmsv.fockspace import CompositeSpace, basis, mode, partial_trace
from tmsv.model import EffectiveParams
from tmsv.observables import epr_variance, populations
from tmsv.squeezing import (
    CutoffInsufficientError,
    bogoliubov_check,
    interior_mask,
    leak_padding,
    mode_squeeze_matrix,
    select_cutoff,
    squeeze_columns,
    squeeze_operator,
    tail_mass,
    target_state,
    tmsv_amplitudes,
    tmsv_state,
)

MODES = lambda n: CompositeSpace((mode(n), mode(n)))  # noqa: E731


def test_cutoff_rule():
    assert select_cutoff(0.75) == 16
    assert tail_mass(0.75, 16) <= 1e-4 < tail_mass(0.75, 15)
    # r^(2(N+1)) <= 1e-4 already holds at N = 6 for r = 0.5
    assert select_cutoff(0.5) == 6
    assert tail_mass(0.5, 6) == pytest.approx(0.5**14)
    assert select_cutoff(0.0, minimum=2) == 2
    with pytest.raises(ValueError):
        select_cutoff(1.0)


def test_squeeze_operator_zero_is_identity():
    space = CompositeSpace.canonical(4)
    np.testing.assert_array_equal(squeeze_operator(0.0, space).matrix, np.eye(space.dim))


def test_squeeze_operator_inverse_on_low_occupation():
    n, zeta = 16, np.arctanh(0.5)
    prod = (mode_squeeze_matrix(zeta, n, n) @ mode_squeeze_matrix(-zeta, n, n)).toarray()
    low = interior_mask(n, n // 2)
    np.testing.assert_allclose(prod[np.ix_(low, low)], np.eye(low.sum()), atol=1e-6)


@pytest.mark.parametrize("ratio", [0.3, 0.5])
def test_squeezed_vacuum_amplitudes(ratio):
    n = 16
    zeta = np.arctanh(ratio)
    col = (mode_squeeze_matrix(zeta, n, n) @ np.eye((n + 1) ** 2)[:, 0]).reshape(n + 1, n + 1)
    k = np.arange(n // 2 + 1)
    np.testing.assert_allclose(col[k, k], (-ratio) ** k / np.cosh(zeta), atol=1e-6)
    off = col - np.diag(np.diag(col))
    assert np.abs(off).max() < 1e-8


def test_squeeze_columns_match_matrix():
    n, zeta = 6, 0.4
    S = mode_squeeze_matrix(zeta, n, n).toarray()
    states = [(0, 0), (2, 1), (1, 3), (6, 6)]
    cols = squeeze_columns(zeta, n, states)
    for j, (a, b) in enumerate(states):
        np.testing.assert_allclose(cols[:, j], S[:, a * (n + 1) + b], atol=1e-14)


def test_squeeze_operator_acts_on_modes_only():
    space = CompositeSpace.canonical(3)
    S = squeeze_operator(0.5, space).matrix
    # qubit indices are the leading factors, so S is block-diagonal over them
    block = 16
    for q in range(4):
        for p in range(4):
            sub = S[q * block:(q + 1) * block, p * block:(p + 1) * block]
            if p != q:
                assert np.abs(sub).max() == 0
            else:
                np.testing.assert_array_equal(sub, S[:block, :block])


def test_squeeze_guard():
    with pytest.raises(ValueError):
        squeeze_operator(-0.1, CompositeSpace.canonical(2))
    with pytest.raises(ValueError):
        squeeze_operator(20.0, CompositeSpace.canonical(2))


def test_tmsv_zero_is_vacuum():
    np.testing.assert_array_equal(tmsv_state(0.0, MODES(3)).vector, basis(MODES(3), (0, 0)).vector)


def test_tmsv_photon_distribution():
    zeta, n = np.arctanh(0.6), 30
    lam = np.tanh(zeta)
    reduced = partial_trace(tmsv_state(zeta, MODES(n)).dm(), [0]).matrix
    k = np.arange(n + 1)
    np.testing.assert_allclose(np.diag(reduced).real, (1 - lam**2) * lam ** (2 * k), atol=1e-12)


def test_tmsv_mean_photons():
    zeta = np.arctanh(0.75)
    assert np.sinh(zeta) ** 2 == pytest.approx(0.75**2 / (1 - 0.75**2))
    space = CompositeSpace.canonical(60)
    pops = populations(target_state(zeta, space))
    assert pops["n1"] == pytest.approx(1.2857, abs=1e-4)
    assert pops["n2"] == pytest.approx(pops["n1"], abs=1e-12)


def test_tmsv_insufficient_cutoff():
    with pytest.raises(CutoffInsufficientError):
        tmsv_state(np.arctanh(0.75), MODES(8))
    with pytest.raises(ValueError):
        tmsv_state(0.3, CompositeSpace.canonical(3))


def test_target_state_without_squeezing():
    space = CompositeSpace.canonical(3)
    np.testing.assert_array_equal(target_state(0.0, space).vector, basis(space, (0, 0, 0, 0)).vector)


def test_target_qubits_in_ground_state():
    space = CompositeSpace.canonical(16)
    qubits = partial_trace(target_state(np.arctanh(0.75), space).dm(), [0, 1]).matrix
    expected = np.zeros((4, 4))
    expected[0, 0] = 1
    np.testing.assert_allclose(qubits, expected, atol=1e-15)


def test_target_variance():
    zeta = np.arctanh(0.75)
    space = CompositeSpace.canonical(select_cutoff(0.75))
    assert epr_variance(target_state(zeta, space)) == pytest.approx(0.2857, abs=1e-3)


def test_amplitudes_series():
    amps = tmsv_amplitudes(np.arctanh(0.5), 200)
    assert np.sum(amps**2) == pytest.approx(1.0, abs=1e-14)


def test_bogoliubov_without_squeezing():
    rep = bogoliubov_check(EffectiveParams.from_thetas(40, 0), 8)
    assert rep.interior_deviation == 0
    assert rep.boundary_deviation == 0


def test_bogoliubov_identity_headline():
    rep = bogoliubov_check(EffectiveParams.from_thetas(40, 30), 16)
    assert rep.interior_deviation < 1e-4
    # truncating S at the cutoff itself spoils the identity near the boundary
    assert rep.boundary_deviation > 1e3 * rep.interior_deviation
    assert rep.working_cutoff > 16


def test_leak_padding_bound():
    pad = leak_padding(0.75, 12)
    assert pad > 0
    assert leak_padding(0.0, 12) == 0
    # the columns of the padded S keep unit norm when restricted to the padded space
    cols = squeeze_columns(np.arctanh(0.75), 12 + pad, [(12, 12)])
    assert np.linalg.norm(cols) == pytest.approx(1.0, abs=1e-12)
