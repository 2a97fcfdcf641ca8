import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qptdetect.eigensolver import GroundState
from qptdetect.errors import NumericalIntegrityError
from qptdetect.rdm import anchor_rdms, check_density_matrix, rdm1, rdm2

from conftest import random_state


def reference_rdm(psi, keep):
    """Partial trace by explicit index loops (independent of the reshaping route).

    ``keep`` lists 1-based sites in slot order; output uses the up-first ordering.
    """
    n = int(np.log2(psi.size))
    k = len(keep)
    rho = np.zeros((1 << k, 1 << k), dtype=complex)
    for a in range(psi.size):
        for b in range(psi.size):
            rest_a = [(a >> (s - 1)) & 1 for s in range(1, n + 1) if s not in keep]
            rest_b = [(b >> (s - 1)) & 1 for s in range(1, n + 1) if s not in keep]
            if rest_a != rest_b:
                continue
            # slot index: bit value 1 (up) maps to row 0
            ia = sum((1 - ((a >> (s - 1)) & 1)) << (k - 1 - t) for t, s in enumerate(keep))
            ib = sum((1 - ((b >> (s - 1)) & 1)) << (k - 1 - t) for t, s in enumerate(keep))
            rho[ia, ib] += psi[a] * np.conj(psi[b])
    return rho


def test_rdm_matches_loop_reference(rng):
    psi = random_state(rng, 4)
    for i, j in [(1, 2), (2, 4), (4, 1), (3, 1)]:
        np.testing.assert_allclose(rdm2(psi, i, j).matrix, reference_rdm(psi, [i, j]), atol=1e-13)
    for i in range(1, 5):
        np.testing.assert_allclose(rdm1(psi, i).matrix, reference_rdm(psi, [i]), atol=1e-13)


def test_up_first_ordering():
    # site 1 up (bit set), site 2 down: |ud> in (uu, ud, du, dd)
    psi = np.zeros(4)
    psi[0b01] = 1.0
    m = rdm2(psi, 1, 2).matrix
    assert m[1, 1] == pytest.approx(1.0)
    assert rdm1(psi, 1).matrix[0, 0] == pytest.approx(1.0)
    assert rdm1(psi, 2).matrix[1, 1] == pytest.approx(1.0)


def test_anchor_rdms_agree_with_rdm2(rng):
    psi = random_state(rng, 5)
    many = anchor_rdms(psi, 3, [1, 2, 4, 5])
    for m, k in zip(many, [1, 2, 4, 5]):
        np.testing.assert_allclose(m.matrix, rdm2(psi, 3, k).matrix, atol=1e-14)


def test_partial_traces_consistent(rng):
    psi = random_state(rng, 5)
    m = rdm2(psi, 2, 5)
    np.testing.assert_allclose(m.trace_second(), rdm1(psi, 2).matrix, atol=1e-13)
    np.testing.assert_allclose(m.trace_first(), rdm1(psi, 5).matrix, atol=1e-13)


def test_site_validation(rng):
    psi = random_state(rng, 3)
    with pytest.raises(IndexError):
        rdm1(psi, 4)
    with pytest.raises(IndexError):
        rdm2(psi, 2, 2)
    with pytest.raises(ValueError):
        rdm1(np.ones(6), 1)


def test_integrity_check_rejects_bad_matrices():
    with pytest.raises(NumericalIntegrityError):
        check_density_matrix(np.diag([1.2, -0.2]))
    with pytest.raises(NumericalIntegrityError):
        check_density_matrix(np.array([[0.5, 0.1], [0.0, 0.5]]))
    with pytest.raises(NumericalIntegrityError):
        check_density_matrix(np.diag([0.5, 0.6]))
    with pytest.raises(NumericalIntegrityError):
        check_density_matrix(np.diag([np.nan, 1.0]))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 7), data=st.data())
def test_rdm_invariants(seed, n, data):
    psi = random_state(np.random.default_rng(seed), n)
    i = data.draw(st.integers(1, n))
    j = data.draw(st.integers(1, n).filter(lambda v: v != i))
    for m in (rdm1(psi, i).matrix, rdm2(psi, i, j).matrix):
        assert np.trace(m).real == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(m, m.conj().T, atol=1e-14)
        assert np.linalg.eigvalsh(m).min() > -1e-12
    # swapping the two sites permutes the slots
    a = rdm2(psi, i, j).matrix.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
    np.testing.assert_allclose(a, rdm2(psi, j, i).matrix, atol=1e-13)


def test_groundstate_input_equivalent_to_vector(rng):
    psi = random_state(rng, 4)
    gs = GroundState.from_vector(psi)
    np.testing.assert_allclose(rdm2(gs, 1, 3).matrix, rdm2(psi, 1, 3).matrix, atol=1e-14)
