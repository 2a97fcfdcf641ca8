import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qptdetect.eigensolver import GroundState
from qptdetect.measures import (
    DiscordConfig,
    TauConfig,
    binary_entropy,
    concurrence,
    conditional_entropy,
    eof,
    one_vs_rest,
    pair_eofs,
    quantum_discord,
    tau_sef,
    vn_entropy,
)
from qptdetect.rdm import rdm1

from conftest import random_state

BELL = np.array([[0.5, 0, 0, 0.5], [0, 0, 0, 0], [0, 0, 0, 0], [0.5, 0, 0, 0.5]])
SINGLET = np.outer([0, 1, -1, 0], [0, 1, -1, 0]) / 2


def werner(p):
    return p * SINGLET + (1 - p) * np.eye(4) / 4


def werner_discord(p):
    # closed form for the Werner family (bits)
    def xlog(x):
        return x * math.log2(x) if x > 0 else 0.0
    return 0.25 * (xlog(1 - p) - 2 * xlog(1 + p) + xlog(1 + 3 * p))


def random_unitary(rng, d=2):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_mixed(rng, rank=4):
    a = rng.standard_normal((4, rank)) + 1j * rng.standard_normal((4, rank))
    m = a @ a.conj().T
    return m / np.trace(m).real


def test_bell_state_values():
    assert concurrence(BELL) == pytest.approx(1.0)
    assert eof(BELL) == pytest.approx(1.0)
    assert quantum_discord(BELL) == pytest.approx(1.0, abs=1e-9)
    assert vn_entropy(BELL) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("p", [0.0, 0.2, 1 / 3, 0.5, 0.8, 1.0])
def test_werner_concurrence(p):
    assert concurrence(werner(p)) == pytest.approx(max(0.0, (3 * p - 1) / 2), abs=1e-7)


@pytest.mark.parametrize("p", [0.1, 0.3, 0.6, 0.9])
def test_werner_discord_closed_form(p):
    assert quantum_discord(werner(p)) == pytest.approx(werner_discord(p), abs=1e-8)


def test_product_and_classical_states_have_zero_discord():
    a = np.diag([0.7, 0.3])
    b = np.array([[0.6, 0.2], [0.2, 0.4]])
    assert quantum_discord(np.kron(a, b)) == pytest.approx(0.0, abs=1e-9)
    # classical on the measured (second) qubit
    cq = 0.5 * np.kron(np.diag([1, 0]) * 0.0 + b, np.diag([1, 0])) + \
        0.5 * np.kron(a, np.diag([0, 1]))
    assert quantum_discord(cq) == pytest.approx(0.0, abs=1e-9)
    assert concurrence(np.kron(a, b)) == 0.0


@pytest.mark.parametrize("theta", [0.1, 0.4, math.pi / 4])
def test_pure_two_qubit_state(theta):
    psi = np.array([math.cos(theta), 0, 0, math.sin(theta)])
    rho = np.outer(psi, psi)
    assert concurrence(rho) == pytest.approx(abs(math.sin(2 * theta)), abs=1e-7)
    assert eof(rho) == pytest.approx(binary_entropy(math.cos(theta) ** 2), abs=1e-7)


def test_entropy_base():
    rho = np.diag([0.5, 0.25, 0.25, 0.0])
    assert vn_entropy(rho, 2) == pytest.approx(1.5)
    assert vn_entropy(rho, math.e) == pytest.approx(1.5 * math.log(2))


def test_conditional_entropy_vectorized():
    rho = werner(0.4)
    th = np.linspace(0, 1.5, 5)
    grid = conditional_entropy(rho, th[:, None], np.array([[0.0, 1.0]]))
    assert grid.shape == (5, 2)
    assert grid[2, 1] == pytest.approx(float(conditional_entropy(rho, th[2], 1.0)))


def test_discord_config_validation():
    with pytest.raises(ValueError):
        DiscordConfig(n_theta=4)
    with pytest.raises(ValueError):
        DiscordConfig(measured_slot=3)
    with pytest.raises(ValueError):
        DiscordConfig(shrink=1.0)


def test_tau_config_validation():
    with pytest.raises(ValueError):
        TauConfig(r_max=0)
    with pytest.raises(ValueError):
        TauConfig(anchor=0)


def test_ghz_and_w_residual_entanglement():
    ghz = np.zeros(8)
    ghz[0] = ghz[7] = 1 / math.sqrt(2)
    # GHZ: no pairwise entanglement, E1 = 1 bit
    assert tau_sef(ghz) == pytest.approx(1.0, abs=1e-9)
    w = np.zeros(8)
    w[[1, 2, 4]] = 1 / math.sqrt(3)
    e1 = binary_entropy(1 / 3)
    pair = eof(np.array([[0, 0, 0, 0], [0, 1, 1, 0], [0, 1, 1, 0], [0, 0, 0, 1]]) / 3)
    assert tau_sef(w) == pytest.approx(e1 ** 2 - 2 * pair ** 2, abs=1e-9)


def test_pair_eofs_reflection_shortcut():
    from qptdetect.eigensolver import ground_state
    from qptdetect.hilbert import ModelSpec, build_hamiltonian
    gs = ground_state(build_hamiltonian(ModelSpec("xxz", 8, {"delta": 0.5}), 0.0))
    a = pair_eofs(gs, 1, reflection=False)
    b = pair_eofs(gs, 1, reflection=True)
    assert a.keys() == b.keys()
    for r in a:
        assert a[r] == pytest.approx(b[r], abs=1e-12)
    assert set(pair_eofs(gs, 1, r_max=2)) == {1, 2, 6, 7}


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_pure_state_eof_equals_entropy(seed):
    psi = random_state(np.random.default_rng(seed), 2)
    rho = np.outer(psi, psi.conj())
    assert eof(rho) == pytest.approx(one_vs_rest(psi, 1), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.sampled_from([3, 4]))
def test_monogamy(seed, n):
    psi = random_state(np.random.default_rng(seed), n)
    assert tau_sef(psi) >= -1e-9


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_measures_invariant_under_local_unitaries(seed):
    rng = np.random.default_rng(seed)
    rho = random_mixed(rng, rank=int(rng.integers(1, 5)))
    u = np.kron(random_unitary(rng), random_unitary(rng))
    rot = u @ rho @ u.conj().T
    assert concurrence(rot) == pytest.approx(concurrence(rho), abs=1e-7)
    assert vn_entropy(rot) == pytest.approx(vn_entropy(rho), abs=1e-9)
    assert quantum_discord(rot) == pytest.approx(quantum_discord(rho), abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_measure_ranges(seed):
    rho = random_mixed(np.random.default_rng(seed))
    c = concurrence(rho)
    assert 0.0 <= c <= 1.0
    assert 0.0 <= eof(rho) <= 1.0
    qd = quantum_discord(rho)
    assert -1e-9 <= qd <= 1.0 + 1e-9


def test_one_vs_rest_matches_rdm_entropy(rng):
    psi = random_state(rng, 5)
    gs = GroundState.from_vector(psi)
    assert one_vs_rest(gs, 3) == pytest.approx(vn_entropy(rdm1(psi, 3)), abs=1e-12)
