import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tsduality.channels import (
    identity_evolution,
    canonicalize,
    mix_representation,
    pauli_mixture,
    same_channel,
)
from tsduality.duality import (
    BipartiteEnsemble,
    bipartition,
    ensemble_density,
    ensemble_from_density,
    entanglement_entropy,
    evolution_to_state,
    from_vector,
    reduction_check,
    max_entangled,
    mix_ensemble,
    pure_state,
    reduced,
    schmidt_coefficients,
    state_to_evolution,
    unitarity_deviation,
    werner_state,
)
from tsduality.errors import InvalidStateError
from tsduality.inequalities import CGLMP_ETA, CGLMP_GAMMA
from tsduality.randomness import (
    random_channel,
    random_ensemble,
    random_unitary,
    random_unitary_mixture,
)

seeds = st.integers(0, 2**31 - 1)


def test_phi_plus_maps_to_identity():
    e = state_to_evolution(max_entangled(2))
    assert np.allclose(e.ops[0], np.eye(2))
    back = evolution_to_state(identity_evolution(2))
    assert np.allclose(ensemble_density(back), ensemble_density(max_entangled(2)))


def test_product_state_maps_to_projector():
    d_a, d_b = 3, 2
    i, j = 2, 1
    amps = np.zeros((d_a, d_b))
    amps[i, j] = 1
    e = state_to_evolution(pure_state(amps))
    expect = np.zeros((d_b, d_a))
    expect[j, i] = np.sqrt(d_a)
    # the operator sends |i> on A to |j> on B
    assert np.allclose(e.ops[0], expect)


def test_cglmp_optimal_state_maps_to_scaled_diagonal():
    amps = np.diag([1.0, CGLMP_GAMMA, 1.0])
    e = state_to_evolution(pure_state(amps))
    assert np.allclose(e.ops[0], CGLMP_ETA * np.diag([1.0, CGLMP_GAMMA, 1.0]))
    assert np.isclose(np.trace(e.ops[0].conj().T @ e.ops[0]).real / 3, 1)


def test_conjugation_convention():
    amps = np.array([[0.5, 0.5j], [0.5, -0.5]])
    e = state_to_evolution(pure_state(amps))
    # M[j, i] = sqrt(d_A) * conj(alpha[i, j])
    assert np.isclose(e.ops[0][1, 0], np.sqrt(2) * np.conj(amps[0, 1]))


def test_projector_pair_maps_to_even_mixture():
    e = canonicalize([np.diag([1, 0]), np.diag([0, 1])])
    ens = evolution_to_state(e)
    rho = ensemble_density(ens)
    expect = np.zeros((4, 4))
    expect[0, 0] = expect[3, 3] = 0.5
    assert np.allclose(rho, expect)


@given(seeds, st.integers(2, 4), st.integers(2, 4), st.integers(1, 3))
def test_roundtrip_state(seed, d_a, d_b, k):
    rng = np.random.default_rng(seed)
    ens = random_ensemble(d_a, d_b, k, rng)
    back = evolution_to_state(state_to_evolution(ens))
    assert np.abs(ensemble_density(back) - ensemble_density(ens)).max() <= 1e-12


@given(seeds, st.integers(2, 4), st.integers(2, 4))
def test_roundtrip_channel(seed, d_a, d_b):
    rng = np.random.default_rng(seed)
    e = random_channel(d_a, d_b, d_a, rng)
    assert same_channel(state_to_evolution(evolution_to_state(e)), e)


def test_reduced_states():
    assert np.allclose(reduced(max_entangled(2), "A"), np.eye(2) / 2)
    assert np.allclose(reduced(max_entangled(2), "B"), np.eye(2) / 2)
    prod = from_vector(np.kron([0, 1], [1, 0]), 2, 2)
    ra = reduced(prod, "A")
    assert np.isclose(np.trace(ra @ ra), 1)
    w = werner_state(1.0)
    assert np.allclose(reduced(w, "A"), np.eye(2) / 2)
    assert np.allclose(ensemble_density(w), np.eye(4) / 4)


def test_werner_matches_pauli_mixture():
    p = 0.4
    e = pauli_mixture([1 - 3 * p / 4, p / 4, p / 4, p / 4])
    rho = ensemble_density(evolution_to_state(e))
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    expect = (1 - p) * np.outer(phi, phi) + p * np.eye(4) / 4
    assert np.allclose(rho, expect)
    assert np.allclose(ensemble_density(werner_state(p)), expect)


def test_reduction_examples():
    d = reduction_check(max_entangled(2))
    assert d.nonselective and d.unital
    assert d.dist_a < 1e-12 and d.dist_b < 1e-12
    d = reduction_check(from_vector([1, 0, 0, 0], 2, 2))
    assert not d.nonselective and d.dist_a > 0 and d.dist_b > 0


@given(seeds, st.integers(2, 4))
def test_reduction_unitary_mixture(seed, d):
    rng = np.random.default_rng(seed)
    diag = reduction_check(evolution_to_state(random_unitary_mixture(d, 3, rng)))
    assert diag.nonselective and diag.unital
    assert diag.dist_a <= 1e-9 and diag.dist_b <= 1e-9


def test_reduction_needs_unitality():
    # amplitude damping is trace preserving but not unital
    g = 0.3
    e = canonicalize([np.array([[1, 0], [0, np.sqrt(1 - g)]]), np.array([[0, np.sqrt(g)], [0, 0]])])
    diag = reduction_check(evolution_to_state(e))
    assert diag.nonselective and diag.dist_a < 1e-12
    assert not diag.unital and diag.dist_b > 0.1


@given(seeds, st.integers(2, 4))
def test_mixing_covariance(seed, d):
    rng = np.random.default_rng(seed)
    e = random_unitary_mixture(d, 3, rng)
    u = random_unitary(3, rng)
    mixed, _ = mix_representation(e, u)
    lhs = ensemble_density(evolution_to_state(mixed))
    rhs = ensemble_density(mix_ensemble(evolution_to_state(e), u))
    assert np.allclose(lhs, rhs, atol=1e-12)


@given(seeds)
def test_maximal_entanglement_iff_unitary(seed):
    rng = np.random.default_rng(seed)
    u = random_unitary(3, rng)
    ens = pure_state(u / np.sqrt(3))
    assert unitarity_deviation(state_to_evolution(ens).ops[0]) < 1e-12
    generic = random_ensemble(3, 3, 1, rng)
    dev = unitarity_deviation(state_to_evolution(generic).ops[0])
    diag = reduction_check(generic)
    assert (dev < 1e-9) == (diag.dist_a < 1e-9 and diag.dist_b < 1e-9)


def test_bipartition_ghz():
    ghz = np.zeros(8)
    ghz[0] = ghz[7] = 1 / np.sqrt(2)
    ens = bipartition(ghz, [2, 2, 2], [1, 2])
    assert ens.amps.shape == (1, 4, 2)
    a = ens.amps[0]
    assert np.count_nonzero(np.abs(a) > 1e-12) == 2
    assert np.isclose(a[0, 0], 1 / np.sqrt(2)) and np.isclose(a[3, 1], 1 / np.sqrt(2))
    assert state_to_evolution(ens).ops.shape == (1, 2, 4)


def test_bipartition_product_and_w():
    prod = np.zeros(8)
    prod[0] = 1
    for group in ([1], [2], [1, 3]):
        assert np.sum(schmidt_coefficients(bipartition(prod, [2, 2, 2], group)) > 1e-12) == 1
    w = np.zeros(8)
    w[[1, 2, 4]] = 1 / np.sqrt(3)
    s = schmidt_coefficients(bipartition(w, [2, 2, 2], [1]))
    assert np.sum(s > 1e-12) == 2


def test_bipartition_row_ordering():
    psi = np.zeros((2, 3, 2))
    psi[1, 2, 0] = 1
    ens = bipartition(psi.ravel(), [2, 3, 2], [3, 1])
    # rows run over legs (1, 3) in increasing order: row = i1 * 2 + i3
    assert np.isclose(abs(ens.amps[0][1 * 2 + 0, 2]), 1)


@pytest.mark.parametrize("group", [[], [1, 2, 3], [0], [4], [1, 1]])
def test_bipartition_invalid(group):
    with pytest.raises(ValueError):
        bipartition(np.ones(8) / np.sqrt(8), [2, 2, 2], group)


def test_spectral_ensemble(rng):
    ens = random_ensemble(2, 3, 3, rng)
    rho = ensemble_density(ens)
    ens = ensemble_from_density(rho, 2, 3)
    assert np.allclose(ensemble_density(ens), rho)


def test_entropy_bounds():
    assert np.isclose(entanglement_entropy(max_entangled(3)), np.log(3))
    assert np.isclose(entanglement_entropy(from_vector([1, 0, 0, 0], 2, 2)), 0)


def test_ensemble_validation():
    with pytest.raises(InvalidStateError):
        BipartiteEnsemble([1.0], np.ones((2, 2)))
    with pytest.raises(InvalidStateError):
        BipartiteEnsemble([0.5, 0.6], np.array([np.eye(2), np.eye(2)]) / np.sqrt(2))
