import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tsduality.channels import (
    Evolution,
    apply,
    apply_heisenberg,
    canonicalize,
    channel_matrix,
    dephasing_evolution,
    identity_evolution,
    mix_representation,
    pauli_mixture,
    renormalize,
    same_channel,
    time_reflect,
    unitary_evolution,
)
from tsduality.errors import InvalidStateError, PostselectionError
from tsduality.quantum import SX, SZ, dephase_observable, projector
from tsduality.randomness import (
    random_channel,
    random_density,
    random_hermitian,
    random_selective,
    random_unitary,
    random_unitary_mixture,
)

seeds = st.integers(0, 2**31 - 1)


def test_canonicalize_unitary(rng):
    u = random_unitary(3, rng)
    e = canonicalize([u])
    assert len(e) == 1 and np.isclose(e.probs[0], 1)
    assert np.allclose(e.ops[0], u)
    assert not e.selective


def test_canonicalize_projectors():
    e = canonicalize([np.diag([1, 0]), np.diag([0, 1])])
    assert np.allclose(e.probs, [0.5, 0.5])
    assert np.allclose(e.ops[0], np.sqrt(2) * np.diag([1, 0]))
    assert np.allclose(e.ops[1], np.sqrt(2) * np.diag([0, 1]))


def test_canonicalize_single_projector_row():
    d = 3
    k = np.zeros((d, d))
    k[0, 2] = 1
    e = canonicalize([k])
    assert np.allclose(e.ops[0], np.sqrt(d) * k)
    assert e.selective


@given(seeds)
def test_canonicalize_reproduces_kraus_action(seed):
    rng = np.random.default_rng(seed)
    e = random_channel(2, 3, 2, rng)
    ks = e.kraus()
    rho = random_density(2, rng)
    direct = sum(k @ rho @ k.conj().T for k in ks)
    assert np.allclose(apply(e, rho), direct, atol=1e-12)
    assert same_channel(canonicalize(ks), e)


def test_canonicalize_rejects_zero_branch():
    with pytest.raises(InvalidStateError):
        canonicalize([np.eye(2), np.zeros((2, 2))])


def test_evolution_invariants():
    with pytest.raises(InvalidStateError):
        Evolution(np.eye(2)[None] * 2, [1.0])
    with pytest.raises(InvalidStateError):
        Evolution(np.array([np.eye(2), np.eye(2)]), [0.6, 0.6])


def test_renormalize_examples():
    e = identity_evolution(2)
    assert np.allclose(renormalize(e, np.eye(2) / 2), e.ops)
    # single selective projector sqrt2 |0><0| at I/2: denominator Tr[2|0><0| I/2] = 1
    p = Evolution(np.sqrt(2) * np.diag([1, 0])[None], [1.0])
    primes = renormalize(p, np.eye(2) / 2)
    assert np.allclose(primes[0], np.sqrt(2) * np.diag([1, 0]))
    out = primes[0] @ (np.eye(2) / 2) @ primes[0].conj().T
    assert np.isclose(np.trace(out), 1)


def test_renormalize_orthogonal_postselection():
    p = Evolution(np.sqrt(2) * np.diag([1, 0])[None], [1.0])
    with pytest.raises(PostselectionError):
        renormalize(p, np.eye(2) / 2, rho_fi=np.diag([0, 1]))


@given(seeds)
def test_nonselective_at_maximally_mixed_is_untouched(seed):
    rng = np.random.default_rng(seed)
    e = random_channel(3, 3, 2, rng)
    assert np.allclose(renormalize(e, np.eye(3) / 3), e.ops)
    # unitality of the canonical ensemble at I/d only holds for unital channels
    u = random_unitary_mixture(3, 3, rng)
    assert np.allclose(apply(u, np.eye(3) / 3), np.eye(3) / 3)


def test_apply_examples(rng):
    u = random_unitary(2, rng)
    rho = random_density(2, rng)
    assert np.allclose(apply(unitary_evolution(u), rho), u @ rho @ u.conj().T)
    plus = projector([1, 1])
    full = canonicalize([np.diag([1, 0]), np.diag([0, 1])])
    assert np.allclose(apply(full, plus), np.eye(2) / 2)


@given(seeds, st.integers(2, 4), st.integers(2, 4))
def test_apply_trace_preserving(seed, d_a, d_b):
    rng = np.random.default_rng(seed)
    for e in (random_channel(d_a, d_b, d_a, rng), random_selective(d_a, d_b, 2, rng)):
        out = apply(e, random_density(d_a, rng))
        assert abs(np.trace(out) - 1) <= 1e-10


def test_apply_with_final_state_normalisation(rng):
    e = random_selective(2, 3, 2, rng)
    rho_fi = random_density(3, rng)
    out = apply(e, random_density(2, rng), rho_fi)
    assert np.isclose(np.trace(rho_fi @ out), 1)


def test_apply_heisenberg_examples(rng):
    u = random_unitary(2, rng)
    o = random_hermitian(2, rng)
    assert np.allclose(apply_heisenberg(unitary_evolution(u), o), u @ o @ u.conj().T)
    assert np.allclose(apply_heisenberg(identity_evolution(2), o), o)
    t = 0.8
    decayed = apply_heisenberg(dephasing_evolution(t), SX)
    assert np.allclose(decayed, dephase_observable(SX, t))


def test_mix_representation_identity_unitary(rng):
    e = random_channel(2, 2, 3, rng)
    e2, q = mix_representation(e, np.eye(3))
    assert np.allclose(e2.ops, e.ops) and np.allclose(e2.probs, e.probs)
    assert np.isclose(q.sum(), 1)


def test_mix_representation_hadamard_on_dephasing():
    e = canonicalize([np.sqrt(0.7) * np.eye(2), np.sqrt(0.3) * SZ])
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    e2, q = mix_representation(e, h)
    assert same_channel(e, e2)
    basis = [projector(v) for v in ([1, 0], [0, 1], [1, 1], [1, 1j])]
    for rho in basis:
        assert np.allclose(apply(e, rho), apply(e2, rho), atol=1e-12)
    assert np.isclose(q.sum(), 1)


@given(seeds)
def test_mix_representation_invariance(seed):
    rng = np.random.default_rng(seed)
    e = random_channel(2, 2, 3, rng)
    u = random_unitary(3, rng)
    e2, q = mix_representation(e, u)
    assert np.isclose(q.sum(), 1)
    for _ in range(20):
        rho = random_density(2, rng)
        assert np.abs(apply(e, rho) - apply(e2, rho)).max() <= 1e-10


def test_mix_representation_rejects_non_unitary():
    e = random_channel(2, 2, 2, np.random.default_rng(0))
    with pytest.raises(ValueError):
        mix_representation(e, np.array([[1, 1], [0, 1]]))


def test_kraus_roundtrip_up_to_phase(rng):
    e = random_selective(3, 2, 3, rng)
    phased = [np.exp(1j * k) * m for k, m in enumerate(e.kraus())]
    assert same_channel(canonicalize(phased), e)


def test_time_reflect_is_transpose_channel(rng):
    e = random_channel(2, 3, 2, rng)
    r = time_reflect(e)
    assert (r.d_a, r.d_b) == (3, 2)
    assert np.allclose(time_reflect(r).ops, e.ops)


def test_pauli_mixture_weights():
    e = pauli_mixture([0.25, 0.25, 0.25, 0.25])
    assert np.allclose(apply(e, projector([1, 0])), np.eye(2) / 2)
    assert channel_matrix(e).shape == (4, 4)
