import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tsduality.channels import identity_evolution, time_reflect, unitary_evolution
from tsduality.correlations import (
    SpatialScenario,
    TemporalScenario,
    expectation_duality_check,
    mapped_scenario,
    spatial_correlation,
    spatial_expectations,
    temporal_correlation,
    temporal_expectations,
    correlation_duality_check,
    postselected_duality_check,
    three_time_correlation,
    weak_spatial_correlation,
    weak_temporal_correlation,
)
from tsduality.duality import from_vector, max_entangled, state_to_evolution, swap_parties
from tsduality.errors import DimensionError, PostselectionError, TimeOrderError
from tsduality.experiments import random_source
from tsduality.quantum import I2, SX, SY, SZ, pauli_angle, projector
from tsduality.randomness import random_density, random_hermitian, random_pure_density

seeds = st.integers(0, 2**31 - 1)
P0 = np.diag([1.0, 0.0])


def scenario(e, o1, o2, **kw):
    return TemporalScenario(e, [(o1, -1.0), (o2, 1.0)], **kw)


@pytest.mark.parametrize(
    "o1, o2, expected",
    [(SZ, SZ, 1.0), (SZ, SX, 0.0), (SX, pauli_angle(np.pi / 4), 1 / np.sqrt(2))],
)
def test_temporal_correlation_identity(o1, o2, expected):
    assert np.isclose(temporal_correlation(scenario(identity_evolution(2), o1, o2)), expected)


def test_temporal_correlation_preconditions():
    s = scenario(identity_evolution(2), SZ, SZ, rho_in=P0)
    with pytest.raises(ValueError):
        temporal_correlation(s)


def test_scenario_validation():
    e = identity_evolution(2)
    with pytest.raises(TimeOrderError):
        TemporalScenario(e, [(SZ, 1.0), (SZ, 2.0)])
    with pytest.raises(TimeOrderError):
        TemporalScenario(e, [(SZ, -1.0), (SZ, 0.0)])
    with pytest.raises(TimeOrderError):
        TemporalScenario(e, [(SZ, -1.0), (SZ, -2.0), (SZ, 1.0)])
    with pytest.raises(DimensionError):
        TemporalScenario(e, [(np.eye(3), -1.0), (SZ, 1.0)])


def test_internal_hamiltonian():
    # H0 = Z rotates X at t = pi/4 into -Y; Z at negative time is unchanged
    e = identity_evolution(2)
    s = TemporalScenario(e, [(SZ, -1.0), (SX, np.pi / 4)], h0=SZ)
    assert np.allclose(s.evolved()[1], -SY)
    assert np.isclose(temporal_correlation(s), 0.0)


def test_spatial_examples():
    phi = max_entangled(2)
    assert np.isclose(spatial_correlation(SpatialScenario(phi, SZ, SZ)), 1)
    assert np.isclose(spatial_correlation(SpatialScenario(phi, SX, SX)), 1)


def test_weak_temporal_examples():
    e = identity_evolution(2)
    assert np.isclose(weak_temporal_correlation(scenario(e, SZ, SZ, rho_in=np.eye(2) / 2)), 1)
    # 1/2 Tr[Z {Z, |0><0|}] = 1/2 Tr[Z 2|0><0|] = 1
    assert np.isclose(weak_temporal_correlation(scenario(e, SZ, SZ, rho_in=P0)), 1)


@given(seeds)
def test_reduction_chain(seed):
    rng = np.random.default_rng(seed)
    ens = random_source(rng, 2, 3, seed % 4)
    o_a, o_b = random_hermitian(2, rng), random_hermitian(3, rng)
    s = mapped_scenario(ens, o_a, o_b)
    weak = weak_temporal_correlation(s)
    temp = temporal_correlation(s)
    spat = spatial_correlation(SpatialScenario(ens, o_a, o_b))
    assert abs(weak - temp) <= 1e-10 and abs(temp - spat) <= 1e-10


@given(seeds)
def test_linearity(seed):
    rng = np.random.default_rng(seed)
    e = state_to_evolution(random_source(rng, 2, 2, 3))
    rho = random_density(2, rng)
    a, b, c = (random_hermitian(2, rng) for _ in range(3))
    x, y = rng.normal(size=2)

    def f(o1, o2):
        return weak_temporal_correlation(scenario(e, o1, o2, rho_in=rho))

    assert np.isclose(f(x * a + y * b, c), x * f(a, c) + y * f(b, c))
    assert np.isclose(f(c, x * a + y * b), x * f(c, a) + y * f(c, b))


def test_correlation_duality_phi_plus():
    chk = correlation_duality_check(max_entangled(2), SZ, SZ)
    assert np.isclose(chk.lhs, 1) and np.isclose(chk.rhs, 1) and chk.delta < 1e-14


def test_correlation_duality_uses_plain_transpose():
    # Y^T = -Y: the temporal side measures -Y when Alice's partner measures Y
    chk = correlation_duality_check(max_entangled(2), SY, SY)
    assert np.isclose(chk.rhs, -1) and chk.delta < 1e-14


@pytest.mark.parametrize("kind", range(4))
@given(seed=seeds, d_a=st.integers(2, 4), d_b=st.integers(2, 4))
def test_correlation_duality_random(kind, seed, d_a, d_b):
    rng = np.random.default_rng(seed)
    ens = random_source(rng, d_a, d_b, kind)
    assert correlation_duality_check(ens, random_hermitian(d_a, rng), random_hermitian(d_b, rng)).delta <= 1e-10


@given(seeds)
def test_time_space_reflection(seed):
    # swapping the parties corresponds to the transposed evolution read backwards
    rng = np.random.default_rng(seed)
    ens = random_source(rng, 2, 3, seed % 4)
    o_a, o_b = random_hermitian(2, rng), random_hermitian(3, rng)
    swapped = swap_parties(ens)
    assert np.allclose(state_to_evolution(swapped).ops, time_reflect(state_to_evolution(ens)).ops)
    lhs = correlation_duality_check(swapped, o_b, o_a)
    rhs = correlation_duality_check(ens, o_a, o_b)
    assert lhs.delta <= 1e-10 and abs(lhs.lhs - rhs.lhs) <= 1e-10


def test_single_expectations_examples():
    s = scenario(identity_evolution(2), SZ, SZ)
    assert np.allclose(temporal_expectations(s), (0, 0))
    ens = from_vector([1, 0, 0, 0], 2, 2)
    ea, _ = spatial_expectations(SpatialScenario(ens, SZ, SZ))
    e1, _ = temporal_expectations(mapped_scenario(ens, SZ, SZ))
    assert np.isclose(ea, 1) and np.isclose(e1, 1)


@given(seeds, st.integers(2, 4), st.integers(2, 4))
def test_expectation_duality(seed, d_a, d_b):
    rng = np.random.default_rng(seed)
    ens = random_source(rng, d_a, d_b, seed % 4)
    c1, c2 = expectation_duality_check(ens, random_hermitian(d_a, rng), random_hermitian(d_b, rng))
    assert c1.delta <= 1e-10 and c2.delta <= 1e-10


def test_weak_spatial_reduction(rng):
    ens = random_source(rng, 2, 3, 1)
    o_a, o_b = random_hermitian(2, rng), random_hermitian(3, rng)
    plain = spatial_correlation(SpatialScenario(ens, o_a, o_b))
    weak = weak_spatial_correlation(SpatialScenario(ens, o_a, o_b, np.eye(2) / 2, np.eye(3) / 3))
    assert np.isclose(plain, weak)


def test_postselected_duality_instance_by_hand():
    phi = max_entangled(2)
    spatial = weak_spatial_correlation(SpatialScenario(phi, SZ, SZ, P0, np.eye(2) / 2))
    temporal = weak_temporal_correlation(scenario(identity_evolution(2), SZ, SZ, rho_in=P0))
    assert np.isclose(spatial, temporal) and np.isclose(spatial, 1)


def test_orthogonal_postselection_raises():
    ens = from_vector([1, 0, 0, 0], 2, 2)
    with pytest.raises(PostselectionError):
        weak_spatial_correlation(SpatialScenario(ens, SZ, SZ, np.diag([0, 1]), None))


def test_postselected_reduces_to_plain(rng):
    ens = random_source(rng, 3, 2, 2)
    o_a, o_b = random_hermitian(3, rng), random_hermitian(2, rng)
    c2 = postselected_duality_check(ens, o_a, o_b)
    c1 = correlation_duality_check(ens, o_a, o_b)
    assert abs(c2.lhs - c1.lhs) <= 1e-12 and c2.delta <= 1e-12


@given(seeds, st.integers(2, 4), st.integers(2, 4), st.booleans(), st.booleans())
def test_postselected_duality_random(seed, d_a, d_b, pure_a, pure_b):
    rng = np.random.default_rng(seed)
    ens = random_source(rng, d_a, d_b, seed % 4)
    ra = random_pure_density(d_a, rng) if pure_a else random_density(d_a, rng)
    rb = random_pure_density(d_b, rng) if pure_b else random_density(d_b, rng)
    c = postselected_duality_check(ens, random_hermitian(d_a, rng), random_hermitian(d_b, rng), ra, rb)
    assert c.delta <= 1e-10
    assert abs(c.d_t - c.d_s) <= 1e-10
    assert abs(c.n_t - c.n_s) <= 1e-10


def test_three_time_hand_values():
    e = identity_evolution(2)
    t = (-2.0, -1.0, 1.0)
    s = TemporalScenario(e, list(zip([SZ, SZ, SZ], t)), np.eye(2) / 2)
    # 1/4 Tr[Z {Z, {Z, I/2}}] = 1/4 Tr[Z {Z, Z}] = 1/2 Tr[Z] = 0
    assert np.isclose(three_time_correlation(s), 0)
    zxx = TemporalScenario(e, list(zip([SZ, SX, SX], t)), P0)
    xzx = TemporalScenario(e, list(zip([SX, SZ, SX], t)), P0)
    assert np.isclose(three_time_correlation(zxx), 1)
    assert np.isclose(three_time_correlation(xzx), 0)


def test_three_time_monogamy():
    e = identity_evolution(2)
    t = (-2.0, -1.0, 1.0)
    for i, j in [(0, 1), (0, 2), (1, 2)]:
        obs = [(SZ if k in (i, j) else I2, t[k]) for k in range(3)]
        assert abs(three_time_correlation(TemporalScenario(e, obs)) - 1) <= 1e-12


def test_three_time_requires_identity(rng):
    from tsduality.randomness import random_unitary

    e = unitary_evolution(random_unitary(2, rng))
    with pytest.raises(ValueError):
        three_time_correlation(TemporalScenario(e, [(SZ, -2.0), (SZ, -1.0), (SZ, 1.0)]))


def test_complex_result_rejected():
    # a non-Hermitian pair would give a complex value; inputs are validated first
    with pytest.raises(Exception):
        scenario(identity_evolution(2), np.array([[0, 1], [0, 0]]), SZ)


def test_projector_helper_used_in_postselection():
    ens = max_entangled(2)
    val = weak_spatial_correlation(SpatialScenario(ens, SX, SX, projector([1, 1]), None))
    assert np.isclose(val, 1)
