"""Temporal and spatial correlation functionals.

Temporal side: a system prepared in ``rho_in`` is observed at times before and
after an instantaneous evolution acting at ``t = 0``, optionally post-selected
on ``rho_fi``. Spatial side: two parties measure a shared bipartite state,
optionally post-selecting local final states.

All functionals return real numbers; an imaginary residue above ``IMAG_TOL``
signals non-Hermitian input and raises.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .channels import DENOM_TOL, Evolution, renormalize
from .duality import BipartiteEnsemble, ensemble_density, state_to_evolution
from .errors import DimensionError, PostselectionError, TimeOrderError
from .linalg import anticommutator, sandwich_sum, tensor
from .quantum import as_density, as_observable, heisenberg_evolve

IMAG_TOL = 1e-10


def _real(z: complex, what: str = "correlation") -> float:
    z = complex(z)
    if abs(z.imag) > IMAG_TOL * max(1.0, abs(z.real)):
        raise ValueError(f"{what} has imaginary part {z.imag:.3g}; inputs not Hermitian?")
    return z.real


@dataclass(frozen=True, eq=False)
class TemporalScenario:
    """Observables measured on one system around an evolution at ``t = 0``.

    ``observables`` is a sequence of ``(matrix, time)`` pairs with strictly
    increasing, nonzero times. Observables at negative times act on the input
    space (dimension ``d_A``), the rest on the output space (``d_B``).
    ``rho_in`` defaults to the maximally mixed state; ``rho_fi`` of ``None``
    means no post-selection; ``h0`` of ``None`` means no internal dynamics.
    """

    evolution: Evolution
    observables: Sequence[Tuple[np.ndarray, float]]
    rho_in: Optional[np.ndarray] = None
    rho_fi: Optional[np.ndarray] = None
    h0: Optional[np.ndarray] = None

    def __post_init__(self):
        e = self.evolution
        obs = []
        for o, t in self.observables:
            o = as_observable(o)
            t = float(t)
            if t == 0.0:
                raise TimeOrderError("no observable may sit at t = 0, where the evolution acts")
            want = e.d_a if t < 0 else e.d_b
            if o.shape != (want, want):
                raise DimensionError(f"observable at t={t} must be {want}x{want}")
            obs.append((o, t))
        times = [t for _, t in obs]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise TimeOrderError("observable times must be strictly increasing")
        if len(obs) == 2 and not (times[0] < 0 < times[1]):
            raise TimeOrderError("two-time scenarios need t1 < 0 < t2")
        object.__setattr__(self, "observables", tuple(obs))
        if self.rho_in is not None:
            rho = as_density(self.rho_in, "initial state")
            if rho.shape != (e.d_a, e.d_a):
                raise DimensionError(f"initial state must be {e.d_a}x{e.d_a}")
            object.__setattr__(self, "rho_in", rho)
        if self.rho_fi is not None:
            rho = as_density(self.rho_fi, "final state")
            if rho.shape != (e.d_b, e.d_b):
                raise DimensionError(f"final state must be {e.d_b}x{e.d_b}")
            object.__setattr__(self, "rho_fi", rho)
        if self.h0 is not None:
            h0 = as_observable(self.h0, "Hamiltonian")
            if e.d_a != e.d_b or h0.shape != (e.d_a, e.d_a):
                raise DimensionError("h0 needs d_A == d_B and matching shape")
            object.__setattr__(self, "h0", h0)

    def initial_state(self) -> np.ndarray:
        d = self.evolution.d_a
        return self.rho_in if self.rho_in is not None else np.eye(d, dtype=complex) / d

    def evolved(self) -> List[np.ndarray]:
        """Observables in the Heisenberg picture of ``h0``."""
        if self.h0 is None:
            return [o for o, _ in self.observables]
        return [heisenberg_evolve(o, self.h0, t) for o, t in self.observables]

    def n_before(self) -> int:
        return sum(1 for _, t in self.observables if t < 0)


@dataclass(frozen=True, eq=False)
class SpatialScenario:
    ensemble: BipartiteEnsemble
    o_a: np.ndarray
    o_b: np.ndarray
    rho_a_fi: Optional[np.ndarray] = None
    rho_b_fi: Optional[np.ndarray] = None

    def __post_init__(self):
        ens = self.ensemble
        for name, d in (("o_a", ens.d_a), ("o_b", ens.d_b)):
            o = as_observable(getattr(self, name), name)
            if o.shape != (d, d):
                raise DimensionError(f"{name} must be {d}x{d}")
            object.__setattr__(self, name, o)
        for name, d in (("rho_a_fi", ens.d_a), ("rho_b_fi", ens.d_b)):
            rho = getattr(self, name)
            if rho is not None:
                rho = as_density(rho, name)
                if rho.shape != (d, d):
                    raise DimensionError(f"{name} must be {d}x{d}")
                object.__setattr__(self, name, rho)

    def final_states(self) -> Tuple[np.ndarray, np.ndarray]:
        ens = self.ensemble
        ra = self.rho_a_fi if self.rho_a_fi is not None else np.eye(ens.d_a) / ens.d_a
        rb = self.rho_b_fi if self.rho_b_fi is not None else np.eye(ens.d_b) / ens.d_b
        return ra, rb


def _channel(e: Evolution, primes: np.ndarray, x: np.ndarray) -> np.ndarray:
    return sandwich_sum(e.probs, primes, x)


def _two_point(s: TemporalScenario) -> Tuple[np.ndarray, np.ndarray]:
    if len(s.observables) != 2:
        raise ValueError("two-time correlation needs exactly two observables")
    o1, o2 = s.evolved()
    return o1, o2


def temporal_correlation(s: TemporalScenario) -> float:
    """``(1/d_A) Tr[O2 sum_mu p_mu M'_mu O1 M'_mu^dag]`` for a maximally mixed input."""
    e = s.evolution
    if s.rho_fi is not None or (
        s.rho_in is not None and not np.allclose(s.rho_in, np.eye(e.d_a) / e.d_a, atol=1e-12)
    ):
        raise ValueError(
            "temporal_correlation assumes rho_in = I/d_A and no final state; "
            "use weak_temporal_correlation"
        )
    o1, o2 = _two_point(s)
    primes = renormalize(e, np.eye(e.d_a) / e.d_a)
    return _real(np.trace(o2 @ _channel(e, primes, o1)) / e.d_a)


def weak_temporal_correlation(s: TemporalScenario) -> float:
    """Correlation of two weakly coupled meter readings.

    Without post-selection: ``1/2 Tr[O2 sum p M' {O1, rho_in} M'^dag]``.
    With ``rho_fi``: ``1/4 Tr[rho_fi {O2, sum p M' {O1, rho_in} M'^dag}]`` where
    ``M'`` is normalised against both the initial and the final state.
    """
    e = s.evolution
    o1, o2 = _two_point(s)
    rho_in = s.initial_state()
    primes = renormalize(e, rho_in, s.rho_fi)
    x = _channel(e, primes, anticommutator(o1, rho_in))
    if s.rho_fi is None:
        return _real(0.5 * np.trace(o2 @ x))
    return _real(0.25 * np.trace(s.rho_fi @ anticommutator(o2, x)))


def temporal_expectations(s: TemporalScenario) -> Tuple[float, float]:
    """Single-observable expectations ``(E(O1), E(O2))`` in the weak regime.

    These are the two-point functional with the other observable replaced by
    the identity; for a maximally mixed input they reduce to ``Tr[O1 rho_in]``
    and ``(1/d_A) Tr[O2 sum p M' M'^dag]``.
    """
    e = s.evolution
    (o1, t1), (o2, t2) = s.observables
    first = TemporalScenario(e, [(o1, t1), (np.eye(e.d_b), t2)], s.rho_in, s.rho_fi, s.h0)
    second = TemporalScenario(e, [(np.eye(e.d_a), t1), (o2, t2)], s.rho_in, s.rho_fi, s.h0)
    return weak_temporal_correlation(first), weak_temporal_correlation(second)


def spatial_correlation(s: SpatialScenario) -> float:
    """``Tr[(O_A x O_B) rho_AB]``."""
    if s.rho_a_fi is not None or s.rho_b_fi is not None:
        raise ValueError("spatial_correlation has no final states; use weak_spatial_correlation")
    rho = ensemble_density(s.ensemble)
    return _real(np.trace(tensor(s.o_a, s.o_b) @ rho))


def spatial_expectations(s: SpatialScenario) -> Tuple[float, float]:
    ens = s.ensemble
    rho = ensemble_density(ens)
    ea = np.trace(tensor(s.o_a, np.eye(ens.d_b)) @ rho)
    eb = np.trace(tensor(np.eye(ens.d_a), s.o_b) @ rho)
    return _real(ea), _real(eb)


def _spatial_parts(s: SpatialScenario) -> Tuple[float, float]:
    ens = s.ensemble
    ra, rb = s.final_states()
    rho = ensemble_density(ens)
    fin = tensor(ra, rb)
    oa = tensor(s.o_a, np.eye(ens.d_b))
    ob = tensor(np.eye(ens.d_a), s.o_b)
    num = np.trace(fin @ anticommutator(ob, anticommutator(oa, rho)))
    den = np.trace(fin @ rho)
    return _real(num, "numerator"), _real(den, "denominator")


def weak_spatial_correlation(s: SpatialScenario) -> float:
    """``Tr[rho_A^fi x rho_B^fi {I x O_B, {O_A x I, rho}}] / (4 Tr[(rho_A^fi x rho_B^fi) rho])``.

    A missing final state counts as maximally mixed.
    """
    num, den = _spatial_parts(s)
    if den <= DENOM_TOL:
        raise PostselectionError("local post-selection has zero success probability")
    return num / (4 * den)


class Check(NamedTuple):
    lhs: float
    rhs: float
    delta: float


class PostselectedCheck(NamedTuple):
    lhs: float
    rhs: float
    delta: float
    d_t: float
    d_s: float
    n_t: float
    n_s: float


def mapped_scenario(ens: BipartiteEnsemble, o_a, o_b, rho_a_fi=None, rho_b_fi=None,
                    t1: float = -1.0, t2: float = 1.0) -> TemporalScenario:
    """Temporal counterpart of a spatial setup.

    ``O1 = O_A``, ``O2 = O_B^T``, ``rho_in = rho_A^fi`` and
    ``rho_fi = (rho_B^fi)^T``. Transposes are plain, in the computational basis.
    """
    e = state_to_evolution(ens)
    o_b = np.asarray(o_b, dtype=complex)
    rho_fi = None if rho_b_fi is None else np.asarray(rho_b_fi, dtype=complex).T
    return TemporalScenario(e, [(o_a, t1), (o_b.T, t2)], rho_a_fi, rho_fi)


def correlation_duality_check(ens: BipartiteEnsemble, o_a, o_b) -> Check:
    """Temporal correlation of the mapped evolution against ``Tr[(O_A x O_B) rho_AB]``."""
    lhs = temporal_correlation(mapped_scenario(ens, o_a, o_b))
    rhs = spatial_correlation(SpatialScenario(ens, o_a, o_b))
    return Check(lhs, rhs, abs(lhs - rhs))


def postselected_duality_check(ens: BipartiteEnsemble, o_a, o_b, rho_a_fi=None, rho_b_fi=None) -> PostselectedCheck:
    """Pre/post-selected weak correlations on both sides of the map.

    Also returns the unnormalised denominators and numerators. The temporal
    ones are computed with ``M / sqrt(d_A)`` (the bare amplitude matrix), so
    that ``d_t == d_s`` and ``n_t == n_s`` hold exactly rather than up to ``d_A``.
    """
    s_sp = SpatialScenario(ens, o_a, o_b, rho_a_fi, rho_b_fi)
    s_t = mapped_scenario(ens, o_a, o_b, rho_a_fi, rho_b_fi)
    rhs = weak_spatial_correlation(s_sp)
    lhs = weak_temporal_correlation(s_t)

    e = s_t.evolution
    rho_in = s_t.initial_state()
    rho_fi = s_t.rho_fi if s_t.rho_fi is not None else np.eye(e.d_b) / e.d_b
    bare = e.ops / np.sqrt(e.d_a)
    o1, o2 = s_t.evolved()
    d_t = _real(np.trace(rho_fi @ _channel(e, bare, rho_in)))
    n_t = _real(np.trace(rho_fi @ anticommutator(o2, _channel(e, bare, anticommutator(o1, rho_in)))))
    n_s, d_s = _spatial_parts(s_sp)
    return PostselectedCheck(lhs, rhs, abs(lhs - rhs), d_t, d_s, n_t, n_s)


def expectation_duality_check(ens: BipartiteEnsemble, o_a, o_b) -> Tuple[Check, Check]:
    """Single expectations: ``E(O1)`` vs ``E(O_A)`` and ``E(O2)`` vs ``E(O_B)``."""
    t1, t2 = temporal_expectations(mapped_scenario(ens, o_a, o_b))
    sa, sb = spatial_expectations(SpatialScenario(ens, o_a, o_b))
    return Check(t1, sa, abs(t1 - sa)), Check(t2, sb, abs(t2 - sb))


def three_time_correlation(s: TemporalScenario) -> float:
    """``1/4 Tr[O3 {O2, {O1, rho_in}}]`` for three weak measurements and ``M = I``."""
    e = s.evolution
    if len(s.observables) != 3:
        raise ValueError("three-time correlation needs three observables")
    if len(e) != 1 or e.d_a != e.d_b or not np.allclose(e.ops[0], np.eye(e.d_a) * e.ops[0][0, 0]):
        raise ValueError("three-time correlation is defined for the identity evolution only")
    if s.rho_fi is not None:
        raise ValueError("three-time correlation takes no final state")
    o1, o2, o3 = s.evolved()
    rho = s.initial_state()
    return _real(0.25 * np.trace(o3 @ anticommutator(o2, anticommutator(o1, rho))))
