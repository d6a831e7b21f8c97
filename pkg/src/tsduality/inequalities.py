"""Leggett-Garg, CGLMP and I3322 scenarios on both sides of the map.

A Bell operator ``B`` on ``H_A (x) H_B`` is expanded in an orthonormal
Hermitian basis, ``B = sum_kl c_kl G_k (x) G_l``. Because weak correlations
are bilinear in the two observables, the temporal value of the same
combination is ``sum_kl c_kl C(G_k, G_l^T)``, which for a fixed evolution is
``Tr[T rho_in] / Tr[E rho_in]`` with ``T = sum c_kl 1/2 {G_k, Phi^*(G_l^T)}``
and ``E = sum p M^dag M``. See :func:`temporal_operator`.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg as sla
from scipy.optimize import brentq, minimize

from .channels import Evolution, identity_evolution
from .correlations import (
    SpatialScenario,
    TemporalScenario,
    weak_spatial_correlation,
    weak_temporal_correlation,
)
from .duality import BipartiteEnsemble, max_entangled, pure_state, state_to_evolution
from .errors import DimensionError, TimeOrderError
from .linalg import anticommutator, hermitian_eig, tensor
from .quantum import SQRT2, SX, SZ, as_observable, dephase_observable, pauli_angle, xy_observable

LG_TIMES = (-2.0, -1.0, 1.0, 2.0)

# -- Leggett-Garg / CHSH ------------------------------------------------------


def lg_observables():
    """``(Z, X, pauli_angle(pi/4), pauli_angle(3pi/4))`` measured at ``t1 < t2 < 0 < t3 < t4``."""
    return SZ.copy(), SX.copy(), pauli_angle(np.pi / 4), pauli_angle(3 * np.pi / 4)


def _check_lg_times(times):
    t1, t2, t3, t4 = times
    if not (t1 < t2 < 0 < t3 < t4):
        raise TimeOrderError("Leggett-Garg times must satisfy t1 < t2 < 0 < t3 < t4")


def blg_value(e: Evolution, rho_in=None, obs=None, times=LG_TIMES, h0=None) -> float:
    """``C13 + C14 + C23 - C24`` with each pair a weak two-time correlation.

    The evolution acts at ``t = 0``, between the two early and the two late
    measurements.
    """
    _check_lg_times(times)
    obs = lg_observables() if obs is None else obs

    def c(i, j):
        s = TemporalScenario(e, [(obs[i], times[i]), (obs[j], times[j])], rho_in, h0=h0)
        return weak_temporal_correlation(s)

    return c(0, 2) + c(0, 3) + c(1, 2) - c(1, 3)


def blg_trace_identity(obs=None) -> float:
    """Half the trace of ``O1 O3 + O1 O4 + O2 O3 - O2 O4`` (real part)."""
    o1, o2, o3, o4 = lg_observables() if obs is None else obs
    return float(0.5 * np.trace(o1 @ o3 + o1 @ o4 + o2 @ o3 - o2 @ o4).real)


def blg_dephased(t3: float, t4: float, gamma: float = SQRT2, rho_in=None) -> float:
    """Engine value of ``B_LG`` when the late observables have dephased for ``t3``, ``t4``."""
    o1, o2, o3, o4 = lg_observables()
    obs = (o1, o2, dephase_observable(o3, t3, gamma), dephase_observable(o4, t4, gamma))
    return blg_value(identity_evolution(2), rho_in, obs)


def blg_dephasing_curve(t3, t4, gamma: float = SQRT2):
    """Closed form ``(sqrt2/2)(2 + exp(-gamma t3) + exp(-gamma t4))``."""
    t3, t4 = np.asarray(t3, dtype=float), np.asarray(t4, dtype=float)
    if np.any(t3 < 0) or np.any(t4 < 0):
        raise ValueError("dephasing times must be non-negative")
    return SQRT2 / 2 * (2 + np.exp(-gamma * t3) + np.exp(-gamma * t4))


def blg_threshold(gamma: float = SQRT2) -> float:
    """Time ``t`` at which ``B_LG(t, t)`` falls to the classical bound 2: ``ln(1+sqrt2)/gamma``."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return math.log1p(SQRT2) / gamma


def blg_threshold_solved(gamma: float = SQRT2) -> float:
    """Root of ``blg_dephased(t, t) = 2`` found numerically."""
    hi = 1.0 / gamma
    while blg_dephased(hi, hi, gamma) > 2:
        hi *= 2
    return brentq(lambda t: blg_dephased(t, t, gamma) - 2, 0.0, hi, xtol=1e-15, rtol=1e-15)


def chsh_operator(a: Sequence[float], b: Sequence[float], obs: Callable = xy_observable) -> np.ndarray:
    a1, a2 = (obs(x) for x in a)
    b1, b2 = (obs(x) for x in b)
    return tensor(a1, b1) + tensor(a1, b2) + tensor(a2, b1) - tensor(a2, b2)


# -- Bell operators and their temporal counterparts ---------------------------


def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal (``Tr[G_k G_l] = delta_kl``) Hermitian basis, shape ``(d*d, d, d)``."""
    out = []
    for k in range(d):
        g = np.zeros((d, d), dtype=complex)
        g[k, k] = 1
        out.append(g)
    s = 1 / SQRT2
    for k in range(d):
        for l in range(k + 1, d):
            g = np.zeros((d, d), dtype=complex)
            g[k, l] = g[l, k] = s
            out.append(g)
            g = np.zeros((d, d), dtype=complex)
            g[k, l], g[l, k] = -1j * s, 1j * s
            out.append(g)
    return np.array(out)


def operator_coefficients(bell, d_a: int, d_b: int) -> np.ndarray:
    """Real ``c_kl = Tr[B (G_k x G_l)]`` in the bases of :func:`hermitian_basis`."""
    bell = as_observable(bell, "Bell operator")
    if bell.shape != (d_a * d_b,) * 2:
        raise DimensionError(f"Bell operator must be {d_a * d_b}x{d_a * d_b}")
    ga, gb = hermitian_basis(d_a), hermitian_basis(d_b)
    b4 = bell.reshape(d_a, d_b, d_a, d_b)
    c = np.einsum("iajb,kji,lba->kl", b4, ga, gb)
    return c.real


def temporal_operator(bell, e: Evolution) -> Tuple[np.ndarray, np.ndarray]:
    """``(T, E)`` with temporal value ``Tr[T rho] / Tr[E rho]`` for input state ``rho``.

    ``T = sum_kl c_kl 1/2 {G_k, sum p M^dag G_l^T M}`` and ``E = sum p M^dag M``
    (the identity for a non-selective evolution).
    """
    c = operator_coefficients(bell, e.d_a, e.d_b)
    ga, gb = hermitian_basis(e.d_a), hermitian_basis(e.d_b)
    back = np.einsum("m,mji,ljk,mkn->lin", e.probs, e.ops.conj(), np.transpose(gb, (0, 2, 1)), e.ops)
    mixed = np.einsum("kl,lij->kij", c, back)
    t = 0.5 * sum(anticommutator(ga[k], mixed[k]) for k in range(len(ga)))
    return 0.5 * (t + t.conj().T), e.effect()


def temporal_value(bell, e: Evolution, rho_in=None) -> float:
    t, eff = temporal_operator(bell, e)
    rho = np.eye(e.d_a) / e.d_a if rho_in is None else np.asarray(rho_in, dtype=complex)
    return float((np.trace(t @ rho) / np.trace(eff @ rho)).real)


def max_temporal_value(bell, e: Evolution) -> Tuple[float, np.ndarray]:
    """Largest temporal value over input states and the optimal pure input.

    Solves ``T v = lambda E v``; ``E`` must be positive definite.
    """
    t, eff = temporal_operator(bell, e)
    if np.linalg.eigvalsh(eff).min() <= 1e-12:
        raise ValueError("evolution effect is singular; the ratio is unbounded on its kernel")
    if np.allclose(eff, np.eye(e.d_a), atol=1e-12):
        w, v = hermitian_eig(t)
        return float(w[0]), v[:, 0]
    w, v = sla.eigh(t, eff)
    vec = v[:, -1] / np.linalg.norm(v[:, -1])
    return float(w[-1]), vec


def bell_value_temporal(bell, e: Evolution, rho_in=None, rho_fi=None) -> float:
    """Bell combination evaluated term by term with weak temporal correlations."""
    c = operator_coefficients(bell, e.d_a, e.d_b)
    ga, gb = hermitian_basis(e.d_a), hermitian_basis(e.d_b)
    total = 0.0
    for k, l in zip(*np.nonzero(np.abs(c) > 1e-15)):
        s = TemporalScenario(e, [(ga[k], -1.0), (gb[l].T, 1.0)], rho_in, rho_fi)
        total += c[k, l] * weak_temporal_correlation(s)
    return total


def bell_value_spatial(bell, ens: BipartiteEnsemble, rho_a_fi=None, rho_b_fi=None) -> float:
    """Bell combination from weak spatial correlations (plain expectation without final states)."""
    if rho_a_fi is None and rho_b_fi is None:
        v = ens.vectors()
        return float(np.einsum("k,ki,ij,kj->", ens.probs, v.conj(), bell, v).real)
    c = operator_coefficients(bell, ens.d_a, ens.d_b)
    ga, gb = hermitian_basis(ens.d_a), hermitian_basis(ens.d_b)
    total = 0.0
    for k, l in zip(*np.nonzero(np.abs(c) > 1e-15)):
        total += c[k, l] * weak_spatial_correlation(SpatialScenario(ens, ga[k], gb[l], rho_a_fi, rho_b_fi))
    return total


# -- CGLMP, d = 3 -------------------------------------------------------------

CGLMP_GAMMA = (math.sqrt(11) - math.sqrt(3)) / 2
CGLMP_ETA = math.sqrt(3 / (11 / 2 - math.sqrt(33) / 2))


def cglmp_operator() -> np.ndarray:
    """9x9 CGLMP Bell operator for two qutrits (real symmetric)."""
    a = 2 / math.sqrt(3)
    b = np.zeros((9, 9))
    for i, j, v in [(0, 4, a), (0, 8, 2.0), (1, 5, a), (3, 7, a), (4, 8, a)]:
        b[i, j] = b[j, i] = v
    return b.astype(complex)


def cglmp_lhv_max() -> float:
    """Best deterministic local strategy for the d = 3 CGLMP combination."""
    d = 3
    best = -np.inf
    for a1, a2, b1, b2 in itertools.product(range(d), repeat=4):
        plus = (a1 == b1) + (b1 == (a2 + 1) % d) + (a2 == b2) + (b2 == a1)
        minus = (a1 == (b1 - 1) % d) + (b1 == a2) + (a2 == (b2 - 1) % d) + (b2 == (a1 - 1) % d)
        best = max(best, plus - minus)
    return float(best)


def cglmp_optimal_state() -> BipartiteEnsemble:
    """``(|00> + gamma |11> + |22>) / sqrt(2 + gamma^2)``."""
    return pure_state(np.diag([1.0, CGLMP_GAMMA, 1.0]))


def cglmp_optimal_evolution() -> Evolution:
    """Mapped image of :func:`cglmp_optimal_state`: ``eta * diag(1, gamma, 1)``."""
    return state_to_evolution(cglmp_optimal_state())


# -- I3322 --------------------------------------------------------------------

I3322_PLUS = ((0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0))
I3322_MINUS = ((1, 2), (2, 1))


@dataclass(frozen=True)
class DichotomicSettings:
    """Three x-y plane angles per side; observables ``cos(phi) X + sin(phi) Y``."""

    a: Tuple[float, float, float]
    b: Tuple[float, float, float]

    def __post_init__(self):
        a = tuple(float(x) for x in self.a)
        b = tuple(float(x) for x in self.b)
        if len(a) != 3 or len(b) != 3:
            raise ValueError("I3322 needs three settings per side")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def observables(self):
        return [xy_observable(x) for x in self.a], [xy_observable(x) for x in self.b]

    def relabel(self, perm=(1, 0, 2)) -> "DichotomicSettings":
        """Same angles with setting labels permuted on both sides."""
        return DichotomicSettings(tuple(self.a[i] for i in perm), tuple(self.b[i] for i in perm))

    def mirrored_b(self) -> "DichotomicSettings":
        """B angles negated; ``xy_observable(-phi)`` is the transpose of ``xy_observable(phi)``."""
        return DichotomicSettings(self.a, tuple(-x for x in self.b))


# Reference angle lists for the I3322 examples, with their original setting labels.
REFERENCE_I3322 = {
    "temporal_mixed": DichotomicSettings((0, np.pi / 3, -np.pi / 3), (np.pi / 3, 0, 2 * np.pi / 3)),
    "temporal_optimal": DichotomicSettings((0, 2 * np.pi / 5, -2 * np.pi / 5),
                                           (np.pi / 5, -np.pi / 5, 3 * np.pi / 5)),
    "spatial_postselected": DichotomicSettings((0, 2 * np.pi / 5, -2 * np.pi / 5),
                                               (-np.pi / 5, np.pi / 5, -3 * np.pi / 5)),
}


def i3322_from_correlator(corr: Callable, a_obs, b_obs, one_a=None, one_b=None) -> float:
    """Collins-Gisin form with ``P(A_i B_j)`` and marginals built from a bilinear correlator.

    ``corr(X, Y)`` must accept identities, so single expectations come from the
    same functional. Outcome +1 projectors are ``(I + O)/2``. ``one_a`` and
    ``one_b`` are the identities passed to ``corr`` (2x2 by default).
    """
    ia = np.eye(2) if one_a is None else one_a
    ib = np.eye(2) if one_b is None else one_b
    ea = [corr(a, ib) for a in a_obs]
    eb = [corr(ia, b) for b in b_obs]

    def joint(i, j):
        return (1 + ea[i] + eb[j] + corr(a_obs[i], b_obs[j])) / 4

    val = sum(joint(i, j) for i, j in I3322_PLUS) - sum(joint(i, j) for i, j in I3322_MINUS)
    return val - (1 + ea[0]) / 2 - 2 * (1 + eb[0]) / 2 - (1 + eb[1]) / 2


def i3322_operator(settings: DichotomicSettings, temporal: bool = False) -> np.ndarray:
    """Bell operator of the I3322 combination.

    With ``temporal=True`` the B angles are read as temporal observables, so the
    operator carries their transposes (see :meth:`DichotomicSettings.mirrored_b`).
    """
    s = settings.mirrored_b() if temporal else settings
    a_obs, b_obs = s.observables()
    i2 = np.eye(2)
    pa = [(i2 + a) / 2 for a in a_obs]
    pb = [(i2 + b) / 2 for b in b_obs]
    op = sum(tensor(pa[i], pb[j]) for i, j in I3322_PLUS)
    op = op - sum(tensor(pa[i], pb[j]) for i, j in I3322_MINUS)
    return op - tensor(pa[0], i2) - 2 * tensor(i2, pb[0]) - tensor(i2, pb[1])


def i3322_value(settings: DichotomicSettings, source, rho_in=None, rho_fi=None,
                rho_a_fi=None, rho_b_fi=None) -> float:
    """I3322 for a spatial ensemble or a temporal evolution.

    ``source`` is a :class:`BipartiteEnsemble` (optionally with local final
    states) or an :class:`Evolution` (optionally with ``rho_in``/``rho_fi``).
    For the temporal case the settings are the observables actually measured.
    """
    a_obs, b_obs = settings.observables()
    if isinstance(source, BipartiteEnsemble):
        def corr(x, y):
            return weak_spatial_correlation(SpatialScenario(source, x, y, rho_a_fi, rho_b_fi))
    elif isinstance(source, Evolution):
        def corr(x, y):
            return weak_temporal_correlation(TemporalScenario(source, [(x, -1.0), (y, 1.0)], rho_in, rho_fi))
    else:
        raise TypeError("source must be a BipartiteEnsemble or an Evolution")
    return i3322_from_correlator(corr, a_obs, b_obs)


def i3322_lhv_max() -> float:
    """Maximum over the 2^6 deterministic +-1 assignments."""
    best = -np.inf
    for vals in itertools.product((1.0, -1.0), repeat=6):
        a, b = vals[:3], vals[3:]
        val = i3322_from_correlator(lambda x, y: x * y, a, b, 1.0, 1.0)
        best = max(best, val)
    return float(best)


@dataclass
class OptimizationResult:
    value: float
    settings: DichotomicSettings
    state: Optional[np.ndarray] = None


def _multistart(objective: Callable, starts: int, seed: int, jobs: int = 1):
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(starts)]
    opts = dict(xatol=1e-11, fatol=1e-14, maxiter=40000, maxfev=40000)

    def run(rng):
        x0 = rng.uniform(-np.pi, np.pi, 6)
        r = minimize(objective, x0, method="Nelder-Mead", options=opts)
        r = minimize(objective, r.x, method="Nelder-Mead", options=opts)
        return r.fun, r.x

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, rngs))
    else:
        results = [run(r) for r in rngs]
    # ties broken by start index so the choice is independent of jobs
    return min(results, key=lambda r: r[0])


def optimize_i3322_spatial(ens: Optional[BipartiteEnsemble] = None, starts: int = 12,
                           seed: int = 0, jobs: int = 1) -> OptimizationResult:
    """Maximise I3322 over x-y plane angles for a fixed shared state (default Phi+)."""
    ens = max_entangled(2) if ens is None else ens

    def obj(x):
        return -bell_value_spatial(i3322_operator(DichotomicSettings(x[:3], x[3:])), ens)

    fun, x = _multistart(obj, starts, seed, jobs)
    return OptimizationResult(-fun, DichotomicSettings(x[:3], x[3:]))


def optimize_i3322_temporal(e: Optional[Evolution] = None, starts: int = 12,
                            seed: int = 0, jobs: int = 1) -> OptimizationResult:
    """Maximise I3322 over temporal x-y plane angles and the input state."""
    e = identity_evolution(2) if e is None else e

    def obj(x):
        op = i3322_operator(DichotomicSettings(x[:3], x[3:]), temporal=True)
        return -max_temporal_value(op, e)[0]

    fun, x = _multistart(obj, starts, seed, jobs)
    s = DichotomicSettings(x[:3], x[3:])
    val, vec = max_temporal_value(i3322_operator(s, temporal=True), e)
    return OptimizationResult(val, s, vec)


def i3322_xy_optimum() -> float:
    """Closed-form maximum for ``M = I`` with free input state and x-y plane settings.

    For unit vectors in the plane, ``Re<A B> = cos(a - b)`` regardless of the
    state while the marginals are linear in its Bloch vector, so
    ``I = -1 + S/4 + |a1 + a2 - b1 - b2|/4`` with ``S`` the signed cosine sum.
    The function maximises this expression with BFGS from random starts.
    """
    def u(p):
        return np.array([np.cos(p), np.sin(p)])

    def val(x):
        a, b = x[:3], x[3:]
        cs = sum(np.cos(a[i] - b[j]) for i, j in I3322_PLUS)
        cs -= sum(np.cos(a[i] - b[j]) for i, j in I3322_MINUS)
        n = (u(a[0]) + u(a[1]) - u(b[0]) - u(b[1])) / 4
        return -1 + cs / 4 + np.linalg.norm(n)

    rngs = np.random.default_rng(5)
    best = -np.inf
    for _ in range(60):
        r = minimize(lambda x: -val(x), rngs.uniform(-np.pi, np.pi, 6), method="BFGS", options={"gtol": 1e-12})
        best = max(best, -r.fun)
    return float(best)


# -- anomaly of nonlocality ---------------------------------------------------


def anomaly_table() -> dict:
    """Four corresponding scenarios of the CGLMP anomaly, plus the CHSH contrast.

    Each cell carries the value computed on its own side; ``arrows`` holds the
    absolute differences between cells that the map says must agree.
    """
    bell = cglmp_operator()
    phi3 = max_entangled(3)
    psi_m = cglmp_optimal_state()
    e_m = state_to_evolution(psi_m)
    e_id = identity_evolution(3)

    spatial_nonmax = bell_value_spatial(bell, psi_m)
    temporal_nonunitary = temporal_value(bell, e_m)
    temporal_general, vec = max_temporal_value(bell, e_id)
    rho_opt = np.outer(vec, vec.conj())
    spatial_post = bell_value_spatial(bell, phi3, rho_a_fi=rho_opt)
    temporal_general_direct = bell_value_temporal(bell, e_id, rho_in=rho_opt)

    # CHSH: with M = I the temporal operator is a multiple of the identity
    # for x-y plane settings, so no input state (post-selection) helps.
    chsh = chsh_operator((0, np.pi / 2), (-np.pi / 4, np.pi / 4))
    t_chsh, _ = temporal_operator(chsh, identity_evolution(2))
    rng = np.random.default_rng(0)
    random_best = max(
        float(np.linalg.eigvalsh(temporal_operator(
            chsh_operator(rng.uniform(-np.pi, np.pi, 2), rng.uniform(-np.pi, np.pi, 2)),
            identity_evolution(2))[0]).max())
        for _ in range(200)
    )

    return {
        "cells": {
            "temporal_mixed_nonunitary": temporal_nonunitary,
            "spatial_nonmaximal": spatial_nonmax,
            "temporal_general_unitary": temporal_general,
            "spatial_postselected_maximal": float(spatial_post),
        },
        "optimal_input": np.abs(vec).tolist(),
        "arrows": {
            "nonunitary<->nonmaximal": abs(temporal_nonunitary - spatial_nonmax),
            "general<->postselected": float(abs(temporal_general - spatial_post)),
            "operator<->direct": float(abs(temporal_general - temporal_general_direct)),
        },
        "chsh": {
            "maximally_mixed": float(np.trace(t_chsh).real / 2),
            "best_input": float(np.linalg.eigvalsh(t_chsh).max()),
            "best_random_settings": random_best,
            "tsirelson": float(2 * SQRT2),
        },
    }
