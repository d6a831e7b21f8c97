"""Finite-strength von Neumann meters.

Each observable ``O = sum_m a_m |m><m|`` is coupled impulsively to its own
meter through ``exp(-i p O)``, which shifts the meter wavefunction by the
eigenvalue ``a_m``. Meters start in the Gaussian

    phi(q) = (eps / 2 pi)^(1/4) exp(-eps q^2 / 4),

so a reading has variance ``1/eps`` and ``eps -> 0`` is the weak limit. For
shifted packets centred at ``a`` and ``a'``

    overlap       <phi_a'|phi_a>     = exp(-eps (a - a')^2 / 8)
    first moment  <phi_a'|q|phi_a>   = (a + a')/2 * exp(-eps (a - a')^2 / 8)

and the meter states factor out of the joint system-meter state, so the exact
reading statistics reduce to chains of Schur products in the observables'
eigenbases.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Sequence

import numpy as np
from scipy import integrate

from .correlations import (
    TemporalScenario,
    three_time_correlation,
    weak_temporal_correlation,
)
from .errors import GridResolutionError, PostselectionError
from .linalg import hermitian_eig, partial_trace, sandwich_sum
from .quantum import as_density

DEFAULT_EPSILON = 1e-3
EPSILON_LADDER = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
CHUNK = 1 << 16


@dataclass(frozen=True)
class GaussianMeter:
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("meter epsilon must be positive")

    @property
    def sigma(self) -> float:
        return 1.0 / math.sqrt(self.epsilon)

    def wavefunction(self, q):
        eps = self.epsilon
        return (eps / (2 * np.pi)) ** 0.25 * np.exp(-eps * np.asarray(q) ** 2 / 4)

    def derivative(self, q):
        q = np.asarray(q)
        return -self.epsilon * q / 2 * self.wavefunction(q)

    def overlap(self, a, b):
        return np.exp(-self.epsilon * (np.asarray(a) - np.asarray(b)) ** 2 / 8)

    def first_moment(self, a, b):
        return (np.asarray(a) + np.asarray(b)) / 2 * self.overlap(a, b)


@dataclass(frozen=True, eq=False)
class WeakSetup:
    scenario: TemporalScenario
    meter: GaussianMeter


def moment_identities(meter: GaussianMeter) -> dict:
    """Quadrature values of the meter integrals behind the weak-limit expansion.

    Expected: ``norm = 1``, ``q_phi2 = 0``, ``phi_dphi = 0``, ``q_phi_dphi = -1/2``.
    """
    phi, dphi = meter.wavefunction, meter.derivative
    lim = 40 * meter.sigma

    def quad(f):
        return integrate.quad(f, -lim, lim, limit=200, epsabs=1e-13, epsrel=1e-12)[0]

    return {
        "norm": quad(lambda q: phi(q) ** 2),
        "q_phi2": quad(lambda q: q * phi(q) ** 2),
        "phi_dphi": quad(lambda q: phi(q) * dphi(q)),
        "q_phi_dphi": quad(lambda q: q * phi(q) * dphi(q)),
    }


def overlap_by_quadrature(meter: GaussianMeter, a: float, b: float):
    """``(overlap, first_moment)`` of packets centred at ``a`` and ``b``, by quadrature."""
    phi = meter.wavefunction
    lo = min(a, b) - 40 * meter.sigma
    hi = max(a, b) + 40 * meter.sigma
    kw = dict(limit=400, epsabs=1e-13, epsrel=1e-12, points=[a, b])
    ov = integrate.quad(lambda q: phi(q - a) * phi(q - b), lo, hi, **kw)[0]
    fm = integrate.quad(lambda q: q * phi(q - a) * phi(q - b), lo, hi, **kw)[0]
    return ov, fm


@dataclass(frozen=True, eq=False)
class AncillaRealization:
    """Mixed post-selection as a pure selection on system and ancilla.

    The ancilla starts maximally mixed, interacts through ``u_int`` and both
    are then projected on ``|psi_fi> (x) |0>``. Ordering is system (x) ancilla.
    """

    u_int: np.ndarray
    psi_fi: np.ndarray
    anc_dim: int

    @property
    def dim(self) -> int:
        return len(self.psi_fi)

    def projector(self) -> np.ndarray:
        """``U_int^dag (|psi_fi><psi_fi| (x) |0><0|) U_int`` on system (x) ancilla."""
        target = np.kron(self.psi_fi, np.eye(self.anc_dim)[0])
        omega = self.u_int.conj().T @ target
        return np.outer(omega, omega.conj())

    def effect(self) -> np.ndarray:
        """System operator seen by the selection; equals the target ``rho_fi``."""
        return partial_trace(self.projector(), (self.dim, self.anc_dim), keep="A")

    def normalization(self, rho_in) -> float:
        """``1 / <0|<psi_fi| U_int (rho_in (x) I) U_int^dag |psi_fi>|0>`` for ``M = I``."""
        rho_in = np.asarray(rho_in, dtype=complex)
        val = np.trace(self.projector() @ np.kron(rho_in, np.eye(self.anc_dim))).real
        if val <= 1e-14:
            raise PostselectionError("initial and final states are orthogonal")
        return 1.0 / val


def _complete(x: np.ndarray) -> np.ndarray:
    """Unitary whose first column is exactly ``x``."""
    n = len(x)
    q, _ = np.linalg.qr(np.column_stack([x, np.eye(n, dtype=complex)]))
    q = q[:, :n]
    c = np.vdot(q[:, 0], x)
    q[:, 0] *= c / abs(c)
    return q


def ancilla_postselection(rho_fi, tol: float = 1e-12) -> AncillaRealization:
    rho_fi = as_density(rho_fi, "final state")
    w, v = hermitian_eig(rho_fi)
    rank = int(np.sum(w > tol))
    w = np.clip(w[:rank], 0, None)
    w = w / w.sum()
    d = rho_fi.shape[0]
    omega = sum(np.sqrt(w[k]) * np.kron(v[:, k], np.eye(rank)[k]) for k in range(rank))
    start = np.kron(v[:, 0], np.eye(rank)[0])
    if np.allclose(start, omega, atol=1e-15):
        return AncillaRealization(np.eye(d * rank, dtype=complex), v[:, 0], rank)
    # W maps |psi_fi>|0> to the purification; the interaction is its inverse
    w_map = _complete(omega) @ _complete(start).conj().T
    return AncillaRealization(w_map.conj().T, v[:, 0], rank)


def _schur(vals: np.ndarray, vecs: np.ndarray, weight: Callable, x: np.ndarray) -> np.ndarray:
    """``sum_{m m'} weight(a_m, a_m') P_m X P_m'``."""
    xt = vecs.conj().T @ x @ vecs
    return vecs @ (weight(vals[:, None], vals[None, :]) * xt) @ vecs.conj().T


def _chain(setup: WeakSetup, weight: Callable, postselection: str) -> complex:
    s = setup.scenario
    e = s.evolution
    obs = s.evolved()
    n_before = s.n_before()
    rho = s.initial_state().astype(complex)
    final = s.rho_fi
    anc = None
    if final is not None and postselection == "ancilla":
        anc = ancilla_postselection(final)
    elif final is not None and postselection != "direct":
        raise ValueError("postselection must be 'ancilla' or 'direct'")

    def channel(x):
        y = sandwich_sum(e.probs, e.ops, x)
        return y if anc is None else np.kron(y, np.eye(anc.anc_dim))

    for k, o in enumerate(obs):
        if k == n_before:
            rho = channel(rho)
        if k >= n_before and anc is not None:
            o = np.kron(o, np.eye(anc.anc_dim))
        vals, vecs = np.linalg.eigh(o)
        rho = _schur(vals, vecs, weight, rho)
    if n_before == len(obs):
        rho = channel(rho)
    if anc is not None:
        return np.trace(anc.projector() @ rho)
    if final is not None:
        return np.trace(final @ rho)
    return np.trace(rho)


def exact_meter_correlation(setup: WeakSetup, postselection: str = "ancilla") -> float:
    """Exact ``E(q_1 q_2 ... q_n)`` at finite meter strength.

    Mixed post-selection is realised through :func:`ancilla_postselection`
    by default; ``postselection="direct"`` projects on ``rho_fi`` instead.
    """
    m = setup.meter
    num = _chain(setup, m.first_moment, postselection)
    den = _chain(setup, m.overlap, postselection)
    if abs(den) <= 1e-14:
        raise PostselectionError("post-selection has zero success probability")
    val = num / den
    if abs(val.imag) > 1e-9 * max(1.0, abs(val.real)):
        raise ValueError("meter correlation came out complex")
    return float(val.real)


def limit_meter_correlation(scenario: TemporalScenario, postselection: str = "ancilla") -> float:
    """``epsilon -> 0`` limit of :func:`exact_meter_correlation` taken inside the chain.

    The overlap weight tends to 1 and the first-moment weight to ``(a + a')/2``,
    so this runs the same (ancilla or direct) realisation without meter bias.
    """
    setup = WeakSetup(scenario, GaussianMeter(1.0))
    num = _chain(setup, lambda a, b: (a + b) / 2, postselection)
    den = _chain(setup, lambda a, b: np.ones(np.broadcast(a, b).shape), postselection)
    if abs(den) <= 1e-14:
        raise PostselectionError("post-selection has zero success probability")
    return float(num.real / den.real)


def weak_limit(scenario: TemporalScenario) -> float:
    """Weak-limit value from the closed-form correlation functionals."""
    n = len(scenario.observables)
    if n == 2:
        return weak_temporal_correlation(scenario)
    if n == 3:
        return three_time_correlation(scenario)
    raise ValueError("closed-form weak limit available for two or three observables")


class ConvergenceRow(NamedTuple):
    epsilon: float
    exact: float
    weak_limit: float
    delta: float


@dataclass
class ConvergenceTable:
    rows: List[ConvergenceRow]
    slope: Optional[float]

    @property
    def monotone(self) -> bool:
        d = [r.delta for r in self.rows]
        return all(b <= a for a, b in zip(d, d[1:]))


def convergence_study(setup: WeakSetup, eps_list: Sequence[float] = EPSILON_LADDER,
                      zero_tol: float = 1e-13) -> ConvergenceTable:
    """Exact meter correlation against its weak limit over a descending ladder.

    ``slope`` is the least-squares slope of ``log|delta|`` against ``log eps``
    (``None`` when every delta is below ``zero_tol``).
    """
    eps_list = [float(x) for x in eps_list]
    if any(x <= 0 for x in eps_list) or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be positive and strictly descending")
    ref = weak_limit(setup.scenario)
    rows = []
    for eps in eps_list:
        val = exact_meter_correlation(WeakSetup(setup.scenario, GaussianMeter(eps)))
        rows.append(ConvergenceRow(eps, val, ref, abs(val - ref)))
    deltas = np.array([r.delta for r in rows])
    slope = None
    if np.all(deltas > zero_tol):
        slope = float(np.polyfit(np.log(eps_list), np.log(deltas), 1)[0])
    return ConvergenceTable(rows, slope)


# -- sampling -----------------------------------------------------------------


def _coefficients(setup: WeakSetup, postselection: str):
    """Eigenvalues of both observables and the tensor ``C[m, m', n, n']``.

    The joint reading density is
    ``sum C phi(q1-a_m) phi(q1-a_m') phi(q2-b_n) phi(q2-b_n')``.
    """
    s = setup.scenario
    if len(s.observables) != 2:
        raise ValueError("meter sampling is implemented for two observables")
    e = s.evolution
    o1, o2 = s.evolved()
    a, v1 = np.linalg.eigh(o1)
    b, v2 = np.linalg.eigh(o2)
    rho_t = v1.conj().T @ s.initial_state() @ v1
    if s.rho_fi is None:
        fin = np.eye(e.d_b, dtype=complex)
    elif postselection == "ancilla":
        fin = ancilla_postselection(s.rho_fi).effect()
    else:
        fin = s.rho_fi
    fin_t = v2.conj().T @ fin @ v2
    amp = np.einsum("ni,kij,jm->knm", v2.conj().T, e.ops, v1)
    c = np.einsum("mM,k,knm,kNM,Nn->mMnN", rho_t, e.probs, amp, amp.conj(), fin_t)
    return a, b, c


def _grid(vals: np.ndarray, meter: GaussianMeter, per_sigma: int, max_points: int):
    sig = meter.sigma
    lo, hi = vals.min() - 10 * sig, vals.max() + 10 * sig
    h = sig / per_sigma
    n = int(math.ceil((hi - lo) / h))
    if n > max_points:
        raise GridResolutionError(f"grid would need {n} points per axis (max {max_points})")
    h = (hi - lo) / n
    return lo + h * (np.arange(n) + 0.5), h


def reading_density(setup: WeakSetup, per_sigma: int = 8, max_points: int = 4000,
                    postselection: str = "ancilla"):
    """Joint density of the two readings on a cell-centred grid.

    Returns ``(q1, q2, density, h1, h2)``. Raises :class:`GridResolutionError`
    if the grid mass differs from one by more than ``1e-6``.
    """
    m = setup.meter
    a, b, c = _coefficients(setup, postselection)
    q1, h1 = _grid(a, m, per_sigma, max_points)
    q2, h2 = _grid(b, m, per_sigma, max_points)
    w1 = m.wavefunction(q1[:, None] - a[None, :])
    w2 = m.wavefunction(q2[:, None] - b[None, :])
    total = np.einsum("mMnN,mM,nN->", c, m.overlap(a[:, None], a[None, :]),
                      m.overlap(b[:, None], b[None, :]))
    u = np.einsum("im,iM,mMnN->inN", w1, w1, c)
    dens = np.einsum("inN,jn,jN->ij", u, w2, w2) / total
    if np.abs(dens.imag).max() > 1e-10 * np.abs(dens.real).max():
        raise ValueError("reading density has an imaginary part")
    dens = dens.real
    if dens.min() < -1e-10 * dens.max():
        raise ValueError("reading density is negative")
    dens = np.clip(dens, 0, None)
    mass = dens.sum() * h1 * h2
    if abs(mass - 1) > 1e-6:
        raise GridResolutionError(f"grid mass {mass:.9f} deviates from 1")
    return q1, q2, dens, h1, h2


class MeterSamples(NamedTuple):
    samples: np.ndarray
    estimate: float
    stderr: float


def _draw(rng, n, q1, q2, h1, h2, row_cdf, flat_cdf):
    n2 = len(q2)
    u1, u2 = rng.random(n), rng.random(n)
    rows = np.searchsorted(row_cdf, u1 * row_cdf[-1], side="right")
    rows = np.minimum(rows, len(q1) - 1)
    start = np.where(rows > 0, row_cdf[rows - 1], 0.0)
    mass = row_cdf[rows] - start
    flat = np.searchsorted(flat_cdf, start + u2 * mass, side="right")
    cols = np.clip(flat - rows * n2, 0, n2 - 1)
    x = q1[rows] + (rng.random(n) - 0.5) * h1
    y = q2[cols] + (rng.random(n) - 0.5) * h2
    return np.column_stack([x, y])


def sample_meters(setup: WeakSetup, n: int, seed: int, jobs: int = 1,
                  per_sigma: int = 8) -> MeterSamples:
    """Draw reading pairs ``(q1, q2)`` from the exact joint density.

    Inverse-CDF on the grid: the row (``q1`` cell) from the marginal, the
    column from the conditional, then a uniform position inside the cell.
    Samples come in fixed chunks with seeds spawned from ``seed``, so the
    output is identical for any ``jobs``.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    q1, q2, dens, h1, h2 = reading_density(setup, per_sigma)
    flat_cdf = np.cumsum(dens.ravel())
    row_cdf = flat_cdf.reshape(dens.shape)[:, -1].copy()
    sizes = [CHUNK] * (n // CHUNK) + ([n % CHUNK] if n % CHUNK else [])
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(len(sizes))]

    def work(args):
        rng, size = args
        return _draw(rng, size, q1, q2, h1, h2, row_cdf, flat_cdf)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(work, zip(rngs, sizes)))
    else:
        parts = [work(x) for x in zip(rngs, sizes)]
    samples = np.concatenate(parts)
    prod = samples[:, 0] * samples[:, 1]
    se = float(prod.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return MeterSamples(samples, float(prod.mean()), se)


def tensor_meter_correlation(setup: WeakSetup, postselection: str = "ancilla") -> float:
    """Same quantity as :func:`exact_meter_correlation`, from the coefficient tensor."""
    m = setup.meter
    a, b, c = _coefficients(setup, postselection)
    aa, bb = (a[:, None], a[None, :]), (b[:, None], b[None, :])
    num = np.einsum("mMnN,mM,nN->", c, m.first_moment(*aa), m.first_moment(*bb))
    den = np.einsum("mMnN,mM,nN->", c, m.overlap(*aa), m.overlap(*bb))
    return float((num / den).real)
