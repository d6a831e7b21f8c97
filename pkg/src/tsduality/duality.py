"""Correlation-preserving map between bipartite states and evolutions.

A pure state ``|psi> = sum_ij alpha_ij |i>|j>`` corresponds to the operator
``M = sqrt(d_A) * alpha^dag`` (entry ``M[j, i] = sqrt(d_A) * conj(alpha[i, j])``),
which maps ``H_A`` to ``H_B``. Mixtures map branch by branch with the same
probabilities. Every conversion in the package goes through
:func:`state_to_evolution` / :func:`evolution_to_state` so the transpose and
conjugation convention lives in one place.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .channels import Evolution
from .errors import DimensionError, InvalidStateError
from .linalg import as_matrix, frobenius_distance, hermitian_eig, partial_trace
from .quantum import as_density

AMP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class BipartiteEnsemble:
    """Mixture ``{(p_mu, |psi_mu>)}``; ``amps`` has shape ``(K, d_A, d_B)``."""

    probs: np.ndarray
    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex)
        if amps.ndim == 2:
            amps = amps[None]
        probs = np.array(self.probs, dtype=float).ravel()
        if amps.ndim != 3 or len(amps) != len(probs) or len(amps) == 0:
            raise DimensionError("amps must be (K, d_A, d_B) with one probability per member")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes have non-finite entries")
        norms = np.einsum("kij,kij->k", amps.conj(), amps).real
        if np.any(np.abs(norms - 1) > AMP_TOL):
            raise InvalidStateError("member states must be normalised")
        if np.any(probs <= 0) or abs(probs.sum() - 1) > AMP_TOL:
            raise InvalidStateError("ensemble probabilities must be positive and sum to 1")
        amps.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "probs", probs)

    @property
    def d_a(self) -> int:
        return self.amps.shape[1]

    @property
    def d_b(self) -> int:
        return self.amps.shape[2]

    def __len__(self):
        return len(self.probs)

    def vectors(self) -> np.ndarray:
        """Member kets flattened with ``(i, j) -> i * d_B + j``."""
        return self.amps.reshape(len(self), -1)


def pure_state(amps) -> BipartiteEnsemble:
    """Single-member ensemble; ``amps`` is a ``d_A x d_B`` matrix (normalised here)."""
    a = as_matrix(amps, "amplitudes")
    return BipartiteEnsemble([1.0], a / np.linalg.norm(a))


def from_vector(psi, d_a: int, d_b: int) -> BipartiteEnsemble:
    psi = np.asarray(psi, dtype=complex).ravel()
    if psi.size != d_a * d_b:
        raise DimensionError(f"vector of length {psi.size} does not match {d_a}x{d_b}")
    return pure_state(psi.reshape(d_a, d_b))


def max_entangled(d: int) -> BipartiteEnsemble:
    return pure_state(np.eye(d) / np.sqrt(d))


def state_to_evolution(ens: BipartiteEnsemble) -> Evolution:
    ops = np.sqrt(ens.d_a) * np.conj(np.transpose(ens.amps, (0, 2, 1)))
    return Evolution(ops, ens.probs)


def evolution_to_state(e: Evolution) -> BipartiteEnsemble:
    amps = np.conj(np.transpose(e.ops, (0, 2, 1)))
    amps = amps / np.linalg.norm(amps, axis=(1, 2))[:, None, None]
    return BipartiteEnsemble(e.probs, amps)


def ensemble_density(ens: BipartiteEnsemble) -> np.ndarray:
    v = ens.vectors()
    return np.einsum("k,ki,kj->ij", ens.probs, v, v.conj())


def reduced(ens: BipartiteEnsemble, side: str = "A") -> np.ndarray:
    return partial_trace(ensemble_density(ens), (ens.d_a, ens.d_b), keep=side)


def ensemble_from_density(rho, d_a: int, d_b: int, tol: float = 1e-12) -> BipartiteEnsemble:
    """Spectral ensemble of a bipartite density matrix."""
    rho = as_density(rho, "bipartite state")
    if rho.shape != (d_a * d_b, d_a * d_b):
        raise DimensionError(f"state of shape {rho.shape} does not match {d_a}x{d_b}")
    w, v = hermitian_eig(rho)
    keep = w > tol
    w = w[keep] / w[keep].sum()
    return BipartiteEnsemble(w, v[:, keep].T.reshape(-1, d_a, d_b))


class ReductionDiagnosis(NamedTuple):
    nonselective: bool
    unital: bool
    dist_a: float
    dist_b: float


def reduction_check(ens: BipartiteEnsemble, tol: float = 1e-9) -> ReductionDiagnosis:
    """Relate the environment type of the mapped evolution to the reduced states.

    ``nonselective`` is ``sum p M^dag M = I``; ``dist_a``/``dist_b`` are the
    Frobenius distances of the reduced states from maximally mixed. The
    identity ``sum p M^dag M = d_A rho_A`` makes ``dist_a`` vanish exactly when
    the evolution is non-selective; ``dist_b`` vanishes when the evolution is
    also unital (``sum p M M^dag = (d_A/d_B) I``), which holds for unitary
    mixtures but not for every trace-preserving channel.
    """
    e = state_to_evolution(ens)
    nonsel = np.allclose(e.effect(), np.eye(e.d_a), atol=tol, rtol=0)
    out = np.einsum("k,kij,klj->il", e.probs, e.ops, e.ops.conj())
    unital = np.allclose(out, np.eye(e.d_b) * e.d_a / e.d_b, atol=tol, rtol=0)
    rho_a, rho_b = reduced(ens, "A"), reduced(ens, "B")
    return ReductionDiagnosis(
        bool(nonsel),
        bool(unital),
        frobenius_distance(rho_a, np.eye(ens.d_a) / ens.d_a),
        frobenius_distance(rho_b, np.eye(ens.d_b) / ens.d_b),
    )


def unitarity_deviation(m) -> float:
    """``|| M M^dag / d - I / d ||_F`` for a square canonical operator."""
    m = as_matrix(m)
    d = m.shape[0]
    return frobenius_distance(m @ m.conj().T / d, np.eye(d) / d)


def bipartition(amplitudes, dims: Sequence[int], group_a: Sequence[int]) -> BipartiteEnsemble:
    """Split a multipartite pure state into ``group_a`` versus the rest.

    Legs are numbered from 1. Rows of the resulting amplitude matrix run over
    the legs of ``group_a`` in increasing leg order (row-major), columns over
    the complementary legs.
    """
    dims = [int(d) for d in dims]
    n = len(dims)
    t = np.asarray(amplitudes, dtype=complex).reshape(dims)
    ga = sorted({int(g) for g in group_a})
    if len(ga) != len(list(group_a)) or not ga or len(ga) >= n or ga[0] < 1 or ga[-1] > n:
        raise ValueError(f"group_a must be a nonempty proper subset of legs 1..{n}")
    a_axes = [g - 1 for g in ga]
    b_axes = [k for k in range(n) if k not in a_axes]
    d_a = int(np.prod([dims[k] for k in a_axes]))
    d_b = int(np.prod([dims[k] for k in b_axes]))
    return pure_state(np.transpose(t, a_axes + b_axes).reshape(d_a, d_b))


def schmidt_coefficients(ens: BipartiteEnsemble) -> np.ndarray:
    if len(ens) != 1:
        raise ValueError("Schmidt decomposition needs a pure state")
    return np.linalg.svd(ens.amps[0], compute_uv=False)


def entanglement_entropy(ens: BipartiteEnsemble) -> float:
    s = schmidt_coefficients(ens) ** 2
    s = s[s > 1e-300]
    return float(-(s * np.log(s)).sum())


def mix_ensemble(ens: BipartiteEnsemble, u) -> BipartiteEnsemble:
    """Ensemble of the normalised states ``sum_mu u[nu, mu] sqrt(p_mu) |psi_mu>``."""
    u = as_matrix(u, "mixing unitary")
    tilde = np.einsum("nm,m,mij->nij", u, np.sqrt(ens.probs), ens.amps)
    q = np.einsum("nij,nij->n", tilde.conj(), tilde).real
    keep = q > 1e-14 * q.max()
    return BipartiteEnsemble(q[keep] / q[keep].sum(), tilde[keep] / np.sqrt(q[keep])[:, None, None])


def swap_parties(ens: BipartiteEnsemble) -> BipartiteEnsemble:
    return BipartiteEnsemble(ens.probs, np.transpose(ens.amps, (0, 2, 1)))


def werner_state(p: float) -> BipartiteEnsemble:
    """``(1 - p) |Phi+><Phi+| + p I/4`` as a Bell-state mixture."""
    s = 1 / np.sqrt(2)
    bells = [
        [[s, 0], [0, s]],
        [[0, s], [s, 0]],
        [[0, -1j * s], [1j * s, 0]],
        [[s, 0], [0, -s]],
    ]
    w = [1 - 3 * p / 4, p / 4, p / 4, p / 4]
    pairs = [(wi, b) for wi, b in zip(w, bells) if wi > 0]
    return BipartiteEnsemble([wi for wi, _ in pairs], [b for _, b in pairs])

