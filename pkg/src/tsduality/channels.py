"""Generalized evolutions in canonical form.

An evolution is a list of branches ``(M_mu, p_mu)`` with every operator
normalised to ``Tr(M^dag M) = d_A`` and probabilities summing to one. The
channel acts as ``rho -> sum_mu p_mu M'_mu rho M'_mu^dag`` where ``M'`` is
``M`` rescaled so that the output is normalised (see :func:`renormalize`).

Kraus operators relate to the canonical branches by
``K_mu = sqrt(p_mu) M_mu``, i.e. ``M_mu = sqrt(d_A) K_mu / sqrt(Tr K^dag K)``
and ``p_mu = Tr(K^dag K) / d_A``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionError, InvalidStateError, PostselectionError
from .linalg import as_matrix, sandwich_sum
from .quantum import I2, SQRT2, SX, SY, SZ, as_density

NORM_TOL = 1e-10
PROB_TOL = 1e-12
# below this the normalising denominator is treated as an impossible selection
DENOM_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class Evolution:
    """Canonical operator set ``{(M_mu, p_mu)}`` mapping ``H_A -> H_B``.

    ``ops`` has shape ``(K, d_B, d_A)``.
    """

    ops: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        ops = np.array(self.ops, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        probs = np.array(self.probs, dtype=float).ravel()
        if ops.ndim != 3 or len(ops) != len(probs) or len(ops) == 0:
            raise DimensionError("ops must be (K, d_B, d_A) with one probability per branch")
        if not np.all(np.isfinite(ops)):
            raise ValueError("evolution operators have non-finite entries")
        d_a = ops.shape[2]
        norms = np.einsum("kij,kij->k", ops.conj(), ops).real
        if np.any(np.abs(norms - d_a) > NORM_TOL * d_a):
            raise InvalidStateError("every branch needs Tr(M^dag M) = d_A")
        if np.any(probs <= 0) or abs(probs.sum() - 1) > PROB_TOL:
            raise InvalidStateError("branch probabilities must be positive and sum to 1")
        ops.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "ops", ops)
        object.__setattr__(self, "probs", probs)

    @property
    def d_a(self) -> int:
        return self.ops.shape[2]

    @property
    def d_b(self) -> int:
        return self.ops.shape[1]

    def __len__(self):
        return len(self.probs)

    def effect(self) -> np.ndarray:
        """``sum_mu p_mu M_mu^dag M_mu``; the identity iff non-selective."""
        return np.einsum("k,kji,kjl->il", self.probs, self.ops.conj(), self.ops)

    @property
    def selective(self) -> bool:
        return not np.allclose(self.effect(), np.eye(self.d_a), atol=NORM_TOL, rtol=0)

    def kraus(self) -> List[np.ndarray]:
        return [np.sqrt(p) * m for p, m in zip(self.probs, self.ops)]


def canonicalize(kraus: Sequence) -> Evolution:
    """Canonical branches from Kraus operators (each of shape ``d_B x d_A``).

    For a trace-preserving set the probabilities ``Tr(K^dag K)/d_A`` already
    sum to one. A selective (non trace-preserving) set is rescaled globally,
    which leaves the normalised channel action unchanged.
    """
    ks = [as_matrix(k, "Kraus operator") for k in kraus]
    if not ks:
        raise ValueError("empty Kraus set")
    if len({k.shape for k in ks}) != 1:
        raise DimensionError("Kraus operators must share one shape")
    d_a = ks[0].shape[1]
    weights = np.array([np.vdot(k, k).real for k in ks])
    if np.any(weights <= DENOM_TOL * max(1.0, weights.max())):
        raise InvalidStateError("Kraus set contains a zero operator")
    ops = np.array([np.sqrt(d_a / w) * k for k, w in zip(ks, weights)])
    probs = weights / d_a
    probs = probs / probs.sum()
    return Evolution(ops, probs)


def unitary_evolution(u) -> Evolution:
    return canonicalize([u])


def identity_evolution(d: int) -> Evolution:
    return Evolution(np.eye(d, dtype=complex)[None], [1.0])


def dephasing_evolution(t: float, gamma: float = SQRT2) -> Evolution:
    """Qubit sigma_z dephasing for time ``t``: off-diagonals decay by ``exp(-gamma t)``."""
    if t < 0:
        raise ValueError("dephasing time must be non-negative")
    f = np.exp(-gamma * t)
    ks = [np.sqrt((1 + f) / 2) * np.eye(2)]
    if 1 - f > 1e-15:
        ks.append(np.sqrt((1 - f) / 2) * SZ)
    return canonicalize(ks)


def _denominator(e: Evolution, rho_in: np.ndarray, rho_fi: Optional[np.ndarray]) -> float:
    if rho_fi is None:
        val = np.trace(e.effect() @ rho_in)
    else:
        out = sandwich_sum(e.probs, e.ops, rho_in)
        val = np.trace(rho_fi @ out)
    return float(val.real)


def _check_dims(e: Evolution, rho_in, rho_fi):
    if rho_in.shape != (e.d_a, e.d_a):
        raise DimensionError(f"initial state must be {e.d_a}x{e.d_a}")
    if rho_fi is not None and rho_fi.shape != (e.d_b, e.d_b):
        raise DimensionError(f"final state must be {e.d_b}x{e.d_b}")


def renormalize(e: Evolution, rho_in, rho_fi=None) -> np.ndarray:
    """Selectively renormalised operators ``M'_mu`` (shape ``(K, d_B, d_A)``).

    Without a final state ``M' = M / sqrt(Tr[sum_nu p_nu M_nu^dag M_nu rho_in])``,
    so that the output state has unit trace. With a final state the
    denominator becomes ``Tr[rho_fi sum_nu p_nu M_nu rho_in M_nu^dag]``.
    """
    rho_in = as_density(rho_in, "initial state")
    if rho_fi is not None:
        rho_fi = as_density(rho_fi, "final state")
    _check_dims(e, rho_in, rho_fi)
    denom = _denominator(e, rho_in, rho_fi)
    if denom <= DENOM_TOL:
        raise PostselectionError("pre/post-selection has zero success probability")
    return e.ops / np.sqrt(denom)


def apply(e: Evolution, rho, rho_fi=None) -> np.ndarray:
    """``sum_mu p_mu M'_mu rho M'_mu^dag``.

    The result has unit trace; when ``rho_fi`` is given it is instead
    normalised so that ``Tr[rho_fi out] = 1``.
    """
    primes = renormalize(e, rho, rho_fi)
    rho = np.asarray(rho, dtype=complex)
    return sandwich_sum(e.probs, primes, rho)


def apply_heisenberg(e: Evolution, o, rho_in=None) -> np.ndarray:
    """Carry an observable through the evolution: ``O -> sum p M' O M'^dag``.

    ``M'`` is normalised against ``rho_in`` (maximally mixed by default).
    """
    if rho_in is None:
        rho_in = np.eye(e.d_a) / e.d_a
    primes = renormalize(e, rho_in)
    o = as_matrix(o)
    if o.shape != (e.d_a, e.d_a):
        raise DimensionError(f"observable must be {e.d_a}x{e.d_a}")
    return sandwich_sum(e.probs, primes, o)


def mix_representation(e: Evolution, u, rho_in=None) -> Tuple[Evolution, np.ndarray]:
    """Re-express the branches through a ``K x K`` unitary.

    Builds ``N~_nu = sum_mu u[nu, mu] sqrt(p_mu) M'_mu`` and returns the
    canonical evolution of the ``N~`` together with the selection
    probabilities ``q_nu = Tr(N~^dag N~ rho_in)``. The channel action is
    unchanged. Branches that vanish under the mixing are dropped.
    """
    u = as_matrix(u, "mixing unitary")
    k = len(e)
    if u.shape != (k, k):
        raise DimensionError(f"mixing unitary must be {k}x{k}")
    if not np.allclose(u @ u.conj().T, np.eye(k), atol=1e-10, rtol=0):
        raise ValueError("mixing matrix is not unitary")
    if rho_in is None:
        rho_in = np.eye(e.d_a) / e.d_a
    primes = renormalize(e, rho_in)
    tilde = np.einsum("nm,m,mij->nij", u, np.sqrt(e.probs), primes)
    q = np.einsum("nji,njk,ki->n", tilde.conj(), tilde, np.asarray(rho_in, dtype=complex)).real
    norms = np.einsum("nij,nij->n", tilde.conj(), tilde).real
    keep = norms > DENOM_TOL * norms.max()
    return canonicalize(list(tilde[keep])), q


def channel_matrix(e: Evolution, rho_in=None, rho_fi=None) -> np.ndarray:
    """Transfer matrix of the (renormalised) channel on row-major ``vec(rho)``.

    Two evolutions with equal transfer matrices act identically on every input.
    """
    if rho_in is None:
        rho_in = np.eye(e.d_a) / e.d_a
    primes = renormalize(e, rho_in, rho_fi)
    return np.einsum("k,kij,klm->iljm", e.probs, primes, primes.conj()).reshape(
        e.d_b**2, e.d_a**2
    )


def same_channel(e1: Evolution, e2: Evolution, atol: float = 1e-10) -> bool:
    """Equality of evolutions by their action, blind to branch phases and order."""
    if (e1.d_a, e1.d_b) != (e2.d_a, e2.d_b):
        return False
    return np.allclose(channel_matrix(e1), channel_matrix(e2), atol=atol, rtol=0)


def time_reflect(e: Evolution) -> Evolution:
    """Evolution with every branch replaced by its plain transpose (``H_B -> H_A``)."""
    return canonicalize([np.sqrt(p) * m.T for p, m in zip(e.probs, e.ops)])


def pauli_mixture(weights: Sequence[float]) -> Evolution:
    """Random-unitary qubit channel with weights on ``I, X, Y, Z``."""
    paulis = [I2, SX, SY, SZ]
    pairs = [(w, p) for w, p in zip(weights, paulis) if w > 0]
    return Evolution(np.array([p for _, p in pairs]), np.array([w for w, _ in pairs]))
