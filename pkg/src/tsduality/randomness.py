"""Random instances for property checks and experiments.

Every function takes a ``numpy.random.Generator``; callers derive generators
from a master seed with ``numpy.random.SeedSequence`` so results do not depend
on evaluation order or worker count.
"""
from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .channels import Evolution, canonicalize
from .duality import BipartiteEnsemble


def generators(seed: int, n: int):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    return np.atleast_2d(unitary_group.rvs(d, random_state=rng))


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = ginibre(rng, d, d)
    h = (g + g.conj().T) / 2
    return scale * h / np.linalg.norm(h, 2)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Density matrix of the given rank (full rank by default), Hilbert-Schmidt-like."""
    g = ginibre(rng, d, rank or d)
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_pure_density(d: int, rng: np.random.Generator) -> np.ndarray:
    return random_density(d, rng, rank=1)


def random_ensemble(d_a: int, d_b: int, k: int, rng: np.random.Generator) -> BipartiteEnsemble:
    amps = ginibre(rng, k * d_a, d_b).reshape(k, d_a, d_b)
    amps /= np.linalg.norm(amps, axis=(1, 2))[:, None, None]
    p = rng.uniform(0.1, 1.0, k)
    return BipartiteEnsemble(p / p.sum(), amps)


def random_channel(d_a: int, d_b: int, k: int, rng: np.random.Generator) -> Evolution:
    """Trace-preserving channel with ``k`` Kraus operators (needs ``k * d_b >= d_a``)."""
    if k * d_b < d_a:
        raise ValueError("need k * d_b >= d_a for a trace-preserving channel")
    g = ginibre(rng, k * d_b, d_a)
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return canonicalize(list(q.reshape(k, d_b, d_a)))


def random_selective(d_a: int, d_b: int, k: int, rng: np.random.Generator) -> Evolution:
    return canonicalize(list(ginibre(rng, k * d_b, d_a).reshape(k, d_b, d_a)))


def random_unitary_mixture(d: int, k: int, rng: np.random.Generator) -> Evolution:
    us = [random_unitary(d, rng) for _ in range(k)]
    p = rng.uniform(0.1, 1.0, k)
    return Evolution(np.array(us), p / p.sum())
