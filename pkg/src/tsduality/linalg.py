"""Dense complex linear algebra for small quantum problems.

Bipartite index convention used everywhere in the package: the pair
``(i, j)`` with ``i`` on subsystem A and ``j`` on subsystem B flattens to
``i * d_B + j``. This is what :func:`numpy.kron` produces and matches a
row-major flattening of an amplitude matrix ``alpha[i, j]``.
"""
from __future__ import annotations

from typing import Tuple

import numpy as np

from .errors import DimensionError, NotHermitianError

TOL_HERM = 1e-10
TOL_EIG = 1e-10

# Largest matrix side produced by tensor(); 128**2 covers the benchmark range.
MAX_DIM = 2**14


def _check_finite(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Return ``m`` as a finite 2-d complex array."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-d, got shape {a.shape}")
    return _check_finite(a, name)


def dagger(a) -> np.ndarray:
    return as_matrix(a).conj().T


def tensor(a, b) -> np.ndarray:
    """Kronecker product, ``(i, j) -> i * d_B + j``."""
    a, b = as_matrix(a), as_matrix(b)
    rows, cols = a.shape[0] * b.shape[0], a.shape[1] * b.shape[1]
    if max(rows, cols) > MAX_DIM:
        raise DimensionError(f"tensor product of size {rows}x{cols} exceeds MAX_DIM={MAX_DIM}")
    return np.kron(a, b)


def anticommutator(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0] or b.shape[1] != a.shape[0]:
        raise DimensionError(f"cannot form {{a, b}} for shapes {a.shape}, {b.shape}")
    return a @ b + b @ a


def frobenius_distance(a, b) -> float:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def is_hermitian(m, tol: float = TOL_HERM) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    return bool(np.abs(m - m.conj().T).max(initial=0.0) <= tol * scale)


def partial_trace(m, dims: Tuple[int, int], keep: str = "A") -> np.ndarray:
    """Reduce a bipartite operator on ``d_A * d_B`` to subsystem ``keep``.

    :param m: square matrix of side ``d_A * d_B``
    :param dims: ``(d_A, d_B)``
    :param keep: ``"A"`` to trace out B, ``"B"`` to trace out A
    """
    m = as_matrix(m)
    d_a, d_b = dims
    if m.shape != (d_a * d_b, d_a * d_b):
        raise DimensionError(f"matrix of shape {m.shape} does not match dims {dims}")
    t = m.reshape(d_a, d_b, d_a, d_b)
    if keep == "A":
        return np.einsum("ijkj->ik", t)
    if keep == "B":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def _canonical_phase(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    # first component with non-negligible magnitude made real positive
    idx = int(np.argmax(np.abs(v) > tol * max(1.0, np.abs(v).max())))
    ph = v[idx] / abs(v[idx])
    return v / ph


def hermitian_eig(m, tol_herm: float = TOL_HERM) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and orthonormal eigenvector columns.

    Degenerate eigenspaces are given a reproducible basis: the projector onto
    the cluster is applied to computational basis vectors in order and the
    results are Gram-Schmidt orthonormalised. Each vector's first significant
    component is made real and positive.
    """
    m = as_matrix(m)
    if not is_hermitian(m, tol_herm):
        raise NotHermitianError("hermitian_eig requires a Hermitian matrix")
    h = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(h)
    w, v = w[::-1], v[:, ::-1]
    n = len(w)
    scale = max(1.0, float(np.abs(w).max(initial=0.0)))
    out = np.empty_like(v)
    k = 0
    while k < n:
        j = k + 1
        while j < n and abs(w[j] - w[k]) <= TOL_EIG * scale:
            j += 1
        block = v[:, k:j]
        if j - k == 1:
            out[:, k] = _canonical_phase(block[:, 0])
        else:
            proj = block @ block.conj().T
            basis = []
            for e in range(n):
                x = proj[:, e].copy()
                for b in basis:
                    x -= (b.conj() @ x) * b
                nx = np.linalg.norm(x)
                if nx > 1e-8:
                    basis.append(_canonical_phase(x / nx))
                if len(basis) == j - k:
                    break
            out[:, k:j] = np.column_stack(basis)
        k = j
    return w.copy(), out


def sandwich_sum(probs, ops, x) -> np.ndarray:
    """``sum_k p_k A_k X A_k^dag`` for a stack ``ops`` of shape ``(K, m, n)``."""
    ops = np.asarray(ops)
    return np.sum(np.asarray(probs)[:, None, None] * (ops @ x @ np.conj(np.swapaxes(ops, 1, 2))), axis=0)
