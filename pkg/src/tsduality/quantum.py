"""States, observables and their time dependence.

States and observables are plain complex ``numpy`` arrays. The helpers here
validate them and provide the few standard operators the package needs.
"""
from __future__ import annotations

import numpy as np

from .errors import DimensionError, InvalidStateError, NotHermitianError
from .linalg import TOL_HERM, as_matrix, is_hermitian

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)

SQRT2 = np.sqrt(2.0)


def as_observable(o, name: str = "observable") -> np.ndarray:
    o = as_matrix(o, name)
    if not is_hermitian(o):
        raise NotHermitianError(f"{name} is not Hermitian")
    return o


def as_density(rho, name: str = "state", tol: float = TOL_HERM) -> np.ndarray:
    """Validate a density matrix: Hermitian, unit trace, positive semidefinite."""
    rho = as_matrix(rho, name)
    if rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"{name} must be square")
    if not is_hermitian(rho, tol):
        raise InvalidStateError(f"{name} is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise InvalidStateError(f"{name} has trace {np.trace(rho).real:.3g}, expected 1")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -tol:
        raise InvalidStateError(f"{name} is not positive semidefinite")
    return rho


def maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex) / d


def ket(index: int, d: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[index] = 1.0
    return v


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def pauli_angle(phi: float) -> np.ndarray:
    """Unit spin observable in the x-z plane: ``cos(phi) X + sin(phi) Z``.

    ``phi = 0`` is X, ``phi = pi/2`` is Z and ``phi = pi/4`` is ``(X + Z)/sqrt(2)``.
    Note ``pauli_angle(3*pi/4) = (Z - X)/sqrt(2)``; this is the sign that makes
    the four-time Leggett-Garg combination reach ``2*sqrt(2)`` with Z measured
    first and X second.
    """
    return np.cos(phi) * SX + np.sin(phi) * SZ


def xy_observable(phi: float) -> np.ndarray:
    """Unit spin observable in the x-y plane: ``cos(phi) X + sin(phi) Y``."""
    return np.cos(phi) * SX + np.sin(phi) * SY


def heisenberg_evolve(o, h0, t: float) -> np.ndarray:
    """``exp(i H0 t) O exp(-i H0 t)``, computed from the eigenbasis of ``H0``."""
    o = as_observable(o)
    h0 = as_observable(h0, "Hamiltonian")
    if o.shape != h0.shape:
        raise DimensionError(f"observable {o.shape} and Hamiltonian {h0.shape} differ")
    w, v = np.linalg.eigh(0.5 * (h0 + h0.conj().T))
    u = (v * np.exp(1j * w * t)) @ v.conj().T
    return u @ o @ u.conj().T


def dephase_observable(o, t: float, gamma: float = SQRT2) -> np.ndarray:
    """Heisenberg-picture sigma_z dephasing of a qubit observable.

    Diagonal entries are kept, off-diagonal entries decay as ``exp(-gamma t)``.
    Integrating ``d rho/dt = Z rho Z - rho`` literally gives ``gamma = 2``; the
    default ``sqrt(2)`` reproduces the reference decay curve.
    """
    o = as_observable(o)
    if o.shape != (2, 2):
        raise DimensionError("dephasing is defined for qubit observables")
    if t < 0:
        raise ValueError("dephasing time must be non-negative")
    f = np.exp(-gamma * t)
    out = o.copy()
    out[0, 1] *= f
    out[1, 0] *= f
    return out
