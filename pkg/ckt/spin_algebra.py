"""Angular-momentum matrices and the two-top tensor-product plumbing.

Basis convention: |j, m> with m running from +j down to -j, Condon-Shortley
phases, joint index ``(j - m1) * d + (j - m2)``.
"""

from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .config import validate_spin
from .errors import DimensionError, NotHermitianError

HERMITIAN_TOL = 1e-10


class SpinTriple(NamedTuple):
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray


class CoupledOperators(NamedTuple):
    """Single-top spin matrices embedded in the (2j+1)^2 joint space."""

    jx1: np.ndarray
    jy1: np.ndarray
    jz1: np.ndarray
    jx2: np.ndarray
    jy2: np.ndarray
    jz2: np.ndarray


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def spin_dim(j: float) -> int:
    return int(round(2 * validate_spin(j))) + 1


def magnetic_numbers(j: float) -> np.ndarray:
    """m = +j, j-1, ..., -j (row order of every single-top matrix)."""
    j = validate_spin(j)
    return j - np.arange(spin_dim(j))


@lru_cache(maxsize=64)
def _spin_operators(j: float) -> SpinTriple:
    m = magnetic_numbers(j)
    # <m+1|J+|m> sits one row above m in descending order
    jplus = np.diag(np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1)), k=1).astype(complex)
    jminus = jplus.conj().T
    jx = 0.5 * (jplus + jminus)
    jy = -0.5j * (jplus - jminus)
    jz = np.diag(m).astype(complex)
    return SpinTriple(_frozen(jx), _frozen(jy), _frozen(jz))


def spin_operators(j: float) -> SpinTriple:
    """Jx, Jy, Jz for spin ``j`` (cached, read-only).

    Raises SpinValueError unless 2j is a positive integer.
    """
    return _spin_operators(validate_spin(j))


def check_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {h.shape}")
    scale = max(1.0, float(np.max(np.abs(h), initial=0.0)))
    defect = float(np.max(np.abs(h - h.conj().T), initial=0.0))
    if defect > tol * scale:
        raise NotHermitianError(f"matrix is not Hermitian (max |H - H^dagger| = {defect:.3e})")


def embed(op: np.ndarray, slot: int, d: int | None = None) -> np.ndarray:
    """op (x) 1 for slot 1, 1 (x) op for slot 2."""
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise DimensionError(f"expected a square single-top operator, got shape {op.shape}")
    if d is not None and op.shape[0] != d:
        raise DimensionError(f"operator is {op.shape[0]}x{op.shape[0]}, expected {d}x{d}")
    eye = np.eye(op.shape[0], dtype=complex)
    if slot == 1:
        return np.kron(op, eye)
    if slot == 2:
        return np.kron(eye, op)
    raise DimensionError(f"slot must be 1 or 2, got {slot}")


@lru_cache(maxsize=32)
def _coupled(j: float) -> CoupledOperators:
    jx, jy, jz = _spin_operators(j)
    ops = [embed(o, slot) for slot in (1, 2) for o in (jx, jy, jz)]
    return CoupledOperators(*(_frozen(o) for o in ops))


def coupled_operators(j: float) -> CoupledOperators:
    return _coupled(validate_spin(j))


def unitary_exp(generator: np.ndarray, angle: float) -> np.ndarray:
    """exp(-i * angle * G) for Hermitian G, exact through its eigendecomposition."""
    g = np.asarray(generator)
    check_hermitian(g)
    if np.count_nonzero(g - np.diag(np.diagonal(g))) == 0:
        return np.diag(np.exp(-1j * angle * np.diagonal(g).real))
    w, v = np.linalg.eigh(g)
    return (v * np.exp(-1j * angle * w)) @ v.conj().T


def _as_matrix(state: np.ndarray, d: int | None) -> np.ndarray:
    psi = np.asarray(state, dtype=complex).ravel()
    if d is None:
        d = int(round(np.sqrt(psi.size)))
    if d * d != psi.size:
        raise DimensionError(f"state of length {psi.size} is not a two-top state")
    return psi.reshape(d, d)


def partial_trace(state: np.ndarray, keep: int, d: int | None = None) -> np.ndarray:
    """Reduced density matrix of top ``keep`` for a pure joint state."""
    psi = _as_matrix(state, d)
    if keep == 1:
        return psi @ psi.conj().T
    if keep == 2:
        return psi.T @ psi.conj()
    raise DimensionError(f"keep must be 1 or 2, got {keep}")


def spectral_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, 2))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def product_state(j: float, m1: float, m2: float) -> np.ndarray:
    """|j, m1> (x) |j, m2> as a joint amplitude vector."""
    j = validate_spin(j)
    d = spin_dim(j)
    k1, k2 = j - m1, j - m2
    if not (0 <= k1 < d and 0 <= k2 < d) or k1 != int(k1) or k2 != int(k2):
        raise DimensionError(f"m values ({m1}, {m2}) are not valid for j = {j}")
    psi = np.zeros(d * d, dtype=complex)
    psi[int(k1) * d + int(k2)] = 1.0
    return psi
