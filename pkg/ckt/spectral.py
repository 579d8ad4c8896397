"""Dense eigendecompositions, edge states and von Neumann entanglement."""

from __future__ import annotations

import logging
import math
from typing import Literal, NamedTuple

import numpy as np

from .errors import NotUnitaryError, ParameterError
from .logging_setup import log_event
from .spin_algebra import check_hermitian, partial_trace
from .symmetry import build_permutation, build_u0

log = logging.getLogger(__name__)

UNITARY_TOL = 1e-8
DEGENERACY_TOL = 1e-10
LAMBDA_FLOOR = 1e-14
NORM_TOL = 1e-8
ENTROPY_SLACK = 1e-12

Resolve = Literal["none", "u0", "permutation"]


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


class EdgeStates(NamedTuple):
    ground: np.ndarray
    excited: np.ndarray
    e_ground: float
    e_excited: float


def _fix_phases(v: np.ndarray) -> np.ndarray:
    """Make the largest-modulus entry of every column real and positive."""
    idx = np.argmax(np.abs(v), axis=0)
    pivots = v[idx, np.arange(v.shape[1])]
    return v * (np.abs(pivots) / pivots)


def eigh(h: np.ndarray) -> SpectralDecomposition:
    """Ascending eigenvalues with phase-fixed orthonormal eigenvectors."""
    h = np.asarray(h)
    check_hermitian(h)
    if np.iscomplexobj(h) and np.any(h.imag):
        w, v = np.linalg.eigh(h)
    else:
        w, v = np.linalg.eigh(np.real(h))
    return SpectralDecomposition(w, _fix_phases(v.astype(complex)))


def eigenphases(u: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    """theta in (-pi, pi], sorted, with U v = exp(-i theta) v."""
    u = np.asarray(u)
    eye = np.eye(u.shape[0])
    defect = float(np.max(np.abs(u.conj().T @ u - eye), initial=0.0))
    if defect > tol:
        raise NotUnitaryError(f"matrix is not unitary (max |U^dagger U - 1| = {defect:.3e})")
    theta = -np.angle(np.linalg.eigvals(u))
    theta[theta <= -math.pi] += 2 * math.pi
    return np.sort(theta)


def _symmetry_operator(mode: Resolve, dim: int) -> np.ndarray:
    d = int(round(math.sqrt(dim)))
    j = (d - 1) / 2
    return build_u0(j) if mode == "u0" else build_permutation(j)


def _resolve_cluster(
    w: np.ndarray, v: np.ndarray, edge: int, sym: np.ndarray
) -> tuple[np.ndarray, int]:
    """Symmetric-sector vector inside the degenerate cluster touching ``edge``."""
    if edge == 0:
        members = np.flatnonzero(w - w[0] < DEGENERACY_TOL)
    else:
        members = np.flatnonzero(w[-1] - w < DEGENERACY_TOL)
    if members.size == 1:
        return v[:, edge], 1
    block = v[:, members]
    s_sub = block.conj().T @ sym @ block
    mu, u = np.linalg.eig(s_sub)
    order = np.lexsort((-np.round(mu.imag, 10), -np.round(mu.real, 10)))
    vec = block @ u[:, order[0]]
    vec = vec / np.linalg.norm(vec)
    return _fix_phases(vec[:, None])[:, 0], int(members.size)


def edge_states(
    h: np.ndarray, resolve: Resolve = "none", symmetry: np.ndarray | None = None
) -> EdgeStates:
    """Ground and most-excited eigenvectors of ``h``.

    With ``resolve`` set, a degenerate edge cluster (gap < 1e-10) is
    re-diagonalized against U0 or P (or the ``symmetry`` matrix given) and
    the vector with the largest symmetry eigenvalue is returned.
    """
    if resolve not in ("none", "u0", "permutation"):
        raise ParameterError(f"unknown resolve mode {resolve!r}")
    w, v = eigh(h)
    ground, excited = v[:, 0], v[:, -1]
    if resolve != "none":
        sym = symmetry if symmetry is not None else _symmetry_operator(resolve, len(w))
        ground, n_ground = _resolve_cluster(w, v, 0, sym)
        excited, n_excited = _resolve_cluster(w, v, len(w) - 1, sym)
        if n_ground > 1 or n_excited > 1:
            log_event(
                log,
                "edge_degeneracy_resolved",
                "resolved degenerate edge cluster",
                level=logging.DEBUG,
                mode=resolve,
                ground=n_ground,
                excited=n_excited,
            )
    return EdgeStates(ground, excited, float(w[0]), float(w[-1]))


def schmidt_probabilities(state: np.ndarray, keep: int = 1) -> np.ndarray:
    rho = partial_trace(state, keep)
    lam = np.linalg.eigvalsh(rho)
    return lam[lam > LAMBDA_FLOOR]


def entanglement_entropy(state: np.ndarray, j: float | None = None, keep: int = 1) -> float:
    """Von Neumann entropy (nats) of the reduced state of one top.

    The state must be normalized to NORM_TOL; only rounding within
    ENTROPY_SLACK of 0 or ln d is snapped onto the bound.
    """
    norm = float(np.linalg.norm(state))
    if abs(norm - 1.0) > NORM_TOL:
        raise ParameterError(f"state is not normalized (norm = {norm:.12g})")
    lam = schmidt_probabilities(state, keep)
    s = float(-np.sum(lam * np.log(lam)))
    d = int(round(math.sqrt(np.asarray(state).size))) if j is None else int(round(2 * j)) + 1
    bound = math.log(d)
    if -ENTROPY_SLACK < s < 0.0:
        return 0.0
    if bound < s < bound + ENTROPY_SLACK:
        return bound
    return s
