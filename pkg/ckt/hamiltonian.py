"""Effective Hamiltonians, the exact kicked Floquet operator and the torsion trace."""

from __future__ import annotations

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict

from .config import KickedParams, ModelParams, validate_spin
from .errors import ParameterError
from .logging_setup import log_event
from .spin_algebra import (
    commutator,
    coupled_operators,
    spectral_norm,
    spin_operators,
    unitary_exp,
)

log = logging.getLogger(__name__)

TRACE_TOL = 1e-10


def precession_term(params: ModelParams) -> np.ndarray:
    """H0 = Omega1 Jx1 + Omega2 Jx2."""
    ops = coupled_operators(params.j)
    return params.omega1 * ops.jx1 + params.omega2 * ops.jx2


def nonlinear_term(
    j: float, kappa1: float, kappa2: float, epsilon: float = 0.0
) -> np.ndarray:
    """(1/2j)(kappa1 Jz1^2 + kappa2 Jz2^2 + 2 eps Jz1 Jz2); diagonal in the standard basis."""
    ops = coupled_operators(j)
    j = validate_spin(j)
    return (
        kappa1 * ops.jz1 @ ops.jz1
        + kappa2 * ops.jz2 @ ops.jz2
        + 2.0 * epsilon * ops.jz1 @ ops.jz2
    ) / (2.0 * j)


def kick_term(params: ModelParams) -> np.ndarray:
    return nonlinear_term(params.j, params.kappa1, params.kappa2, params.epsilon)


def second_order_term(params: ModelParams, period: float) -> np.ndarray:
    """(1/24)[[V, H0], V] with V = T * (kick part); scales as T^2."""
    if not period > 0:
        raise ParameterError(f"period must be positive, got {period}")
    h0 = precession_term(params)
    v = period * kick_term(params)
    term = commutator(commutator(v, h0), v) / 24.0
    # drop rounding noise in the anti-Hermitian part
    return 0.5 * (term + term.conj().T)


def effective_hamiltonian(
    params: ModelParams, order: int = 1, period: float | None = None
) -> np.ndarray:
    """Time-independent generator of the coupled kicked tops.

    Order 1 is H0 + V/T in rescaled rates. Order 2 adds the omega^-2
    commutator and needs the kick ``period``.
    """
    if order not in (1, 2):
        raise ParameterError(f"order must be 1 or 2, got {order}")
    h = precession_term(params) + kick_term(params)
    if order == 2:
        if period is None:
            raise ParameterError("order-2 effective Hamiltonian needs the kick period")
        extra = second_order_term(params, period)
        log_event(
            log,
            "second_order_term",
            "second-order term built",
            level=logging.DEBUG,
            period=period,
            norm=spectral_norm(extra),
            j=params.j,
        )
        h = h + extra
    return h


def floquet_operator(kp: KickedParams) -> np.ndarray:
    """U(T) = exp(-i eps0/j Jz1 Jz2) [K1 R1 (x) K2 R2]; coupling kick applied last."""
    if not kp.period > 0:
        raise ParameterError(f"period must be positive, got {kp.period}")
    p = kp.params
    j = p.j
    jx, _, jz = spin_operators(j)
    jz_sq = jz @ jz
    top1 = unitary_exp(jz_sq, kp.k1 / (2 * j)) @ unitary_exp(jx, kp.p1)
    top2 = unitary_exp(jz_sq, kp.k2 / (2 * j)) @ unitary_exp(jx, kp.p2)
    ops = coupled_operators(j)
    coupling = unitary_exp(ops.jz1 @ ops.jz2, kp.eps0 / j)
    return coupling @ np.kron(top1, top2)


def nl_trace(j: float, kappa1: float, kappa2: float) -> float:
    """Trace of the torsion part over the joint space: (j+1)(2j+1)^2 (k1+k2) / 6."""
    j = validate_spin(j)
    return (j + 1) * (2 * j + 1) ** 2 * (kappa1 + kappa2) / 6.0


def per_top_trace(j: float, kappa1: float, kappa2: float) -> float:
    """(j+1)(2j+1)(k1+k2)/6: the single-top sum, without the other top's identity factor."""
    j = validate_spin(j)
    return (j + 1) * (2 * j + 1) * (kappa1 + kappa2) / 6.0


class TraceCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    j: float
    kappa1: float
    kappa2: float
    matrix_trace: float
    joint_closed_form: float
    per_top_closed_form: float
    joint_matches: bool
    per_top_matches: bool


def nl_trace_check(j: float, kappa1: float, kappa2: float) -> TraceCheck:
    """Compare both closed forms with the explicit matrix trace."""
    matrix = float(np.trace(nonlinear_term(j, kappa1, kappa2)).real)
    joint = nl_trace(j, kappa1, kappa2)
    per_top = per_top_trace(j, kappa1, kappa2)
    scale = max(1.0, abs(matrix))
    check = TraceCheck(
        j=validate_spin(j),
        kappa1=kappa1,
        kappa2=kappa2,
        matrix_trace=matrix,
        joint_closed_form=joint,
        per_top_closed_form=per_top,
        joint_matches=abs(joint - matrix) <= TRACE_TOL * scale,
        per_top_matches=abs(per_top - matrix) <= TRACE_TOL * scale,
    )
    if not check.per_top_matches:
        log_event(
            log,
            "nl_trace_per_top_mismatch",
            "per-top trace formula disagrees with the joint-space matrix trace",
            level=logging.WARNING,
            **check.model_dump(),
        )
    if not check.joint_matches:
        log_event(
            log,
            "nl_trace_joint_mismatch",
            "joint trace formula disagrees with the matrix trace",
            level=logging.ERROR,
            **check.model_dump(),
        )
    return check
