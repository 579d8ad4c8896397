"""Unitary, chiral, permutation and time-reversal symmetries of the coupled tops.

Time reversal is complex conjugation in the standard |m1, m2> basis, so a
Hamiltonian is T-symmetric exactly when its matrix is real.
"""

from __future__ import annotations

import json
import logging
import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict

from .config import validate_spin
from .logging_setup import log_event
from .spin_algebra import (
    anticommutator,
    check_hermitian,
    commutator,
    spectral_norm,
    spin_dim,
    spin_operators,
    unitary_exp,
)

log = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-8

ChiralityKind = Literal["none", "C", "C'"]
ClassLabel = Literal["BDI", "CI", "standard-TRS", "none-detected"]


def build_u0(j: float) -> np.ndarray:
    """exp(-i pi Jx1) (x) exp(-i pi Jx2)."""
    jx = spin_operators(j).jx
    r = unitary_exp(jx, math.pi)
    return np.kron(r, r)


def build_chirality(j: float, alpha: float | None = None) -> np.ndarray:
    """e^{i alpha} exp(-i pi Jz1) (x) exp(-i pi Jy2); alpha defaults to pi*j."""
    j = validate_spin(j)
    if alpha is None:
        alpha = math.pi * j
    _, jy, jz = spin_operators(j)
    return np.exp(1j * alpha) * np.kron(unitary_exp(jz, math.pi), unitary_exp(jy, math.pi))


def build_permutation(j: float) -> np.ndarray:
    d = spin_dim(j)
    idx = np.arange(d * d)
    swapped = (idx % d) * d + idx // d
    p = np.zeros((d * d, d * d))
    p[swapped, idx] = 1.0
    return p


def time_reversal_defect(h: np.ndarray) -> float:
    h = np.asarray(h)
    return spectral_norm(h.conj() - h)


def t_chirality_compatibility(j: float, alpha: float | None = None) -> float:
    """||conj(C) - C||; zero when T C T^-1 = C."""
    c = build_chirality(j, alpha)
    return spectral_norm(c.conj() - c)


def square_sign(op: np.ndarray, tol: float = SYMMETRY_TOL) -> tuple[int | None, float]:
    """(+1 | -1 | None, residual) for op^2 = +-1."""
    sq = op @ op
    eye = np.eye(op.shape[0])
    plus, minus = spectral_norm(sq - eye), spectral_norm(sq + eye)
    if plus <= minus:
        return (1 if plus < tol else None), plus
    return (-1 if minus < tol else None), minus


class SymmetryReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    j: float
    alpha: float
    trace: float
    u0_commutes: bool
    u0_residual: float
    permutation_symmetric: bool
    permutation_residual: float
    chirality_found: ChiralityKind
    anticommutation_residual: float
    chirality_square: int | None
    operator_square_residual: float
    time_reversal_symmetric: bool
    time_reversal_residual: float
    t_chirality_compatible: bool
    t_chirality_residual: float
    class_label: ClassLabel

    def to_text(self) -> str:
        """Flat ``key = value`` block, one field per line."""
        lines = []
        for key, value in self.model_dump().items():
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = format(value, ".6g")
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(self.model_dump(), indent=2, sort_keys=True) + "\n"


def _label(
    chirality: ChiralityKind, square: int | None, trs: bool, compatible: bool
) -> ClassLabel:
    if chirality != "none" and trs and compatible:
        if square == 1:
            return "BDI"
        if square == -1:
            return "CI"
    if chirality == "none" and trs:
        return "standard-TRS"
    return "none-detected"


def classify(
    h: np.ndarray, j: float, omega_equal: bool, alpha: float | None = None
) -> SymmetryReport:
    """Search C, then C' = P C, for a chirality and combine it with T into a class label."""
    check_hermitian(h)
    j = validate_spin(j)
    if alpha is None:
        alpha = math.pi * j

    u0 = build_u0(j)
    perm = build_permutation(j)
    c = build_chirality(j, alpha)

    u0_res = spectral_norm(commutator(u0, h))
    perm_res = spectral_norm(commutator(perm, h))

    found: ChiralityKind = "none"
    anti_res = spectral_norm(anticommutator(c, h))
    operator = c
    if anti_res < SYMMETRY_TOL:
        found = "C"
    elif omega_equal:
        c_prime = perm @ c
        res_prime = spectral_norm(anticommutator(c_prime, h))
        if res_prime < SYMMETRY_TOL:
            found, anti_res, operator = "C'", res_prime, c_prime
        else:
            anti_res = min(anti_res, res_prime)

    square, _ = square_sign(c)
    _, op_square_res = square_sign(operator)
    trs_res = time_reversal_defect(h)
    compat_res = spectral_norm(operator.conj() - operator)
    trs = trs_res < SYMMETRY_TOL
    compatible = compat_res < SYMMETRY_TOL
    label = _label(found, square, trs, compatible)

    report = SymmetryReport(
        j=j,
        alpha=alpha,
        trace=float(np.trace(h).real),
        u0_commutes=u0_res < SYMMETRY_TOL,
        u0_residual=u0_res,
        permutation_symmetric=perm_res < SYMMETRY_TOL,
        permutation_residual=perm_res,
        chirality_found=found,
        anticommutation_residual=anti_res,
        chirality_square=square,
        operator_square_residual=op_square_res,
        time_reversal_symmetric=trs,
        time_reversal_residual=trs_res,
        t_chirality_compatible=compatible,
        t_chirality_residual=compat_res,
        class_label=label,
    )
    log_event(
        log,
        "classify",
        "classified Hamiltonian",
        j=j,
        label=label,
        chirality=found,
        residual=anti_res,
    )
    return report
