"""Parameter sweeps tying the quantum and classical modules together.

Grid points are independent; they run on a thread pool (numpy releases the
GIL inside LAPACK) and the table is always ordered by epsilon.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Iterable, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from .classical import bifurcation_scan, branch_energy, locate_fixed_points
from .config import KickedParams, ModelParams
from .errors import BranchDomainError, ParameterError, PhaseWrapError
from .hamiltonian import effective_hamiltonian, floquet_operator, second_order_term
from .logging_setup import log_event
from .spectral import Resolve, edge_states, eigenphases, entanglement_entropy
from .spin_algebra import spectral_norm, unitary_exp
from .symmetry import ClassLabel, classify

log = logging.getLogger(__name__)

ENTANGLE_COLUMNS = ["epsilon", "e_ground_per_j", "e_excited_per_j", "sv_ground", "sv_excited"]
ENERGY_COLUMNS = [
    "epsilon",
    "e_ground_per_j",
    "e_excited_per_j",
    "branch_cfp_iii",
    "branch_cfp_iv",
    "classical_min",
    "classical_max",
]


class SweepRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    epsilon: float
    e_ground_per_j: float
    e_excited_per_j: float
    sv_ground: float
    sv_excited: float
    branch_cfp_iii: float | None = None
    branch_cfp_iv: float | None = None
    classical_min: float | None = None
    classical_max: float | None = None


class SweepTable(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: ModelParams
    resolve: str
    records: list[SweepRecord]
    eps_c_cfp_i: float | None = None
    eps_c_cfp_ii: float | None = None

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([r.epsilon for r in self.records])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def peak(self, name: str = "sv_ground") -> tuple[float, float]:
        """(epsilon, value) at the grid argmax; no interpolation."""
        values = self.column(name)
        i = int(np.nanargmax(values))
        return float(self.records[i].epsilon), float(values[i])

    def rows(self) -> list[dict]:
        return [r.model_dump() for r in self.records]


def finite_size_tolerance(j: float) -> float:
    """Tolerance for quantum E/j against classical branches."""
    return max(0.1, 2.0 / j)


def _check_grid(eps_grid: Sequence[float]) -> np.ndarray:
    grid = np.asarray(list(eps_grid), dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ParameterError("epsilon grid must be a non-empty 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise ParameterError("epsilon grid must be strictly ascending")
    return grid


def _branch(p: ModelParams, family: str) -> float | None:
    kind = p.kind
    # closed forms assume unit precession on both tops
    if kind == "generic" or p.omega1 != 1.0 or p.omega2 != 1.0:
        return None
    try:
        return branch_energy(kind, family, p.epsilon, kappa=p.kappa1 if kind != "FP" else 1.0)
    except BranchDomainError:
        return None
    except ParameterError as exc:
        log_event(
            log,
            "branch_unsupported",
            str(exc),
            level=logging.WARNING,
            family=family,
            kappa1=p.kappa1,
            epsilon=p.epsilon,
        )
        return None


def _sweep_point(p: ModelParams, resolve: Resolve, with_classical: bool) -> SweepRecord:
    h = effective_hamiltonian(p)
    edges = edge_states(h, resolve=resolve)
    fields: dict = {}
    if with_classical:
        fields["branch_cfp_iii"] = _branch(p, "CFP-III")
        fields["branch_cfp_iv"] = _branch(p, "CFP-IV")
        if p.omega1 == p.omega2:
            energies = [r.energy for r in locate_fixed_points(p).records]
            fields["classical_min"] = min(energies)
            fields["classical_max"] = max(energies)
    return SweepRecord(
        epsilon=p.epsilon,
        e_ground_per_j=edges.e_ground / p.j,
        e_excited_per_j=edges.e_excited / p.j,
        sv_ground=entanglement_entropy(edges.ground, p.j),
        sv_excited=entanglement_entropy(edges.excited, p.j),
        **fields,
    )


def _markers(p0: ModelParams, grid: np.ndarray) -> tuple[float | None, float | None]:
    if p0.omega1 != p0.omega2:
        return None, None
    step = float(np.min(np.diff(grid))) if grid.size > 1 else 0.01
    rng = (0.0, max(float(grid[-1]), step))
    return tuple(  # type: ignore[return-value]
        bifurcation_scan(p0, fam, rng, min(step, 0.01)).critical_epsilon
        for fam in ("CFP-I", "CFP-II")
    )


def _run_sweep(
    p0: ModelParams,
    eps_grid: Iterable[float],
    *,
    resolve: Resolve,
    threads: int,
    with_classical: bool,
    markers: bool,
    name: str,
) -> SweepTable:
    grid = _check_grid(eps_grid)
    log_event(
        log,
        f"{name}_start",
        "sweep started",
        points=int(grid.size),
        j=p0.j,
        kind=p0.kind,
        resolve=resolve,
    )
    records: list[SweepRecord] = []
    with ThreadPoolExecutor(max_workers=threads or None) as ex:
        futs = [
            ex.submit(_sweep_point, p0.with_epsilon(eps), resolve, with_classical)
            for eps in grid
        ]
        for fut in as_completed(futs):
            records.append(fut.result())
    records.sort(key=lambda r: r.epsilon)
    eps_c_i, eps_c_ii = _markers(p0, grid) if markers else (None, None)
    table = SweepTable(
        params=p0,
        resolve=resolve,
        records=records,
        eps_c_cfp_i=eps_c_i,
        eps_c_cfp_ii=eps_c_ii,
    )
    peak_eps, peak_sv = table.peak("sv_ground")
    log_event(
        log,
        f"{name}_done",
        "sweep finished",
        points=len(records),
        peak_epsilon=peak_eps,
        peak_sv=peak_sv,
    )
    return table


def sweep_entanglement(
    p0: ModelParams,
    eps_grid: Iterable[float],
    *,
    resolve: Resolve = "none",
    threads: int = 0,
    markers: bool = False,
) -> SweepTable:
    """Edge-state energies and von Neumann entropies over an ascending epsilon grid."""
    return _run_sweep(
        p0, eps_grid, resolve=resolve, threads=threads, with_classical=False,
        markers=markers, name="entangle_sweep",
    )


def sweep_edge_energies(
    p0: ModelParams,
    eps_grid: Iterable[float],
    *,
    resolve: Resolve = "none",
    threads: int = 0,
    markers: bool = False,
) -> SweepTable:
    """Like sweep_entanglement, plus closed-form branches and classical extrema."""
    return _run_sweep(
        p0, eps_grid, resolve=resolve, threads=threads, with_classical=True,
        markers=markers, name="energy_sweep",
    )


class ConvergenceRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    period: float
    delta_order1: float
    delta_order2: float
    second_order_norm: float


def _phase_mismatch(reference: np.ndarray, p: ModelParams, order: int, period: float) -> float:
    h = effective_hamiltonian(p, order=order, period=period)
    norm = spectral_norm(h)
    if norm * period >= math.pi:
        log_event(
            log,
            "phase_wrap",
            "phase comparison rejected",
            level=logging.WARNING,
            period=period,
            order=order,
            norm_times_period=norm * period,
        )
        raise PhaseWrapError(
            f"||H_eff|| * T = {norm * period:.3f} >= pi at T = {period:g}; use a smaller period"
        )
    phases = eigenphases(unitary_exp(h, period))
    return float(np.max(np.abs(np.sort(phases) - reference)))


def floquet_convergence(p0: ModelParams, periods: Sequence[float]) -> list[ConvergenceRow]:
    """Max sorted-eigenphase mismatch between U(T) and exp(-i H_eff T), orders 1 and 2."""
    ts = [float(t) for t in periods]
    if not ts or any(t <= 0 for t in ts):
        raise ParameterError("periods must be positive")
    if any(b >= a for a, b in zip(ts, ts[1:])):
        raise ParameterError("periods must be strictly descending")
    rows = []
    for t in ts:
        reference = eigenphases(floquet_operator(KickedParams(params=p0, period=t)))
        rows.append(
            ConvergenceRow(
                period=t,
                delta_order1=_phase_mismatch(reference, p0, 1, t),
                delta_order2=_phase_mismatch(reference, p0, 2, t),
                second_order_norm=spectral_norm(second_order_term(p0, t)),
            )
        )
    log_event(
        log,
        "floquet_convergence",
        "floquet convergence done",
        rows=[r.model_dump() for r in rows],
    )
    return rows


class QPTReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: str
    j: float
    eps_c_cfp_i: float | None
    eps_c_cfp_ii: float | None
    onset_cfp_iii: float | None
    onset_cfp_iv: float | None
    peak_epsilon_ground: float
    peak_sv_ground: float
    peak_epsilon_excited: float
    peak_sv_excited: float
    grid_step: float
    coincident: bool
    peak_matches_bifurcation_ground: bool
    peak_matches_bifurcation_excited: bool
    class_label: ClassLabel


def _within(a: float | None, b: float | None, tol: float) -> bool:
    return a is not None and b is not None and abs(a - b) < tol


def qpt_report(
    p0: ModelParams,
    eps_grid: Sequence[float],
    *,
    scan_range: tuple[float, float] = (0.0, 5.0),
    scan_step: float = 0.01,
    resolve: Resolve = "none",
    threads: int = 0,
) -> QPTReport:
    """Classical critical couplings, entanglement peaks and symmetry class in one summary."""
    grid = _check_grid(eps_grid)
    step = float(np.min(np.diff(grid))) if grid.size > 1 else scan_step
    scan_i = bifurcation_scan(p0, "CFP-I", scan_range, scan_step)
    scan_ii = bifurcation_scan(p0, "CFP-II", scan_range, scan_step)
    table = sweep_entanglement(p0, grid, resolve=resolve, threads=threads)
    peak_g = table.peak("sv_ground")
    peak_e = table.peak("sv_excited")
    at = p0.with_epsilon(peak_g[0])
    report = classify(effective_hamiltonian(at), at.j, omega_equal=at.omega1 == at.omega2)
    return QPTReport(
        kind=p0.kind,
        j=p0.j,
        eps_c_cfp_i=scan_i.critical_epsilon,
        eps_c_cfp_ii=scan_ii.critical_epsilon,
        onset_cfp_iii=scan_i.partner_onset,
        onset_cfp_iv=scan_ii.partner_onset,
        peak_epsilon_ground=peak_g[0],
        peak_sv_ground=peak_g[1],
        peak_epsilon_excited=peak_e[0],
        peak_sv_excited=peak_e[1],
        grid_step=step,
        coincident=_within(scan_i.critical_epsilon, scan_ii.critical_epsilon, step),
        peak_matches_bifurcation_ground=_within(peak_g[0], scan_i.critical_epsilon, step + 1e-9),
        peak_matches_bifurcation_excited=_within(peak_e[0], scan_ii.critical_epsilon, step + 1e-9),
        class_label=report.class_label,
    )
