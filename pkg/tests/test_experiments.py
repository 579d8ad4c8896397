import math

import numpy as np
import pytest

from ckt.config import ModelParams
from ckt.errors import ParameterError, PhaseWrapError
from ckt.experiments import (
    ENERGY_COLUMNS,
    ENTANGLE_COLUMNS,
    finite_size_tolerance,
    floquet_convergence,
    qpt_report,
    sweep_edge_energies,
    sweep_entanglement,
)
from ckt.hamiltonian import effective_hamiltonian
from ckt.spectral import edge_states, entanglement_entropy
from ckt.utils import parse_range
from conftest import preset


@pytest.mark.parametrize(
    "kind,sv_band,eps_band",
    [
        ("fp", (0.86, 0.96), (1.1, 1.3)),
        ("nzt-equal", (0.95, 1.05), (1.9, 2.1)),
        ("nzt-opposite", (0.75, 0.85), (0.9, 1.1)),
    ],
)
def test_ground_entanglement_peaks_j10(kind, sv_band, eps_band):
    table = sweep_entanglement(preset(kind, 10), parse_range("0:3:0.05"))
    eps, sv = table.peak("sv_ground")
    assert eps_band[0] <= eps <= eps_band[1], (eps, sv)
    assert sv_band[0] <= sv <= sv_band[1], (eps, sv)


def test_fp_saturates_near_ln2_when_resolved():
    table = sweep_entanglement(preset("fp", 10), parse_range("3.5:5:0.05"), resolve="permutation")
    assert abs(float(np.mean(table.column("sv_ground"))) - math.log(2)) < 0.15


@pytest.mark.parametrize("resolve", ["none", "permutation"])
def test_fp_excited_state_stays_product_like_at_strong_coupling(resolve):
    edges = edge_states(effective_hamiltonian(preset("fp", 10, 5.0)), resolve=resolve)
    assert entanglement_entropy(edges.excited, 10) < 0.1


def test_sweep_independent_of_grid_partition():
    grid = parse_range("0:2:0.1")
    half = len(grid) // 2
    whole = sweep_entanglement(preset("fp", 2), grid, threads=4)
    left = sweep_entanglement(preset("fp", 2), grid[:half], threads=1)
    right = sweep_entanglement(preset("fp", 2), grid[half:], threads=3)
    assert left.rows() + right.rows() == whole.rows()


def test_sweep_is_sorted_and_complete():
    grid = parse_range("0:1:0.25")
    table = sweep_entanglement(preset("fp", 2), grid, threads=3)
    assert np.array_equal(table.epsilons, grid)
    assert list(table.rows()[0])[: len(ENTANGLE_COLUMNS)] == ENTANGLE_COLUMNS
    assert table.records[0].sv_ground < 1e-10


@pytest.mark.parametrize("eps", [0.4, 1.2, 2.5])
def test_entropy_is_partition_independent(eps):
    edges = edge_states(effective_hamiltonian(preset("nzt-opposite", 4, eps)))
    for state in (edges.ground, edges.excited):
        assert abs(entanglement_entropy(state, 4, keep=1) - entanglement_entropy(state, 4, keep=2)) < 1e-12


def test_sweep_rejects_bad_grid():
    with pytest.raises(ParameterError):
        sweep_entanglement(preset("fp", 1), [0.5, 0.2])
    with pytest.raises(ParameterError):
        sweep_entanglement(preset("fp", 1), [])


def test_energy_sweep_tracks_fp_branch_j20():
    j = 20
    table = sweep_edge_energies(preset("fp", j), [1.5, 2.0, 3.0])
    for rec in table.records:
        assert rec.branch_cfp_iii == pytest.approx(-(rec.epsilon + 1 / rec.epsilon))
        assert abs(rec.e_ground_per_j - rec.branch_cfp_iii) < finite_size_tolerance(j)
        assert rec.classical_min == pytest.approx(rec.branch_cfp_iii, abs=1e-8)
        assert rec.classical_max == pytest.approx(rec.branch_cfp_iv, abs=1e-8)


def test_energy_sweep_leaves_branch_empty_outside_domain():
    table = sweep_edge_energies(preset("fp", 2), [0.5])
    rec = table.records[0]
    assert rec.branch_cfp_iii is None and rec.branch_cfp_iv is None
    assert rec.classical_min == pytest.approx(-2.0)
    assert set(table.rows()[0]) >= set(ENERGY_COLUMNS)


def test_energy_sweep_branch_uses_signed_torsion():
    rec = sweep_edge_energies(ModelParams(j=2, kappa1=-1.0, kappa2=-1.0), [3.0]).records[0]
    assert rec.branch_cfp_iii == pytest.approx(-4.25)
    assert rec.branch_cfp_iv == pytest.approx(2.5)
    assert rec.classical_min == pytest.approx(-4.25, abs=1e-8)


def test_energy_sweep_skips_branch_without_closed_form():
    rec = sweep_edge_energies(ModelParams(j=2, kappa1=2.0, kappa2=-2.0), [3.0]).records[0]
    assert rec.branch_cfp_iii is None and rec.branch_cfp_iv is None
    assert rec.classical_min is not None


def test_sweep_markers_fp():
    table = sweep_entanglement(preset("fp", 2), parse_range("0:2:0.1"), markers=True)
    assert abs(table.eps_c_cfp_i - 1.0) < 0.01
    assert abs(table.eps_c_cfp_ii - 1.0) < 0.01


def test_floquet_convergence_orders():
    rows = floquet_convergence(ModelParams(j=2, epsilon=1.0), [0.2, 0.1, 0.05, 0.025])
    d1 = [r.delta_order1 for r in rows]
    d2 = [r.delta_order2 for r in rows]
    assert all(a > b for a, b in zip(d1, d1[1:])), d1
    assert all(a > b for a, b in zip(d2, d2[1:])), d2
    assert d2[-1] <= d1[-1] and d2[-2] <= d1[-2]
    assert all(a / b > 5 for a, b in zip(d1, d1[1:])), d1
    assert all(a / b > 12 for a, b in zip(d2, d2[1:])), d2
    norms = [r.second_order_norm for r in rows]
    assert norms[0] == pytest.approx(4 * norms[1])


def test_floquet_convergence_rejects_wrapping_period():
    with pytest.raises(PhaseWrapError):
        floquet_convergence(ModelParams(j=2, epsilon=1.0), [5.0])


def test_floquet_convergence_needs_descending_periods():
    with pytest.raises(ParameterError):
        floquet_convergence(ModelParams(j=1), [0.1, 0.2])
    with pytest.raises(ParameterError):
        floquet_convergence(ModelParams(j=1), [0.1, -0.05])


def test_qpt_report_fp():
    report = qpt_report(preset("fp", 4), parse_range("0:3:0.1"))
    assert abs(report.eps_c_cfp_i - 1.0) < 0.01
    assert abs(report.eps_c_cfp_ii - 1.0) < 0.01
    assert report.coincident
    assert abs(report.onset_cfp_iii - 1.0) < 0.01
    assert report.class_label == "BDI"
    assert report.grid_step == pytest.approx(0.1)


def test_qpt_report_nzt_equal():
    report = qpt_report(preset("nzt-equal", 4), parse_range("0:3:0.1"))
    assert abs(report.eps_c_cfp_i - 2.0) < 0.01
    assert not report.coincident
    assert report.class_label == "standard-TRS"


def test_qpt_report_nzt_opposite():
    report = qpt_report(preset("nzt-opposite", 4), parse_range("0:3:0.1"))
    assert report.eps_c_cfp_i < 1e-3
    assert report.kind == "NZT-II"
    assert report.class_label == "BDI"
