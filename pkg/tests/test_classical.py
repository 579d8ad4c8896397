import math

import numpy as np
import pytest

from ckt.classical import (
    bifurcation_scan,
    branch_domain,
    branch_energy,
    canonical_to_cartesian,
    cartesian_to_canonical,
    classical_energy,
    eom_canonical,
    eom_cartesian,
    integrate_rk4,
    jacobian,
    locate_fixed_points,
    phase_portrait,
    sample_initial_states,
    sphere_norms,
)
from ckt.config import ModelParams
from ckt.errors import BranchDomainError, ParameterError, PoleError
from conftest import preset

GENERIC = np.array([0.3, 2.5, -0.2, 2.9])


def test_pure_x_precession_example():
    p = ModelParams(omega1=1.0, omega2=0.0)
    ds = eom_cartesian(np.array([0.0, 0.0, 1.0, 1.0, 0.0, 0.0]), p)
    assert np.allclose(ds, [0.0, -1.0, 0.0, 0.0, 0.0, 0.0])


@pytest.mark.parametrize("kind", ["fp", "nzt-equal", "nzt-opposite"])
def test_trivial_families_are_stationary(kind):
    p = preset(kind, epsilon=1.3)
    for s in ([-1.0, 0, 0, -1.0, 0, 0], [1.0, 0, 0, 1.0, 0, 0]):
        assert np.max(np.abs(eom_cartesian(np.array(s), p))) == 0.0


def test_trivial_energies_fp():
    p = ModelParams(epsilon=0.7)
    assert classical_energy(np.array([-1.0, 0, 0, -1.0, 0, 0]), p) == pytest.approx(-2.0)
    assert classical_energy(np.array([0.0, 0.0, 0.0, 0.0]), p) == pytest.approx(2.0)


def test_energy_representations_agree():
    p = preset("nzt-opposite", epsilon=0.9)
    assert classical_energy(GENERIC, p) == pytest.approx(
        classical_energy(canonical_to_cartesian(GENERIC), p), abs=1e-14
    )
    with pytest.raises(ParameterError):
        classical_energy(np.zeros(5), p)


def test_coordinate_round_trip_and_unit_spheres():
    s = canonical_to_cartesian(GENERIC)
    assert np.allclose(sphere_norms(s), 1.0, atol=1e-15)
    assert np.allclose(cartesian_to_canonical(s), GENERIC)


@pytest.mark.parametrize("kind", ["fp", "nzt-equal", "nzt-opposite"])
def test_canonical_flow_matches_cartesian_by_chain_rule(kind):
    p = preset(kind, epsilon=1.1)
    s = canonical_to_cartesian(GENERIC)
    ds = eom_cartesian(s, p)
    dc = eom_canonical(GENERIC, p)
    for top in (0, 1):
        x, y, z = s[3 * top : 3 * top + 3]
        dx, dy, dz = ds[3 * top : 3 * top + 3]
        assert dc[2 * top] == pytest.approx(dz, abs=1e-12)
        assert dc[2 * top + 1] == pytest.approx((x * dy - y * dx) / (x * x + y * y), abs=1e-12)


def test_canonical_flow_raises_at_pole():
    with pytest.raises(PoleError):
        eom_canonical(np.array([1.0, 0.0, 0.2, 0.0]), ModelParams())
    with pytest.raises(PoleError):
        integrate_rk4(np.array([0.0, 0.0, -1.0, 0.0]), ModelParams(), steps=1, representation="canonical")


def test_rk4_keeps_fixed_point():
    traj = integrate_rk4(np.array([-1.0, 0, 0, -1.0, 0, 0]), ModelParams(epsilon=0.5), steps=500)
    assert np.max(np.abs(traj.states[-1, 0] - [-1.0, 0, 0, -1.0, 0, 0])) == 0.0
    assert traj.energy_drift == 0.0


def test_rk4_precession_returns_after_one_period():
    steps = 6283
    dt = 2 * math.pi / steps
    s0 = canonical_to_cartesian(GENERIC)
    traj = integrate_rk4(s0, ModelParams(), dt=dt, steps=steps, record_every=steps)
    assert traj.times[-1] == pytest.approx(2 * math.pi)
    assert np.max(np.abs(traj.states[-1, 0] - s0)) < 1e-8


def test_rk4_records_every_nth_step():
    traj = integrate_rk4(canonical_to_cartesian(GENERIC), ModelParams(), dt=0.01, steps=25, record_every=10)
    assert np.allclose(traj.times, [0.0, 0.1, 0.2, 0.25])
    assert traj.states.shape == (4, 1, 6)


def test_rk4_canonical_matches_cartesian():
    p = ModelParams(epsilon=0.8)
    a = integrate_rk4(GENERIC, p, dt=1e-3, steps=2000, representation="canonical")
    b = integrate_rk4(canonical_to_cartesian(GENERIC), p, dt=1e-3, steps=2000)
    assert np.allclose(canonical_to_cartesian(a.states[-1, 0]), b.states[-1, 0], atol=1e-9)


def test_rk4_long_run_drift_fp():
    traj = integrate_rk4(
        canonical_to_cartesian(GENERIC), preset("fp", epsilon=1.3), dt=1e-3, steps=200_000,
        record_every=10_000,
    )
    assert traj.energy_drift < 1e-8
    assert traj.norm_drift < 1e-8


@pytest.mark.slow
@pytest.mark.parametrize("kind", ["fp", "nzt-equal", "nzt-opposite"])
@pytest.mark.parametrize("eps", [0.8, 1.3])
def test_rk4_drift_presets(kind, eps):
    traj = integrate_rk4(
        canonical_to_cartesian(GENERIC), preset(kind, epsilon=eps), dt=1e-3, steps=200_000,
        record_every=200_000,
    )
    assert traj.times[-1] == pytest.approx(200.0)
    assert traj.energy_drift < 1e-8
    assert traj.norm_drift < 1e-8


def test_rk4_rejects_bad_arguments():
    with pytest.raises(ParameterError):
        integrate_rk4(np.zeros(6), ModelParams(), dt=0.0)
    with pytest.raises(ParameterError):
        integrate_rk4(np.zeros(4), ModelParams())
    with pytest.raises(ParameterError):
        integrate_rk4(np.zeros(6), ModelParams(), representation="polar")


def test_initial_states_are_seeded():
    a = sample_initial_states(5, seed=7)
    assert np.array_equal(a, sample_initial_states(5, seed=7))
    assert not np.array_equal(a, sample_initial_states(5, seed=8))
    assert np.allclose(sphere_norms(a), 1.0)


def test_uncoupled_portrait_keeps_z_amplitude():
    points = phase_portrait(ModelParams(), n_traj=3, t_max=1.0, dt=1e-2, seed=1, stride=10)
    assert {pt.traj for pt in points} == {0, 1, 2}
    assert len(points) == 3 * 11
    s0 = sample_initial_states(3, seed=1)
    for k in range(3):
        amp = math.hypot(s0[k, 1], s0[k, 2])
        assert all(abs(pt.z1) <= amp + 1e-9 for pt in points if pt.traj == k)


def test_jacobian_matches_finite_differences():
    p = preset("nzt-opposite", epsilon=1.4)
    jac = jacobian(GENERIC, p)
    h = 1e-6
    for k in range(4):
        step = np.zeros(4)
        step[k] = h
        col = (eom_canonical(GENERIC + step, p) - eom_canonical(GENERIC - step, p)) / (2 * h)
        assert np.allclose(jac[:, k], col, atol=1e-6)


def test_fixed_points_fp_below_and_above_transition():
    low = locate_fixed_points(ModelParams(epsilon=0.5))
    assert [r.family for r in low.records] == ["CFP-I", "CFP-II"]
    assert set(low.missing) == {"CFP-III", "CFP-IV"}
    assert all(r.stable for r in low.records)

    high = locate_fixed_points(ModelParams(epsilon=1.5))
    by_family = {r.family: r for r in high.records}
    assert set(by_family) == {"CFP-I", "CFP-II", "CFP-III", "CFP-IV"}
    assert not by_family["CFP-I"].stable
    assert by_family["CFP-III"].stable
    z = math.sqrt(1 - 1 / 1.5**2)
    assert by_family["CFP-III"].state[0] == pytest.approx(z, abs=1e-10)
    assert by_family["CFP-III"].state[2] == pytest.approx(-z, abs=1e-10)
    for r in high.records:
        assert r.eom_residual < 1e-10


@pytest.mark.parametrize("eps", [1.5, 3.0])
def test_jacobian_eigenvalues_come_in_pairs(eps):
    for r in locate_fixed_points(ModelParams(epsilon=eps)).records:
        ev = r.jacobian_eigenvalues
        for lam in ev:
            assert np.min(np.abs(ev + lam)) < 1e-8, (r.family, ev)


def test_fixed_points_need_equal_rates():
    with pytest.raises(ParameterError):
        locate_fixed_points(ModelParams(omega2=2.0, epsilon=1.0))


@pytest.mark.parametrize("eps", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("family", ["CFP-III", "CFP-IV"])
def test_fp_branch_matches_located_fixed_point(eps, family):
    records = {r.family: r for r in locate_fixed_points(ModelParams(epsilon=eps)).records}
    assert abs(records[family].energy - branch_energy("FP", family, eps)) < 1e-8


@pytest.mark.parametrize(
    "family,eps", [("CFP-III", 2.5), ("CFP-III", 3.0), ("CFP-IV", 1.5), ("CFP-IV", 2.0), ("CFP-IV", 3.0)]
)
def test_nzt_equal_branch_matches_located_fixed_point(family, eps):
    p = preset("nzt-equal", epsilon=eps)
    records = {r.family: r for r in locate_fixed_points(p).records}
    assert abs(records[family].energy - branch_energy("NZT-I", family, eps)) < 1e-8


def test_branch_closed_forms():
    assert branch_energy("FP", "CFP-III", 2.0) == pytest.approx(-2.5)
    assert branch_energy("FP", "CFP-IV", 2.0) == pytest.approx(2.5)
    assert branch_energy("NZT-I", "CFP-III", 3.0) == pytest.approx(-2.5)
    assert branch_energy("NZT-I", "CFP-IV", 1.0) == pytest.approx(2.5)
    assert branch_energy("NZT-II", "CFP-IV", 2.0) == pytest.approx(2 / 3 - 2 * (1 - 1 / 9))
    assert branch_domain("NZT-I", "CFP-III", kappa=1.0) == 2.0


def test_branch_outside_domain():
    with pytest.raises(BranchDomainError):
        branch_energy("FP", "CFP-III", 0.5)
    with pytest.raises(BranchDomainError):
        branch_energy("NZT-II", "CFP-III", 1.0)
    with pytest.raises(ParameterError):
        branch_energy("FP", "CFP-I", 2.0)
    with pytest.raises(ParameterError):
        branch_domain("generic", "CFP-III")


def test_branch_keeps_torsion_sign():
    assert branch_domain("NZT-I", "CFP-III", kappa=-1.0) == 0.0
    assert branch_domain("NZT-I", "CFP-IV", kappa=-1.0) == 2.0
    assert branch_energy("NZT-I", "CFP-III", 3.0, kappa=-1.0) == pytest.approx(-4.25)
    assert branch_energy("NZT-I", "CFP-IV", 3.0, kappa=-1.0) == pytest.approx(2.5)
    assert branch_domain("NZT-II", "CFP-IV", kappa=-1.0) == 1.0
    with pytest.raises(ParameterError):
        branch_domain("NZT-II", "CFP-IV", kappa=2.0)
    with pytest.raises(ParameterError):
        branch_domain("NZT-I", "CFP-III", kappa=0.0)


@pytest.mark.parametrize("family", ["CFP-III", "CFP-IV"])
def test_negative_torsion_branch_matches_located_fixed_point(family):
    p = ModelParams(epsilon=3.0, kappa1=-1.0, kappa2=-1.0)
    records = {r.family: r for r in locate_fixed_points(p).records}
    assert abs(records[family].energy - branch_energy("NZT-I", family, 3.0, kappa=-1.0)) < 1e-8


def test_bifurcation_fp():
    res = bifurcation_scan(preset("fp"), "CFP-I")
    assert res.found
    assert abs(res.critical_epsilon - 1.0) < 0.01
    assert res.partner_family == "CFP-III"
    assert abs(res.partner_onset - 1.0) < 0.01
    # both crossings are bisected to the scan tolerance
    assert abs(res.partner_onset - res.critical_epsilon) < 1e-5
    partner = {r.family for r in locate_fixed_points(preset("fp", epsilon=res.partner_onset + 1e-5)).records}
    assert "CFP-III" in partner


def test_bifurcation_fp_dynamical_transition():
    res = bifurcation_scan(preset("fp"), "CFP-II")
    assert abs(res.critical_epsilon - 1.0) < 0.01


def test_bifurcation_nzt_equal():
    res = bifurcation_scan(preset("nzt-equal"), "CFP-I")
    assert abs(res.critical_epsilon - 2.0) < 0.01


def test_bifurcation_nzt_opposite_is_immediately_unstable():
    res = bifurcation_scan(preset("nzt-opposite"), "CFP-I")
    assert res.found
    assert res.critical_epsilon < 1e-3


def test_bifurcation_not_found_in_range():
    res = bifurcation_scan(preset("fp"), "CFP-I", eps_range=(0.0, 0.5))
    assert not res.found
    assert res.critical_epsilon is None
    assert res.partner_onset is None


def test_bifurcation_rejects_bad_input():
    with pytest.raises(ParameterError):
        bifurcation_scan(preset("fp"), "CFP-III")
    with pytest.raises(ParameterError):
        bifurcation_scan(preset("fp"), "CFP-I", eps_step=0.0)
    with pytest.raises(ParameterError):
        bifurcation_scan(ModelParams(omega2=2.0), "CFP-I")
