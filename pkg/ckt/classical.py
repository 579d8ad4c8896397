"""Classical limit of the coupled tops.

Cartesian states are arrays ``(..., 6)`` holding (X1, Y1, Z1, X2, Y2, Z2) on
two unit spheres; canonical states are ``(..., 4)`` holding
(Z1, phi1, Z2, phi2) with X = sqrt(1 - Z^2) cos(phi), Y = sqrt(1 - Z^2) sin(phi).

The classical energy (per spin) is

    H = Omega1 X1 + kappa1 Z1^2 / 2 + Omega2 X2 + kappa2 Z2^2 / 2 + eps Z1 Z2

and every spin precesses about the gradient of H.
"""

from __future__ import annotations

import logging
import math
from typing import Literal, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.optimize import bisect

from .config import ModelKind, ModelParams
from .errors import BranchDomainError, IntegrationError, ParameterError, PoleError
from .logging_setup import log_event

log = logging.getLogger(__name__)

DELTA_POLE = 1e-9
STABILITY_TOL = 1e-8
ROOT_XTOL = 1e-14
SCAN_XTOL = 1e-6
# bracketing grid for the 1-D fixed-point reduction
Z_GRID = np.linspace(0.0, 1.0 - 1e-6, 2001)[1:]

Family = Literal["CFP-I", "CFP-II", "CFP-III", "CFP-IV"]
Representation = Literal["cartesian", "canonical"]

# phi of each family and the trivial family it branches from
FAMILY_PHI: dict[str, float] = {
    "CFP-I": math.pi,
    "CFP-II": 0.0,
    "CFP-III": math.pi,
    "CFP-IV": 0.0,
}
PARTNER: dict[str, str] = {"CFP-I": "CFP-III", "CFP-II": "CFP-IV"}


def canonical_to_cartesian(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    z1, p1, z2, p2 = np.moveaxis(c, -1, 0)
    s1 = np.sqrt(np.clip(1.0 - z1**2, 0.0, None))
    s2 = np.sqrt(np.clip(1.0 - z2**2, 0.0, None))
    return np.stack(
        [s1 * np.cos(p1), s1 * np.sin(p1), z1, s2 * np.cos(p2), s2 * np.sin(p2), z2], axis=-1
    )


def cartesian_to_canonical(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    x1, y1, z1, x2, y2, z2 = np.moveaxis(s, -1, 0)
    return np.stack([z1, np.arctan2(y1, x1), z2, np.arctan2(y2, x2)], axis=-1)


def eom_cartesian(s: np.ndarray, p: ModelParams) -> np.ndarray:
    """dS_i/dt = grad_i H x S_i for both tops."""
    s = np.asarray(s, dtype=float)
    x1, y1, z1, x2, y2, z2 = np.moveaxis(s, -1, 0)
    b1 = p.kappa1 * z1 + p.epsilon * z2
    b2 = p.kappa2 * z2 + p.epsilon * z1
    return np.stack(
        [
            -y1 * b1,
            x1 * b1 - p.omega1 * z1,
            p.omega1 * y1,
            -y2 * b2,
            x2 * b2 - p.omega2 * z2,
            p.omega2 * y2,
        ],
        axis=-1,
    )


def _check_pole(z: np.ndarray) -> None:
    if np.any(np.abs(z) >= 1.0 - DELTA_POLE):
        raise PoleError(
            f"canonical coordinates undefined at |Z| >= 1 - {DELTA_POLE:g} "
            f"(max |Z| = {float(np.max(np.abs(z))):.12f})"
        )


def eom_canonical(c: np.ndarray, p: ModelParams) -> np.ndarray:
    """Hamilton's equations in (Z, phi): Zdot = -dH/dphi, phidot = dH/dZ."""
    c = np.asarray(c, dtype=float)
    z1, p1, z2, p2 = np.moveaxis(c, -1, 0)
    _check_pole(np.stack([z1, z2]))
    s1 = np.sqrt(1.0 - z1**2)
    s2 = np.sqrt(1.0 - z2**2)
    return np.stack(
        [
            p.omega1 * s1 * np.sin(p1),
            p.kappa1 * z1 - p.omega1 * z1 * np.cos(p1) / s1 + p.epsilon * z2,
            p.omega2 * s2 * np.sin(p2),
            p.kappa2 * z2 - p.omega2 * z2 * np.cos(p2) / s2 + p.epsilon * z1,
        ],
        axis=-1,
    )


def classical_energy(s: np.ndarray, p: ModelParams) -> np.ndarray | float:
    """Energy per spin; the representation is taken from the last axis (6 or 4)."""
    s = np.asarray(s, dtype=float)
    if s.shape[-1] == 4:
        s = canonical_to_cartesian(s)
    elif s.shape[-1] != 6:
        raise ParameterError(f"state must have 4 or 6 components, got {s.shape[-1]}")
    x1, _, z1, x2, _, z2 = np.moveaxis(s, -1, 0)
    e = (
        p.omega1 * x1
        + 0.5 * p.kappa1 * z1**2
        + p.omega2 * x2
        + 0.5 * p.kappa2 * z2**2
        + p.epsilon * z1 * z2
    )
    return float(e) if np.ndim(e) == 0 else e


def sphere_norms(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return np.stack(
        [np.linalg.norm(s[..., 0:3], axis=-1), np.linalg.norm(s[..., 3:6], axis=-1)], axis=-1
    )


class Trajectory(NamedTuple):
    times: np.ndarray
    # (n_recorded, n_traj, 6 | 4)
    states: np.ndarray
    representation: str
    energy_drift: float
    norm_drift: float


def integrate_rk4(
    s0: np.ndarray,
    p: ModelParams,
    dt: float = 1e-3,
    steps: int = 1000,
    representation: Representation = "cartesian",
    record_every: int = 1,
) -> Trajectory:
    """Fixed-step classical RK4 on one state or a batch ``(n, 6 | 4)``.

    Drifts are maxima over every step. Non-finite values abort with
    IntegrationError; the canonical form raises PoleError near Z = +-1.
    """
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    if steps < 0 or record_every < 1:
        raise ParameterError("steps must be >= 0 and record_every >= 1")
    if representation == "cartesian":
        rhs, width = eom_cartesian, 6
    elif representation == "canonical":
        rhs, width = eom_canonical, 4
    else:
        raise ParameterError(f"unknown representation {representation!r}")

    y = np.atleast_2d(np.asarray(s0, dtype=float)).copy()
    if y.shape[-1] != width:
        raise ParameterError(f"{representation} states need {width} components, got {y.shape[-1]}")

    e0 = classical_energy(y, p)
    n0 = sphere_norms(y) if width == 6 else None
    energy_drift = 0.0
    norm_drift = 0.0
    times = [0.0]
    frames = [y.copy()]
    half = 0.5 * dt

    for step in range(1, steps + 1):
        k1 = rhs(y, p)
        k2 = rhs(y + half * k1, p)
        k3 = rhs(y + half * k2, p)
        k4 = rhs(y + dt * k3, p)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"non-finite state at step {step} (t = {step * dt:g})")
        energy_drift = max(energy_drift, float(np.max(np.abs(classical_energy(y, p) - e0))))
        if n0 is not None:
            norm_drift = max(norm_drift, float(np.max(np.abs(sphere_norms(y) - n0))))
        if step % record_every == 0 or step == steps:
            times.append(step * dt)
            frames.append(y.copy())

    log_event(
        log,
        "rk4_done",
        "trajectory integrated",
        level=logging.DEBUG,
        steps=steps,
        dt=dt,
        n_traj=int(y.shape[0]),
        representation=representation,
        energy_drift=energy_drift,
        norm_drift=norm_drift,
    )
    return Trajectory(np.asarray(times), np.stack(frames), representation, energy_drift, norm_drift)


def sample_initial_states(n: int, seed: int) -> np.ndarray:
    """Uniform points on both spheres: Z uniform in [-1, 1], phi uniform in (-pi, pi]."""
    rng = np.random.default_rng(seed)
    z = rng.uniform(-1.0, 1.0, size=(n, 2))
    phi = math.pi - rng.uniform(0.0, 2.0 * math.pi, size=(n, 2))
    return canonical_to_cartesian(np.stack([z[:, 0], phi[:, 0], z[:, 1], phi[:, 1]], axis=-1))


class PortraitPoint(NamedTuple):
    traj: int
    t: float
    z1: float
    phi1: float
    z2: float
    phi2: float


def phase_portrait(
    p: ModelParams,
    n_traj: int,
    t_max: float,
    dt: float = 1e-3,
    seed: int = 0,
    stride: int = 50,
) -> list[PortraitPoint]:
    """(phi1, Z1) projection of a seeded ensemble, sampled every ``stride`` steps."""
    if n_traj < 1:
        raise ParameterError(f"n_traj must be >= 1, got {n_traj}")
    steps = int(round(t_max / dt))
    traj = integrate_rk4(
        sample_initial_states(n_traj, seed), p, dt, steps, "cartesian", record_every=stride
    )
    canon = cartesian_to_canonical(traj.states)
    points = [
        PortraitPoint(k, float(t), *map(float, canon[i, k]))
        for k in range(n_traj)
        for i, t in enumerate(traj.times)
    ]
    return points


def jacobian(c: np.ndarray, p: ModelParams) -> np.ndarray:
    """4x4 derivative of the canonical flow in (Z1, phi1, Z2, phi2) order."""
    z1, p1, z2, p2 = (float(v) for v in np.asarray(c, dtype=float))
    _check_pole(np.array([z1, z2]))
    jac = np.zeros((4, 4))
    for i, (z, phi, om, kap) in enumerate(
        ((z1, p1, p.omega1, p.kappa1), (z2, p2, p.omega2, p.kappa2))
    ):
        s = math.sqrt(1.0 - z * z)
        r, other = 2 * i, 2 * (1 - i)
        jac[r, r] = -om * math.sin(phi) * z / s
        jac[r, r + 1] = om * s * math.cos(phi)
        jac[r + 1, r] = kap - om * math.cos(phi) / s**3
        jac[r + 1, r + 1] = om * z * math.sin(phi) / s
        jac[r + 1, other] = p.epsilon
    return jac


def max_growth_rate(c: np.ndarray, p: ModelParams) -> float:
    return float(np.max(np.linalg.eigvals(jacobian(c, p)).real))


class FixedPointRecord(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    family: Family
    state: tuple[float, float, float, float]
    jacobian: np.ndarray
    jacobian_eigenvalues: np.ndarray
    stable: bool
    energy: float
    eom_residual: float

    @property
    def max_real(self) -> float:
        return float(np.max(self.jacobian_eigenvalues.real))


def _record(family: Family, c: np.ndarray, p: ModelParams) -> FixedPointRecord:
    jac = jacobian(c, p)
    eig = np.linalg.eigvals(jac)
    eig = eig[np.lexsort((eig.imag, eig.real))]
    return FixedPointRecord(
        family=family,
        state=tuple(float(v) for v in c),
        jacobian=jac,
        jacobian_eigenvalues=eig,
        stable=bool(np.max(eig.real) < STABILITY_TOL),
        energy=classical_energy(c, p),
        eom_residual=float(np.max(np.abs(eom_canonical(c, p)))),
    )


def _family_residual(family: str, p: ModelParams):
    """Reduced 1-D steady-state condition for a nontrivial family.

    phi1 = phi2 is fixed, Z2 is eliminated through phidot1 = 0 and the
    returned function is phidot2 as a function of Z1.
    """
    cos_phi = math.cos(FAMILY_PHI[family])
    om1, om2, eps = p.omega1, p.omega2, p.epsilon

    def partner_z(z1: np.ndarray) -> np.ndarray:
        s1 = np.sqrt(1.0 - z1**2)
        return -z1 * (p.kappa1 - om1 * cos_phi / s1) / eps

    def residual(z1):
        z2 = partner_z(z1)
        with np.errstate(invalid="ignore", divide="ignore"):
            s2 = np.sqrt(1.0 - z2**2)
            f = p.kappa2 * z2 - om2 * z2 * cos_phi / s2 + eps * z1
        return np.where(np.abs(z2) < 1.0 - DELTA_POLE, f, np.nan)

    return partner_z, residual


def _family_root(family: str, p: ModelParams) -> tuple[float | None, str]:
    if p.epsilon == 0:
        return None, "uncoupled tops have no nontrivial fixed point"
    partner_z, residual = _family_residual(family, p)
    f = residual(Z_GRID)
    ok = np.isfinite(f[:-1]) & np.isfinite(f[1:])
    exact = np.flatnonzero(np.isfinite(f) & (f == 0.0))
    change = np.flatnonzero(ok & (np.sign(f[:-1]) * np.sign(f[1:]) < 0))
    if exact.size and (not change.size or exact[0] <= change[0]):
        return float(Z_GRID[exact[0]]), "grid"
    if not change.size:
        return None, "no sign change on the bracketing grid"
    i = int(change[0])
    root = bisect(lambda z: float(residual(np.array(z))), Z_GRID[i], Z_GRID[i + 1], xtol=ROOT_XTOL)
    return float(root), "bisect"


class FixedPointReport(NamedTuple):
    records: list[FixedPointRecord]
    missing: dict[str, str]


def locate_fixed_points(p: ModelParams) -> FixedPointReport:
    """All four families; nontrivial ones that cannot be bracketed go to ``missing``."""
    if p.omega1 != p.omega2:
        raise ParameterError(
            f"fixed-point families need Omega1 = Omega2 (got {p.omega1}, {p.omega2})"
        )
    records = [
        _record("CFP-I", np.array([0.0, math.pi, 0.0, math.pi]), p),
        _record("CFP-II", np.zeros(4), p),
    ]
    missing: dict[str, str] = {}
    for family in ("CFP-III", "CFP-IV"):
        root, how = _family_root(family, p)
        if root is None:
            missing[family] = how
            log_event(
                log,
                "fixed_point_missing",
                "fixed-point family not found",
                family=family,
                epsilon=p.epsilon,
                reason=how,
            )
            continue
        partner_z, _ = _family_residual(family, p)
        phi = FAMILY_PHI[family]
        z2 = float(partner_z(np.array(root)))
        records.append(_record(family, np.array([root, phi, z2, phi]), p))
    return FixedPointReport(records, missing)


def fixed_points(p: ModelParams) -> list[FixedPointRecord]:
    return locate_fixed_points(p).records


def branch_domain(
    model: ModelKind, branch: Family, kappa: float = 1.0
) -> float:
    """Smallest epsilon at which the closed-form branch is defined.

    ``kappa`` is the signed torsion of the first top. NZT-II closed forms
    exist for unit torsion only; either sign is accepted since swapping the
    tops maps (kappa, -kappa) onto (-kappa, kappa).
    """
    if model == "FP":
        return 1.0
    if model == "NZT-I":
        if kappa == 0:
            raise ParameterError("NZT-I branches need nonzero torsion")
        return max(0.0, kappa + 1.0) if branch == "CFP-III" else max(0.0, 1.0 - kappa)
    if model == "NZT-II":
        if abs(kappa) != 1.0:
            raise ParameterError(f"NZT-II closed-form branches need |kappa| = 1, got {kappa:g}")
        return 1.0
    raise ParameterError(f"no closed-form branch for model {model!r}")


def branch_energy(
    model: ModelKind, branch: Family, epsilon: float, kappa: float = 1.0
) -> float:
    """Closed-form energy of the CFP-III / CFP-IV branches.

    FP and NZT-I (equal torsion ``kappa``) are exact fixed-point energies.
    NZT-II returns the opposite-torsion expressions with kappa = 1; they are
    defined for epsilon > 1 only.
    """
    if branch not in ("CFP-III", "CFP-IV"):
        raise ParameterError(f"branch must be CFP-III or CFP-IV, got {branch!r}")
    eps = float(epsilon)
    lo = branch_domain(model, branch, kappa)
    inside = eps > lo if model == "NZT-II" else eps >= lo
    if not inside:
        raise BranchDomainError(
            f"{model} {branch} branch exists for epsilon {'>' if model == 'NZT-II' else '>='} {lo:g}, "
            f"got {eps:g}"
        )
    if model == "FP":
        e = eps + 1.0 / eps
        return -e if branch == "CFP-III" else e
    if model == "NZT-I":
        a = kappa - eps if branch == "CFP-III" else kappa + eps
        return a + 1.0 / a
    if branch == "CFP-III":
        return -2.0 / (1.0 - eps) - eps * (1.0 - 1.0 / (1.0 - eps) ** 2)
    return 2.0 / (1.0 + eps) - eps * (1.0 - 1.0 / (1.0 + eps) ** 2)


class BifurcationResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    family: Family
    found: bool
    critical_epsilon: float | None
    partner_family: Family
    partner_onset: float | None
    eps_min: float
    eps_max: float
    eps_step: float


def _trivial_state(family: str) -> np.ndarray:
    phi = FAMILY_PHI[family]
    return np.array([0.0, phi, 0.0, phi])


def _first_crossing(f, grid: np.ndarray) -> float | None:
    """Smallest epsilon where ``f`` turns positive, refined by bisection to SCAN_XTOL."""
    prev = None
    for eps in grid:
        eps = float(eps)
        if f(eps) > 0:
            return eps if prev is None else float(bisect(f, prev, eps, xtol=SCAN_XTOL))
        prev = eps
    return None


def bifurcation_scan(
    p: ModelParams,
    family: Literal["CFP-I", "CFP-II"],
    eps_range: tuple[float, float] = (0.0, 5.0),
    eps_step: float = 0.01,
) -> BifurcationResult:
    """First epsilon where the trivial family turns unstable, plus its partner's onset."""
    if family not in PARTNER:
        raise ParameterError(f"family must be CFP-I or CFP-II, got {family!r}")
    lo, hi = map(float, eps_range)
    if not eps_step > 0 or hi < lo:
        raise ParameterError(f"invalid scan range {eps_range} step {eps_step}")
    if p.omega1 != p.omega2:
        raise ParameterError("bifurcation scan needs Omega1 = Omega2")
    grid = np.round(lo + eps_step * np.arange(int(math.floor((hi - lo) / eps_step + 1e-9)) + 1), 12)
    state = _trivial_state(family)

    def growth(eps: float) -> float:
        return max_growth_rate(state, p.with_epsilon(eps)) - STABILITY_TOL

    partner = PARTNER[family]

    def partner_found(eps: float) -> float:
        return 1.0 if _family_root(partner, p.with_epsilon(eps))[0] is not None else -1.0

    critical = _first_crossing(growth, grid)
    onset = _first_crossing(partner_found, grid)
    result = BifurcationResult(
        family=family,
        found=critical is not None,
        critical_epsilon=critical,
        partner_family=partner,
        partner_onset=onset,
        eps_min=lo,
        eps_max=hi,
        eps_step=eps_step,
    )
    log_event(log, "bifurcation_scan", "bifurcation scan finished", **result.model_dump())
    return result
