"""Command-line front end: ``python -m ckt.cli <command> [flags]``.

Every command reads an optional YAML ``--config`` and lets flags override
it. CSV outputs go to ``--out`` (or ``$CKT_OUTPUT_DIR``, default ``./out``)
with a ``.manifest.json`` next to each file.

Exit codes: 0 success, 1 numerical failure, 2 usage or config error.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import typer
import yaml
from pydantic import ValidationError
from rich import print
from rich.table import Table

from . import __version__
from .classical import (
    bifurcation_scan,
    canonical_to_cartesian,
    integrate_rk4,
    locate_fixed_points,
    phase_portrait,
)
from .config import RunConfig, load_config
from .errors import CKTError
from .experiments import (
    ENERGY_COLUMNS,
    ENTANGLE_COLUMNS,
    floquet_convergence,
    qpt_report,
    sweep_edge_energies,
    sweep_entanglement,
)
from .hamiltonian import effective_hamiltonian, nl_trace_check
from .logging_setup import get_logger, level_from_env
from .spectral import edge_states, eigh, entanglement_entropy
from .symmetry import classify
from .utils import OUTPUT_ENV, atomic_write, output_root, parse_range, write_csv, write_manifest

app = typer.Typer(
    add_completion=False,
    no_args_is_help=True,
    help="Coupled kicked-top laboratory: spectra, entanglement, symmetry, classical dynamics.",
)

# generic off-axis start used when the config gives no initial state
DEFAULT_INITIAL = (0.3, 2.5, -0.2, 2.9)

ConfigOpt = typer.Option(None, "--config", "-c", help="YAML run configuration")
ModelOpt = typer.Option(None, "--model", "-m", help="Preset: fp | nzt-equal | nzt-opposite | custom")
JOpt = typer.Option(None, "--j", help="Spin size j (half-integer)")
EpsOpt = typer.Option(None, "--epsilon", help="Coupling rate epsilon")
Omega1Opt = typer.Option(None, "--omega1", help="Override Omega1")
Omega2Opt = typer.Option(None, "--omega2", help="Override Omega2")
Kappa1Opt = typer.Option(None, "--kappa1", help="Override kappa1")
Kappa2Opt = typer.Option(None, "--kappa2", help="Override kappa2")
GridOpt = typer.Option(None, "--eps", help="Epsilon grid start:stop:step (inclusive)")
ThreadsOpt = typer.Option(None, "--threads", help="Worker cap for sweeps (0 = auto)")
ResolveOpt = typer.Option(None, "--resolve", help="Degenerate edge rule: none | u0 | permutation")
OutOpt = typer.Option(None, "--out", "-o", envvar=OUTPUT_ENV, help="Output folder (default ./out)")


def _fail(msg: str, code: int) -> None:
    typer.echo(f"error: {msg}", err=True)
    raise typer.Exit(code)


def guarded(fn: Callable[..., Any]) -> Callable[..., Any]:
    """Map library errors onto exit codes with a one-line diagnostic."""

    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return fn(*args, **kwargs)
        except CKTError as exc:
            _fail(str(exc), 1)
        except ValidationError as exc:
            first = exc.errors()[0]
            loc = ".".join(str(p) for p in first.get("loc", ()))
            _fail(f"invalid configuration {loc}: {first.get('msg')}", 2)
        except (yaml.YAMLError, OSError, ValueError) as exc:
            _fail(str(exc).splitlines()[0] if str(exc) else type(exc).__name__, 2)

    return wrapper


def build_config(
    config: Optional[Path],
    *,
    model: Optional[str] = None,
    j: Optional[float] = None,
    epsilon: Optional[float] = None,
    omega1: Optional[float] = None,
    omega2: Optional[float] = None,
    kappa1: Optional[float] = None,
    kappa2: Optional[float] = None,
    eps: Optional[str] = None,
    threads: Optional[int] = None,
    resolve: Optional[str] = None,
    **sections: Any,
) -> RunConfig:
    cfg = load_config(config)
    return cfg.with_overrides(
        {
            "model": {
                "preset": model,
                "j": j,
                "epsilon": epsilon,
                "omega1": omega1,
                "omega2": omega2,
                "kappa1": kappa1,
                "kappa2": kappa2,
            },
            "grid": {"eps": eps},
            "threads": threads,
            "resolve": resolve,
            **sections,
        }
    )


def _provenance(command: str, cfg: RunConfig, **extra: Any) -> dict[str, Any]:
    return {"command": command, "config": cfg.model_dump(), "params": cfg.model_params().model_dump(), **extra}


@app.callback()
def main(
    log_level: Optional[str] = typer.Option(
        None, "--log-level", help="JSON log level on stderr (default $CKT_LOG_LEVEL or WARNING)"
    ),
) -> None:
    get_logger(level=log_level or level_from_env(), stream=sys.stderr, force=True)


@app.command()
@guarded
def version() -> None:
    """Print the tool version."""
    typer.echo(__version__)


@app.command()
@guarded
def spectrum(
    config: Optional[Path] = ConfigOpt,
    model: Optional[str] = ModelOpt,
    j: Optional[float] = JOpt,
    epsilon: Optional[float] = EpsOpt,
    omega1: Optional[float] = Omega1Opt,
    omega2: Optional[float] = Omega2Opt,
    kappa1: Optional[float] = Kappa1Opt,
    kappa2: Optional[float] = Kappa2Opt,
    order: int = typer.Option(1, "--order", help="Effective Hamiltonian order (1 or 2)"),
    period: Optional[float] = typer.Option(None, "--period", help="Kick period T (order 2)"),
    out: Optional[Path] = OutOpt,
) -> None:
    """Full spectrum of the effective Hamiltonian plus edge-state entanglement."""
    cfg = build_config(config, model=model, j=j, epsilon=epsilon, omega1=omega1,
                       omega2=omega2, kappa1=kappa1, kappa2=kappa2)
    p = cfg.model_params()
    h = effective_hamiltonian(p, order=order, period=period)
    w, _ = eigh(h)
    edges = edge_states(h, resolve=cfg.resolve)
    rows = [{"index": i, "energy": e, "energy_per_j": e / p.j} for i, e in enumerate(w)]
    path = write_csv(
        output_root(out) / "spectrum.csv", rows, ["index", "energy", "energy_per_j"],
        provenance=_provenance("spectrum", cfg, order=order, period=period),
    )
    table = Table(title=f"Spectrum – {p.kind} j={p.j:g} eps={p.epsilon:g}")
    table.add_column("Quantity")
    table.add_column("Value", justify="right")
    table.add_row("dimension", str(len(w)))
    table.add_row("E_ground / j", f"{edges.e_ground / p.j:.6f}")
    table.add_row("E_excited / j", f"{edges.e_excited / p.j:.6f}")
    table.add_row("S_V ground", f"{entanglement_entropy(edges.ground, p.j):.6f}")
    table.add_row("S_V excited", f"{entanglement_entropy(edges.excited, p.j):.6f}")
    table.add_row("trace", f"{float(np.trace(h).real):.6g}")
    print(table)
    print(f"Spectrum written to: [bold]{path}[/bold]")


def _sweep_command(name: str, columns: list[str], runner, **kw: Any) -> None:
    out = kw.pop("out")
    cfg = build_config(kw.pop("config"), **kw)
    p = cfg.model_params()
    grid = parse_range(cfg.grid.eps)
    table = runner(p, grid, resolve=cfg.resolve, threads=cfg.threads, markers=p.omega1 == p.omega2)
    path = write_csv(
        output_root(out) / f"{name}.csv", table.rows(), columns,
        provenance=_provenance(
            name, cfg, grid=cfg.grid.eps,
            eps_c_cfp_i=table.eps_c_cfp_i, eps_c_cfp_ii=table.eps_c_cfp_ii,
        ),
    )
    summary = Table(title=f"{name} – {p.kind} j={p.j:g} ({len(table.records)} points)")
    summary.add_column("Quantity")
    summary.add_column("epsilon", justify="right")
    summary.add_column("value", justify="right")
    for col in ("sv_ground", "sv_excited"):
        eps_pk, val = table.peak(col)
        summary.add_row(f"max {col}", f"{eps_pk:.3f}", f"{val:.4f}")
    for label, val in (("eps_c CFP-I", table.eps_c_cfp_i), ("eps_c CFP-II", table.eps_c_cfp_ii)):
        summary.add_row(label, "-" if val is None else f"{val:.3f}", "")
    print(summary)
    print(f"Table written to: [bold]{path}[/bold]")


@app.command("entangle-sweep")
@guarded
def entangle_sweep(
    config: Optional[Path] = ConfigOpt,
    model: Optional[str] = ModelOpt,
    j: Optional[float] = JOpt,
    eps: Optional[str] = GridOpt,
    omega1: Optional[float] = Omega1Opt,
    omega2: Optional[float] = Omega2Opt,
    kappa1: Optional[float] = Kappa1Opt,
    kappa2: Optional[float] = Kappa2Opt,
    threads: Optional[int] = ThreadsOpt,
    resolve: Optional[str] = ResolveOpt,
    out: Optional[Path] = OutOpt,
) -> None:
    """Ground / most-excited entanglement entropy versus coupling."""
    _sweep_command(
        "entangle_sweep", ENTANGLE_COLUMNS, sweep_entanglement, config=config, model=model,
        j=j, eps=eps, omega1=omega1, omega2=omega2, kappa1=kappa1, kappa2=kappa2,
        threads=threads, resolve=resolve, out=out,
    )


@app.command("energy-sweep")
@guarded
def energy_sweep(
    config: Optional[Path] = ConfigOpt,
    model: Optional[str] = ModelOpt,
    j: Optional[float] = JOpt,
    eps: Optional[str] = GridOpt,
    omega1: Optional[float] = Omega1Opt,
    omega2: Optional[float] = Omega2Opt,
    kappa1: Optional[float] = Kappa1Opt,
    kappa2: Optional[float] = Kappa2Opt,
    threads: Optional[int] = ThreadsOpt,
    resolve: Optional[str] = ResolveOpt,
    out: Optional[Path] = OutOpt,
) -> None:
    """Edge energies per spin with classical branch overlays."""
    _sweep_command(
        "energy_sweep", ENERGY_COLUMNS, sweep_edge_energies, config=config, model=model,
        j=j, eps=eps, omega1=omega1, omega2=omega2, kappa1=kappa1, kappa2=kappa2,
        threads=threads, resolve=resolve, out=out,
    )


@app.command("classify")
@guarded
def classify_cmd(
    config: Optional[Path] = ConfigOpt,
    model: Optional[str] = ModelOpt,
    j: Optional[float] = JOpt,
    epsilon: Optional[float] = EpsOpt,
    omega1: Optional[float] = Omega1Opt,
    omega2: Optional[float] = Omega2Opt,
    kappa1: Optional[float] = Kappa1Opt,
    kappa2: Optional[float] = Kappa2Opt,
    as_json: bool = typer.Option(False, "--json", help="Also write classify.json"),
    out: Optional[Path] = OutOpt,
) -> None:
    """Symmetry class (BDI / CI / standard-TRS) of the effective Hamiltonian."""
    cfg = build_config(config, model=model, j=j, epsilon=epsilon, omega1=omega1,
                       omega2=omega2, kappa1=kappa1, kappa2=kappa2)
    p = cfg.model_params()
    if p.epsilon == 0 and epsilon is None:
        p = p.with_epsilon(1.0)
    report = classify(effective_hamiltonian(p), p.j, omega_equal=p.omega1 == p.omega2)
    trace = nl_trace_check(p.j, p.kappa1, p.kappa2)
    text = report.to_text() + f"nl_trace = {trace.joint_closed_form:.6g}\n"
    root = output_root(out)
    atomic_write(root / "classify.txt", text)
    if as_json:
        atomic_write(root / "classify.json", report.to_json())
    typer.echo(f"class: {report.class_label}")
    typer.echo(text, nl=False)


@app.command("fixed-points")
@guarded
def fixed_points_cmd(
    config: Optional[Path] = ConfigOpt,
    model: Optional[str] = ModelOpt,
    epsilon: Optional[float] = EpsOpt,
    omega1: Optional[float] = Omega1Opt,
    omega2: Optional[float] = Omega2Opt,
    kappa1: Optional[float] = Kappa1Opt,
    kappa2: Optional[float] = Kappa2Opt,
    out: Optional[Path] = OutOpt,
) -> None:
    """Classical fixed points CFP-I..IV with Jacobian stability."""
    cfg = build_config(config, model=model, epsilon=epsilon, omega1=omega1,
                       omega2=omega2, kappa1=kappa1, kappa2=kappa2)
    p = cfg.model_params()
    found = locate_fixed_points(p)
    table = Table(title=f"Fixed points – {p.kind} eps={p.epsilon:g}")
    for col in ("Family", "Z1", "phi1", "Z2", "phi2", "Energy", "Stable", "max Re"):
        table.add_column(col)
    rows = []
    for r in found.records:
        z1, f1, z2, f2 = r.state
        table.add_row(
            r.family, f"{z1:.6f}", f"{f1:.4f}", f"{z2:.6f}", f"{f2:.4f}", f"{r.energy:.6f}",
            "[green]yes" if r.stable else "[red]no", f"{r.max_real:.3e}",
        )
        rows.append({
            "family": r.family, "z1": z1, "phi1": f1, "z2": z2, "phi2": f2, "energy": r.energy,
            "stable": r.stable, "max_real": r.max_real, "eom_residual": r.eom_residual,
        })
    for family, reason in found.missing.items():
        table.add_row(family, "-", "-", "-", "-", "-", "-", reason)
    path = write_csv(
        output_root(out) / "fixed_points.csv", rows,
        ["family", "z1", "phi1", "z2", "phi2", "energy", "stable", "max_real", "eom_residual"],
        provenance=_provenance("fixed-points", cfg, missing=found.missing),
    )
    print(table)
    print(f"Fixed points written to: [bold]{path}[/bold]")


@app.command()
@guarded
def bifurcation(
    config: Optional[Path] = ConfigOpt,
    model: Optional[str] = ModelOpt,
    family: str = typer.Option("cfp-i", "--family", help="cfp-i | cfp-ii"),
    scan: Optional[str] = typer.Option(None, "--scan", help="Scan range start:stop:step"),
    omega1: Optional[float] = Omega1Opt,
    omega2: Optional[float] = Omega2Opt,
    kappa1: Optional[float] = Kappa1Opt,
    kappa2: Optional[float] = Kappa2Opt,
    out: Optional[Path] = OutOpt,
) -> None:
    """Critical coupling where CFP-I or CFP-II loses stability."""
    fam = family.upper()
    if fam not in ("CFP-I", "CFP-II"):
        raise typer.BadParameter(f"family must be cfp-i or cfp-ii, got {family}")
    cfg = build_config(config, model=model, omega1=omega1, omega2=omega2,
                       kappa1=kappa1, kappa2=kappa2, grid={"scan": scan})
    p = cfg.model_params()
    grid = parse_range(cfg.grid.scan)
    if grid.size < 2:
        raise typer.BadParameter("scan range needs start:stop:step")
    result = bifurcation_scan(p, fam, (float(grid[0]), float(grid[-1])), float(grid[1] - grid[0]))
    atomic_write(
        output_root(out) / f"bifurcation_{fam.lower()}.json",
        json.dumps(result.model_dump(), indent=2, sort_keys=True) + "\n",
    )
    if result.critical_epsilon is None:
        typer.echo(f"eps_c not found in [{result.eps_min:g}, {result.eps_max:g}]")
    else:
        typer.echo(f"eps_c = {result.critical_epsilon:.3f} ± 0.001")
    if result.partner_onset is not None:
        typer.echo(f"{result.partner_family} onset = {result.partner_onset:.3f}")


@app.command()
@guarded
def trajectory(
    config: Optional[Path] = ConfigOpt,
    model: Optional[str] = ModelOpt,
    epsilon: Optional[float] = EpsOpt,
    omega1: Optional[float] = Omega1Opt,
    omega2: Optional[float] = Omega2Opt,
    kappa1: Optional[float] = Kappa1Opt,
    kappa2: Optional[float] = Kappa2Opt,
    dt: Optional[float] = typer.Option(None, "--dt", help="RK4 step"),
    t_max: Optional[float] = typer.Option(None, "--t-max", help="Integration horizon"),
    representation: Optional[str] = typer.Option(None, "--representation", help="cartesian | canonical"),
    record_every: Optional[int] = typer.Option(None, "--record-every", help="Keep every n-th step"),
    out: Optional[Path] = OutOpt,
) -> None:
    """Single RK4 trajectory with energy and sphere-norm drift."""
    cfg = build_config(
        config, model=model, epsilon=epsilon, omega1=omega1, omega2=omega2, kappa1=kappa1,
        kappa2=kappa2,
        integration={"dt": dt, "t_max": t_max, "representation": representation,
                     "record_every": record_every},
    )
    p = cfg.model_params()
    integ = cfg.integration
    start = np.array(integ.initial or DEFAULT_INITIAL, dtype=float)
    if integ.representation == "cartesian":
        start = canonical_to_cartesian(start)
    steps = int(round(integ.t_max / integ.dt))
    traj = integrate_rk4(start, p, integ.dt, steps, integ.representation, integ.record_every)
    rows: list[dict[str, Any]] = []
    if integ.representation == "cartesian":
        fields = ["t", "top", "X", "Y", "Z", "phi"]
        for t, frame in zip(traj.times, traj.states[:, 0]):
            for top in (1, 2):
                x, y, z = frame[3 * (top - 1): 3 * top]
                rows.append({"t": float(t), "top": top, "X": x, "Y": y, "Z": z,
                             "phi": float(np.arctan2(y, x))})
    else:
        fields = ["t", "Z1", "phi1", "Z2", "phi2"]
        for t, frame in zip(traj.times, traj.states[:, 0]):
            rows.append(dict(zip(fields, (float(t), *map(float, frame)))))
    path = write_csv(
        output_root(out) / "trajectory.csv", rows, fields,
        provenance=_provenance("trajectory", cfg, energy_drift=traj.energy_drift,
                               norm_drift=traj.norm_drift),
    )
    typer.echo(f"energy_drift = {traj.energy_drift:.3e}")
    typer.echo(f"norm_drift = {traj.norm_drift:.3e}")
    print(f"Trajectory written to: [bold]{path}[/bold]")


@app.command()
@guarded
def portrait(
    config: Optional[Path] = ConfigOpt,
    model: Optional[str] = ModelOpt,
    epsilon: Optional[float] = EpsOpt,
    omega1: Optional[float] = Omega1Opt,
    omega2: Optional[float] = Omega2Opt,
    kappa1: Optional[float] = Kappa1Opt,
    kappa2: Optional[float] = Kappa2Opt,
    n_traj: Optional[int] = typer.Option(None, "--n-traj", help="Ensemble size"),
    t_max: Optional[float] = typer.Option(None, "--t-max", help="Integration horizon"),
    dt: Optional[float] = typer.Option(None, "--dt", help="RK4 step"),
    stride: Optional[int] = typer.Option(None, "--stride", help="Sample every n-th step"),
    seed: Optional[int] = typer.Option(None, "--seed", help="PRNG seed"),
    out: Optional[Path] = OutOpt,
) -> None:
    """(phi1, Z1) projection of a seeded trajectory ensemble."""
    cfg = build_config(
        config, model=model, epsilon=epsilon, omega1=omega1, omega2=omega2, kappa1=kappa1,
        kappa2=kappa2, seed=seed,
        portrait={"n_traj": n_traj, "t_max": t_max, "dt": dt, "stride": stride},
    )
    pc = cfg.portrait
    points = phase_portrait(cfg.model_params(), pc.n_traj, pc.t_max, pc.dt, cfg.seed, pc.stride)
    fields = ["traj", "t", "Z1", "phi1", "Z2", "phi2"]
    rows = [
        {"traj": pt.traj, "t": pt.t, "Z1": pt.z1, "phi1": pt.phi1, "Z2": pt.z2, "phi2": pt.phi2}
        for pt in points
    ]
    path = write_csv(output_root(out) / "portrait.csv", rows, fields,
                     provenance=_provenance("portrait", cfg))
    print(f"[bold]{len(rows)}[/bold] points written to: [bold]{path}[/bold]")


@app.command("floquet-check")
@guarded
def floquet_check(
    config: Optional[Path] = ConfigOpt,
    model: Optional[str] = ModelOpt,
    j: Optional[float] = JOpt,
    epsilon: Optional[float] = EpsOpt,
    omega1: Optional[float] = Omega1Opt,
    omega2: Optional[float] = Omega2Opt,
    kappa1: Optional[float] = Kappa1Opt,
    kappa2: Optional[float] = Kappa2Opt,
    periods: Optional[str] = typer.Option(None, "--periods", help="Comma-separated descending T values"),
    out: Optional[Path] = OutOpt,
) -> None:
    """Eigenphase mismatch between the kicked Floquet operator and exp(-i H_eff T)."""
    period_list = None
    if periods:
        period_list = [float(x) for x in periods.split(",") if x.strip()]
    cfg = build_config(config, model=model, j=j, epsilon=epsilon, omega1=omega1,
                       omega2=omega2, kappa1=kappa1, kappa2=kappa2,
                       floquet={"periods": period_list})
    rows = floquet_convergence(cfg.model_params(), cfg.floquet.periods)
    fields = ["period", "delta_order1", "delta_order2", "second_order_norm"]
    path = write_csv(output_root(out) / "floquet_convergence.csv",
                     [r.model_dump() for r in rows], fields,
                     provenance=_provenance("floquet-check", cfg))
    table = Table(title="Floquet convergence")
    for col in fields:
        table.add_column(col, justify="right")
    for r in rows:
        table.add_row(f"{r.period:g}", f"{r.delta_order1:.3e}", f"{r.delta_order2:.3e}",
                      f"{r.second_order_norm:.3e}")
    print(table)
    print(f"Table written to: [bold]{path}[/bold]")


@app.command("qpt-report")
@guarded
def qpt_report_cmd(
    config: Optional[Path] = ConfigOpt,
    model: Optional[str] = ModelOpt,
    j: Optional[float] = JOpt,
    eps: Optional[str] = GridOpt,
    kappa1: Optional[float] = Kappa1Opt,
    kappa2: Optional[float] = Kappa2Opt,
    threads: Optional[int] = ThreadsOpt,
    resolve: Optional[str] = ResolveOpt,
    out: Optional[Path] = OutOpt,
) -> None:
    """QPT / DT coincidence summary: classical eps_c, entanglement peaks, class."""
    cfg = build_config(config, model=model, j=j, eps=eps, kappa1=kappa1, kappa2=kappa2,
                       threads=threads, resolve=resolve)
    scan = parse_range(cfg.grid.scan)
    report = qpt_report(
        cfg.model_params(), parse_range(cfg.grid.eps),
        scan_range=(float(scan[0]), float(scan[-1])),
        scan_step=float(scan[1] - scan[0]) if scan.size > 1 else 0.01,
        resolve=cfg.resolve, threads=cfg.threads,
    )
    doc = report.model_dump()
    root = output_root(out)
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    atomic_write(root / "qpt_report.json", text)
    write_manifest(root / "qpt_report.json", text, _provenance("qpt-report", cfg))
    table = Table(title=f"QPT report – {report.kind} j={report.j:g}")
    table.add_column("Key")
    table.add_column("Value")
    for key, value in doc.items():
        table.add_row(key, str(value))
    print(table)
    typer.echo(f"coincident: {'yes' if report.coincident else 'no'}")
    typer.echo(f"class: {report.class_label}")


if __name__ == "__main__":
    app()
