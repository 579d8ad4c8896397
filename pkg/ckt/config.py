"""Parameter models and YAML run configuration.

``ModelParams`` and ``KickedParams`` are the typed inputs of every physics
module. ``RunConfig`` is what the CLI reads from a YAML file and then
patches with command-line flags.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Literal, Mapping

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .errors import SpinValueError

MAX_J = 25.0
Preset = Literal["fp", "nzt-equal", "nzt-opposite", "custom"]
ModelKind = Literal["FP", "NZT-I", "NZT-II", "generic"]

# (kappa1, kappa2) per preset; omega defaults to 1 for both tops.
PRESETS: dict[str, tuple[float, float]] = {
    "fp": (0.0, 0.0),
    "nzt-equal": (1.0, 1.0),
    "nzt-opposite": (1.0, -1.0),
    "custom": (0.0, 0.0),
}


def validate_spin(j: float) -> float:
    """Return ``j`` as float if 2j is a positive integer no larger than 50."""
    try:
        twice = 2.0 * float(j)
    except (TypeError, ValueError) as exc:
        raise SpinValueError(f"spin must be a number, got {j!r}") from exc
    if not math.isfinite(twice) or twice < 1 or abs(twice - round(twice)) > 1e-12:
        raise SpinValueError(f"spin must be a positive half-integer, got {j!r}")
    if twice > 2 * MAX_J:
        raise SpinValueError(f"spin {j} exceeds the supported maximum {MAX_J}")
    return round(twice) / 2.0


class ModelParams(BaseModel):
    """Rescaled rates of one coupled-top instance (omega = p/T, kappa = k/T, eps = eps0/T)."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False, extra="forbid")

    omega1: float = 1.0
    omega2: float = 1.0
    kappa1: float = 0.0
    kappa2: float = 0.0
    epsilon: float = 0.0
    j: float = 1.0

    @field_validator("j")
    @classmethod
    def _spin(cls, v: float) -> float:
        return validate_spin(v)

    @property
    def dim(self) -> int:
        return int(round(2 * self.j)) + 1

    @property
    def kind(self) -> ModelKind:
        return model_kind(self)

    def with_epsilon(self, epsilon: float) -> "ModelParams":
        return self.model_copy(update={"epsilon": float(epsilon)})


def model_kind(p: ModelParams) -> ModelKind:
    """Name the torsion pattern: FP (no torsion), NZT-I (equal), NZT-II (opposite)."""
    if p.kappa1 == 0 and p.kappa2 == 0:
        return "FP"
    if p.kappa1 == p.kappa2:
        return "NZT-I"
    if p.kappa1 == -p.kappa2:
        return "NZT-II"
    return "generic"


class KickedParams(BaseModel):
    """Model rates plus the kick period T; unscaled kick strengths derive from both."""

    model_config = ConfigDict(frozen=True, allow_inf_nan=False, extra="forbid")

    params: ModelParams
    period: float = Field(gt=0)

    @property
    def p1(self) -> float:
        return self.params.omega1 * self.period

    @property
    def p2(self) -> float:
        return self.params.omega2 * self.period

    @property
    def k1(self) -> float:
        return self.params.kappa1 * self.period

    @property
    def k2(self) -> float:
        return self.params.kappa2 * self.period

    @property
    def eps0(self) -> float:
        return self.params.epsilon * self.period

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.period


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelBlock(_Block):
    preset: Preset = "fp"
    j: float = 10.0
    omega1: float | None = None
    omega2: float | None = None
    kappa1: float | None = None
    kappa2: float | None = None
    epsilon: float = 0.0


class GridBlock(_Block):
    eps: str = "0:3:0.05"
    scan: str = "0:5:0.01"


class IntegrationBlock(_Block):
    dt: float = Field(1e-3, gt=0)
    t_max: float = Field(200.0, gt=0)
    representation: Literal["cartesian", "canonical"] = "cartesian"
    record_every: int = Field(100, ge=1)
    # canonical (z1, phi1, z2, phi2); None picks a generic off-axis point
    initial: tuple[float, float, float, float] | None = None


class FloquetBlock(_Block):
    periods: list[float] = Field(default_factory=lambda: [0.2, 0.1, 0.05, 0.025])


class PortraitBlock(_Block):
    n_traj: int = Field(16, ge=1)
    t_max: float = Field(50.0, gt=0)
    dt: float = Field(1e-3, gt=0)
    stride: int = Field(50, ge=1)


class RunConfig(_Block):
    model: ModelBlock = Field(default_factory=ModelBlock)
    grid: GridBlock = Field(default_factory=GridBlock)
    integration: IntegrationBlock = Field(default_factory=IntegrationBlock)
    floquet: FloquetBlock = Field(default_factory=FloquetBlock)
    portrait: PortraitBlock = Field(default_factory=PortraitBlock)
    seed: int = 0
    threads: int = Field(0, ge=0)
    resolve: Literal["none", "u0", "permutation"] = "none"

    def model_params(self) -> ModelParams:
        m = self.model
        k1, k2 = PRESETS[m.preset]
        return ModelParams(
            omega1=1.0 if m.omega1 is None else m.omega1,
            omega2=1.0 if m.omega2 is None else m.omega2,
            kappa1=k1 if m.kappa1 is None else m.kappa1,
            kappa2=k2 if m.kappa2 is None else m.kappa2,
            epsilon=m.epsilon,
            j=m.j,
        )

    def with_overrides(self, overrides: Mapping[str, Any]) -> "RunConfig":
        """New config with flag values applied; None means "not given".

        Section keys take a mapping (``{"model": {"j": 5}}``), top-level
        keys a scalar (``{"seed": 3}``).
        """
        data = self.model_dump()
        for key, value in overrides.items():
            if isinstance(value, Mapping):
                data[key].update({k: v for k, v in value.items() if v is not None})
            elif value is not None:
                data[key] = value
        return RunConfig.model_validate(data)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict):
        raise ValueError(f"config {path} must be a mapping of sections")
    return RunConfig.model_validate(data)
