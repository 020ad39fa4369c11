"""Experiment configuration: one JSON document, validated before any compute.

Precedence for the output directory and run knobs is flags > environment
(``LEVELRATE_OUT``) > file.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, PositiveFloat, PositiveInt, ValidationError, model_validator

from ..errors import ConfigError
from ..optimizer import DEFAULT_BETAS

ENV_OUT = "LEVELRATE_OUT"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ObjectiveSpec(_Strict):
    name: Literal["quadratic", "rosenbrock", "himmelblau", "mlp"] = "quadratic"
    dim: PositiveInt = 2
    # mlp only
    dataset: str | None = None
    synthetic_n: PositiveInt = 1000
    minority_fraction: float = Field(0.1, gt=0.0, lt=1.0)
    hidden: PositiveInt = 8
    init_scale: PositiveFloat = 0.5
    slice_axes: tuple[int, int] = (0, 1)

    @model_validator(mode="after")
    def _check(self):
        if self.name in ("rosenbrock", "himmelblau") and self.dim != 2:
            raise ValueError(f"{self.name} is two-dimensional")
        if self.slice_axes[0] == self.slice_axes[1]:
            raise ValueError("slice_axes must differ")
        return self


class TunerSpec(_Strict):
    betas: tuple[float, ...] = DEFAULT_BETAS
    lam: float = 0.01
    s_init: PositiveFloat = 1e-8
    eps: PositiveFloat = 1e-8

    @model_validator(mode="after")
    def _check(self):
        if not self.betas or not all(0.0 <= b <= 1.0 for b in self.betas):
            raise ValueError("decay factors must lie in [0, 1]")
        return self


class MethodSpec(_Strict):
    kind: Literal["fixed", "exp_decay", "adaptive", "tuner"] = "exp_decay"
    alpha0: PositiveFloat = 0.1
    beta: PositiveFloat = 0.01
    tuner: TunerSpec = TunerSpec()


class RiskSpec(_Strict):
    """``class_weights`` of ``None`` means inverse class frequency."""

    class_weights: list[PositiveFloat] | None = None
    rho: list[float] | None = None
    reg_kind: Literal["L1", "L2"] = "L2"
    reg_strength: NonNegativeFloat = 0.0
    kappa: NonNegativeFloat = 0.0
    delta: PositiveFloat = 1.0

    @model_validator(mode="after")
    def _check(self):
        if self.rho is not None and not all(0.0 <= r <= 1.0 for r in self.rho):
            raise ValueError("rho entries must lie in [0, 1]")
        return self


class StabilitySpec(_Strict):
    tol: NonNegativeFloat = 1e-12
    x_star: list[float] | None = None
    delta: PositiveFloat | None = None
    eps: PositiveFloat | None = None


class EquiSpec(_Strict):
    t_list: list[NonNegativeFloat] = [0.0, 1.0, 5.0]
    n_lambdas: PositiveInt = 20
    lambdas: list[float] | None = None
    direction: Literal["super", "sub"] = "super"


class TopologySpec(_Strict):
    box: tuple[tuple[float, float], tuple[float, float]] = ((-6.0, 6.0), (-6.0, 6.0))
    nx: int = Field(401, ge=2)
    ny: int = Field(401, ge=2)
    directions: list[Literal["super", "sub"]] = ["super", "sub"]
    lambdas: list[float] | None = None
    n_lambdas: PositiveInt = 50
    clip_to_boundary: bool = True
    adjacency: Literal[4, 8] = 8
    equiconnectedness: EquiSpec | None = EquiSpec()


class GradcheckSpec(_Strict):
    points: PositiveInt = 10
    tolerance: PositiveFloat = 1e-4
    quadratic_tolerance: PositiveFloat = 1e-8


class ExperimentConfig(_Strict):
    objective: ObjectiveSpec = ObjectiveSpec()
    x0: list[float] | None = None
    method: MethodSpec = MethodSpec()
    risk: RiskSpec = RiskSpec()
    steps: PositiveInt = 200
    seed: int = 0
    output_dir: str = "runs/default"
    stability: StabilitySpec = StabilitySpec()
    topology: TopologySpec = TopologySpec()
    gradcheck: GradcheckSpec = GradcheckSpec()


def _merge(base: dict, overrides: dict) -> dict:
    out = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path: str | Path | None = None, overrides: dict | None = None, env=None) -> ExperimentConfig:
    """Read, layer and validate a config.

    ``overrides`` holds flag values (dotted structure as nested dicts) and
    wins over ``LEVELRATE_OUT``, which wins over the file.
    """
    env = os.environ if env is None else env
    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
    if env.get(ENV_OUT):
        data["output_dir"] = env[ENV_OUT]
    data = _merge(data, overrides or {})
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None
