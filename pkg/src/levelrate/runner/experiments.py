"""Experiment drivers behind the CLI subcommands.

Each driver takes a validated :class:`ExperimentConfig`, writes its artifacts
into ``config.output_dir`` and finishes by writing ``manifest.json``
atomically. Artifact contents depend only on the config, so reruns are
byte-identical; timestamps live in the manifest alone.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Callable

import numpy as np

from ..errors import ConfigError, LevelRateError
from ..landscape import (
    Dataset,
    Mlp,
    Objective,
    finite_diff_grad,
    get_objective,
    mlp_objective,
    risk_objective,
    slice_objective,
)
from ..loss import RiskConfig, inverse_frequency_weights
from ..optimizer import Method, TunerConfig, run_training
from ..stability import stability_report
from ..topology import equiconnectedness_check, lambda_ladder, lambda_sweep, sample_grid
from .config import ExperimentConfig
from .data import class_histogram, load_dataset, make_imbalanced_blobs

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

DEFAULT_X0 = {"rosenbrock": [-1.2, 1.0], "himmelblau": [0.0, 0.0]}
KNOWN_MINIMUM = {"rosenbrock": [1.0, 1.0]}


def version_string() -> str:
    try:
        return f"v{version('artifact')}"
    except PackageNotFoundError:
        from .. import __version__

        return f"v{__version__}"


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_atomic(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


@dataclass
class Problem:
    objective: Objective
    x0: np.ndarray
    x_star: np.ndarray | None = None
    data: Dataset | None = None
    model: Mlp | None = None
    risk: RiskConfig | None = None


def risk_config_for(cfg: ExperimentConfig, data: Dataset) -> RiskConfig:
    spec = cfg.risk
    weights = spec.class_weights
    if weights is None:
        weights = inverse_frequency_weights(data.labels, data.n_classes).tolist()
    elif len(weights) < data.n_classes:
        raise ConfigError(f"class_weights has {len(weights)} entries for {data.n_classes} classes")
    if spec.rho is not None and len(spec.rho) != len(data):
        raise ConfigError(f"rho has {len(spec.rho)} entries for {len(data)} samples")
    return RiskConfig(
        class_weights=tuple(weights),
        rho=None if spec.rho is None else tuple(spec.rho),
        reg_kind=spec.reg_kind,
        reg_strength=spec.reg_strength,
        kappa=spec.kappa,
        delta=spec.delta,
    )


def build_problem(cfg: ExperimentConfig) -> Problem:
    spec = cfg.objective
    if spec.name != "mlp":
        obj = get_objective(spec.name, **({"dim": spec.dim} if spec.name == "quadratic" else {}))
        x0 = cfg.x0 if cfg.x0 is not None else DEFAULT_X0.get(spec.name, [5.0] * obj.dim)
        if len(x0) != obj.dim:
            raise ConfigError(f"x0 has {len(x0)} entries, {obj.name} needs {obj.dim}")
        if cfg.stability.x_star is not None:
            x_star = cfg.stability.x_star
        elif spec.name == "quadratic":
            x_star = [0.0] * obj.dim
        else:
            x_star = KNOWN_MINIMUM.get(spec.name)
        return Problem(obj, np.array(x0, dtype=np.float64), None if x_star is None else np.array(x_star))

    if spec.dataset is not None:
        data = load_dataset(spec.dataset)
    else:
        data = make_imbalanced_blobs(spec.synthetic_n, spec.minority_fraction, cfg.seed)
    logger.info("dataset: %d rows, histogram %s", len(data), class_histogram(data))
    model = Mlp(data.n_features, spec.hidden, data.n_classes)
    risk = risk_config_for(cfg, data)
    obj = risk_objective(model, data, risk)
    if cfg.x0 is not None:
        if len(cfg.x0) != model.size:
            raise ConfigError(f"x0 has {len(cfg.x0)} entries, the network has {model.size}")
        x0 = np.array(cfg.x0, dtype=np.float64)
    else:
        x0 = model.init_params(np.random.default_rng(cfg.seed), spec.init_scale)
    x_star = None if cfg.stability.x_star is None else np.array(cfg.stability.x_star)
    return Problem(obj, x0, x_star, data, model, risk)


def method_for(cfg: ExperimentConfig) -> Method:
    m = cfg.method
    tuner = TunerConfig(m.tuner.betas, m.tuner.lam, m.tuner.s_init, m.tuner.eps)
    return Method(m.kind, m.alpha0, m.beta, tuner)


# --- drivers ---


def _run(command: str, cfg: ExperimentConfig, body: Callable[[Path], tuple[str, list[str], dict]]) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()
    try:
        status, artifacts, extra = body(out)
    except LevelRateError as exc:
        logger.error("%s failed: %s", command, exc)
        status, artifacts, extra = "error", [], {"message": str(exc)}
    manifest = {
        "command": command,
        "config": cfg.model_dump(mode="json"),
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "version": version_string(),
        "status": status,
        "artifacts": artifacts,
        **extra,
    }
    write_atomic(out / "manifest.json", dump_json(manifest))
    if status == "error":
        return EXIT_RUNTIME
    if status == "diverged" or extra.get("checks_passed") is False:
        return EXIT_CHECK_FAILED
    return EXIT_OK


def run_optimize(cfg: ExperimentConfig) -> int:
    def body(out: Path):
        problem = build_problem(cfg)
        traj = run_training(problem.objective, method_for(cfg), cfg.steps, problem.x0)
        traj.write_csv(out / "trajectory.csv")
        st = cfg.stability
        report = stability_report(traj, st.tol, problem.x_star, st.delta, st.eps)
        payload = {
            "status": traj.status,
            "message": traj.message,
            "records": len(traj),
            "final_loss": traj[-1].loss,
            "initial_loss": traj[0].loss,
            "report": report.to_dict(),
        }
        write_atomic(out / "stability.json", dump_json(payload))
        return traj.status, ["trajectory.csv", "stability.json"], {"message": traj.message}

    return _run("optimize", cfg, body)


def topology_objective(cfg: ExperimentConfig, problem: Problem) -> Objective:
    if problem.objective.dim == 2:
        return problem.objective
    axes = cfg.objective.slice_axes
    if max(axes) >= problem.objective.dim or min(axes) < 0:
        raise ConfigError(f"slice_axes {axes} out of range for dimension {problem.objective.dim}")
    (lo, hi), _ = cfg.topology.box
    return slice_objective(problem.objective, problem.x0, axes, (lo, hi))


def run_topology(cfg: ExperimentConfig) -> int:
    spec = cfg.topology

    def body(out: Path):
        problem = build_problem(cfg)
        obj = topology_objective(cfg, problem)
        field = sample_grid(obj, spec.box, spec.nx, spec.ny)
        (out / "grid.csv").write_text(field.to_csv(), encoding="utf-8")
        if spec.lambdas is not None:
            lambdas = spec.lambdas
        else:
            lambdas = lambda_ladder(field, spec.n_lambdas, spec.clip_to_boundary).tolist()
        result = {
            "objective": obj.name,
            "grid": {"box": spec.box, "nx": spec.nx, "ny": spec.ny},
            "value_range": [float(field.values.min()), float(field.values.max())],
            "boundary_min": field.boundary_min(),
            "sweeps": {d: lambda_sweep(field, lambdas, d, spec.adjacency).to_dict() for d in spec.directions},
        }
        eq = spec.equiconnectedness
        if eq is not None:
            kappa, delta = cfg.risk.kappa, cfg.risk.delta
            if problem.risk is not None:
                kappa, delta = problem.risk.kappa, problem.risk.delta
            eq_lambdas = eq.lambdas if eq.lambdas is not None else lambda_ladder(field, eq.n_lambdas).tolist()
            report = equiconnectedness_check(
                obj, kappa, delta, eq.t_list, eq_lambdas, spec.box, spec.nx, spec.ny, eq.direction, spec.adjacency
            )
            result["equiconnectedness"] = report.to_dict()
        write_atomic(out / "connectivity.json", dump_json(result))
        return "completed", ["grid.csv", "connectivity.json"], {}

    return _run("topology", cfg, body)


# --- gradient checks ---


@dataclass
class GradTarget:
    name: str
    objective: Objective
    sample: Callable[[np.random.Generator], np.ndarray]
    h: float
    tolerance: float


def relative_error(analytic, numeric) -> float:
    analytic, numeric = np.asarray(analytic), np.asarray(numeric)
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / scale)


def gradcheck_targets(cfg: ExperimentConfig) -> list[GradTarget]:
    tol, qtol = cfg.gradcheck.tolerance, cfg.gradcheck.quadratic_tolerance
    in_box = lambda rng: rng.uniform(-5.0, 5.0, size=2)  # noqa: E731
    targets = [
        GradTarget("quadratic", get_objective("quadratic"), in_box, 1e-5, qtol),
        GradTarget("rosenbrock", get_objective("rosenbrock"), in_box, 1e-6, tol),
        GradTarget("himmelblau", get_objective("himmelblau"), in_box, 1e-6, tol),
    ]
    data = make_imbalanced_blobs(40, 0.25, cfg.seed)
    model = Mlp(2, 4, 2)
    weights = inverse_frequency_weights(data.labels, 2)
    rho = np.random.default_rng(cfg.seed).uniform(0.2, 1.0, len(data))
    risk = RiskConfig(tuple(weights), tuple(rho), "L2", 0.05, kappa=1.0, delta=0.5)
    params = lambda rng: rng.standard_normal(model.size)  # noqa: E731
    targets.append(GradTarget("mlp_cross_entropy", mlp_objective(model, data), params, 1e-5, tol))
    dyn = risk_objective(model, data, risk)
    at_t = Objective("dynamic_cost", dyn.dim, dyn.lo, dyn.hi, lambda th: dyn.timed(th, 1.0))
    targets.append(GradTarget("dynamic_cost", at_t, params, 1e-5, tol))
    return targets


def gradcheck(targets: list[GradTarget], points: int, seed: int) -> dict[str, dict]:
    results = {}
    for target in targets:
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(points):
            x = target.sample(rng)
            numeric = finite_diff_grad(target.objective, x, target.h)
            worst = max(worst, relative_error(target.objective.grad(x), numeric))
        results[target.name] = {
            "max_rel_error": worst,
            "tolerance": target.tolerance,
            "points": points,
            "passed": worst <= target.tolerance,
        }
    return results


def run_gradcheck(cfg: ExperimentConfig) -> int:
    def body(out: Path):
        results = gradcheck(gradcheck_targets(cfg), cfg.gradcheck.points, cfg.seed)
        failed = sorted(name for name, r in results.items() if not r["passed"])
        for name in failed:
            logger.error("gradient check failed for %s: %.3g", name, results[name]["max_rel_error"])
        write_atomic(out / "gradcheck.json", dump_json({"targets": results, "failed": failed}))
        return "completed", ["gradcheck.json"], {"checks_passed": not failed, "failed": failed}

    return _run("gradcheck", cfg, body)


COMMANDS = {"optimize": run_optimize, "topology": run_topology, "gradcheck": run_gradcheck}


def run_command(command: str, config: dict) -> int:
    """Entry point for sweep workers: validate a plain-dict config and run it."""
    return COMMANDS[command](ExperimentConfig.model_validate(config))


def aggregate_reports(roots: list[str | Path]) -> dict:
    """Collect every ``manifest.json`` below ``roots`` into one summary."""
    runs = []
    for root in roots:
        for path in sorted(Path(root).rglob("manifest.json")):
            try:
                manifest = json.loads(path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                runs.append({"path": str(path.parent), "status": "unreadable", "message": str(exc)})
                continue
            missing = [a for a in manifest.get("artifacts", []) if not (path.parent / a).exists()]
            runs.append(
                {
                    "path": str(path.parent),
                    "command": manifest.get("command"),
                    "status": manifest.get("status"),
                    "version": manifest.get("version"),
                    "artifacts": manifest.get("artifacts", []),
                    "missing_artifacts": missing,
                    "checks_passed": manifest.get("checks_passed"),
                }
            )
    by_status: dict[str, int] = {}
    for run in runs:
        by_status[run["status"]] = by_status.get(run["status"], 0) + 1
    return {"runs": runs, "count": len(runs), "by_status": by_status}
