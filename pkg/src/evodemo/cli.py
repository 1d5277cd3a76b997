"""Command-line entry point.

Commands read a YAML (or JSON) config file; only the seed list and the output
directory can be overridden on the command line.  Exit codes: 0 success,
1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import itertools
import sys
from dataclasses import replace
from pathlib import Path

import yaml

from . import evolution, report, rollout
from .environments import (
    EnvSpec,
    GridSpec,
    PRESET_NAMES,
    ReachSpec,
    load_layout,
    preset,
)
from .errors import ConfigurationError, ContractViolationError
from .evolution import EvolutionConfig
from .policy import (
    GaussianControllerPolicy,
    Policy,
    TabularPolicy,
    load_policy,
    save_policy,
    train_q_learning,
)

_TRAIN_KEYS = {
    "steps",
    "checkpoints",
    "alpha",
    "gamma",
    "epsilon_start",
    "epsilon_end",
    "epsilon_decay_fraction",
    "temperature",
    "seed",
    "select",
}
_TRAIN_DEFAULTS = {
    "checkpoints": [],
    "alpha": 0.1,
    "gamma": 0.99,
    "epsilon_start": 1.0,
    "epsilon_end": 0.05,
    "epsilon_decay_fraction": 0.8,
    "temperature": 1.0,
    "seed": 0,
    "select": "final",
}
_CONTROLLER_KEYS = {"gain", "noise_scale", "window", "step_size"}
_EVOLUTION_KEYS = {
    "population_size",
    "generations",
    "crossover_probability",
    "mutation_probability",
    "tournament_size",
}
_SWEEPABLE_KEYS = _EVOLUTION_KEYS | {"bits_per_dimension"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # bad flags are configuration errors, not crashes
        raise ConfigurationError(message)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> _Parser:
    parser = _Parser(prog="evodemo", description=__doc__)
    commands = parser.add_subparsers(required=True, metavar="command")

    train = commands.add_parser("train", help="train a tabular policy on a grid layout")
    _add_config_arguments(train)
    train.set_defaults(func=cmd_train)

    evolve = commands.add_parser("evolve", help="run the demonstration search, one bundle per seed")
    _add_config_arguments(evolve)
    evolve.set_defaults(func=cmd_evolve)

    base = commands.add_parser("baseline", help="evaluate only the random initial populations")
    _add_config_arguments(base)
    base.set_defaults(func=cmd_baseline)

    rep = commands.add_parser("report", help="aggregate result bundles into one comparison")
    rep.add_argument("--search", nargs="+", default=[], metavar="DIR", help="search bundles")
    rep.add_argument("--baseline", nargs="+", default=[], metavar="DIR", help="baseline bundles")
    rep.add_argument("--out", required=True, metavar="DIR")
    rep.set_defaults(func=cmd_report)

    sweep = commands.add_parser("sweep", help="run the search over a parameter grid")
    _add_config_arguments(sweep)
    sweep.set_defaults(func=cmd_sweep)
    return parser


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config", help="YAML or JSON config file")
    parser.add_argument("--out", default=None, help="override the config's output directory")
    parser.add_argument(
        "--seed",
        type=int,
        action="append",
        default=None,
        help="override the config's seed list (repeatable)",
    )


# ---------------------------------------------------------------------------
# commands


def cmd_train(args) -> int:
    config, base_dir = _load_config_file(args.config)
    _check_keys(config, {"environment", "training", "output"}, "config")
    env_name, env_spec = _build_env(config, base_dir)
    if not isinstance(env_spec, GridSpec):
        raise ConfigurationError("training is defined for grid environments only")
    training = _training_section(config.get("training"), seed_override=args.seed)
    out = _output_dir(config, args)

    result = _train(env_spec, training)
    steps = training["steps"]
    out.mkdir(parents=True, exist_ok=True)
    file_steps = sorted(set(training["checkpoints"]) | {steps})
    for step in file_steps:
        policy = result.checkpoints.get(step, result.policy)
        save_policy(policy, out / f"policy_{step}.json")
        print(f"[train] wrote {out / f'policy_{step}.json'}")

    sanity = rollout.generate(env_spec, result.policy, env_spec.canonical_start)
    print(
        f"[train] {env_name}: final policy from canonical start: outcome={sanity.outcome} "
        f"return={sanity.episode_return} length={sanity.final_length}"
    )
    return 0


def cmd_evolve(args) -> int:
    return _run_search(args, baseline_mode=False)


def cmd_baseline(args) -> int:
    return _run_search(args, baseline_mode=True)


def _run_search(args, baseline_mode: bool) -> int:
    config, base_dir = _load_config_file(args.config)
    _check_keys(
        config, {"environment", "policy", "evolution", "encoding", "seeds", "output"}, "config"
    )
    env_name, env_spec = _build_env(config, base_dir)
    policy, policy_snapshot = _resolve_policy(config.get("policy"), env_spec, base_dir)
    evo_config = _evolution_config(config, env_spec, seed=0)
    seeds = _seed_list(config, args)
    out = _output_dir(config, args)
    mode = "baseline" if baseline_mode else "evolve"

    bundle_names = []
    for seed in seeds:
        seeded = replace(evo_config, seed=seed)
        result = (
            evolution.baseline(env_spec, policy, seeded)
            if baseline_mode
            else evolution.run(env_spec, policy, seeded)
        )
        bundle = out / f"seed_{seed}"
        snapshot = _config_snapshot(env_name, policy_snapshot, seeded, seeds, out, mode)
        report.export_bundle(result, bundle, snapshot, mode=mode)
        bundle_names.append(bundle.name)
        best = result.population[0]
        print(
            f"[{mode}] seed {seed}: {len(result.population)} demonstrations, "
            f"best joint fitness {best.fitness.joint:.4f} -> {bundle}"
        )
    report._write_json(  # parent-level index over the per-seed bundles
        out / "manifest.json",
        {
            "format": report.BUNDLE_FORMAT,
            "version": report.BUNDLE_VERSION,
            "mode": mode,
            "environment": env_name,
            "seeds": list(seeds),
            "bundles": bundle_names,
        },
    )
    return 0


def cmd_report(args) -> int:
    if not args.search and not args.baseline:
        raise ConfigurationError("report needs at least one --search or --baseline bundle")
    written = report.write_comparison_report(args.search, args.baseline, args.out)
    for path in written:
        print(f"[report] wrote {path}")
    return 0


def cmd_sweep(args) -> int:
    config, base_dir = _load_config_file(args.config)
    _check_keys(
        config,
        {"environment", "policy", "evolution", "encoding", "seeds", "output", "sweep"},
        "config",
    )
    grid = config.get("sweep")
    if grid is None:
        raise ConfigurationError("sweep config needs a 'sweep' mapping")
    if not isinstance(grid, dict):
        raise ConfigurationError("'sweep' must map parameter names to value lists")
    cells = _sweep_cells(grid)
    if not cells:
        print("[sweep] empty parameter grid, nothing to run")
        return 0

    env_name, env_spec = _build_env(config, base_dir)
    policy, policy_snapshot = _resolve_policy(config.get("policy"), env_spec, base_dir)
    base_config = _evolution_config(config, env_spec, seed=0)
    seeds = _seed_list(config, args)
    out = _output_dir(config, args)

    for cell in cells:
        try:
            cell_config = replace(base_config, **cell)
        except (TypeError, ConfigurationError) as exc:
            raise ConfigurationError(f"invalid sweep cell {cell}: {exc}") from exc
        cell_name = "__".join(f"{key}={_cell_value(value)}" for key, value in cell.items())
        for seed in seeds:
            seeded = replace(cell_config, seed=seed)
            result = evolution.run(env_spec, policy, seeded)
            bundle = out / cell_name / f"seed_{seed}"
            snapshot = _config_snapshot(env_name, policy_snapshot, seeded, seeds, out, "evolve")
            snapshot["sweep_cell"] = {key: value for key, value in cell.items()}
            report.export_bundle(result, bundle, snapshot, mode="evolve")
            print(f"[sweep] {cell_name} seed {seed} -> {bundle}")
    return 0


# ---------------------------------------------------------------------------
# config plumbing


def _load_config_file(path: str) -> tuple[dict, Path]:
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigurationError(f"config file not found: {config_path}")
    try:
        data = yaml.safe_load(config_path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{config_path}: invalid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"{config_path}: config must be a key/value mapping")
    return data, config_path.parent


def _check_keys(mapping: dict, allowed: set[str], context: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ConfigurationError(
            f"unknown {context} keys: {sorted(unknown)}; allowed: {sorted(allowed)}"
        )


def _build_env(config: dict, base_dir: Path) -> tuple[str, EnvSpec]:
    name = config.get("environment")
    if not isinstance(name, str) or not name:
        raise ConfigurationError("config needs an 'environment' (preset name or layout path)")
    if name in PRESET_NAMES:
        return name, preset(name)
    if name.endswith(".map"):
        return name, load_layout((base_dir / name) if not Path(name).is_absolute() else name)
    raise ConfigurationError(
        f"unknown environment {name!r}; use one of {', '.join(PRESET_NAMES)} or a .map layout path"
    )


def _output_dir(config: dict, args) -> Path:
    out = args.out if args.out is not None else config.get("output")
    if not out:
        raise ConfigurationError("an output directory is required (config 'output' or --out)")
    return Path(out)


def _seed_list(config: dict, args) -> list[int]:
    if args.seed is not None:
        return [int(s) for s in args.seed]
    seeds = config.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) for s in seeds):
        raise ConfigurationError("'seeds' must be a non-empty list of integers")
    return seeds


def _training_section(section, seed_override=None) -> dict:
    if not isinstance(section, dict):
        raise ConfigurationError("config needs a 'training' mapping")
    _check_keys(section, _TRAIN_KEYS, "training")
    if "steps" not in section:
        raise ConfigurationError("training needs 'steps'")
    resolved = dict(_TRAIN_DEFAULTS)
    resolved.update(section)
    if seed_override:
        resolved["seed"] = seed_override[0]
    if not isinstance(resolved["steps"], int) or resolved["steps"] < 1:
        raise ConfigurationError("training 'steps' must be a positive integer")
    if not isinstance(resolved["checkpoints"], list):
        raise ConfigurationError("training 'checkpoints' must be a list of step counts")
    if resolved["select"] not in ("final", "earliest_success"):
        raise ConfigurationError("training 'select' must be 'final' or 'earliest_success'")
    if resolved["select"] == "earliest_success" and not resolved["checkpoints"]:
        raise ConfigurationError("'earliest_success' needs a non-empty 'checkpoints' list")
    return resolved


def _train(env_spec: GridSpec, training: dict):
    try:
        return train_q_learning(
            env_spec,
            training["steps"],
            alpha=training["alpha"],
            gamma=training["gamma"],
            epsilon_start=training["epsilon_start"],
            epsilon_end=training["epsilon_end"],
            epsilon_decay_fraction=training["epsilon_decay_fraction"],
            temperature=training["temperature"],
            seed=training["seed"],
            checkpoint_steps=tuple(training["checkpoints"]),
        )
    except ContractViolationError as exc:
        raise ConfigurationError(f"invalid training parameters: {exc}") from exc


def _resolve_policy(section, env_spec: EnvSpec, base_dir: Path) -> tuple[Policy, dict]:
    """Build the fixed policy under analysis and a snapshot for config.json."""
    if isinstance(section, str):
        section = {"path": section}
    if not isinstance(section, dict) or len(section) != 1:
        raise ConfigurationError(
            "config needs a 'policy': a file path, or one of "
            "{path: ...}, {train: {...}}, {gaussian_controller: {...}}"
        )
    key, value = next(iter(section.items()))
    if key == "path":
        path = Path(value)
        if not path.is_absolute():
            path = base_dir / path
        policy = load_policy(path)
        _check_policy_matches(policy, env_spec)
        return policy, {"path": str(path)}
    if key == "train":
        if not isinstance(env_spec, GridSpec):
            raise ConfigurationError("an inline 'train' policy needs a grid environment")
        training = _training_section(value)
        result = _train(env_spec, training)
        policy, selected = _select_policy(result, training, env_spec)
        snapshot = dict(training)
        snapshot["selected_step"] = selected
        return policy, {"train": snapshot}
    if key == "gaussian_controller":
        if not isinstance(env_spec, ReachSpec):
            raise ConfigurationError("'gaussian_controller' needs the PointReach environment")
        if not isinstance(value, dict):
            raise ConfigurationError("'gaussian_controller' must be a mapping")
        _check_keys(value, _CONTROLLER_KEYS, "gaussian_controller")
        kwargs = {"step_size": env_spec.step_size}
        kwargs.update(value)
        try:
            policy = GaussianControllerPolicy(**kwargs)
        except ContractViolationError as exc:
            raise ConfigurationError(f"invalid controller parameters: {exc}") from exc
        return policy, {"gaussian_controller": dict(kwargs)}
    raise ConfigurationError(f"unknown policy kind {key!r}")


def _select_policy(result, training: dict, env_spec: GridSpec):
    """Apply the training 'select' rule; returns (policy, selected step)."""
    if training["select"] == "final":
        return result.policy, training["steps"]
    for step in sorted(result.checkpoints):
        candidate = result.checkpoints[step]
        sanity = rollout.generate(env_spec, candidate, env_spec.canonical_start)
        if sanity.outcome == rollout.OUTCOME_REACHED:
            return candidate, step
    raise ConfigurationError(
        "no checkpoint policy reaches the target from the canonical start; "
        "train longer or add later checkpoints"
    )


def _check_policy_matches(policy: Policy, env_spec: EnvSpec) -> None:
    if isinstance(env_spec, GridSpec) and not isinstance(policy, TabularPolicy):
        raise ConfigurationError("grid environments need a tabular policy")
    if isinstance(env_spec, ReachSpec) and not isinstance(policy, GaussianControllerPolicy):
        raise ConfigurationError("the reach environment needs a gaussian_controller policy")
    if isinstance(env_spec, GridSpec) and isinstance(policy, TabularPolicy):
        height, width, _ = policy.q_values.shape
        if (height, width) != (env_spec.height, env_spec.width):
            raise ConfigurationError(
                f"policy table is {height}x{width} but the grid is "
                f"{env_spec.height}x{env_spec.width}"
            )


def _evolution_config(config: dict, env_spec: EnvSpec, seed: int) -> EvolutionConfig:
    section = config.get("evolution", {}) or {}
    if not isinstance(section, dict):
        raise ConfigurationError("'evolution' must be a mapping")
    _check_keys(section, _EVOLUTION_KEYS, "evolution")
    encoding_section = config.get("encoding", {}) or {}
    if not isinstance(encoding_section, dict):
        raise ConfigurationError("'encoding' must be a mapping")
    _check_keys(encoding_section, {"bits_per_dimension"}, "encoding")

    continuous = isinstance(env_spec, ReachSpec)
    values = {
        "population_size": 30 if continuous else 10,
        "generations": 1000 if continuous else 40,
        "crossover_probability": 0.75,
        "mutation_probability": 0.5,
        "tournament_size": 3,
        "bits_per_dimension": 9 if continuous else 6,
        "seed": seed,
    }
    values.update(section)
    if "bits_per_dimension" in encoding_section:
        values["bits_per_dimension"] = encoding_section["bits_per_dimension"]
    return EvolutionConfig(**values)


def _config_snapshot(env_name, policy_snapshot, evo_config, seeds, out, mode) -> dict:
    return {
        "environment": env_name,
        "policy": policy_snapshot,
        "evolution": {
            "population_size": evo_config.population_size,
            "generations": evo_config.generations,
            "crossover_probability": evo_config.crossover_probability,
            "mutation_probability": evo_config.mutation_probability,
            "tournament_size": evo_config.tournament_size,
        },
        "encoding": {"bits_per_dimension": evo_config.bits_per_dimension},
        "seed": evo_config.seed,
        "seeds": list(seeds),
        "output": str(out),
        "mode": mode,
    }


def _sweep_cells(grid: dict) -> list[dict]:
    """Cartesian product over the sweep axes.

    A key may name several comma-separated parameters whose values are given
    as tuples, e.g. ``crossover_probability,mutation_probability: [[0.9, 0.25], ...]``.
    """
    if not grid:
        return []
    axes: list[list[dict]] = []
    for key, values in grid.items():
        names = [part.strip() for part in str(key).split(",")]
        unknown = set(names) - _SWEEPABLE_KEYS
        if unknown:
            raise ConfigurationError(
                f"cannot sweep over {sorted(unknown)}; sweepable: {sorted(_SWEEPABLE_KEYS)}"
            )
        if not isinstance(values, list) or not values:
            raise ConfigurationError(f"sweep axis {key!r} needs a non-empty value list")
        points = []
        for value in values:
            if len(names) == 1:
                points.append({names[0]: value})
            else:
                if not isinstance(value, list) or len(value) != len(names):
                    raise ConfigurationError(
                        f"sweep axis {key!r} needs {len(names)}-element value tuples"
                    )
                points.append(dict(zip(names, value)))
        axes.append(points)
    return [
        {name: value for point in combo for name, value in point.items()}
        for combo in itertools.product(*axes)
    ]


def _cell_value(value) -> str:
    return repr(float(value)) if isinstance(value, float) else str(value)


if __name__ == "__main__":
    raise SystemExit(main())
