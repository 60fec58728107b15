"""Experiment command line: training runs, fidelity sweeps, gate inspection.

Every run resolves its configuration from built-in defaults, an optional
JSON config file, and command-line flags (highest precedence), echoes the
resolved configuration into ``run.json`` next to the result CSVs, and is
byte-reproducible from that echo.  Exit codes: 0 success, 2 configuration
error, 3 numerical failure, 4 failed check.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from . import gates as _gates
from .circuit import CircuitSpec, forward_batch, init_parameters, table_to_doc
from .errors import ChiralNetError, ConfigError, DegenerateParametersError
from .learning import (
    Dataset,
    TrainConfig,
    classification_sets,
    classify_metric,
    cost,
    cost_gradient,
    regression_grid,
    regression_targets,
    train,
)

OUT_ENV_VAR = "CHIRALNET_OUT"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CHECK_FAILED = 4

_TRAIN_COMMON = {
    "Q": 4,
    "L": 4,
    "N": 3,
    "L_prime": 8,
    "control_phase": True,
    "train_part_one_omega": True,
    "learning_rate": 0.05,
    "epochs": 500,
    "shift": math.pi / 2,
    "gradient_space": "physical",
    "cost_threshold": None,
    "seed": 1,
    "data_seed": 1,
    "out_dir": None,
}

REGRESSION_DEFAULTS = {
    **_TRAIN_COMMON,
    "task": "sin2pi",
    "n_points": 21,
    "output_scale": 2.0,
    "output_offset": -0.5,
}

CLASSIFY_DEFAULTS = {
    **_TRAIN_COMMON,
    "N": 6,
    "task": "circle",
    "n_points": 200,
    "output_scale": 1.0,
    "output_offset": 0.0,
    "boundary_resolution": 41,
}

FIDELITY_DEFAULTS = {
    "gammas": [0.0, 0.005, 0.01, 0.02, 0.05, 0.1],
    "chirality_ratios": [0.0, 0.005, 1.0 / 60.0, 0.05, 0.1],
    "omega": 2.0,
    "delta_k": 1.0,
    "delta_laser": 0.0,
    "delta_target": 0.0,
    "out_dir": None,
}

GRADCHECK_DEFAULTS = {
    "Q": 4,
    "L": 4,
    "N": 3,
    "L_prime": 8,
    "control_phase": True,
    "train_part_one_omega": True,
    "task": "sin2pi",
    "n_points": 3,
    "output_scale": 2.0,
    "output_offset": -0.5,
    "shift": math.pi / 2,
    "fd_step": 1e-5,
    "tolerance": 1e-5,
    "seed": 1,
    "data_seed": 1,
}


def _resolve_config(defaults: dict, config_path, overrides: dict) -> dict:
    cfg = dict(defaults)
    if config_path:
        try:
            with open(config_path) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key, value in overrides.items():
        if value is not None:
            cfg[key] = value
    return cfg


def _out_dir(cfg: dict, command: str) -> str:
    if cfg.get("out_dir"):
        return cfg["out_dir"]
    base = os.environ.get(OUT_ENV_VAR, "runs")
    return os.path.join(base, command)


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_csv(path: str, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(
            ",".join(repr(float(v)) if isinstance(v, float) else str(v) for v in row)
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def _write_json(path: str, doc: dict) -> None:
    _atomic_write(path, json.dumps(doc, indent=2) + "\n")


def _train_config(cfg: dict) -> TrainConfig:
    return TrainConfig(
        learning_rate=float(cfg["learning_rate"]),
        epochs=int(cfg["epochs"]),
        shift=float(cfg["shift"]),
        seed=int(cfg["seed"]),
        gradient_space=str(cfg["gradient_space"]),
        output_scale=float(cfg["output_scale"]),
        output_offset=float(cfg["output_offset"]),
        cost_threshold=cfg["cost_threshold"],
    )


def _circuit_spec(cfg: dict) -> CircuitSpec:
    return CircuitSpec(
        Q=int(cfg["Q"]),
        L=int(cfg["L"]),
        N=int(cfg["N"]),
        L_prime=int(cfg["L_prime"]),
        control_phase=bool(cfg["control_phase"]),
    )


def _run_doc(command: str, cfg: dict, run, table, extra_metrics=None) -> dict:
    metrics = dict(run.metrics)
    if extra_metrics:
        metrics.update(extra_metrics)
    if run.config.gradient_space == "angle":
        # angle-space runs keep the physical table at its initial draws and
        # carry the learned gate angles separately
        parameters = table_to_doc(table)
        parameters["angle_theta"] = [
            {
                "address": {
                    "part": k.address.part,
                    "qubit": k.address.qubit,
                    "slot": k.address.slot,
                    "layer": k.address.layer,
                    "kind": k.address.kind,
                },
                "param_name": k.name,
                "value": float(v),
            }
            for k, v in zip(run.theta_keys, run.theta)
        ]
    else:
        parameters = table_to_doc(table, run.theta)
    return {
        "command": command,
        "version": __version__,
        "config": cfg,
        "seeds": {"parameters": cfg["seed"], "data": cfg.get("data_seed")},
        "cost_history": [float(c) for c in run.cost_history],
        "metrics": metrics,
        "stopped_early": run.stopped_early,
        "wall_time_s": run.wall_time_s,
        "parameters": parameters,
    }


def cmd_train_regression(cfg: dict) -> int:
    spec = _circuit_spec(cfg)
    grid = regression_grid(int(cfg["n_points"]))
    dataset = regression_targets(cfg["task"], grid)
    table = init_parameters(spec, int(cfg["seed"]), bool(cfg["train_part_one_omega"]))
    tconf = _train_config(cfg)
    run = train(spec, table, dataset, tconf)

    out = _out_dir(cfg, "train-regression")
    os.makedirs(out, exist_ok=True)
    _write_csv(
        os.path.join(out, "learning_curve.csv"),
        ["epoch", "cost"],
        [(i, float(c)) for i, c in enumerate(run.cost_history)],
    )
    probs = forward_batch(
        spec, table, run.theta, grid, space=tconf.gradient_space
    )
    outputs = tconf.output_scale * probs + tconf.output_offset
    _write_csv(
        os.path.join(out, "fit.csv"),
        ["x", "teacher", "output"],
        [
            (float(x), float(f), float(g))
            for x, f, g in zip(grid, dataset.teachers, outputs)
        ],
    )
    _write_json(os.path.join(out, "run.json"), _run_doc("train-regression", cfg, run, table))
    print(
        f"train-regression task={cfg['task']} seed={cfg['seed']}: "
        f"final cost {run.cost_history[-1]:.6g}, mse {run.metrics['mse']:.6g} -> {out}"
    )
    return EXIT_OK


def cmd_train_classify(cfg: dict) -> int:
    spec = _circuit_spec(cfg)
    dataset = classification_sets(cfg["task"], int(cfg["n_points"]), int(cfg["data_seed"]))
    table = init_parameters(spec, int(cfg["seed"]), bool(cfg["train_part_one_omega"]))
    tconf = _train_config(cfg)
    run = train(spec, table, dataset, tconf)

    out = _out_dir(cfg, "train-classify")
    os.makedirs(out, exist_ok=True)
    _write_csv(
        os.path.join(out, "learning_curve.csv"),
        ["epoch", "cost"],
        [(i, float(c)) for i, c in enumerate(run.cost_history)],
    )
    res = int(cfg["boundary_resolution"])
    axis = np.linspace(-1.0, 1.0, res)
    grid = np.array([(x1, x2) for x1 in axis for x2 in axis])
    boundary_p = forward_batch(spec, table, run.theta, grid, space=tconf.gradient_space)
    boundary_g = tconf.output_scale * boundary_p + tconf.output_offset
    _write_csv(
        os.path.join(out, "boundary.csv"),
        ["x1", "x2", "output"],
        [(float(p[0]), float(p[1]), float(g)) for p, g in zip(grid, boundary_g)],
    )
    point_p = forward_batch(spec, table, run.theta, dataset.inputs, space=tconf.gradient_space)
    point_g = tconf.output_scale * point_p + tconf.output_offset
    predicted = (point_g >= 0.5).astype(int)
    _write_csv(
        os.path.join(out, "points.csv"),
        ["x1", "x2", "label", "predicted"],
        [
            (float(p[0]), float(p[1]), int(t), int(pr))
            for p, t, pr in zip(dataset.inputs, dataset.teachers, predicted)
        ],
    )
    accuracy = classify_metric(point_g, dataset.teachers)
    _write_json(
        os.path.join(out, "run.json"),
        _run_doc("train-classify", cfg, run, table, {"accuracy": accuracy}),
    )
    print(
        f"train-classify task={cfg['task']} seed={cfg['seed']}: "
        f"final cost {run.cost_history[-1]:.6g}, accuracy {accuracy:.3f} -> {out}"
    )
    return EXIT_OK


def cmd_fidelity_sweep(cfg: dict) -> int:
    params = _gates.RotationGateParams(
        coupling=1.0,
        omega=float(cfg["omega"]),
        delta_k=float(cfg["delta_k"]),
        delta_laser=float(cfg["delta_laser"]),
    )
    rows = []
    for ratio in cfg["chirality_ratios"]:
        ratio = float(ratio)
        if not 0 <= ratio < 1:
            raise ConfigError("chirality ratios must lie in [0, 1)")
        gamma_left = ratio / (1.0 - ratio)
        for gamma in cfg["gammas"]:
            gamma = float(gamma)
            rows.append(
                (
                    gamma,
                    ratio,
                    "rotation",
                    float(_gates.rotation_gate_fidelity(params, gamma_left, gamma)),
                )
            )
            rows.append(
                (
                    gamma,
                    ratio,
                    "controlled",
                    float(
                        _gates.controlled_gate_fidelity(
                            gamma_left, gamma, 1.0, float(cfg["delta_target"])
                        )
                    ),
                )
            )
    out = _out_dir(cfg, "fidelity-sweep")
    os.makedirs(out, exist_ok=True)
    _write_csv(
        os.path.join(out, "fidelity.csv"),
        ["gamma", "chirality_ratio", "gate_kind", "fidelity"],
        rows,
    )
    _write_json(
        os.path.join(out, "run.json"),
        {"command": "fidelity-sweep", "version": __version__, "config": cfg},
    )
    print(f"fidelity-sweep: {len(rows)} rows -> {out}")
    return EXIT_OK


def _complex_matrix_doc(matrix: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in matrix]


def cmd_gate_inspect(args) -> int:
    doc: dict = {"gate": args.gate}
    if args.gate == "controlled":
        gate = _gates.controlled_gate(
            _gates.ControlledGateParams(args.delta_target, not args.no_control_phase)
        )
        doc["params"] = {
            "delta_target": args.delta_target,
            "include_control_phase": not args.no_control_phase,
        }
    else:
        cls = _gates.RotationGateParams if args.gate == "rotation" else _gates.PhaseGateParams
        params = cls(args.coupling, args.omega, args.delta_k, args.delta_laser)
        doc["params"] = {
            "coupling": args.coupling,
            "omega": args.omega,
            "delta_k": args.delta_k,
            "delta_laser": args.delta_laser,
        }
        if args.gate == "rotation":
            gate = _gates.rotation_gate(params)
            doc["theta"] = _gates.angle_of_rotation(params)
            grads = _gates.dtheta_dparams(params)
        else:
            gate = _gates.phase_gate(params)
            doc["phi"] = _gates.angle_of_phase(params)
            grads = _gates.dphi_dparams(params)
        doc["angle_gradients"] = {"omega": grads[0], "delta_laser": grads[1]}
        if args.finite_diff:
            doc["angle_gradients_finite_diff"] = _finite_diff_angles(args.gate, params)
    doc["matrix"] = _complex_matrix_doc(gate.matrix)
    doc["unitary"] = gate.unitary
    gram = gate.matrix.conj().T @ gate.matrix
    doc["unitarity_residual"] = float(
        np.max(np.abs(gram - np.eye(gate.matrix.shape[0])))
    )
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def _finite_diff_angles(kind: str, params) -> dict:
    angle_fn = _gates.angle_of_rotation if kind == "rotation" else _gates.angle_of_phase
    cls = type(params)
    h = 1e-6
    out = {}
    for name in ("omega", "delta_laser"):
        fields = {
            "coupling": params.coupling,
            "omega": params.omega,
            "delta_k": params.delta_k,
            "delta_laser": params.delta_laser,
        }
        hi, lo = dict(fields), dict(fields)
        hi[name] += h
        lo[name] -= h
        out[name] = (angle_fn(cls(**hi)) - angle_fn(cls(**lo))) / (2 * h)
    return out


def cmd_grad_check(cfg: dict, corrupt_sign: bool = False) -> int:
    spec = _circuit_spec(cfg)
    table = init_parameters(spec, int(cfg["seed"]), bool(cfg["train_part_one_omega"]))
    grid = regression_grid(int(cfg["n_points"]))
    dataset = regression_targets(cfg["task"], grid)
    tconf = TrainConfig(
        shift=float(cfg["shift"]),
        output_scale=float(cfg["output_scale"]),
        output_offset=float(cfg["output_offset"]),
    )
    theta = table.theta0.copy()
    start = time.perf_counter()
    analytic = cost_gradient(theta, dataset, spec, table, tconf)
    if corrupt_sign:
        analytic = -analytic
    h = float(cfg["fd_step"])
    fd = np.zeros_like(analytic)
    for i in range(len(theta)):
        up, dn = theta.copy(), theta.copy()
        up[i] += h
        dn[i] -= h
        fd[i] = (
            cost(up, dataset, spec, table, tconf.output_scale, tconf.output_offset)
            - cost(dn, dataset, spec, table, tconf.output_scale, tconf.output_offset)
        ) / (2 * h)
    tol = float(cfg["tolerance"])
    allowed = np.maximum(tol, 1e-3 * np.abs(analytic))
    err = np.abs(analytic - fd)
    worst = int(np.argmax(err - allowed))
    ok = bool(np.all(err <= allowed))
    elapsed = time.perf_counter() - start
    print(
        f"grad-check: {len(theta)} coordinates, max |analytic - fd| = {err.max():.3e}, "
        f"worst at {table.theta_keys[worst]} "
        f"(analytic {analytic[worst]:.6e}, fd {fd[worst]:.6e}), {elapsed:.1f}s"
    )
    print("grad-check: PASS" if ok else "grad-check: FAIL")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _add_common_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--out", dest="out_dir", help="output directory")
    p.add_argument("--seed", type=int, help="parameter-initialization seed")
    p.add_argument("--data-seed", type=int, dest="data_seed", help="dataset seed")
    p.add_argument("--task", help="target or dataset name")
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--points", type=int, dest="n_points", help="dataset size")
    p.add_argument("--gradient-space", dest="gradient_space", choices=["physical", "angle"])


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chiralnet",
        description="Train and inspect photonic circuits built from chiral waveguide emitters.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-regression", help="fit a 1-D target function")
    _add_common_train_flags(p)

    p = sub.add_parser("train-classify", help="train a 2-D binary classifier")
    _add_common_train_flags(p)

    p = sub.add_parser("fidelity-sweep", help="gate fidelity vs decay and chirality")
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--out", dest="out_dir", help="output directory")

    p = sub.add_parser("gate-inspect", help="print one gate's matrix and angles as JSON")
    p.add_argument("--gate", choices=["rotation", "phase", "controlled"], default="rotation")
    p.add_argument("--coupling", type=float, default=1.0)
    p.add_argument("--omega", type=float, default=0.0)
    p.add_argument("--delta-k", type=float, dest="delta_k", default=0.0)
    p.add_argument("--delta-laser", type=float, dest="delta_laser", default=0.0)
    p.add_argument("--delta-target", type=float, dest="delta_target", default=0.0)
    p.add_argument("--no-control-phase", action="store_true")
    p.add_argument(
        "--finite-diff",
        action="store_true",
        help="also print finite-difference angle gradients",
    )

    p = sub.add_parser("grad-check", help="compare shift-rule gradients to finite differences")
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--seed", type=int)
    p.add_argument("--points", type=int, dest="n_points")
    p.add_argument("--tolerance", type=float)
    p.add_argument(
        "--corrupt-sign",
        action="store_true",
        help="self-test hook: flip the analytic gradient so the check must fail",
    )
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "train-regression":
            cfg = _resolve_config(
                REGRESSION_DEFAULTS,
                args.config,
                {
                    k: getattr(args, k, None)
                    for k in (
                        "out_dir",
                        "seed",
                        "data_seed",
                        "task",
                        "epochs",
                        "learning_rate",
                        "n_points",
                        "gradient_space",
                    )
                },
            )
            return cmd_train_regression(cfg)
        if args.command == "train-classify":
            cfg = _resolve_config(
                CLASSIFY_DEFAULTS,
                args.config,
                {
                    k: getattr(args, k, None)
                    for k in (
                        "out_dir",
                        "seed",
                        "data_seed",
                        "task",
                        "epochs",
                        "learning_rate",
                        "n_points",
                        "gradient_space",
                    )
                },
            )
            return cmd_train_classify(cfg)
        if args.command == "fidelity-sweep":
            cfg = _resolve_config(
                FIDELITY_DEFAULTS, args.config, {"out_dir": args.out_dir}
            )
            return cmd_fidelity_sweep(cfg)
        if args.command == "gate-inspect":
            return cmd_gate_inspect(args)
        if args.command == "grad-check":
            cfg = _resolve_config(
                GRADCHECK_DEFAULTS,
                args.config,
                {
                    "seed": args.seed,
                    "n_points": args.n_points,
                    "tolerance": args.tolerance,
                },
            )
            return cmd_grad_check(cfg, corrupt_sign=args.corrupt_sign)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateParametersError, ChiralNetError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
