"""Command-line entry point.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
Every subcommand writes its resolved configuration to ``<out>/config.json``
and never writes outside ``--out``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import channels, circuit, clinalg, experiment, kernels, ovkrr, qstates
from .errors import QovkError
from .experiment import ExperimentConfig

log = logging.getLogger("qovk")

SUBCOMMANDS = ("gen-data", "train", "eval", "reproduce-table1", "circuit-verify",
               "kernel-eval", "emit-heatmap")

CIRCUIT_TOL = 1e-10


@dataclass
class ToolConfig:
    """Keys used by individual subcommands on top of :class:`ExperimentConfig`."""

    data: str = ""
    model: str = ""
    state: str = ""
    variant: str = experiment.ENTANGLED_KRAUS_PAULI
    ridge: float = 1e-3
    n_instances: int = 50
    t: int = 1
    s: int = 1


ALIASES = {"noise_λ": "noise_lambda", "lambda": "noise_lambda"}


class UsageError(Exception):
    pass


@dataclass
class Command:
    subcommand: str
    experiment: ExperimentConfig
    tool: ToolConfig
    seed: int
    out_dir: Path
    threads: int
    shots: int | None = None
    quiet: bool = False
    config_path: str | None = None
    overrides: list = field(default_factory=list)

    def resolved(self) -> dict:
        return {"subcommand": self.subcommand, "seed": self.seed, "threads": self.threads,
                "shots": self.shots, "experiment": self.experiment.to_dict(),
                "tool": vars(self.tool).copy()}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file (flat keys)")
    common.add_argument("--seed", type=int, default=None, help="random seed (default: config seed, 0)")
    common.add_argument("--out", default="qovk-out", help="output directory (default: qovk-out)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads for independent trials (default: CPU count)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key; repeatable")
    common.add_argument("--shots", type=int, default=None,
                        help="circuit-verify: also estimate swap-test probabilities from this many shots")
    common.add_argument("--quiet", action="store_true", help="suppress human-readable output")

    parser = _Parser(prog="qovk", description="Quantum operator-valued kernel laboratory")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    helps = {
        "gen-data": "draw a random Pauli channel and a noisy training set",
        "train": "fit a kernel ridge model on a dataset file",
        "eval": "predict the output density matrix for a saved state",
        "reproduce-table1": "run the scalar vs operator-valued channel-recovery comparison",
        "circuit-verify": "check the simulated swap-test circuit against its closed forms",
        "kernel-eval": "evaluate every kernel variant on random states",
        "emit-heatmap": "write Choi-matrix heatmaps for one channel",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _coerce(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _apply(cfg_exp: ExperimentConfig, cfg_tool: ToolConfig, key: str, value):
    key = ALIASES.get(key, key)
    for target in (cfg_exp, cfg_tool):
        names = {f.name: f for f in fields(target)}
        if key in names:
            default = getattr(type(target)(), key)
            try:
                if isinstance(default, bool):
                    value = bool(value)
                elif isinstance(default, int):
                    value = int(value)
                elif isinstance(default, float):
                    value = float(value)
                elif isinstance(default, list):
                    value = list(value) if isinstance(value, (list, tuple)) else [value]
                elif isinstance(default, str):
                    value = str(value)
            except (TypeError, ValueError):
                raise UsageError(f"bad value for {key}: {value!r}") from None
            setattr(target, key, value)
            return
    raise UsageError(f"unknown config key {key!r}")


def parse_args(argv) -> Command:
    parser = build_parser()
    if not argv:
        raise UsageError("missing subcommand; see --help")
    ns = parser.parse_args(argv)
    if ns.subcommand is None:
        raise UsageError("missing subcommand; see --help")
    exp, tool = ExperimentConfig(), ToolConfig()
    if ns.config:
        path = Path(ns.config)
        if not path.is_file():
            raise UsageError(f"config not found: {ns.config}")
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise UsageError("config must be a JSON object")
        for k, v in raw.items():
            _apply(exp, tool, k, v)
    for item in ns.overrides:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        _apply(exp, tool, k.strip(), _coerce(v.strip()))
    if ns.seed is not None:
        exp.seed = ns.seed
    try:
        exp.validate()
    except QovkError as exc:
        raise UsageError(f"invalid config: {exc}") from None
    if tool.ridge <= 0 or tool.n_instances < 1 or tool.t < 1 or tool.s < 1:
        raise UsageError("invalid config: ridge, n_instances, t and s must be positive")
    if tool.variant not in experiment.VARIANTS:
        raise UsageError(f"invalid config: unknown variant {tool.variant!r}")
    if ns.shots is not None and ns.shots < 1:
        raise UsageError("--shots must be >= 1")
    threads = ns.threads if ns.threads is not None else (os.cpu_count() or 1)
    if threads < 1:
        raise UsageError("--threads must be >= 1")
    return Command(ns.subcommand, exp, tool, exp.seed, Path(ns.out), threads, ns.shots,
                   ns.quiet, ns.config, list(ns.overrides))


# -- subcommand implementations ------------------------------------------------


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _say(cmd: Command, text: str) -> None:
    if not cmd.quiet:
        print(text)


def _read_json(path: str, what: str) -> dict:
    if not path:
        raise QovkError(f"no {what} file given (set {what}=PATH)")
    p = Path(path)
    if not p.is_file():
        raise QovkError(f"{what} file not found: {path}")
    return json.loads(p.read_text())


def cmd_gen_data(cmd: Command) -> int:
    cfg = cmd.experiment
    rng = np.random.default_rng(cmd.seed)
    ch = channels.random_pauli_channel(cfg.qubit_dim, rng)
    ts = experiment.generate_dataset(cfg, ch, rng)
    doc = {
        "channel": channels.channel_to_json(ch),
        "inputs": [qstates.state_to_json(x) for x in ts.inputs],
        "labels": clinalg.matrix_to_json(ts.labels),
        "noise_lambda": cfg.noise_lambda,
        "seed": cmd.seed,
    }
    _write_json(cmd.out_dir / "dataset.json", doc)
    _say(cmd, f"wrote {ts.n} samples to {cmd.out_dir / 'dataset.json'}")
    return 0


def _load_dataset(path: str):
    doc = _read_json(path, "data")
    ts = ovkrr.TrainingSet([qstates.state_from_json(x) for x in doc["inputs"]],
                           clinalg.matrix_from_json(doc["labels"]))
    return ts, channels.channel_from_json(doc["channel"])


def cmd_train(cmd: Command) -> int:
    ts, ch = _load_dataset(cmd.tool.data)
    a = ts.inputs[0].shape[0]
    b = int(round(np.sqrt(ts.p)))
    rng = np.random.default_rng(cmd.seed)
    kernel = experiment.build_kernel(cmd.tool.variant, a, b, rng)
    model = ovkrr.fit(ts, kernel, cmd.tool.ridge)
    cand = channels.reconstruct_channel(lambda r: ovkrr.predict_matrix(model, r), a)
    err = channels.recovery_error(ch, cand)
    _write_json(cmd.out_dir / "model.json", ovkrr.model_to_json(model))
    _write_json(cmd.out_dir / "train_report.json",
                {"variant": cmd.tool.variant, "ridge": cmd.tool.ridge, "residual": model.residual,
                 "recovery_error": err})
    _say(cmd, f"{cmd.tool.variant}: recovery error {err:.4f} (model in {cmd.out_dir / 'model.json'})")
    return 0


def cmd_eval(cmd: Command) -> int:
    model = ovkrr.model_from_json(_read_json(cmd.tool.model, "model"))
    state = qstates.state_from_json(_read_json(cmd.tool.state, "state"))
    rho = qstates.densities([state])[0]
    pred = ovkrr.predict_matrix(model, rho)
    doc = {"kind": "density", **clinalg.matrix_to_json(pred),
           "is_density": clinalg.is_density(pred, clinalg.Tolerance(1e-6, 1e-6))}
    _write_json(cmd.out_dir / "prediction.json", doc)
    print(json.dumps(doc, sort_keys=True))
    return 0


def cmd_reproduce(cmd: Command) -> int:
    cfg = cmd.experiment
    pooled = experiment.run_experiment(cfg, threads=cmd.threads)
    doc = experiment.write_results(cfg, pooled, cmd.out_dir)
    first = pooled["trials"][0].records[0]
    experiment.emit_heatmaps(first["true_choi"],
                             {v: d["choi"] for v, d in first["variants"].items()}, cmd.out_dir)
    for v in cfg.kernel_variants:
        s = doc[v]
        _say(cmd, f"{v:24s} {s['mean']:.4f} ± {s['std']:.4f}")
    floor = doc["summary"]["noise_floor"]
    _say(cmd, f"{'noise floor':24s} {floor['mean']:.4f} ± {floor['std']:.4f}")
    verdict = doc["summary"].get(experiment.ENTANGLED_KRAUS_PAULI)
    if verdict is None:
        _say(cmd, "ordering check needs scalar_baseline and entangled_kraus_pauli variants")
        return 1
    _say(cmd, f"entangled/scalar ratio {verdict['ratio']:.3f}; strictly lower: {verdict['strictly_lower']}")
    return 0 if verdict["strictly_lower"] else 1


def cmd_circuit_verify(cmd: Command) -> int:
    tool = cmd.tool
    report = circuit.verify_circuit(tool.n_instances, cmd.seed, tool.t, tool.s)
    rng = np.random.default_rng(cmd.seed + 1)
    swap_dev, scalar_dev, shot_dev = 0.0, 0.0, 0.0
    for _ in range(tool.n_instances):
        px = qstates.random_pure_state(2 ** tool.t, rng)
        pz = qstates.random_pure_state(2 ** tool.t, rng)
        st = circuit.swap_test_state(px, pz)
        p0 = circuit.measure_postselect(st, "a", 0).probability
        ov2 = abs(np.vdot(px, pz)) ** 2
        swap_dev = max(swap_dev, abs(p0 - (0.5 + 0.5 * ov2)))
        k = circuit.run_scalar_swap_test(px, pz)
        scalar_dev = max(scalar_dev, abs(k - kernels.scalar_kernel(qstates.to_density(px),
                                                                     qstates.to_density(pz))))
        if cmd.shots:
            freq = circuit.sample_shots(st, "a", cmd.shots, rng)
            shot_dev = max(shot_dev, abs(freq - p0))
    report["max_deviation"]["swap_probability"] = swap_dev
    report["max_deviation"]["scalar_swap_test"] = scalar_dev
    if cmd.shots:
        report["shots"] = {"shots": cmd.shots, "max_abs_frequency_error": shot_dev,
                           "note": "sampling mode; excluded from the pass/fail verdict"}
    report["tolerance"] = CIRCUIT_TOL
    report["passed"] = all(v < CIRCUIT_TOL for v in report["max_deviation"].values())
    _write_json(cmd.out_dir / "circuit_report.json", report)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0 if report["passed"] else 1


def cmd_kernel_eval(cmd: Command) -> int:
    cfg = cmd.experiment
    rng = np.random.default_rng(cmd.seed)
    a = cfg.qubit_dim
    rx, rz = qstates.random_density(a, a, rng), qstates.random_density(a, a, rng)
    data = [qstates.random_density(a, a, rng) for _ in range(cfg.n_train)]
    out = {"scalar_kernel": kernels.scalar_kernel(rx, rz), "variants": {}}
    for v in cfg.kernel_variants:
        k = experiment.build_kernel(v, a, a, rng)
        val = kernels.evaluate(k, rx, rz)
        rep = kernels.validate_psd(kernels.gram(k, data))
        out["variants"][v] = {"value": clinalg.matrix_to_json(val),
                              "gram_min_eigenvalue": rep.min_eigenvalue,
                              "gram_hermitian_deviation": rep.hermitian_deviation,
                              "psd_violation": rep.violation}
    _write_json(cmd.out_dir / "kernel_eval.json", out)
    for v, d in out["variants"].items():
        _say(cmd, f"{v:24s} gram min eig {d['gram_min_eigenvalue']:+.3e}  violation {d['psd_violation']}")
    return 0


def cmd_emit_heatmap(cmd: Command) -> int:
    cfg = ExperimentConfig(**{**cmd.experiment.to_dict(), "n_channels": 1, "n_seeds": 1})
    trial = experiment.run_trial(cfg, cmd.seed)
    rec = trial.records[0]
    files = experiment.emit_heatmaps(rec["true_choi"],
                                     {v: d["choi"] for v, d in rec["variants"].items()}, cmd.out_dir)
    _say(cmd, f"wrote {len(files)} files to {cmd.out_dir}")
    return 0


HANDLERS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "reproduce-table1": cmd_reproduce,
    "circuit-verify": cmd_circuit_verify,
    "kernel-eval": cmd_kernel_eval,
    "emit-heatmap": cmd_emit_heatmap,
}


def run(cmd: Command) -> int:
    cmd.out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(cmd.out_dir / "config.json", cmd.resolved())
    try:
        return HANDLERS[cmd.subcommand](cmd)
    except experiment.TrialError as exc:
        print(f"qovk: error {exc}", file=sys.stderr)
    except (QovkError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"qovk: error [{cmd.subcommand}] {exc}", file=sys.stderr)
    return 1


def _setup_logging(quiet: bool) -> None:
    level = os.environ.get("QOVK_LOG", "error" if quiet else "info").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if argv and argv[0] in ("-h", "--help"):
        build_parser().print_help()
        return 0
    try:
        cmd = parse_args(argv)
    except UsageError as exc:
        print(f"qovk: usage error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help on a subcommand
        return int(exc.code or 0)
    _setup_logging(cmd.quiet)
    return run(cmd)


if __name__ == "__main__":
    sys.exit(main())
