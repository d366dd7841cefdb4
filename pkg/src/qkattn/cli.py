"""Command-line surface: train | qksas | noise-sweep | gradcheck.

Every command is a deterministic function of its config file, seed, and
input files.  Configs are JSON with strict key validation.  Outputs go
to the --out directory, are written atomically (temp file then rename),
and are always accompanied by the fully resolved config for provenance.
Errors exit nonzero with a one-line diagnostic and leave no partial
output files behind.

The environment variable QKATTN_THREADS caps process-level parallelism
(currently used by the noise sweep); QKATTN_SHIFT_OVERRIDE replaces the
parameter-shift constant, which exists so the gradient checker's failure
path can be exercised deliberately.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import tempfile

import numpy as np

from .ansatz import ParamSet
from .data import Split, load_idx, make_split, prepare_image_features, synthetic_dataset
from .model import VARIANTS, ModelConfig, QksasRecord, qksas
from .sim import NoiseChannel
from .train import RunRecord, TrainConfig, gradient_check, train_loop

_MODEL_KEYS = {"n", "encoder", "ansatz", "link_mode", "execution", "shots"}
_TRAIN_KEYS = {"learning_rate", "momentum", "batch_size", "steps",
               "gradient_method", "fd_step", "surrogate"}
_DATA_KEYS = {"source", "kind", "count", "d", "images", "labels",
              "classes", "per_class_total", "per_class_train", "pca_d"}
_TOP_KEYS = {"seed", "variant", "model", "train", "data"}

_DEFAULT_DATA = {"source": "synthetic", "kind": "two-gaussians", "count": 80, "d": 4}


class CliError(Exception):
    pass


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise CliError(f"unknown config key(s) in {where}: {', '.join(unknown)}")


def load_config(path: str, seed_override: int | None = None,
                variant_override: str | None = None) -> dict:
    """Read, validate, and resolve a JSON run config."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise CliError("config root must be a JSON object")
    _check_keys(raw, _TOP_KEYS, "config root")
    for section, keys in (("model", _MODEL_KEYS), ("train", _TRAIN_KEYS),
                          ("data", _DATA_KEYS)):
        sub = raw.get(section, {})
        if not isinstance(sub, dict):
            raise CliError(f"config section {section!r} must be an object")
        _check_keys(sub, keys, f"section {section!r}")

    resolved = {
        "seed": int(raw.get("seed", 0)),
        "model": dict(raw.get("model", {})),
        "train": dict(raw.get("train", {})),
        "data": {**_DEFAULT_DATA, **raw.get("data", {})},
    }
    variant = variant_override or raw.get("variant")
    if variant is not None:
        if variant not in VARIANTS:
            raise CliError(f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}")
        probe = ModelConfig.from_variant(variant)
        resolved["model"]["encoder"] = probe.encoder
        resolved["model"]["ansatz"] = probe.ansatz
    if seed_override is not None:
        resolved["seed"] = int(seed_override)
    return resolved


def model_config_from(resolved: dict, **overrides) -> ModelConfig:
    try:
        return ModelConfig(**{**resolved["model"], **overrides})
    except (ValueError, TypeError) as exc:
        raise CliError(f"invalid model config: {exc}") from exc


def train_config_from(resolved: dict) -> TrainConfig:
    try:
        return TrainConfig(seed=resolved["seed"], **resolved["train"])
    except (ValueError, TypeError) as exc:
        raise CliError(f"invalid train config: {exc}") from exc


def load_dataset(resolved: dict, encoder: str) -> Split:
    spec = resolved["data"]
    if spec["source"] == "synthetic":
        split = synthetic_dataset(spec["kind"], int(spec["count"]), int(spec["d"]),
                                  resolved["seed"])
        if encoder == "angle":
            from .data import scale_features
            split.train_x, split.test_x = scale_features(split.train_x, split.test_x)
        return split
    if spec["source"] == "idx":
        for key in ("images", "labels"):
            if key not in spec:
                raise CliError(f"idx data source needs the {key!r} path")
        try:
            images, labels = load_idx(spec["images"], spec["labels"])
        except (OSError, ValueError) as exc:
            raise CliError(f"cannot load idx data: {exc}") from exc
        classes = tuple(spec.get("classes", (0, 1)))
        split = make_split(images, labels, classes,
                           int(spec.get("per_class_total", 550)),
                           int(spec.get("per_class_train", 500)),
                           seed=resolved["seed"])
        return prepare_image_features(split, int(spec.get("pca_d", 4)), encoder)
    raise CliError(f"unknown data source {spec['source']!r}")


# --- atomic output writing -----------------------------------------------

def _write_atomic(path: str, content: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _flush_outputs(out_dir: str, files: dict[str, str]) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for name, content in files.items():
        _write_atomic(os.path.join(out_dir, name), content)


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _metrics_csv(record: RunRecord) -> str:
    lines = ["step,loss,train_acc,test_acc"]
    for step in range(record.steps):
        lines.append(f"{step + 1},{_fmt(record.loss[step])},"
                     f"{_fmt(record.train_acc[step])},{_fmt(record.test_acc[step])}")
    return "\n".join(lines) + "\n"


def _params_json(params: ParamSet) -> str:
    payload = {name: list(map(float, getattr(params, name)))
               for name in ("theta1", "theta2", "theta3", "theta4")}
    return json.dumps(payload, indent=2) + "\n"


def load_params(path: str) -> ParamSet:
    try:
        with open(path) as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read params {path}: {exc}") from exc
    missing = [k for k in ("theta1", "theta2", "theta3", "theta4") if k not in payload]
    if missing:
        raise CliError(f"params file lacks {', '.join(missing)}")
    return ParamSet(**{k: np.asarray(payload[k], dtype=float)
                       for k in ("theta1", "theta2", "theta3", "theta4")})


# --- subcommands ---------------------------------------------------------

def cmd_train(args) -> int:
    resolved = load_config(args.config, args.seed, args.variant)
    mcfg = model_config_from(resolved)
    tcfg = train_config_from(resolved)
    split = load_dataset(resolved, mcfg.encoder)
    record = train_loop(mcfg, split.train_x, split.train_y, tcfg,
                        test_x=split.test_x, test_y=split.test_y)
    summary = {
        "variant": mcfg.variant,
        "parameter_count": mcfg.parameter_count,
        "steps": record.steps,
        "initial": {"loss": record.initial.loss, "train_acc": record.initial.train_acc,
                    "test_acc": record.initial.test_acc},
        "final": {"loss": record.loss[-1] if record.steps else record.initial.loss,
                  "train_acc": record.train_acc[-1] if record.steps else record.initial.train_acc,
                  "test_acc": record.test_acc[-1] if record.steps else record.initial.test_acc},
    }
    _flush_outputs(args.out, {
        "metrics.csv": _metrics_csv(record),
        "params.json": _params_json(record.params),
        "summary.json": json.dumps(summary, indent=2) + "\n",
        "resolved_config.json": json.dumps(resolved, indent=2) + "\n",
    })
    print(f"trained {mcfg.variant} for {record.steps} steps; "
          f"final test accuracy {_fmt(summary['final']['test_acc'])}")
    return 0


def _qksas_csv(records: list[tuple[int, QksasRecord]]) -> tuple[str, str]:
    width = records[0][1].distribution.size
    head = "sample," + ",".join(f"p{k}" for k in range(width))
    rows = [head]
    grid_rows = ["sample,row," + ",".join(f"c{k}" for k in range(records[0][1].grid().shape[1]))]
    for index, rec in records:
        rows.append(f"{index}," + ",".join(_fmt(v) for v in rec.distribution))
        for r, grid_row in enumerate(rec.grid()):
            grid_rows.append(f"{index},{r}," + ",".join(_fmt(v) for v in grid_row))
    return "\n".join(rows) + "\n", "\n".join(grid_rows) + "\n"


def cmd_qksas(args) -> int:
    resolved = load_config(args.config, args.seed, args.variant)
    mcfg = model_config_from(resolved)
    split = load_dataset(resolved, mcfg.encoder)
    if args.params:
        params = load_params(args.params)
    else:
        params = mcfg.random_params(np.random.default_rng(resolved["seed"]))
    try:
        indices = [int(tok) for tok in args.indices.split(",") if tok.strip()]
    except ValueError as exc:
        raise CliError(f"bad sample index list {args.indices!r}") from exc
    if not indices:
        raise CliError("no sample indices given")
    bad = [i for i in indices if not 0 <= i < split.train_x.shape[0]]
    if bad:
        raise CliError(f"sample indices out of range: {bad}")
    records = []
    for i in indices:
        w = split.train_x[i]
        records.append((i, qksas(w, w, params.theta1, params.theta2, mcfg)))
    dist_csv, grid_csv = _qksas_csv(records)
    _flush_outputs(args.out, {
        "qksas.csv": dist_csv,
        "qksas_grid.csv": grid_csv,
        "resolved_config.json": json.dumps(resolved, indent=2) + "\n",
    })
    print(f"wrote attention distributions for {len(records)} samples")
    return 0


def _sweep_job(payload) -> tuple[float, int, float, float, float]:
    resolved, channel, p, seed = payload
    resolved = dict(resolved, seed=seed)
    noise = (NoiseChannel(channel, p),)
    mcfg = model_config_from(resolved, execution="density", noise=noise)
    tcfg = train_config_from(resolved)
    split = load_dataset(resolved, mcfg.encoder)
    record = train_loop(mcfg, split.train_x, split.train_y, tcfg,
                        test_x=split.test_x, test_y=split.test_y)
    final = record.steps - 1
    if record.steps:
        return (p, seed, record.train_acc[final], record.test_acc[final], record.loss[final])
    return (p, seed, record.initial.train_acc, record.initial.test_acc, record.initial.loss)


def thread_budget() -> int:
    value = os.environ.get("QKATTN_THREADS", "1")
    try:
        count = int(value)
    except ValueError as exc:
        raise CliError(f"QKATTN_THREADS must be an integer, got {value!r}") from exc
    if count < 1:
        raise CliError("QKATTN_THREADS must be at least 1")
    return count


def cmd_noise_sweep(args) -> int:
    resolved = load_config(args.config, args.seed, args.variant)
    try:
        probs = [float(tok) for tok in args.probs.split(",") if tok.strip()]
        seeds = [int(tok) for tok in args.seeds.split(",") if tok.strip()]
    except ValueError as exc:
        raise CliError(f"bad probability or seed list: {exc}") from exc
    if not probs or not seeds:
        raise CliError("need at least one probability and one seed")
    if any(not 0.0 <= p <= 1.0 for p in probs):
        raise CliError("channel probabilities must lie in [0, 1]")
    if args.channel not in ("bit-flip", "amplitude-damping"):
        raise CliError(f"unknown channel {args.channel!r}")

    jobs = [(resolved, args.channel, p, s) for p in probs for s in seeds]
    workers = min(thread_budget(), len(jobs))
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_job, jobs))
    else:
        rows = [_sweep_job(job) for job in jobs]

    lines = ["p,seed,train_acc,test_acc,loss"]
    for p, seed, train_acc, test_acc, loss_v in rows:
        lines.append(f"{_fmt(p)},{seed},{_fmt(train_acc)},{_fmt(test_acc)},{_fmt(loss_v)}")
    _flush_outputs(args.out, {
        "sweep.csv": "\n".join(lines) + "\n",
        "resolved_config.json": json.dumps(
            {**resolved, "channel": args.channel, "probs": probs, "seeds": seeds},
            indent=2) + "\n",
    })
    print(f"swept {args.channel} over {len(probs)} probabilities x {len(seeds)} seeds")
    return 0


def cmd_gradcheck(args) -> int:
    resolved = load_config(args.config, args.seed, args.variant)
    if args.trials < 1:
        raise CliError("trials must be at least 1")
    mcfg = model_config_from(resolved, execution="analytic", noise=())
    shift = np.pi / 2
    override = os.environ.get("QKATTN_SHIFT_OVERRIDE")
    if override is not None:
        try:
            shift = float(override)
        except ValueError as exc:
            raise CliError(f"QKATTN_SHIFT_OVERRIDE must be a float, got {override!r}") from exc
    report = gradient_check(mcfg, args.trials, resolved["seed"], shift=shift)
    _flush_outputs(args.out, {
        "gradcheck.json": json.dumps(report, indent=2) + "\n",
        "resolved_config.json": json.dumps(resolved, indent=2) + "\n",
    })
    if report["worst_rel_error"] >= 1e-4:
        print(f"gradient check FAILED: slot {report['worst_slot']} relative error "
              f"{_fmt(report['worst_rel_error'])} >= 1e-4", file=sys.stderr)
        return 1
    print(f"gradient check passed: worst relative error "
          f"{_fmt(report['worst_rel_error'])} (slot {report['worst_slot']})")
    return 0


# --- entry point ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkattn",
                                     description="quantum kernel self-attention classifiers")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON run config")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--variant", choices=VARIANTS, default=None,
                       help="override encoder/ansatz via a variant name")

    p = sub.add_parser("train", help="run the training loop")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("qksas", help="export attention score distributions")
    common(p)
    p.add_argument("--params", default=None, help="params.json from a training run")
    p.add_argument("--indices", default="0", help="comma-separated train sample indices")
    p.set_defaults(func=cmd_qksas)

    p = sub.add_parser("noise-sweep", help="density-mode training across channel strengths")
    common(p)
    p.add_argument("--channel", required=True, help="bit-flip or amplitude-damping")
    p.add_argument("--probs", default="0,0.1,0.3,0.5", help="comma-separated probabilities")
    p.add_argument("--seeds", default="0,1,2", help="comma-separated seeds")
    p.set_defaults(func=cmd_noise_sweep)

    p = sub.add_parser("gradcheck", help="parameter-shift vs finite-difference check")
    common(p)
    p.add_argument("--trials", type=int, default=50, help="random configurations to test")
    p.set_defaults(func=cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
