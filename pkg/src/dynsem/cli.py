"""Command-line interface: ``simulate``, ``ingest``, ``track`` and ``eval``.

Every command writes into ``--out DIR`` and finishes by writing
``manifest.json`` there. Errors go to stderr as a single line
``error[CODE]: message`` and the exit status is nonzero.

Options are resolved as flags > ``--config`` file (``key = value`` lines,
keys named like the long flags) > built-in defaults.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from contextlib import nullcontext
from dataclasses import asdict
from importlib import metadata
from pathlib import Path

from . import io as dio
from .core import ConfigError, DynsemError, IntervalObservations, SolverConfig, Susceptibility, validate_dataset
from .ingest import IngestConfig, build_intervals, build_susceptibility, filter_cascades, format_cascade, parse_cascades
from .metrics import DEFAULT_THRESHOLD, metric_trace
from .simulator import BENCHMARK_SEED, SimConfig, simulate
from .solvers import Tracker, track

OBS_DIR = "observations"
X_FILE = "susceptibility.csv"
TRUTH_FILE = "truth.jsonl"
MANIFEST = "manifest.json"


class UsageError(DynsemError):
    code = "E_USAGE"


class InputError(DynsemError):
    code = "E_IO"


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"error[{UsageError.code}]: {message}\n")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (unsigned)")
    p.add_argument("--threads", type=_positive_int, default=None, help="cap on BLAS worker threads")
    p.add_argument("--config", type=Path, default=None, help="key=value file with option defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dynsem", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=_version())
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate a synthetic dynamic network and cascades")
    _common(p)
    p.add_argument("--kron-power", type=_positive_int, default=3)
    p.add_argument("--seed-matrix", type=Path, default=None, help="CSV 0/1 seed graph (default: 4x4 benchmark seed)")
    p.add_argument("--pattern", choices=["bernoulli", "smooth", "nonsmooth"], default="smooth")
    p.add_argument("--p", type=float, default=0.5, help="edge probability for --pattern bernoulli")
    p.add_argument("--T", type=_positive_int, default=1000, help="number of intervals")
    p.add_argument("--C", type=_positive_int, default=80, help="number of cascades")
    p.add_argument("--noise-std", type=float, default=1.0)
    p.add_argument("--x-low", type=float, default=0.0)
    p.add_argument("--x-high", type=float, default=3.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ingest", help="bin raw cascade timestamps into interval matrices")
    _common(p)
    p.add_argument("--input", required=True, type=Path, help="cascade file: id<TAB>node,ts;node,ts;...")
    p.add_argument("--min-sites", type=_positive_int, default=7)
    p.add_argument("--interval-hours", type=float, default=168.0)
    p.add_argument("--max-nodes", type=_positive_int, default=None)
    p.add_argument("--x-mode", choices=["uniform", "from_file"], default="uniform")
    p.add_argument("--x-low", type=float, default=0.0)
    p.add_argument("--x-high", type=float, default=0.01)
    p.add_argument("--x-file", type=Path, default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("track", help="track the topology over all intervals of a dataset")
    _common(p)
    p.add_argument("--data", required=True, type=Path, help="dataset directory from simulate/ingest")
    p.add_argument("--solver", choices=["ista", "fista", "rt-fista", "sgd"], default="fista")
    p.add_argument("--beta", type=float, default=0.98)
    p.add_argument("--lambda", dest="lambda0", type=float, default=25.0)
    p.add_argument("--lambda-schedule", choices=["constant", "sqrt_t"], default="constant")
    p.add_argument("--lambda-scale", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-inner", type=_positive_int, default=100)
    p.add_argument("--eta", type=float, default=None, help="step size (required for --solver sgd)")
    p.add_argument("--sigma0", type=float, default=1.0, help="scale of the identity seeding the Gram average")
    p.add_argument("--checkpoint-every", type=int, default=0, help="write a resumable snapshot every k intervals")
    p.add_argument("--resume", type=Path, default=None, help="checkpoint file to resume from")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="per-interval metrics for an estimate stream")
    _common(p)
    p.add_argument("--estimates", required=True, type=Path)
    p.add_argument("--truth", type=Path, default=None, help="ground-truth snapshots; omit for edge counts only")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.set_defaults(func=cmd_eval)
    return parser


def read_config_file(path: Path) -> dict:
    out = {}
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read config file {path}: {exc.strerror}") from None
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def parse_args(argv=None):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path, default=None)
    early, _ = pre.parse_known_args(argv)
    parser = build_parser()
    if early.config is None:
        return parser.parse_args(argv)
    file_cfg = read_config_file(early.config)
    if "lambda" in file_cfg:
        file_cfg["lambda0"] = file_cfg.pop("lambda")
    subparsers = parser._subparsers._group_actions[0].choices
    seen = set()
    for sub in subparsers.values():
        dests = {a.dest for a in sub._actions}
        mine = {k: v for k, v in file_cfg.items() if k in dests}
        seen |= set(mine)
        for action in sub._actions:
            if action.dest in mine:
                action.required = False
        sub.set_defaults(**mine)
    unknown = sorted(set(file_cfg) - seen)
    if unknown:
        raise ConfigError(f"unknown keys in config file: {', '.join(unknown)}")
    return parser.parse_args(argv)


# -- dataset layout ------------------------------------------------------------


def write_dataset(out: Path, observations, susceptibility) -> list[str]:
    obs_dir = out / OBS_DIR
    obs_dir.mkdir(parents=True, exist_ok=True)
    for old in obs_dir.glob("y_*.csv"):
        old.unlink()
    width = max(4, len(str(len(observations))))
    names = []
    for k, obs in enumerate(observations, start=1):
        name = f"y_{k:0{width}d}.csv"
        dio.write_matrix_csv(obs_dir / name, obs.infection_times)
        names.append(f"{OBS_DIR}/{name}")
    dio.write_matrix_csv(out / X_FILE, susceptibility.values)
    return names + [X_FILE]


def read_dataset(data: Path):
    obs_dir = data / OBS_DIR
    files = sorted(obs_dir.glob("y_*.csv"))
    if not files:
        raise InputError(f"no observation files found in {obs_dir}")
    if not (data / X_FILE).exists():
        raise InputError(f"missing susceptibility file {data / X_FILE}")
    obs = [IntervalObservations(dio.read_matrix_csv(f), t) for t, f in enumerate(files, start=1)]
    return validate_dataset(obs, Susceptibility(dio.read_matrix_csv(data / X_FILE)))


def _write_manifest(out: Path, args, argv, extra: dict, outputs: list[str], started: float) -> None:
    config = {}
    for key, value in sorted(vars(args).items()):
        if key in ("func",):
            continue
        config[key] = str(value) if isinstance(value, Path) else value
    manifest = {
        "command": args.command,
        "argv": list(sys.argv[1:] if argv is None else argv),
        "config": config,
        "seed": args.seed,
        "outputs": sorted(outputs),
        "version": _version(),
        "duration_seconds": round(time.time() - started, 3),
        **extra,
    }
    dio.atomic_write_text(out / MANIFEST, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# -- commands ------------------------------------------------------------------


def cmd_simulate(args) -> dict:
    seed_matrix = BENCHMARK_SEED if args.seed_matrix is None else dio.read_matrix_csv(args.seed_matrix)
    cfg = SimConfig(
        seed_matrix=seed_matrix,
        kron_power=args.kron_power,
        T=args.T,
        C=args.C,
        pattern=args.pattern,
        p=args.p,
        noise_std=args.noise_std,
        x_low=args.x_low,
        x_high=args.x_high,
        rng_seed=args.seed,
    )
    network, x, obs = simulate(cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    outputs = write_dataset(args.out, obs, x)
    dio.write_estimates_jsonl(args.out / TRUTH_FILE, (network.estimate_at(t) for t in range(1, len(network) + 1)))
    outputs.append(TRUTH_FILE)
    return {"outputs": outputs, "extra": {"sim_config": cfg.to_dict(), "n_nodes": cfg.n_nodes}}


def cmd_ingest(args) -> dict:
    try:
        with open(args.input, encoding="utf-8") as fh:
            parsed = parse_cascades(fh)
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read cascade file {args.input}: {exc}") from None
    cfg = IngestConfig(args.min_sites, args.interval_hours, args.max_nodes)
    kept = filter_cascades(parsed.records, cfg.min_sites)
    binned = build_intervals(kept, cfg)
    n, c = len(binned.node_map), len(binned.cascade_ids)
    x = build_susceptibility(n, c, args.x_mode, low=args.x_low, high=args.x_high, seed=args.seed, path=args.x_file)
    args.out.mkdir(parents=True, exist_ok=True)
    outputs = write_dataset(args.out, binned.observations, x)
    dio.write_records_csv(args.out / "node_map.csv", ["index", "id", "mentions"], binned.node_map.rows())
    dio.write_records_csv(args.out / "rejects.csv", ["line", "reason"], parsed.rejects)
    with open(args.out / "cascades_filtered.tsv", "w", encoding="utf-8") as fh:
        for rec in kept:
            fh.write(format_cascade(rec) + "\n")
    outputs += ["node_map.csv", "rejects.csv", "cascades_filtered.tsv"]
    extra = {
        "n_nodes": n,
        "n_cascades": c,
        "n_intervals": len(binned.observations),
        "origin": binned.origin,
        "t_max": binned.t_max,
        "fill_value": binned.fill_value,
        "n_parsed": len(parsed.records),
        "n_rejected_lines": len(parsed.rejects),
    }
    return {"outputs": outputs, "extra": extra}


def _solver_config(args) -> SolverConfig:
    solver = args.solver.replace("-", "_")
    if solver == "sgd" and args.eta is None:
        raise ConfigError("--eta is required with --solver sgd")
    eta = 1e-3 if args.eta is None else args.eta
    if args.checkpoint_every < 0:
        raise ConfigError("--checkpoint-every must be nonnegative")
    return SolverConfig(
        beta=args.beta,
        lambda0=args.lambda0,
        lambda_schedule=args.lambda_schedule,
        lambda_scale=args.lambda_scale,
        solver=solver,
        tol=args.tol,
        max_inner=args.max_inner,
        eta=eta,
        rng_seed=args.seed,
        sigma0=args.sigma0,
    )


def cmd_track(args) -> dict:
    cfg = _solver_config(args)
    dataset = read_dataset(args.data)
    tracker = Tracker(cfg, dataset.susceptibility)
    prior, prior_rows = [], []
    if args.resume is not None:
        if not args.resume.exists():
            raise InputError(f"checkpoint {args.resume} not found")
        tracker.load(args.resume)
        resumed_at = tracker.t
        est_path, diag_path = args.out / "estimates.jsonl", args.out / "diagnostics.csv"
        if est_path.exists():
            prior = [e for e in dio.read_estimates_jsonl(est_path) if e.interval_index <= resumed_at]
        if diag_path.exists():
            with open(diag_path, encoding="utf-8") as fh:
                prior_rows = [r for r in csv.reader(fh)][1:]
            prior_rows = [r for r in prior_rows if int(r[0]) <= resumed_at]
    args.out.mkdir(parents=True, exist_ok=True)
    ckpt_dir = args.out / "checkpoints"
    outputs = ["estimates.jsonl", "diagnostics.csv"]

    def on_step(trk, est, diag):
        if args.checkpoint_every and diag.t % args.checkpoint_every == 0:
            ckpt_dir.mkdir(exist_ok=True)
            name = f"state_t{diag.t:06d}.npz"
            trk.save(ckpt_dir / name)
            outputs.append(f"checkpoints/{name}")

    result = track(dataset, cfg, tracker=tracker, on_step=on_step)
    dio.write_estimates_jsonl(args.out / "estimates.jsonl", prior + result.estimates)
    rows = prior_rows + [(d.t, d.objective, d.inner_iters, d.nnz, d.lipschitz) for d in result.diagnostics]
    dio.write_records_csv(args.out / "diagnostics.csv", ["t", "objective", "inner_iters", "nnz", "lipschitz"], rows)
    return {"outputs": outputs, "extra": {"solver_config": asdict(cfg), "n_intervals": dataset.n_intervals}}


def cmd_eval(args) -> dict:
    if not args.estimates.exists():
        raise InputError(f"estimates file {args.estimates} not found")
    estimates = dio.read_estimates_jsonl(args.estimates)
    truths = None
    if args.truth is not None:
        if not args.truth.exists():
            raise InputError(f"truth file {args.truth} not found")
        truth_by_t = {e.interval_index: e.adjacency for e in dio.iter_estimates_jsonl(args.truth)}
        missing = [e.interval_index for e in estimates if e.interval_index not in truth_by_t]
        if missing:
            raise InputError(f"no ground truth for intervals {missing[:5]}")
        truths = [truth_by_t[e.interval_index] for e in estimates]
    trace = metric_trace(estimates, truths, args.threshold)
    args.out.mkdir(parents=True, exist_ok=True)
    dio.write_records_csv(args.out / "metrics.csv", trace.header, trace.rows())
    return {"outputs": ["metrics.csv"], "extra": {"threshold": args.threshold, "with_truth": truths is not None}}


def _thread_limit(n):
    if n is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    started = time.time()
    try:
        args = parse_args(argv)
        if args.seed < 0:
            raise UsageError("--seed must be unsigned")
        with _thread_limit(args.threads):
            info = args.func(args)
        _write_manifest(args.out, args, argv, info.get("extra", {}), info["outputs"], started)
    except DynsemError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error[{InputError.code}]: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
