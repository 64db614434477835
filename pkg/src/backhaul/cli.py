"""Experiment driver: config loading, trial execution, plot-data output.

Five canned experiments sweep the library's schemes over hop count, SNR,
or stream count and emit one table row per (parameter point, scheme,
policy or receiver kind).  Configs are JSON; every field has a default
per experiment so a minimal config is just {"experiment": "..."}.

Exit codes: 0 success, 2 config error, 3 infeasible routing, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .asymptotic import DenseParams, SparseParams, dense_ladder, sparse_ladder
from .errors import (
    ConfigError,
    InfeasibleRoutingError,
    NumericalError,
    ParameterError,
)
from .network import DenseIIDModel, NetworkParams, build_network
from .rate_core import mr_rate_dense, mr_rate_sparse, policy_from_name
from .receivers import receiver_from_name, receiver_ladder
from .routing import (
    ClusterGrid,
    establish_paths,
    evaluate_routed_network,
    metric_from_name,
    route_dump,
)
from .schedule import build_schedule, dump_schedule

log = logging.getLogger("backhaul")

EXPERIMENTS = (
    "sparse_vs_k",
    "dense_vs_k",
    "receivers_vs_k",
    "routing_vs_snr",
    "routing_vs_l",
)

_DEFAULT_SEED = 0

# per-experiment sweep defaults; anything can be overridden in the config
_DEFAULTS: dict[str, dict] = {
    "sparse_vs_k": {
        "snr": [100.0],
        "k_values": list(range(1, 11)),
        "l_values": [],
        "policies": ["noise_level", "stage_depth", "wyner_ziv", "optimal"],
        "gamma": 10.0 ** -0.25,
        "trials": 1,
    },
    "dense_vs_k": {
        "snr": [100.0],
        "k_values": list(range(1, 11)),
        "l_values": [4],
        "policies": ["noise_level", "stage_depth", "wyner_ziv", "optimal"],
        "trials": 1,
    },
    "receivers_vs_k": {
        "snr": [1000.0],
        "k_values": [1, 2, 3, 4, 5, 6],
        "l_values": [4],
        "receivers": ["zf", "mmse", "if", "ml_quantized"],
        "trials": 100,
    },
    "routing_vs_snr": {
        "snr": [10.0, 100.0, 1000.0],
        "k_values": [3],
        "l_values": [4],
        "policies": ["wyner_ziv"],
        "trials": 100,
    },
    "routing_vs_l": {
        "snr": [100.0],
        "k_values": [3],
        "l_values": [2, 4, 6],
        "policies": ["wyner_ziv"],
        "trials": 100,
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    snr: tuple = ()
    k_values: tuple = ()
    l_values: tuple = ()
    policies: tuple = ()
    receivers: tuple = ()
    gamma: float = 10.0 ** -0.25
    n_c: int | None = None  # routing cluster size; defaults to L
    metric: str = "mimo_capacity"
    include_baseline: bool = True
    trials: int = 1
    seed: int = _DEFAULT_SEED
    output: str | None = None
    format: str = "csv"

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(
                f"field experiment: unknown value {self.experiment!r}; "
                f"expected one of {', '.join(EXPERIMENTS)}"
            )
        if self.trials < 1:
            raise ConfigError(f"field trials: must be >= 1, got {self.trials}")
        if not self.snr:
            raise ConfigError("field snr: empty sweep")
        if not self.k_values:
            raise ConfigError("field k_values: empty sweep")
        if any(s <= 0 or not math.isfinite(s) for s in self.snr):
            raise ConfigError(f"field snr: values must be positive, got {self.snr}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"field seed: must fit in 64 bits, got {self.seed}")
        if self.format not in ("csv", "gnuplot-dat"):
            raise ConfigError(f"field format: unknown value {self.format!r}")
        # resolve names early so typos fail before any work is done
        for p in self.policies:
            try:
                policy_from_name(p)
            except ParameterError as e:
                raise ConfigError(f"field policies: {e}") from None
        for r in self.receivers:
            try:
                receiver_from_name(r)
            except ParameterError as e:
                raise ConfigError(f"field receivers: {e}") from None
        try:
            metric_from_name(self.metric)
        except ParameterError as e:
            raise ConfigError(f"field metric: {e}") from None


_CONFIG_KEYS = {
    "experiment",
    "snr",
    "k_values",
    "l_values",
    "policies",
    "receivers",
    "gamma",
    "n_c",
    "metric",
    "include_baseline",
    "trials",
    "seed",
    "output",
    "format",
}


def load_config(path: str) -> ExperimentConfig:
    """Parse a JSON config file, applying per-experiment defaults."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    if "experiment" not in raw:
        raise ConfigError("field experiment: missing")
    exp = raw["experiment"]
    if exp not in EXPERIMENTS:
        raise ConfigError(
            f"field experiment: unknown value {exp!r}; "
            f"expected one of {', '.join(EXPERIMENTS)}"
        )
    merged = dict(_DEFAULTS[exp])
    merged.update(raw)
    for key in ("snr", "k_values", "l_values", "policies", "receivers"):
        if key in merged:
            val = merged[key]
            if not isinstance(val, (list, tuple)):
                raise ConfigError(f"field {key}: expected a list, got {type(val).__name__}")
            merged[key] = tuple(val)
    merged.setdefault("receivers", ())
    merged.setdefault("policies", ())
    try:
        return ExperimentConfig(**merged)
    except TypeError as e:
        raise ConfigError(f"bad config: {e}") from None


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    snr: float
    L: int
    K: int
    scheme: str
    policy_or_kind: str
    mean_rate: float
    stderr: float
    trials: int
    seed: int


def _trial_seed(base: int, combo: int, t: int) -> int:
    ss = np.random.SeedSequence(base, spawn_key=(combo, t))
    return int(ss.generate_state(1, np.uint64)[0])


def _receiver_trial(args) -> tuple:
    key, L, K, snr, kind_name, seed = args
    params = NetworkParams(L=L, K=K, snr=snr, model=DenseIIDModel())
    net = build_network(params, seed)
    ladder = receiver_ladder(net, receiver_from_name(kind_name))
    return key, ladder.r0


def _routing_trial(args) -> tuple:
    key, L, K, n_c, snr, metric_name, scheme, policy_name, seed = args
    grid = ClusterGrid(K=K, L=L, n_c=n_c, snr=snr, seed=seed)
    state = establish_paths(grid, metric_from_name(metric_name))
    if scheme == "optimized_qmf":
        rate = evaluate_routed_network(
            state, grid, scheme, policy_from_name(policy_name)
        )
    else:
        rate = evaluate_routed_network(state, grid, scheme)
    return key, rate


def _aggregate(values: list) -> tuple:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if arr.size > 1:
        err = float(arr.std(ddof=1) / math.sqrt(arr.size))
    else:
        err = 0.0
    return mean, err


def _run_tasks(worker, tasks: list, jobs: int) -> dict:
    """Run trial tasks, collecting values per key; order-independent."""
    results: dict = {}
    if jobs <= 1:
        outs = map(worker, tasks)
    else:
        pool = ProcessPoolExecutor(max_workers=jobs)
        try:
            outs = list(pool.map(worker, tasks, chunksize=8))
        finally:
            pool.shutdown()
    for key, value in outs:
        results.setdefault(key, []).append(value)
    return results


def _asymptotic_rows(cfg: ExperimentConfig) -> list:
    rows = []
    sparse = cfg.experiment == "sparse_vs_k"
    snr = cfg.snr[0]
    for name in cfg.policies:
        policy = policy_from_name(name)
        for K in cfg.k_values:
            if sparse:
                r0 = sparse_ladder(SparseParams(snr, cfg.gamma, K, policy)).r0
                L_col = 0
            else:
                r0 = dense_ladder(DenseParams(snr, K, policy)).r0
                L_col = 0
            rows.append(
                ResultRow(
                    cfg.experiment, snr, L_col, K, "optimized_qmf", name,
                    r0, 0.0, 1, cfg.seed,
                )
            )
    if cfg.include_baseline:
        for K in cfg.k_values:
            if sparse:
                base = mr_rate_sparse(snr, cfg.gamma)
                L_col = 0
            else:
                L_col = cfg.l_values[0] if cfg.l_values else 4
                base = mr_rate_dense(snr, L_col)
            rows.append(
                ResultRow(
                    cfg.experiment, snr, L_col, K, "mr", "-", base, 0.0, 1, cfg.seed
                )
            )
    return rows


def _receiver_rows(cfg: ExperimentConfig, jobs: int) -> list:
    points = [
        (L, K, snr)
        for L in cfg.l_values
        for K in cfg.k_values
        for snr in cfg.snr
    ]
    combos = [
        (L, K, snr, kind) for (L, K, snr) in points for kind in cfg.receivers
    ]
    tasks = []
    for ci, (L, K, snr, kind) in enumerate(combos):
        gi = points.index((L, K, snr))
        for t in range(cfg.trials):
            # same network draws for every kind: paired comparison
            tasks.append((ci, L, K, snr, kind, _trial_seed(cfg.seed, gi, t)))
    results = _run_tasks(_receiver_trial, tasks, jobs)
    rows = []
    for ci, (L, K, snr, kind) in enumerate(combos):
        mean, err = _aggregate(results[ci])
        rows.append(
            ResultRow(
                cfg.experiment, snr, L, K, "receiver", kind,
                mean, err, cfg.trials, cfg.seed,
            )
        )
    return rows


def _routing_rows(cfg: ExperimentConfig, jobs: int) -> list:
    schemes = [("optimized_qmf", p) for p in cfg.policies] + (
        [("mr", "-")] if cfg.include_baseline else []
    )
    points = [
        (L, K, snr)
        for L in cfg.l_values
        for K in cfg.k_values
        for snr in cfg.snr
    ]
    combos = [
        (L, K, snr, scheme, pk)
        for (L, K, snr) in points
        for scheme, pk in schemes
    ]
    tasks = []
    for ci, (L, K, snr, scheme, pk) in enumerate(combos):
        n_c = cfg.n_c if cfg.n_c is not None else L
        gi = points.index((L, K, snr))
        for t in range(cfg.trials):
            # same grid seed across schemes: paired comparison per draw
            seed = _trial_seed(cfg.seed, gi, t)
            tasks.append((ci, L, K, n_c, snr, cfg.metric, scheme, pk, seed))
    results = _run_tasks(_routing_trial, tasks, jobs)
    rows = []
    for ci, (L, K, snr, scheme, pk) in enumerate(combos):
        mean, err = _aggregate(results[ci])
        rows.append(
            ResultRow(
                cfg.experiment, snr, L, K, scheme, pk, mean, err, cfg.trials, cfg.seed
            )
        )
    return rows


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> list:
    """Produce the result table for one experiment config."""
    if cfg.experiment in ("sparse_vs_k", "dense_vs_k"):
        if not cfg.policies:
            raise ConfigError("field policies: empty sweep")
        return _asymptotic_rows(cfg)
    if cfg.experiment == "receivers_vs_k":
        if not cfg.receivers:
            raise ConfigError("field receivers: empty sweep")
        if not cfg.l_values:
            raise ConfigError("field l_values: empty sweep")
        return _receiver_rows(cfg, jobs)
    if not cfg.l_values:
        raise ConfigError("field l_values: empty sweep")
    if not cfg.policies and cfg.include_baseline is False:
        raise ConfigError("field policies: empty sweep")
    return _routing_rows(cfg, jobs)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


_HEADER = "experiment, snr, L, K, scheme, policy_or_kind, mean_rate, stderr, trials, seed"


def _row_values(r: ResultRow) -> list:
    return [
        r.experiment, r.snr, r.L, r.K, r.scheme, r.policy_or_kind,
        r.mean_rate, r.stderr, r.trials, r.seed,
    ]


def emit_plot_data(table: list, format: str = "csv") -> str:
    """Render the result table; one series per (scheme, policy_or_kind).

    Rows with non-finite means are dropped; a series that loses all its
    rows is skipped with a warning (this is not an error).
    """
    if format not in ("csv", "gnuplot-dat"):
        raise ConfigError(f"unsupported format {format!r}")
    if not table:
        raise ConfigError("empty result table")
    series: dict = {}
    for r in table:
        series.setdefault((r.scheme, r.policy_or_kind), []).append(r)
    kept: dict = {}
    for key, rows in series.items():
        finite = [r for r in rows if math.isfinite(r.mean_rate)]
        if not finite:
            log.warning("series %s/%s is empty, skipped", key[0], key[1])
            continue
        kept[key] = finite
    if format == "csv":
        lines = [_HEADER]
        for key in sorted(kept):
            for r in kept[key]:
                lines.append(", ".join(_fmt(v) for v in _row_values(r)))
        return "\n".join(lines) + "\n"
    blocks = []
    for key in sorted(kept):
        lines = [f"# scheme={key[0]} policy_or_kind={key[1]}"]
        lines.append("# snr L K mean_rate stderr")
        for r in kept[key]:
            lines.append(
                " ".join(_fmt(v) for v in (r.snr, r.L, r.K, r.mean_rate, r.stderr))
            )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def load_table(text: str) -> list:
    """Inverse of the csv emitter, for round-trip checks and tooling."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != _HEADER:
        raise ConfigError("not a result table: bad header")
    rows = []
    for ln in lines[1:]:
        parts = [p.strip() for p in ln.split(",")]
        if len(parts) != 10:
            raise ConfigError(f"bad table row: {ln!r}")
        rows.append(
            ResultRow(
                parts[0], float(parts[1]), int(parts[2]), int(parts[3]),
                parts[4], parts[5], float(parts[6]), float(parts[7]),
                int(parts[8]), int(parts[9]),
            )
        )
    return rows


def _dump_network_text(cfg: ExperimentConfig) -> str:
    """Network of the experiment's first trial, in its native dump form."""
    if cfg.experiment in ("routing_vs_snr", "routing_vs_l"):
        L = cfg.l_values[0]
        K = cfg.k_values[0]
        n_c = cfg.n_c if cfg.n_c is not None else L
        seed = _trial_seed(cfg.seed, 0, 0)
        grid = ClusterGrid(K=K, L=L, n_c=n_c, snr=cfg.snr[0], seed=seed)
        state = establish_paths(grid, metric_from_name(cfg.metric))
        return route_dump(state, grid)
    if cfg.experiment == "receivers_vs_k":
        L = cfg.l_values[0]
        K = cfg.k_values[0]
        params = NetworkParams(L=L, K=K, snr=cfg.snr[0], model=DenseIIDModel())
        net = build_network(params, _trial_seed(cfg.seed, 0, 0))
        return net.dump()
    raise ConfigError(
        f"--dump-network has no network to show for {cfg.experiment} "
        "(asymptotic experiments draw none)"
    )


def _dump_schedule_text(cfg: ExperimentConfig) -> str:
    L = cfg.l_values[0] if cfg.l_values else 2
    K = cfg.k_values[0]
    return dump_schedule(build_schedule(L, K, K + 8))


def _resolve_seed(args, cfg: ExperimentConfig) -> ExperimentConfig:
    """Precedence: --seed flag, then BACKHAUL_SEED, then config, then 0."""
    if args.seed is not None:
        return replace(cfg, seed=args.seed)
    env = os.environ.get("BACKHAUL_SEED")
    if env is not None:
        try:
            return replace(cfg, seed=int(env))
        except ValueError:
            raise ConfigError(f"BACKHAUL_SEED is not an integer: {env!r}") from None
    return cfg


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="backhaul",
        description="Run achievable-rate experiments and emit plot data.",
    )
    ap.add_argument("--config", required=True, help="JSON experiment config")
    ap.add_argument("--seed", type=int, default=None, help="override config seed")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for trials")
    ap.add_argument("--dump-network", action="store_true",
                    help="print the first trial's network to stderr")
    ap.add_argument("--dump-schedule", action="store_true",
                    help="print the transmission schedule to stderr")
    ap.add_argument("--verbose", action="store_true")
    ap.add_argument("--format", choices=["csv", "gnuplot-dat"], default=None,
                    help="override config output format")
    args = ap.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args.config)
        cfg = _resolve_seed(args, cfg)
        if args.format is not None:
            cfg = replace(cfg, format=args.format)
        if args.jobs < 1:
            raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")
        if args.dump_schedule:
            sys.stderr.write(_dump_schedule_text(cfg))
        if args.dump_network:
            sys.stderr.write(_dump_network_text(cfg))
        log.info("running %s with %d trial(s), seed %d",
                 cfg.experiment, cfg.trials, cfg.seed)
        table = run_experiment(cfg, jobs=args.jobs)
        text = emit_plot_data(table, cfg.format)
        if cfg.output:
            try:
                with open(cfg.output, "w") as fh:
                    fh.write(text)
            except OSError as e:
                raise ConfigError(f"cannot write output {cfg.output}: {e}") from None
            log.info("wrote %s", cfg.output)
        else:
            sys.stdout.write(text)
    except ConfigError as e:
        sys.stderr.write(f"config error: {e}\n")
        return 2
    except ParameterError as e:
        sys.stderr.write(f"config error: {e}\n")
        return 2
    except InfeasibleRoutingError as e:
        sys.stderr.write(f"routing infeasible: {e}\n")
        return 3
    except NumericalError as e:
        sys.stderr.write(f"numerical failure: {e}\n")
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
