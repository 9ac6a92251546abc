"""Batch command-line front end.

Subcommands: ingest, synth, coarsen, features, uniqueness, sweep-users,
classify, tune-tau, separability. Every run writes plot-ready CSVs plus a
manifest recording the fully-resolved config, its hash, the seed and the
wall-clock time. Option precedence is flags > config file > defaults.

Exit codes: 0 success, 2 config error, 3 input parse error, 4 runtime error.
"""

from __future__ import annotations

import argparse
import glob
import hashlib
import json
import math
import os
import sys
import time

from . import __version__
from .classifier import (
    DEFAULT_TAU_GRID,
    accuracy_experiment,
    trace_reduction_experiment,
    tune_tau,
)
from .coarsen import CoarseningSpec, truncate_resolution
from .geo import TemporalScale
from .motion import KINDS, windowed_features
from .separability import agsi, separability_cdf
from .store import (
    BEIJING_BBOX,
    Dataset,
    ParseError,
    filter_dataset,
    merge_trajectories,
    parse_cabspotting,
    parse_csv,
    parse_plt,
    read_canonical,
    write_canonical,
)
from .synth import SynthSpec, generate
from .uniqueness import movement_uniqueness, uniqueness, user_count_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_RUNTIME = 4

MODES = {"spatial": "spatial", "st": "spatiotemporal", "spatiotemporal": "spatiotemporal"}

# Beijing 2008 filter used for the GeoLife reproduction runs (UTC).
GEOLIFE_2008_RANGE = (1199145600, 1230767999)  # 2008-01-01 .. 2008-12-31


class ConfigError(Exception):
    pass


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return f"{x:.12g}" if isinstance(x, float) else str(x)


def _parse_int_list(text: str) -> list[int]:
    return [int(s) for s in str(text).split(",") if s.strip() != ""]


def _parse_float_list(text: str) -> list[float]:
    return [float(s) for s in str(text).split(",") if s.strip() != ""]


def _parse_tau(text: str) -> float:
    return math.inf if str(text).lower() in ("inf", "infinite") else float(text)


def load_config_file(path: str) -> dict[str, str]:
    """Flat key-value config: one ``key = value`` pair per line, # comments."""
    out: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for i, line in enumerate(fh, start=1):
                s = line.strip()
                if not s or s.startswith("#"):
                    continue
                if "=" not in s:
                    raise ConfigError(f"{path}:{i}: expected key = value")
                key, _, val = s.partition("=")
                out[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return out


def resolve_config(args: argparse.Namespace, option_spec: dict) -> dict:
    """Merge flags, config file and defaults into one resolved dict."""
    file_cfg = load_config_file(args.config) if getattr(args, "config", None) else {}
    resolved = {}
    for key, (parse, default) in option_spec.items():
        value = getattr(args, key, None)
        if value is None and key in file_cfg:
            raw = file_cfg[key]
            try:
                value = parse(raw) if parse is not None else raw
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"config key {key!r}: bad value {raw!r}: {exc}") from exc
        if value is None:
            value = default
        resolved[key] = value
    return resolved


def _require(cfg: dict, *keys):
    for key in keys:
        if cfg.get(key) is None:
            raise ConfigError(f"missing required option --{key.replace('_', '-')}")


def load_dataset(cfg: dict) -> Dataset:
    """Load a dataset in any supported input format."""
    path = cfg["dataset"]
    fmt = cfg["format"]
    name = os.path.splitext(os.path.basename(path.rstrip("/")))[0]
    if fmt == "canonical":
        with open(path, "r", encoding="utf-8") as fh:
            return read_canonical(fh.read(), name=name)
    if fmt == "cabspotting":
        files = sorted(glob.glob(os.path.join(path, "*.txt"))) if os.path.isdir(path) else [path]
        if not files:
            raise ParseError(f"no .txt files under {path}")
        trajs = []
        for f in files:
            pid = os.path.splitext(os.path.basename(f))[0]
            pid = pid.removeprefix("new_")
            with open(f, "rb") as fh:
                trajs.append(parse_cabspotting(fh, pid))
        return Dataset(name, tuple(trajs), resolution_digits=5)
    if fmt == "plt":
        if os.path.isdir(path):
            trajs = []
            for entry in sorted(os.listdir(path)):
                user_dir = os.path.join(path, entry)
                if not os.path.isdir(user_dir):
                    continue
                plt_files = sorted(
                    glob.glob(os.path.join(user_dir, "Trajectory", "*.plt"))
                    or glob.glob(os.path.join(user_dir, "*.plt"))
                )
                if not plt_files:
                    continue
                parts = []
                for f in plt_files:
                    with open(f, "rb") as fh:
                        parts.append(parse_plt(fh, entry))
                trajs.append(merge_trajectories(entry, parts))
            if not trajs:
                raise ParseError(f"no GeoLife user directories under {path}")
            return Dataset(name, tuple(trajs), resolution_digits=6)
        with open(path, "rb") as fh:
            return Dataset(name, (parse_plt(fh, name),), resolution_digits=6)
    if fmt == "csv":
        schema = {"lat": cfg["csv_lat"], "lon": cfg["csv_lon"]}
        if cfg.get("csv_t"):
            schema["t"] = cfg["csv_t"]
        files = sorted(glob.glob(os.path.join(path, "*.csv"))) if os.path.isdir(path) else [path]
        trajs = []
        for f in files:
            pid = os.path.splitext(os.path.basename(f))[0]
            with open(f, "rb") as fh:
                trajs.append(parse_csv(fh, schema, pid))
        return Dataset(name, tuple(trajs), resolution_digits=6)
    raise ConfigError(f"unknown format {fmt!r}")


class RunContext:
    """Collects output files and writes the manifest at the end."""

    def __init__(self, command: str, cfg: dict):
        self.command = command
        self.cfg = cfg
        self.out_dir = cfg["out"]
        self.outputs: list[str] = []
        self.extras: dict = {}
        self.t0 = time.time()
        os.makedirs(self.out_dir, exist_ok=True)

    def open_csv(self, filename: str, header: str):
        path = os.path.join(self.out_dir, filename)
        fh = open(path, "w", encoding="utf-8", newline="")
        fh.write(header + "\n")
        self.outputs.append(filename)
        return fh

    def path(self, filename: str) -> str:
        self.outputs.append(filename)
        return os.path.join(self.out_dir, filename)

    def write_manifest(self, status: str, error: dict | None = None):
        cfg_json = json.dumps(self.cfg, sort_keys=True, default=str)
        manifest = {
            "tool": "tracefp",
            "version": __version__,
            "command": self.command,
            "config": json.loads(cfg_json),
            "config_sha256": hashlib.sha256(cfg_json.encode()).hexdigest(),
            "seed": self.cfg.get("seed"),
            "status": status,
            "outputs": self.outputs,
            "wall_clock_s": round(time.time() - self.t0, 3),
        }
        manifest.update(self.extras)
        if error is not None:
            manifest["error"] = error
        with open(os.path.join(self.out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")


# ---------------------------------------------------------------------------
# Commands. Each takes the resolved config dict and a RunContext.

def cmd_ingest(cfg: dict, ctx: RunContext):
    _require(cfg, "dataset", "format")
    ds = load_dataset(cfg)
    time_range = tuple(cfg["time_range"]) if cfg.get("time_range") else None
    bbox = tuple(cfg["bbox"]) if cfg.get("bbox") else None
    if cfg.get("beijing_2008"):
        time_range = GEOLIFE_2008_RANGE
        bbox = BEIJING_BBOX
    if time_range or bbox or cfg["min_points"] > 1:
        ds = filter_dataset(ds, time_range=time_range, bbox=bbox, min_points=cfg["min_points"])
    write_canonical(ds, ctx.path("canonical.csv"))
    ctx.extras["users"] = len(ds)
    ctx.extras["resolution_digits"] = ds.resolution_digits


def cmd_synth(cfg: dict, ctx: RunContext):
    spec = SynthSpec(
        n_traces=cfg["traces"], points_per_trace=cfg["points"],
        intra_spread_km=cfg["spread_km"], inter_separation_km=cfg["sep_km"],
        time_step_s=cfg["time_step_s"], overlap_fraction=cfg["overlap"],
        seed=cfg["seed"],
    )
    write_canonical(generate(spec), ctx.path("canonical.csv"))


def cmd_coarsen(cfg: dict, ctx: RunContext):
    _require(cfg, "dataset", "format", "digits")
    ds = CoarseningSpec(cfg["digits"], cfg.get("time_bucket_s")).apply(load_dataset(cfg))
    write_canonical(ds, ctx.path("canonical.csv"))
    ctx.extras["resolution_digits"] = ds.resolution_digits


def cmd_features(cfg: dict, ctx: RunContext):
    _require(cfg, "dataset", "format", "window_s")
    ds = load_dataset(cfg)
    kinds = KINDS if cfg["kind"] == "all" else (cfg["kind"],)
    with ctx.open_csv("features.csv", "pseudo_id,window_start,kind,value,quantized") as fh:
        for tr in ds:
            for kind in kinds:
                for s in windowed_features(tr, cfg["window_s"], kind):
                    fh.write(
                        f"{tr.pseudo_id},{s.window_start},{s.kind},"
                        f"{_fmt(s.value)},{_fmt(s.quantized)}\n"
                    )


UNIQ_HEADER = "dataset,mode,kind,n,resolution_digits,users,samples,mean,ci_low,ci_high,seed"


def _uniq_row(name: str, rep) -> str:
    return (
        f"{name},{rep.mode},{rep.kind},{rep.n},{rep.resolution_digits},"
        f"{rep.users},{rep.samples_per_user},{_fmt(rep.mean)},"
        f"{_fmt(rep.ci95[0])},{_fmt(rep.ci95[1])},{rep.seed}"
    )


def cmd_uniqueness(cfg: dict, ctx: RunContext):
    _require(cfg, "dataset", "format", "n_max")
    ds = load_dataset(cfg)
    if cfg.get("digits"):
        ds = truncate_resolution(ds, cfg["digits"])
    if cfg.get("movement_kind"):
        _require(cfg, "window_s")
        reports = movement_uniqueness(
            ds, cfg["window_s"], cfg["movement_kind"], cfg["n_max"],
            reps=cfg["reps"], seed=cfg["seed"], threads=cfg["threads"],
        )
    else:
        reports = uniqueness(
            ds, cfg["n_max"], MODES[cfg["mode"]],
            samples=cfg["reps"], seed=cfg["seed"], threads=cfg["threads"],
        )
    with ctx.open_csv("uniqueness.csv", UNIQ_HEADER) as fh:
        for n in sorted(reports):
            fh.write(_uniq_row(ds.name, reports[n]) + "\n")
    ctx.extras["excluded"] = list(reports[max(reports)].excluded)


def cmd_sweep_users(cfg: dict, ctx: RunContext):
    _require(cfg, "dataset", "format", "counts", "n")
    ds = load_dataset(cfg)
    if cfg.get("digits"):
        ds = truncate_resolution(ds, cfg["digits"])
    out = user_count_sweep(
        ds, cfg["counts"], cfg["n"], reps=cfg["reps"], seed=cfg["seed"],
        mode=MODES[cfg["mode"]], threads=cfg["threads"],
    )
    with ctx.open_csv("sweep_users.csv", "population," + UNIQ_HEADER) as fh:
        for (count, n) in sorted(out):
            fh.write(f"{count}," + _uniq_row(ds.name, out[(count, n)]) + "\n")


ACC_HEADER = "dataset,n,tau,tau_unit,top_k,fraction,users,reps,mean_acc,ci_low,ci_high,seed"


def cmd_classify(cfg: dict, ctx: RunContext):
    _require(cfg, "dataset", "format", "tau", "n")
    if len(cfg["tau"]) != 1:
        raise ConfigError("classify takes exactly one --tau value")
    ds = load_dataset(cfg)
    scale = TemporalScale(cfg["tau"][0], cfg["tau_unit"])
    if cfg.get("fractions"):
        results = trace_reduction_experiment(
            ds, scale, cfg["fractions"], cfg["n"],
            reps=cfg["reps"], seed=cfg["seed"], threads=cfg["threads"],
        )
    else:
        results = accuracy_experiment(
            ds, scale, cfg["n"], reps=cfg["reps"], seed=cfg["seed"], threads=cfg["threads"],
        )
    with ctx.open_csv("accuracy.csv", ACC_HEADER) as fh:
        for r in results:
            for top_k, (mean, ci) in ((1, r.top1), (2, r.top2)):
                fh.write(
                    f"{ds.name},{r.n},{_fmt(r.tau)},{r.tau_unit},{top_k},"
                    f"{_fmt(r.fraction)},{r.users},{r.reps},{_fmt(mean)},"
                    f"{_fmt(ci[0])},{_fmt(ci[1])},{r.seed}\n"
                )


def cmd_tune_tau(cfg: dict, ctx: RunContext):
    _require(cfg, "dataset", "format")
    ds = load_dataset(cfg)
    result = tune_tau(
        ds, grid=cfg["tau"], unit=cfg["tau_unit"],
        split_fraction=cfg["split_fraction"], n_test=cfg["n_test"],
        reps=cfg["reps"], seed=cfg["seed"], threads=cfg["threads"],
    )
    with ctx.open_csv("tau_tuning.csv", ACC_HEADER) as fh:
        for tau, (mean, ci) in zip(result.grid, result.accuracy_per_tau):
            fh.write(
                f"{ds.name},{cfg['n_test']},{_fmt(tau)},{result.unit},1,,"
                f"{len(ds) - len(result.excluded)},{cfg['reps']},{_fmt(mean)},"
                f"{_fmt(ci[0])},{_fmt(ci[1])},{cfg['seed']}\n"
            )
    ctx.extras["tau_star"] = result.tau_star
    ctx.extras["tau_unit"] = result.unit


def cmd_separability(cfg: dict, ctx: RunContext):
    _require(cfg, "dataset", "format")
    ds = load_dataset(cfg)
    mode = MODES[cfg["mode"]]
    scale = None
    if mode == "spatiotemporal":
        _require(cfg, "tau")
        if len(cfg["tau"]) != 1:
            raise ConfigError("separability takes exactly one --tau value")
        scale = TemporalScale(cfg["tau"][0], cfg["tau_unit"])
    report = agsi(ds, mode=mode, scale=scale,
                  max_points_per_class=cfg["cap"], seed=cfg["seed"])
    with ctx.open_csv("separability_classes.csv", "pseudo_id,fraction,n_points,mode") as fh:
        for pid in sorted(report.per_class):
            fh.write(f"{pid},{_fmt(report.per_class[pid])},{report.class_sizes[pid]},{mode}\n")
    with ctx.open_csv("separability_cdf.csv", "x,cum_prob") as fh:
        for x, f in separability_cdf(report):
            fh.write(f"{_fmt(x)},{_fmt(f)}\n")
    ctx.extras["agsi"] = report.agsi
    ctx.extras["gsi"] = report.gsi_binary


# ---------------------------------------------------------------------------
# Parser construction.

def _common_options(sub, *, dataset=True):
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--threads", type=int)
    if dataset:
        sub.add_argument("--dataset", help="input dataset path")
        sub.add_argument("--format", choices=["cabspotting", "plt", "csv", "canonical"])
        sub.add_argument("--csv-lat", dest="csv_lat")
        sub.add_argument("--csv-lon", dest="csv_lon")
        sub.add_argument("--csv-t", dest="csv_t")


COMMON_SPEC = {
    "out": (str, "out"),
    "seed": (int, 0),
    "threads": (int, 1),
    "dataset": (str, None),
    "format": (str, "canonical"),
    "csv_lat": (str, "lat"),
    "csv_lon": (str, "lon"),
    "csv_t": (str, None),
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tracefp",
        description="Mobility-trace uniqueness measurement and re-identification experiments.",
    )
    parser.add_argument("--version", action="version", version=f"tracefp {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    specs: dict[str, dict] = {}

    s = subs.add_parser("ingest", help="parse raw traces into the canonical CSV")
    _common_options(s)
    s.add_argument("--min-points", dest="min_points", type=int)
    s.add_argument("--bbox", type=_parse_float_list, help="lat_min,lat_max,lon_min,lon_max")
    s.add_argument("--time-range", dest="time_range", type=_parse_int_list, help="t_min,t_max (unix s)")
    s.add_argument("--beijing-2008", dest="beijing_2008", action="store_const", const=True)
    specs["ingest"] = dict(COMMON_SPEC, min_points=(int, 1), bbox=(_parse_float_list, None),
                           time_range=(_parse_int_list, None), beijing_2008=(bool, False))

    s = subs.add_parser("synth", help="generate a synthetic benchmark dataset")
    _common_options(s, dataset=False)
    s.add_argument("--traces", type=int)
    s.add_argument("--points", type=int)
    s.add_argument("--spread-km", dest="spread_km", type=float)
    s.add_argument("--sep-km", dest="sep_km", type=float)
    s.add_argument("--time-step-s", dest="time_step_s", type=int)
    s.add_argument("--overlap", type=float)
    specs["synth"] = dict(COMMON_SPEC, traces=(int, 10), points=(int, 200),
                          spread_km=(float, 0.5), sep_km=(float, 50.0),
                          time_step_s=(int, 60), overlap=(float, 0.0))

    s = subs.add_parser("coarsen", help="reduce spatial/temporal resolution")
    _common_options(s)
    s.add_argument("--digits", type=int)
    s.add_argument("--time-bucket-s", dest="time_bucket_s", type=int)
    specs["coarsen"] = dict(COMMON_SPEC, digits=(int, None), time_bucket_s=(int, None))

    s = subs.add_parser("features", help="emit windowed movement features")
    _common_options(s)
    s.add_argument("--window-s", dest="window_s", type=int)
    s.add_argument("--kind", choices=list(KINDS) + ["all"])
    specs["features"] = dict(COMMON_SPEC, window_s=(int, 30), kind=(str, "all"))

    s = subs.add_parser("uniqueness", help="seen-point uniqueness protocol")
    _common_options(s)
    s.add_argument("--mode", choices=list(MODES))
    s.add_argument("--n-max", dest="n_max", type=int)
    s.add_argument("--reps", type=int)
    s.add_argument("--digits", type=int)
    s.add_argument("--movement-kind", dest="movement_kind", choices=list(KINDS))
    s.add_argument("--window-s", dest="window_s", type=int)
    specs["uniqueness"] = dict(COMMON_SPEC, mode=(str, "st"), n_max=(int, 5),
                               reps=(int, 1000), digits=(int, None),
                               movement_kind=(str, None), window_s=(int, 30))

    s = subs.add_parser("sweep-users", help="uniqueness vs population size")
    _common_options(s)
    s.add_argument("--mode", choices=list(MODES))
    s.add_argument("--counts", type=_parse_int_list)
    s.add_argument("--n", type=_parse_int_list)
    s.add_argument("--reps", type=int)
    s.add_argument("--digits", type=int)
    specs["sweep-users"] = dict(COMMON_SPEC, mode=(str, "st"), counts=(_parse_int_list, None),
                                n=(_parse_int_list, None), reps=(int, 1000), digits=(int, None))

    s = subs.add_parser("classify", help="unseen-point attack accuracy")
    _common_options(s)
    s.add_argument("--tau", type=lambda t: [_parse_tau(x) for x in t.split(",")])
    s.add_argument("--tau-unit", dest="tau_unit", choices=["s", "min", "h", "day"])
    s.add_argument("--n", type=_parse_int_list)
    s.add_argument("--reps", type=int)
    s.add_argument("--fractions", type=_parse_float_list)
    tau_parse = lambda t: [_parse_tau(x) for x in str(t).split(",")]
    specs["classify"] = dict(COMMON_SPEC, tau=(tau_parse, None), tau_unit=(str, "day"),
                             n=(_parse_int_list, [1, 2, 3]), reps=(int, 100),
                             fractions=(_parse_float_list, None))

    s = subs.add_parser("tune-tau", help="grid search the temporal scale")
    _common_options(s)
    s.add_argument("--tau", type=lambda t: [_parse_tau(x) for x in t.split(",")])
    s.add_argument("--tau-unit", dest="tau_unit", choices=["s", "min", "h", "day"])
    s.add_argument("--n-test", dest="n_test", type=int)
    s.add_argument("--reps", type=int)
    s.add_argument("--split-fraction", dest="split_fraction", type=float)
    specs["tune-tau"] = dict(COMMON_SPEC, tau=(tau_parse, list(DEFAULT_TAU_GRID)),
                             tau_unit=(str, "day"), n_test=(int, 3), reps=(int, 10),
                             split_fraction=(float, 0.5))

    s = subs.add_parser("separability", help="geometric separability report")
    _common_options(s)
    s.add_argument("--mode", choices=list(MODES))
    s.add_argument("--tau", type=lambda t: [_parse_tau(x) for x in t.split(",")])
    s.add_argument("--tau-unit", dest="tau_unit", choices=["s", "min", "h", "day"])
    s.add_argument("--cap", type=int)
    specs["separability"] = dict(COMMON_SPEC, mode=(str, "spatial"), tau=(tau_parse, None),
                                 tau_unit=(str, "day"), cap=(int, 2000))

    return parser, specs


COMMANDS = {
    "ingest": cmd_ingest,
    "synth": cmd_synth,
    "coarsen": cmd_coarsen,
    "features": cmd_features,
    "uniqueness": cmd_uniqueness,
    "sweep-users": cmd_sweep_users,
    "classify": cmd_classify,
    "tune-tau": cmd_tune_tau,
    "separability": cmd_separability,
}


def _error_record(kind: str, exc: Exception) -> dict:
    return {"kind": kind, "type": type(exc).__name__, "message": str(exc)}


def main(argv=None) -> int:
    parser, specs = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help/--version, 2 for bad flags
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG

    try:
        cfg = resolve_config(args, specs[args.command])
    except ConfigError as exc:
        print(json.dumps(_error_record("config", exc)), file=sys.stderr)
        return EXIT_CONFIG

    ctx = RunContext(args.command, cfg)
    try:
        COMMANDS[args.command](cfg, ctx)
    except ConfigError as exc:
        ctx.write_manifest("incomplete", _error_record("config", exc))
        print(json.dumps(_error_record("config", exc)), file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, FileNotFoundError, OSError) as exc:
        ctx.write_manifest("incomplete", _error_record("input", exc))
        print(json.dumps(_error_record("input", exc)), file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - boundary of the CLI
        ctx.write_manifest("incomplete", _error_record("runtime", exc))
        print(json.dumps(_error_record("runtime", exc)), file=sys.stderr)
        return EXIT_RUNTIME
    ctx.write_manifest("complete")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
