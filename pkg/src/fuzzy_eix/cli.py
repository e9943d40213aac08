"""Command-line interface: ``eix run | gen | export-rules | sweep``.

Exit codes: 0 success, 2 configuration/validation error, 3 data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import bench
from .engine import EngineConfig, predict, snapshot, restore
from .errors import SnapshotError
from .files import DataError, atomic_write, csv_text, fmt, read_stream_csv, stream_csv
from .granule import membership
from .projection import export_rulebase, rulebase_rows

log = logging.getLogger("fuzzy_eix")

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3

DEFAULTS = {
    "epsilon": 0.055,
    "rho": 0.45,
    "alpha": 0.3,
    "beta": 0.3,
    "merge": "convex-hull",
    "tnorm": "min",
    "seed": 0,
    "stage_split": 200,
}
CONFIG_KEYS = set(DEFAULTS)


class ConfigError(Exception):
    pass


def read_config_file(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Flags override the EIX_CONFIG file, which overrides defaults."""
    merged = dict(DEFAULTS)
    cfg_path = os.environ.get("EIX_CONFIG")
    if cfg_path:
        merged.update(read_config_file(cfg_path))
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    try:
        merged["epsilon"] = float(merged["epsilon"])
        merged["rho"] = float(merged["rho"])
        merged["alpha"] = float(merged["alpha"])
        merged["beta"] = float(merged["beta"])
        merged["seed"] = int(merged["seed"])
        merged["stage_split"] = int(merged["stage_split"])
    except ValueError as exc:
        raise ConfigError(f"bad numeric setting: {exc}") from exc
    if merged["merge"] not in ("weighted-mean", "convex-hull"):
        raise ConfigError(f"merge must be weighted-mean or convex-hull, got {merged['merge']!r}")
    return merged


def engine_config(settings: dict) -> EngineConfig:
    try:
        return EngineConfig(
            epsilon=settings["epsilon"], rho=settings["rho"],
            alpha=settings["alpha"], beta=settings["beta"],
            merge_method=settings["merge"].replace("-", "_"),
            tnorm=settings["tnorm"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _check_writable(path: str | None) -> None:
    if path is None:
        return
    parent = Path(path).resolve().parent
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise ConfigError(f"cannot write to {path}")


def boundary_grid(state, tnorm: str, resolution: int) -> str:
    """Lattice over [0,1]^2 with the predicted label and best membership."""
    ticks = np.linspace(0.0, 1.0, resolution)
    rows = []
    for a in ticks:
        for b in ticks:
            x = np.array([a, b])
            best = max((membership(g, x, tnorm) for g in state.granules), default=0.0)
            rows.append((repr(float(a)), repr(float(b)), fmt(predict(state, x)), repr(best)))
    return csv_text(["x1", "x2", "pred", "membership"], rows)


def cmd_run(args) -> int:
    settings = resolve(args)
    cfg = engine_config(settings)
    for p in (args.output, args.snapshot, args.boundary_grid):
        _check_writable(p)
    if args.boundary_grid and args.grid_res < 2:
        raise ConfigError("--grid-res must be at least 2")
    if not Path(args.input).is_file():
        raise ConfigError(f"input file {args.input} does not exist")

    stream, labelled = read_stream_csv(args.input)
    if args.boundary_grid and stream and stream[0].x.shape[0] != 2:
        raise ConfigError("--boundary-grid needs two-attribute data")
    split = settings["stage_split"] if labelled else None
    metrics = bench.prequential_run(cfg, stream, stage_split=split, require_labels=False)

    summary = [f"instances={len(stream)}", f"k={metrics.state.k}",
               f"wall_time_s={metrics.wall_time:.6f}"]
    if labelled:
        c = metrics.confusion
        summary.append(f"accuracy={c.accuracy:.4f}")
        summary.append(f"tp={c.tp} fp={c.fp} tn={c.tn} fn={c.fn}")
        for stage in metrics.stages:
            if stage.steps:
                summary.append(f"{stage.name}: accuracy={stage.accuracy:.4f} "
                               f"avg_granules={stage.avg_granules:.4f}")
    else:
        summary.append("accuracy=")

    if args.output:
        rows = ([r.h, r.k, fmt(r.pred), fmt(r.true),
                 "" if r.correct is None else int(r.correct),
                 "" if r.cum_acc is None else f"{r.cum_acc:.6f}"]
                for r in metrics.records)
        atomic_write(args.output, csv_text(
            ["h", "k", "pred", "true", "correct", "cum_acc"], rows, summary))
    if args.snapshot:
        atomic_write(args.snapshot, snapshot(metrics.state, cfg))
    if args.boundary_grid:
        atomic_write(args.boundary_grid, boundary_grid(metrics.state, cfg.tnorm, args.grid_res))
    for line in summary:
        print(line)
    return EXIT_OK


def cmd_gen(args) -> int:
    settings = resolve(args)
    if args.steps < 0:
        raise ConfigError("--steps must be non-negative")
    _check_writable(args.out)
    stream = bench.gen_stream(args.steps, args.phi, settings["seed"], settings["stage_split"])
    text = stream_csv(stream)
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_export_rules(args) -> int:
    _check_writable(args.output)
    try:
        text = Path(args.model).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read model {args.model}: {exc}") from exc
    try:
        state, _ = restore(text)
    except SnapshotError as exc:
        raise ConfigError(f"{args.model}: {exc}") from exc
    doc = export_rulebase(state, "type1" if args.type == 1 else "type2")
    if args.format == "json":
        out = json.dumps(doc, indent=1) + "\n"
    else:
        rows = rulebase_rows(doc)
        header = list(rows[0]) if rows else ["granule_id", "label", "attribute"]
        out = csv_text(header, ([fmt(r[h]) for h in header] for r in rows))
    if args.output:
        atomic_write(args.output, out)
    else:
        sys.stdout.write(out)
    return EXIT_OK


def parse_seeds(text: str) -> list[int]:
    """``"0-9"``, ``"1,4,7"`` or a mix such as ``"0-2,10"``."""
    seeds = []
    try:
        for part in text.split(","):
            part = part.strip()
            if "-" in part:
                lo, hi = part.split("-", 1)
                seeds.extend(range(int(lo), int(hi) + 1))
            elif part:
                seeds.append(int(part))
    except ValueError as exc:
        raise ConfigError(f"bad --seeds value {text!r}") from exc
    if not seeds:
        raise ConfigError("no seeds given")
    return seeds


def read_grid(path: str) -> list[tuple[float, float]]:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read grid file {path}: {exc}") from exc
    grid = []
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line or line.replace(" ", "") == "epsilon,rho":
            continue
        try:
            eps, rho = (float(v) for v in line.split(","))
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: expected 'epsilon,rho'") from None
        grid.append((eps, rho))
    if not grid:
        raise ConfigError(f"grid file {path} has no (epsilon, rho) pairs")
    return grid


def cmd_sweep(args) -> int:
    settings = resolve(args)
    grid = read_grid(args.grid_file)
    seeds = parse_seeds(args.seeds)
    base = engine_config(settings)
    for eps, rho in grid:
        engine_config({**settings, "epsilon": eps, "rho": rho})
    _check_writable(args.out)
    _check_writable(args.series_out)

    start = time.perf_counter()
    rows, series = bench.sweep(grid, seeds, base, steps=args.steps, phi=args.phi,
                               stage_split=settings["stage_split"], jobs=args.jobs)
    table = csv_text(
        ["epsilon", "rho", "stage", "acc", "avg_granules", "time_s"],
        ([repr(r.epsilon), repr(r.rho), r.stage, f"{r.acc:.4f}",
          f"{r.avg_granules:.4f}", f"{r.time_s:.6f}"] for r in rows))
    series_path = args.series_out or (str(Path(args.out).with_suffix("")) + "_series.csv"
                                      if args.out else None)
    series_rows = ([repr(eps), repr(rho), seed, h, k]
                   for (eps, rho), per_seed in series.items()
                   for seed, counts in per_seed.items()
                   for h, k in enumerate(counts, start=1))
    if args.out:
        atomic_write(args.out, table)
    else:
        sys.stdout.write(table)
    if series_path:
        atomic_write(series_path, csv_text(["epsilon", "rho", "seed", "h", "k"], series_rows))
    log.info("sweep of %d cells x %d seeds took %.2fs", len(grid), len(seeds),
             time.perf_counter() - start)
    return EXIT_OK


def _engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, help="initial/minimum inner width (default 0.055)")
    p.add_argument("--rho", type=float, help="merge distance threshold (default 0.45)")
    p.add_argument("--alpha", type=float, help="balancing rate (default 0.3)")
    p.add_argument("--beta", type=float, help="shrink/expansion rate (default 0.3)")
    p.add_argument("--merge", choices=["weighted-mean", "convex-hull"])
    p.add_argument("--tnorm", choices=["min", "product"])
    p.add_argument("--stage-split", dest="stage_split", type=int,
                   help="last step of the first evaluation stage (default 200)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eix", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="stream a CSV through the learner")
    p.add_argument("--input", required=True)
    p.add_argument("--output", help="per-step metrics CSV")
    p.add_argument("--snapshot", help="final model JSON")
    p.add_argument("--boundary-grid", dest="boundary_grid",
                   help="write a 2-D lattice of predictions/memberships")
    p.add_argument("--grid-res", dest="grid_res", type=int, default=101)
    p.add_argument("--seed", type=int, help=argparse.SUPPRESS)
    _engine_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("gen", help="generate the rotating twin-Gaussians stream")
    p.add_argument("--steps", type=int, default=400)
    p.add_argument("--phi", type=float, default=0.45, help="degrees per step after the split")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", "--output", dest="out")
    p.add_argument("--stage-split", dest="stage_split", type=int)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("export-rules", help="write the rule base of a saved model")
    p.add_argument("--model", "--snapshot", dest="model", required=True)
    p.add_argument("--type", type=int, choices=[1, 2], default=1)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--output")
    p.set_defaults(func=cmd_export_rules)

    p = sub.add_parser("sweep", help="benchmark a grid of (epsilon, rho) over seeds")
    p.add_argument("--grid-file", dest="grid_file", required=True)
    p.add_argument("--seeds", default="0-9")
    p.add_argument("--out", "--output", dest="out")
    p.add_argument("--series-out", dest="series_out",
                   help="per-step granule counts (default: <out>_series.csv)")
    p.add_argument("--steps", type=int, default=400)
    p.add_argument("--phi", type=float, default=0.45)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, help=argparse.SUPPRESS)
    _engine_flags(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"eix: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"eix: data error: {args.input}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
