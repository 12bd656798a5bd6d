"""Command-line entry point: ``cbed run|sweep|bench``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError
from .harness import ExperimentConfig, run_and_write, run_benchmark, run_sweep, write_manifest, write_sweep


def parse_grid(text: str) -> np.ndarray:
    """``lo:hi:steps`` -> ``steps`` evenly spaced values including both ends.

    A negative lower bound needs the ``--grid=-5:5:11`` spelling on the command line.
    """
    try:
        lo, hi, steps = text.split(":")
        lo, hi, steps = float(lo), float(hi), int(steps)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"grid must look like lo:hi:steps, got {text!r}") from exc
    if steps < 1 or hi < lo:
        raise argparse.ArgumentTypeError("grid needs steps >= 1 and hi >= lo")
    return np.linspace(lo, hi, steps)


def _load(path, seed):
    cfg = ExperimentConfig.load(path)
    return cfg if seed is None else cfg.replace(seed=seed)


def _cmd_run(args) -> int:
    cfg = _load(args.config, args.seed)
    records = run_and_write(cfg, args.out)
    last = records[-1]
    print(f"wrote {Path(args.out) / 'metrics.csv'}; final e_shd={last.e_shd:.4f} after {last.samples} samples")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load(args.config, args.seed)
    rows = run_sweep(cfg, args.targets, args.grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep(rows, out / "sweep.csv")
    write_manifest(cfg, out / "manifest.json", targets=list(args.targets), grid=[float(v) for v in args.grid])
    print(f"wrote {len(rows)} rows to {out / 'sweep.csv'}")
    return 0


def _cmd_bench(args) -> int:
    paths = sorted(Path(args.configs).glob("*.json"))
    if not paths:
        raise InvalidArgumentError(f"no *.json configs in {args.configs}")
    configs = [ExperimentConfig.load(p) for p in paths]
    result = run_benchmark(configs, args.seeds, out_dir=args.out, workers=args.workers)
    for (p, v), t in sorted(result.timing.items()):
        print(f"{p:12s} {v:12s} {t:10.3f}s")
    for name, passed in result.checks:
        print(f"{'PASS' if passed else 'FAIL'} {name}")
    return 0 if result.ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cbed", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", default="out")
    run.set_defaults(func=_cmd_run)

    sweep = sub.add_parser("sweep", help="MI as a function of the intervention value")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--targets", type=int, nargs="+", required=True)
    sweep.add_argument("--grid", type=parse_grid, required=True)
    sweep.add_argument("--seed", type=int)
    sweep.add_argument("--out", default="out")
    sweep.set_defaults(func=_cmd_sweep)

    bench = sub.add_parser("bench", help="benchmark every config in a directory")
    bench.add_argument("--configs", required=True)
    bench.add_argument("--seeds", type=int, default=1)
    bench.add_argument("--out", default="bench")
    bench.add_argument("--workers", type=int, default=1)
    bench.set_defaults(func=_cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InvalidArgumentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
