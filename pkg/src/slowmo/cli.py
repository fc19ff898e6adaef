"""Command-line entry point: ``slowmo <subcommand> [options]``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import SlowmoError
from .experiments import runners
from .experiments.config import ExperimentConfig, dump
from .experiments.output import default_out_dir, write_csv, write_manifest


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


class _JsonErrorParser(argparse.ArgumentParser):
    """Usage errors are reported as JSON on stderr like every other failure."""

    def error(self, message):
        print(json.dumps({"error": "usage", "message": message}, sort_keys=True), file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    ap = _JsonErrorParser(prog="slowmo", description="Quantum slow motion in a modulated standing wave.")
    ap.add_argument("--config", type=Path, help="JSON configuration file")
    ap.add_argument("--seed", type=_u64, help="master random seed")
    ap.add_argument("--out", type=Path, help="output directory (default: $SLOWMO_OUT or ./slowmo-out)")
    ap.add_argument("--workers", type=int, help="worker processes (0 = all cores)")
    ap.add_argument("--steps-per-cycle", type=int, help="quantum steps per modulation period")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("portrait", help="stroboscopic portraits, original and effective")

    p = sub.add_parser("tunneling", help="mean momentum of a packet on a resonance")
    p.add_argument("--start", choices=["classical", "modified", "both"], default="both")
    p.add_argument("--cycles", type=int)
    p.add_argument("--kbar", type=float)

    p = sub.add_parser("kscan", help="modified-resonance starts over several kbar values")
    p.add_argument("--kbars", type=float, nargs="+")

    p = sub.add_parser("compare", help="quantum / modified / classical momentum histograms")
    p.add_argument("--no-control", action="store_true", help="skip the unmodulated control run")

    sub.add_parser("resonance", help="classical and modified period-one resonances")

    p = sub.add_parser("veff", help="tabulate the effective-potential factor")
    p.add_argument("--kbar", type=float, default=0.25)
    p.add_argument("--xi", type=float, default=1.0)
    p.add_argument("--p-mean", type=float, default=0.0)
    p.add_argument("--p-range", type=float, nargs=2, default=(-2.0, 2.0))
    p.add_argument("--points", type=int, default=81)

    sub.add_parser("config", help="write the effective configuration to the output directory")
    return ap


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    cfg = cfg.with_overrides(master_seed=args.seed, workers=args.workers)
    if args.steps_per_cycle is not None:
        cfg = dataclasses.replace(
            cfg,
            tunneling=dataclasses.replace(cfg.tunneling, steps_per_cycle=args.steps_per_cycle),
            comparison=dataclasses.replace(cfg.comparison, steps_per_cycle=args.steps_per_cycle),
        )
    return cfg


def _dispatch(args, cfg: ExperimentConfig, out: Path) -> dict:
    cmd = args.command
    if cmd == "portrait":
        files = runners.emit_portraits(runners.run_portraits(cfg), cfg, out)
    elif cmd == "tunneling":
        starts = ["classical", "modified"] if args.start == "both" else [args.start]
        runs = [runners.run_tunneling(cfg, s, kbar=args.kbar, cycles=args.cycles) for s in starts]
        files = runners.emit_tunneling(runs, cfg, out)
    elif cmd == "kscan":
        files = runners.emit_tunneling(runners.run_kbar_scan(cfg, args.kbars), cfg, out, command="kscan")
    elif cmd == "compare":
        results = [runners.run_comparison(cfg)]
        if cfg.comparison.control and not args.no_control:
            results.append(runners.run_comparison(cfg, epsilon=0.0))
        files = runners.emit_comparison(results, cfg, out)
        return {"files": [str(f) for f in files], "side_peaks": {f"eps{r.epsilon:g}": r.side_peaks for r in results}}
    elif cmd == "resonance":
        info = runners.run_resonance(cfg)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "resonance.json"
        path.write_text(json.dumps(info, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        files = [path, write_manifest(out, "resonance", cfg, [path], info)]
        return {"files": [str(f) for f in files], **info}
    elif cmd == "veff":
        ps = np.linspace(args.p_range[0], args.p_range[1], args.points)
        rows = runners.veff_table(args.kbar, args.xi, args.p_mean, ps)
        path = write_csv(out / "veff.csv", ["p", "factor"], rows)
        files = [path, write_manifest(out, "veff", cfg, [path], vars_jsonable(args))]
    elif cmd == "config":
        out.mkdir(parents=True, exist_ok=True)
        files = [dump(cfg, out / "config.json")]
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(f"unknown command {cmd!r}")
    return {"files": [str(f) for f in files]}


def vars_jsonable(args) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args)
        out = args.out or default_out_dir()
        summary = _dispatch(args, cfg, out)
    except (SlowmoError, ValueError, OSError) as exc:
        payload = exc.to_dict() if isinstance(exc, SlowmoError) else {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(payload, sort_keys=True, default=str), file=sys.stderr)
        return 2
    print(json.dumps(summary, indent=2, sort_keys=True, default=float))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
