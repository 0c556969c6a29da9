"""Command-line entry point: ``sedh run | resume | verify-correlators | analyze | default-config``.

Exit codes: 0 success, 1 error, 2 the electron ionised.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .analysis import AnalysisError, analyze, write_outputs
from .checkpoint import CheckpointError
from .config import ConfigError, RunConfig, format_config, load_config
from .simulation import CHECKPOINT, run_trajectory, resume

log = logging.getLogger("sedhydrogen")

EXIT_OK, EXIT_ERROR, EXIT_IONISED = 0, 1, 2
OUTPUT_ENV = "SEDH_OUTPUT_DIR"


def default_output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "sedh-output"))


def _err(message: str) -> int:
    print(f"sedh: error: {message}", file=sys.stderr)
    return EXIT_ERROR


def _report(result) -> int:
    s = result.summary
    print(
        f"{result.status}: t={s.t_total:.6g} tau0 ({s.seconds:.3g} s), orbits={s.N_orbit:.6g}, "
        f"N_damp={s.N_damp:.3g}, pushes={s.push_count}, cutoff updates={s.cutoff_updates}, "
        f"rows={result.rows} -> {result.out_dir}"
    )
    return result.exit_code


# ---------------------------------------------------------------------------
# run / resume


def _run_one(config: RunConfig, out_dir: Path, stop_at):
    out_dir.mkdir(parents=True, exist_ok=True)
    return run_trajectory(config, out_dir, stop_at)


def cmd_run(args) -> int:
    try:
        config = load_config(args.config)
        changes = {}
        if args.seed is not None:
            changes["seed"] = args.seed
        if args.t_end is not None:
            changes["t_end"] = args.t_end
        if changes:
            config = config.replace(**changes)
            config.validate()
    except ConfigError as exc:
        return _err(str(exc))

    if args.out is not None:
        out = Path(args.out)
    else:
        out = default_output_root() / f"{Path(args.config).stem}-seed{config.seed}"
    if args.ensemble < 1:
        return _err("--ensemble must be >= 1")

    try:
        if args.ensemble == 1:
            return _report(_run_one(config, out, args.stop_at))
        seeds = [config.seed + k for k in range(args.ensemble)]
        jobs = [(config.replace(seed=s), out / f"seed-{s}") for s in seeds]
        workers = args.workers or min(args.ensemble, os.cpu_count() or 1)
        with ProcessPoolExecutor(workers) as pool:
            futures = [pool.submit(_run_one, c, d, args.stop_at) for c, d in jobs]
            codes = []
            for f in futures:
                try:
                    codes.append(_report(f.result()))
                except Exception as exc:  # keep the other members going
                    codes.append(_err(str(exc)))
    except OSError as exc:
        return _err(str(exc))
    if EXIT_ERROR in codes:
        return EXIT_ERROR
    return EXIT_IONISED if EXIT_IONISED in codes else EXIT_OK


def cmd_resume(args) -> int:
    path = Path(args.checkpoint)
    if path.is_dir():
        path = path / CHECKPOINT
    if not path.is_file():
        return _err(f"checkpoint not found: {path}")
    try:
        config = load_config(args.config) if args.config else None
        result = resume(path, config, args.out, args.stop_at)
    except ConfigError as exc:
        return _err(str(exc))
    except CheckpointError as exc:
        return _err(f"corrupt or incompatible checkpoint {path}: {exc}")
    except OSError as exc:
        return _err(str(exc))
    return _report(result)


# ---------------------------------------------------------------------------
# verify-correlators


def cmd_verify(args) -> int:
    from . import verification
    from .verification import Z_HEADER

    results = verification.run_all(args.level, workers=args.workers)
    for r in results:
        print(r.line())
        if r.name == "lambda-identity" and not r.passed:
            for i, j, k, l_, lhs, rhs in r.rows:
                print(f"    i={i} j={j} k={k} l={l_}: sum={lhs}, expected {rhs}")
    mc = next(r for r in results if r.name == "mc-correlator")
    print()
    print(Z_HEADER)
    for row in mc.rows:
        print(row.format())
    if args.json:
        payload = [
            {"suite": r.name, "passed": r.passed, "metrics": r.metrics}
            for r in results
        ]
        Path(args.json).write_text(json.dumps(payload, indent=2, default=float) + "\n")
    ok = all(r.passed for r in results)
    print("all suites passed" if ok else "verification FAILED")
    return EXIT_OK if ok else EXIT_ERROR


# ---------------------------------------------------------------------------
# analyze


def cmd_analyze(args) -> int:
    try:
        result = analyze(args.run_dir, bins=args.bins)
        written = write_outputs(result, args.out or args.run_dir, svg=not args.no_svg)
    except AnalysisError as exc:
        return _err(str(exc))
    except OSError as exc:
        return _err(str(exc))
    for obs in (result.energy, result.radius):
        ks = "n/a" if obs.ks is None else f"{obs.ks:.4g}"
        print(f"{obs.name}: {obs.samples} samples, dwell weight {obs.histogram.total:.6g}, KS = {ks}")
    for p in written:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_default_config(args) -> int:
    text = format_config(RunConfig())
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sedh", description="Stochastic-electrodynamics hydrogen simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (-vv for debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate a trajectory from a config file")
    p.add_argument("config", help="key = value config file")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--t-end", type=float, help="override t_end (tau0)")
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV}/<config>-seed<seed>)")
    p.add_argument("--ensemble", type=int, default=1, metavar="K", help="run K consecutive seeds in parallel")
    p.add_argument("--workers", type=int, default=0, help="worker processes for --ensemble (default: CPUs)")
    p.add_argument("--stop-at", type=float, help="pause at this time and leave a checkpoint")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("resume", help="continue a run from its checkpoint")
    p.add_argument("checkpoint", help="checkpoint file or run directory")
    p.add_argument("--config", help="config file; must match the checkpointed run")
    p.add_argument("--out", help="write the continued run here instead of next to the checkpoint")
    p.add_argument("--stop-at", type=float, help="pause again at this time")
    p.set_defaults(func=cmd_resume)

    p = sub.add_parser("verify-correlators", help="lambda identity, gauge and Monte-Carlo correlator checks")
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.add_argument("--workers", type=int, default=1, help="processes for the Monte-Carlo ensembles")
    p.add_argument("--json", help="also write the suite results to this JSON file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("analyze", help="histograms, KS distances and plots for a run or ensemble directory")
    p.add_argument("run_dir")
    p.add_argument("--out", help="where to write the outputs (default: the run directory)")
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--no-svg", action="store_true", help="skip the SVG plots")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("default-config", help="print the documented default configuration")
    p.add_argument("-o", "--output", help="write to this file instead of stdout")
    p.set_defaults(func=cmd_default_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return _err("interrupted")


if __name__ == "__main__":
    sys.exit(main())
