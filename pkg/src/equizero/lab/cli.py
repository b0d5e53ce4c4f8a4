"""Command line interface.

Exit codes: 0 pass, 1 suite failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .experiments import (
    run_covering_suite,
    run_equidistribution,
    run_holder_suite,
    run_moderate_suite,
    write_json,
)
from .fitting import estimate_exceptional, fit_rate

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
RATE_WINDOW = (-1.4, -0.6)
RATE_MIN_R2 = 0.9


def _degrees(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML config file")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, help="worker processes")
    common.add_argument("--samples", type=int, help="sections per degree")
    common.add_argument("--degrees", type=_degrees, help="comma-separated degrees, e.g. 8,16,32")

    p = argparse.ArgumentParser(prog="equizero", description="Random section zero equidistribution lab")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("equidist", parents=[common], help="sample sections and write discrepancy reports")
    sub.add_parser("rate", parents=[common], help="equidist run plus log-log rate fit")
    sub.add_parser("exceptional", parents=[common], help="equidist run plus exceedance fractions")
    sub.add_parser("moderate", parents=[common], help="moderate-measure bounds")
    sub.add_parser("covering", parents=[common], help="covering volume ratios")
    sub.add_parser("holder", parents=[common], help="Hoelder modulus of the max-log potential")
    return p


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {
        k: getattr(args, k)
        for k in ("seed", "out", "workers", "samples", "degrees")
        if getattr(args, k) is not None
    }
    try:
        return cfg.replace(**overrides)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _line(ok: bool, text: str) -> str:
    return f"[{'PASS' if ok else 'FAIL'}] {text}"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg.out)
    cmd = args.command

    if cmd in ("equidist", "rate", "exceptional"):
        res = run_equidistribution(cfg)
        if cmd == "equidist":
            print(f"wrote {res.summary['rows']} rows to {out / 'samples.csv'}")
            return EXIT_PASS
        if cmd == "rate":
            try:
                fit = fit_rate(res.medians())
            except ValueError as exc:
                print(f"rate fit failed: {exc}", file=sys.stderr)
                return EXIT_FAIL
            ok = fit.strictly_decreasing and RATE_WINDOW[0] <= fit.slope <= RATE_WINDOW[1] and fit.r2 > RATE_MIN_R2
            write_json(out / "rate.json", {**fit.to_dict(), "window": list(RATE_WINDOW), "passed": ok})
            print(_line(ok, f"slope {fit.slope:.4f} r2 {fit.r2:.4f} C {fit.C:.4f}"))
            return EXIT_PASS if ok else EXIT_FAIL
        rep = estimate_exceptional(res.discrepancies(), cfg.A)
        ok = rep.verdict == "decaying"
        write_json(out / "exceptional.json", rep.to_dict())
        for r in rep.rows:
            print(f"n={r.n} threshold={r.threshold:.5f} fraction={r.fraction:.3f} ci=[{r.ci_low:.3f}, {r.ci_high:.3f}]")
        print(_line(ok, f"exceedance {rep.verdict} (A = {rep.A:.4f})"))
        return EXIT_PASS if ok else EXIT_FAIL

    if cmd == "moderate":
        report = run_moderate_suite(cfg)
    elif cmd == "covering":
        report = run_covering_suite(cfg.covering_k_min, cfg.covering_k_max)
    else:
        report = run_holder_suite(cfg.holder_rho, cfg.holder_pairs, cfg.holder_dims, cfg.seed)
    write_json(out / f"{cmd}.json", report)
    print(_line(report["passed"], f"{cmd} suite"))
    return EXIT_PASS if report["passed"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
