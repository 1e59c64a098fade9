"""Command line front end: one verb per experiment.

Exit codes: 0 success, 1 config error, 2 validation failure, 3 runtime
error.
"""

import argparse
import sys

from .harness import (ConfigError, ExperimentConfig, emit, run_criteria,
                      run_percolation_experiment, run_phase_experiment,
                      run_validate)

_RUNNERS = {
    "validate": run_validate,
    "criteria": run_criteria,
    "phase": run_phase_experiment,
    "percolation": run_percolation_experiment,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ferrogas",
        description="continuum ferromagnet simulation lab and bound checker")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in _RUNNERS:
        p = sub.add_parser(verb)
        p.add_argument("--config", default=None,
                       help="flat key=value config file (defaults apply)")
        p.add_argument("--out", default="out",
                       help="output directory for CSV/JSON/plot data")
        p.add_argument("--seed", type=int, default=None,
                       help="override mcmc.seed")
        p.add_argument("--chains", type=int, default=None,
                       help="override mcmc.chains")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = (ExperimentConfig.from_file(args.config) if args.config
               else ExperimentConfig({}))
        overrides = {"experiment.tag": args.verb}
        if args.seed is not None:
            overrides["mcmc.seed"] = args.seed
        if args.chains is not None:
            overrides["mcmc.chains"] = args.chains
        cfg = cfg.with_overrides(**overrides)
    except (ConfigError, OSError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 1

    try:
        report = _RUNNERS[args.verb](cfg)
        emit(report, args.out)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 1
    except Exception as exc:
        print("runtime error: %s" % exc, file=sys.stderr)
        return 3

    if args.verb == "validate" and not report.criteria["passed"]:
        print("validation failed", file=sys.stderr)
        return 2
    if args.verb == "criteria" and not report.criteria["passed"]:
        print("certificate inequalities failed", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
