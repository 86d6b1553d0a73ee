"""noisegate command-line interface."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from . import config as config_module
from . import core
from . import utils
from .errors import NoisegateError

logger = logging.getLogger(__name__)


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    """Options shared by every dataset-driven subcommand; unset options stay None."""
    parser.add_argument("--config", type=Path, help="YAML or TOML config file")
    parser.add_argument("--input", help="CSV file with a header row")
    parser.add_argument("--target", help="Name of the dependent-variable column (default: y)")
    parser.add_argument("--threshold-method", help="median, ckmeans or cart")
    parser.add_argument("--cutpoint", type=float, help="Expert cutpoint; skips threshold estimation")
    parser.add_argument("--step-size", type=float, help="Window step in percent of the cutpoint")
    parser.add_argument("--limit", type=float, help="Expert noisy-area half-width in percent; skips the search")
    parser.add_argument("--extremes", type=float, help="Fraction of rows at each end forming the extremes")
    parser.add_argument("--n-bins", type=int, help="Quanta per class for the complexity profile")
    parser.add_argument("--classifier", help="rf, lr, cart, knn, a comma-separated list, or all")
    parser.add_argument("--bootstraps", type=int, help="Out-of-sample bootstrap iterations")
    parser.add_argument("--top-k", type=int, help="Ranks checked for rank shifts")
    parser.add_argument("--measure", help="Performance measure the recommendation is based on")
    parser.add_argument("--rho-threshold", type=float, help="Spearman |rho| above which features cluster")
    parser.add_argument("--r2-threshold", type=float, help="R^2 at or above which a feature is redundant")
    parser.add_argument("--reuse-x0-params", action="store_true", default=None,
                        help="Reuse the parameters chosen most often at x = 0 instead of tuning in every iteration")
    parser.add_argument("--absolute-rank-diff", action="store_true", default=None,
                        help="Test absolute instead of signed rank differences")
    parser.add_argument("--oversample", type=int, nargs="+", help="Noisy-area oversampling percentages")
    parser.add_argument("--seed", type=int, help="Random seed (fallback: NOISEGATE_SEED)")
    parser.add_argument("--jobs", type=int, help="Worker threads")
    parser.add_argument("--out", help="Output directory (default: ./noisegate-out)")


def _build_parser() -> argparse.ArgumentParser:
    """Build command-line argument parser."""
    parser = argparse.ArgumentParser(
        prog="noisegate",
        description="Estimate discretization noise around a cutpoint and its impact on classifiers",
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true", help="Log debug details to stderr")
    verbosity.add_argument("--quiet", "-q", action="store_true", help="Only log warnings and errors")

    subparsers = parser.add_subparsers(dest="command")

    _add_run_options(subparsers.add_parser("analyze", help="Run the full noise-impact workflow"))
    _add_run_options(subparsers.add_parser("discretize", help="Thresholds, limits and noisy-area share per method"))
    _add_run_options(subparsers.add_parser("complexity", help="Complexity measures per quantum"))
    experiment = subparsers.add_parser("experiment", help="Oversampling and noisy-area-to-extremes experiments")
    _add_run_options(experiment)
    experiment.add_argument("--which", choices=["oversample", "noisy-to-extremes", "all"], default="all")

    generate = subparsers.add_parser("generate", help="Write a synthetic dataset with a planted noise band")
    generate.add_argument("--output", type=Path, required=True, help="CSV file to write")
    generate.add_argument("--rows", type=int, default=2000)
    generate.add_argument("--features", type=int, default=5)
    generate.add_argument("--noise-band", type=float, default=10.0, help="Band half-width in percent of the median")
    generate.add_argument("--signal", type=float, default=1.0, help="Signal strength")
    generate.add_argument("--seed", type=int, default=0)
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Config-shaped mapping of the flags that were given."""
    return {
        "input": {"path": args.input, "target": args.target},
        "discretization": {
            "threshold_method": args.threshold_method,
            "cutpoint": args.cutpoint,
            "step_size": args.step_size,
            "limit": args.limit,
            "extremes": args.extremes,
            "n_bins": args.n_bins,
        },
        "preprocess": {"rho_threshold": args.rho_threshold, "r2_threshold": args.r2_threshold},
        "learner": {"classifier": args.classifier, "reuse_x0_params": args.reuse_x0_params},
        "bootstrap": {"n_boot": args.bootstraps, "measure": args.measure},
        "interpretation": {"top_k": args.top_k, "absolute_rank_diff": args.absolute_rank_diff},
        "experiments": {"over_sample": args.oversample},
        "output": {"dir": args.out},
        "runtime": {"seed": args.seed, "jobs": args.jobs},
    }


def _log_level(args: argparse.Namespace, configured: str) -> str:
    if args.verbose:
        return "DEBUG"
    if args.quiet:
        return "WARNING"
    return configured


def _run(args: argparse.Namespace) -> int:
    if args.command == "generate":
        utils.configure_logging(_log_level(args, "INFO"))
        return core.run_generate(args.output, args.rows, args.features, args.noise_band, args.signal, args.seed)

    data = config_module.load_config(args.config, overrides_from_args(args))
    cfg = config_module.RunConfig.from_mapping(data)
    utils.configure_logging(_log_level(args, cfg.log_level))
    logger.debug("effective config: %s", cfg.to_dict())
    if args.command == "analyze":
        return core.run_analyze(cfg)
    if args.command == "discretize":
        return core.run_discretize(cfg)
    if args.command == "complexity":
        return core.run_complexity(cfg)
    return core.run_experiment(cfg, args.which)


def main(argv: Optional[List[str]] = None) -> None:
    """Main CLI entry point."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return

    try:
        code = _run(args)
    except KeyboardInterrupt:
        print("\nInterrupted", file=sys.stderr)
        sys.exit(130)
    except NoisegateError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        sys.exit(exc.exit_code)
    except Exception as exc:
        logger.exception("unexpected failure")
        print(f"Error: {exc}", file=sys.stderr)
        sys.exit(1)
    if code:
        sys.exit(code)


if __name__ == "__main__":  # pragma: no cover
    main()
