"""Command line front end.

Subcommands:

  gen         generate a calibrated Gaussian mixture dataset
  inject      mask coordinates of a complete dataset
  fit         cluster one dataset and write the fit as JSON
  run         run a replicated experiment from a JSON config
  summarize   aggregate a records.csv into summary statistics
  demo-fig1   produce the two-cluster illustration tables

Exit status is 0 on success, 1 for configuration problems (bad flags,
malformed config or input files), and 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys

from .data import (
    ALGORITHMS,
    ConfigurationError,
    EngineConfig,
    read_dataset_csv,
    write_dataset_csv,
)
from .clustering import fit as fit_engine
from .datagen import (
    LoadError,
    MissingnessPlan,
    MixtureSpec,
    generate_mixture,
    inject_missing,
    load_iris,
)
from .harness import (
    DEFAULT_FIGURE_SEED,
    config_from_json,
    demo_figure1,
    records_from_csv,
    run_experiment,
    summarize,
    summary_to_csv,
)
from .imputation import IMPUTATION_METHODS, ImputationConfig, impute

__all__ = ["main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; those are configuration
    # problems here, so route them through ConfigurationError instead.
    def error(self, message):
        raise ConfigurationError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kmahal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a calibrated mixture dataset")
    gen.add_argument("--n-clusters", type=int, required=True)
    gen.add_argument("--n-coords", type=int, required=True)
    gen.add_argument("--n-rows", type=int, required=True)
    gen.add_argument("--target-overlap", type=float, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--mc-samples", type=int, default=20000)
    gen.add_argument("--calibration-rel-tol", type=float, default=0.1)
    gen.add_argument("--out", required=True, help="output dataset CSV")
    gen.add_argument("--metadata", help="optional JSON file for calibration details")

    inject = sub.add_parser("inject", help="mask coordinates of a complete dataset")
    inject.add_argument("--data", required=True, help="input dataset CSV")
    inject.add_argument(
        "--coords",
        type=int,
        action="append",
        required=True,
        help="1-based coordinate to mask (repeat for a second coordinate)",
    )
    inject.add_argument("--d-percent", type=float, required=True)
    inject.add_argument(
        "--shared-rows",
        action="store_true",
        help="mask the same rows in every listed coordinate",
    )
    inject.add_argument("--seed", type=int, default=0)
    inject.add_argument("--out", required=True)

    fit_cmd = sub.add_parser("fit", help="cluster one dataset")
    fit_cmd.add_argument("--data", help="input dataset CSV (default: bundled iris)")
    fit_cmd.add_argument("--algorithm", choices=ALGORITHMS, default="kmahal")
    fit_cmd.add_argument("--n-clusters", type=int, required=True)
    fit_cmd.add_argument("--restarts", type=int, default=1)
    fit_cmd.add_argument("--seed", type=int, default=0)
    fit_cmd.add_argument("--epsilon0", type=float, default=1e-6)
    fit_cmd.add_argument("--max-iter", type=int, default=200)
    fit_cmd.add_argument("--cov-floor", type=float, default=1e-6)
    fit_cmd.add_argument(
        "--prefer-high-criterion-a",
        action="store_true",
        help="pick the restart with the largest criterion instead of the smallest",
    )
    fit_cmd.add_argument(
        "--imputation",
        choices=IMPUTATION_METHODS,
        help="initial fill for missing cells (default: column means)",
    )
    fit_cmd.add_argument("--out", required=True, help="output fit JSON")

    run = sub.add_parser("run", help="run a replicated experiment")
    run.add_argument("--config", required=True, help="experiment config JSON")
    run.add_argument("--output-dir", help="override the config's output_dir")
    run.add_argument(
        "--log-restarts",
        action="store_true",
        help="also write restarts.csv with every per-restart metric",
    )

    summ = sub.add_parser("summarize", help="aggregate records.csv")
    summ.add_argument("--records", required=True)
    summ.add_argument("--out", required=True, help="output summary CSV")

    demo = sub.add_parser("demo-fig1", help="two-cluster illustration tables")
    demo.add_argument("--seed", type=int, default=DEFAULT_FIGURE_SEED)
    demo.add_argument("--output-dir", required=True)
    return parser


def _cmd_gen(args) -> None:
    spec = MixtureSpec(
        n_clusters=args.n_clusters,
        n_coords=args.n_coords,
        n_rows=args.n_rows,
        target_overlap=args.target_overlap,
        seed=args.seed,
        mc_samples=args.mc_samples,
        calibration_rel_tol=args.calibration_rel_tol,
    )
    ds, info = generate_mixture(spec, return_info=True)
    write_dataset_csv(ds, args.out)
    if args.metadata:
        payload = {
            "achieved_overlap": info.achieved_overlap,
            "mean_scale": info.scale,
            "n_clusters": spec.n_clusters,
            "n_coords": spec.n_coords,
            "n_rows": spec.n_rows,
            "seed": spec.seed,
            "target_overlap": spec.target_overlap,
        }
        with open(args.metadata, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(f"wrote {args.out} (achieved overlap {info.achieved_overlap:.6g})")


def _cmd_inject(args) -> None:
    ds = read_dataset_csv(args.data)
    plan = MissingnessPlan(
        coords=tuple(args.coords),
        d_percent=args.d_percent,
        per_coordinate=not args.shared_rows,
    )
    out = inject_missing(ds, plan, args.seed)
    write_dataset_csv(out, args.out)
    print(f"wrote {args.out} ({out.n_missing_cells} masked cells)")


def _cmd_fit(args) -> None:
    ds = read_dataset_csv(args.data) if args.data else load_iris()
    cfg = EngineConfig(
        algorithm=args.algorithm,
        n_clusters=args.n_clusters,
        epsilon0=args.epsilon0,
        max_iter=args.max_iter,
        restarts=args.restarts,
        cov_floor=args.cov_floor,
        seed=args.seed,
        prefer_high_criterion_a=args.prefer_high_criterion_a,
    )
    initial_fill = None
    if args.imputation and not ds.complete:
        initial_fill = impute(ds, ImputationConfig(method=args.imputation))
    result = fit_engine(ds, cfg, initial_fill=initial_fill)
    with open(args.out, "w") as fh:
        fh.write(result.to_document())
        fh.write("\n")
    print(
        f"wrote {args.out} (objective {result.objective:.6g}, "
        f"{result.iterations} iterations, converged={result.converged})"
    )


def _cmd_run(args) -> None:
    with open(args.config) as fh:
        cfg = config_from_json(fh.read())
    if args.output_dir:
        from dataclasses import replace

        cfg = replace(cfg, output_dir=args.output_dir)
    records = run_experiment(cfg, log_restarts=args.log_restarts)
    failures = sum(1 for rec in records if rec.error)
    where = cfg.output_dir or "(no output_dir: results not written)"
    print(f"{len(records)} records, {failures} failures -> {where}")


def _cmd_summarize(args) -> None:
    with open(args.records) as fh:
        records = records_from_csv(fh.read())
    rows = summarize(records)
    with open(args.out, "w", newline="") as fh:
        fh.write(summary_to_csv(rows))
    print(f"wrote {args.out} ({len(rows)} rows)")


def _cmd_demo(args) -> None:
    out = demo_figure1(seed=args.seed, output_dir=args.output_dir)
    counts = ", ".join(f"{k}={v}" for k, v in sorted(out["misclassified"].items()))
    print(f"wrote {args.output_dir} (masked cells {out['mask_count']}; errors {counts})")


_COMMANDS = {
    "gen": _cmd_gen,
    "inject": _cmd_inject,
    "fit": _cmd_fit,
    "run": _cmd_run,
    "summarize": _cmd_summarize,
    "demo-fig1": _cmd_demo,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _COMMANDS[args.command](args)
    except (ValueError, LoadError, FileNotFoundError, IsADirectoryError, NotADirectoryError) as exc:
        # ConfigurationError and CSV/JSON parse errors are ValueErrors.
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
