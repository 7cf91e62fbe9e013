"""Command-line entry point: ``multihte {simulate, analyze, gen-data}``.

Exit status is 0 on success, 1 on invalid input or configuration and 2 on
a runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

import yaml

from .errors import ConvergenceError, DataValidationError, HTEError, IllConditionedError, NumericError
from .realdata import RealDataConfig, dump_dataset, run_real_data
from .simulation import generate_scenario
from .study import StudyConfig, run_simulation_study

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("multihte")


def _csv_list(kind=str):
    def parse(text):
        return [kind(x) for x in text.split(",") if x.strip()]
    return parse


def _fraction(text):
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _add_grid_args(p):
    p.add_argument("--config", help="YAML file with the same keys as the long options")
    p.add_argument("--n", type=_csv_list(int), help="sample sizes, comma separated")
    p.add_argument("--p", type=_csv_list(int), help="numbers of covariates")
    p.add_argument("--m", type=_csv_list(int), help="numbers of outcomes")
    p.add_argument("--r", type=_csv_list(int), help="ranks")
    p.add_argument("--rho1", type=_csv_list(_fraction), help="covariate correlations, e.g. 0,1/3,2/3")
    p.add_argument("--rho2", type=_csv_list(_fraction), help="error correlations")
    p.add_argument("--assignment", type=_csv_list(), help="rct and/or observational")
    p.add_argument("--replications", type=int)
    p.add_argument("--seed", type=int, dest="master_seed", help="master seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--freeze-truth", action="store_true", default=None,
                   help="draw (D, W, V) once per cell instead of once per replication")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="multihte",
        description="Reduced-rank logistic HTE estimation for multiple binary outcomes.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a simulation study over a scenario grid")
    _add_grid_args(sim)
    sim.add_argument("--jobs", type=int, help="worker processes")
    sim.add_argument("--methods", type=_csv_list(), help="subset of Full,MA,MAmod,MW,R3A,R3Amod,R3W")
    sim.add_argument("--tol", type=float)
    sim.add_argument("--max-iter", type=int, dest="max_iter")

    gen = sub.add_parser("gen-data", help="dump simulated datasets as CSV")
    _add_grid_args(gen)

    ana = sub.add_parser("analyze", help="fit R3W (optionally R3Amod) to a trial CSV")
    ana.add_argument("--config")
    ana.add_argument("--data", help="input CSV")
    ana.add_argument("--treatment", help="treatment column")
    ana.add_argument("--treated-level", dest="treated_level", help="value of the treatment column coded +1")
    ana.add_argument("--outcomes", type=_csv_list())
    ana.add_argument("--dichotomize", type=_csv_list(), help="outcomes to split at the median")
    ana.add_argument("--covariates", type=_csv_list())
    ana.add_argument("--rank", type=int)
    ana.add_argument("--propensity", choices=["constant", "empirical", "logistic", "column"])
    ana.add_argument("--propensity-constant", type=float, dest="propensity_constant")
    ana.add_argument("--propensity-column", dest="propensity_column")
    ana.add_argument("--threshold", type=float, help="blank |W| entries below this in W_thresholded.csv")
    ana.add_argument("--standardize", action="store_true", default=None)
    ana.add_argument("--with-r3amod", action="store_true", default=None, dest="with_r3amod")
    ana.add_argument("--out")
    ana.add_argument("--seed", type=int)
    ana.add_argument("--tol", type=float)
    ana.add_argument("--max-iter", type=int, dest="max_iter")
    return parser


def _merged(args, keys):
    mapping = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            mapping = yaml.safe_load(fh) or {}
        if not isinstance(mapping, dict):
            raise DataValidationError(f"{args.config} must contain a mapping")
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    return mapping


_GRID_KEYS = ["n", "p", "m", "r", "rho1", "rho2", "assignment", "replications", "master_seed", "out", "freeze_truth"]


def cmd_simulate(args):
    mapping = _merged(args, _GRID_KEYS + ["jobs", "methods", "tol", "max_iter"])
    missing = [flag for flag, key in (("--seed", "master_seed"), ("--out", "out"), ("--jobs", "jobs"),
                                      ("--methods", "methods")) if key not in mapping]
    if missing:
        raise DataValidationError(f"required settings missing (flag or config key): {', '.join(missing)}")
    config = StudyConfig.from_mapping(mapping)
    paths = run_simulation_study(config)
    for name, path in paths.items():
        print(f"{name}: {path}")


def cmd_gen_data(args):
    mapping = _merged(args, _GRID_KEYS)
    for flag, key in (("--seed", "master_seed"), ("--out", "out")):
        if key not in mapping:
            raise DataValidationError(f"required setting missing: {flag}")
    mapping.setdefault("replications", 1)
    config = StudyConfig.from_mapping(mapping)
    for cell in config.cells():
        for rep in range(config.replications):
            data_path, truth_path = dump_dataset(generate_scenario(cell, rep), f"{config.out}/{cell.scenario_id}_rep{rep}")
            print(data_path)


_ANALYZE_KEYS = [
    "data", "treatment", "treated_level", "outcomes", "dichotomize", "covariates", "rank", "propensity",
    "propensity_constant", "propensity_column", "threshold", "standardize", "with_r3amod", "out", "seed",
    "tol", "max_iter",
]


def cmd_analyze(args):
    mapping = _merged(args, _ANALYZE_KEYS)
    for key in ("data", "treatment", "outcomes", "covariates"):
        if key not in mapping:
            raise DataValidationError(f"required setting missing: --{key}")
    unknown = set(mapping) - set(RealDataConfig.__dataclass_fields__)
    if unknown:
        raise DataValidationError(f"unknown analysis config keys: {sorted(unknown)}")
    result = run_real_data(RealDataConfig(**mapping))
    fit = result["fits"]["R3W"]
    print(f"R3W: {fit.iterations} iterations, converged={fit.converged}, objective={fit.objective:.6g}")
    print(f"outputs in {result['out']}")


COMMANDS = {"simulate": cmd_simulate, "gen-data": cmd_gen_data, "analyze": cmd_analyze}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (ConvergenceError, NumericError, IllConditionedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc, IllConditionedError):
            print("hint: pass a ridge or drop collinear covariates", file=sys.stderr)
        return EXIT_RUNTIME
    except (HTEError, ValueError, TypeError, FileNotFoundError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
