"""Simulation-study runner: scenario grid x replications x methods -> CSV files.

Output files (all UTF-8, comma separated, with headers):

``results.csv``
    One row per successful (cell, replication, method).
``errors.csv``
    One row per failed (cell, replication, method) with the reason.
``summary.csv``
    Per cell and method: medians and quartiles of the metrics.
``roc_points.csv``
    Per cell and method: ROC curve of the scores pooled over replications.
"""
from __future__ import annotations

import csv
import itertools
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import MISSING, asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .baselines import fit_full, fit_ma, fit_mw, full_effect
from .effects import METHOD_TAGS, corrected_effect, corrected_effect_univariate, linear_effect, raw_effect
from .errors import DataValidationError, HTEError
from .evaluation import classification_rates, mse, roc_and_auc, subject_scores
from .simulation import ASSIGNMENTS, ScenarioConfig, fit_seed, generate_scenario
from .solver import SolverOptions, fit_r3a, fit_r3w

logger = logging.getLogger(__name__)

RESULTS_HEADER = [
    "scenario_id", "n", "p", "m", "r", "rho1", "rho2", "assignment", "replication",
    "method", "mse", "fpr", "fnr", "auc", "iterations", "converged", "seconds",
]
ERRORS_HEADER = ["scenario_id", "replication", "method", "reason"]
SUMMARY_HEADER = [
    "scenario_id", "n", "p", "m", "r", "rho1", "rho2", "assignment", "method", "n_ok",
    "mse_median", "mse_q1", "mse_q3", "auc_median", "auc_q1", "auc_q3", "auc_mean",
    "fpr_median", "fnr_median",
]
ROC_HEADER = ["scenario_id", "method", "threshold", "fpr", "tpr"]

# which fit each reported method is derived from
_BASE_FIT = {"Full": "Full", "MA": "MA", "MAmod": "MA", "MW": "MW", "R3A": "R3A", "R3Amod": "R3A", "R3W": "R3W"}


@dataclass
class StudyConfig:
    n: list = field(default_factory=lambda: [500])
    p: list = field(default_factory=lambda: [10])
    m: list = field(default_factory=lambda: [10])
    r: list = field(default_factory=lambda: [3])
    rho1: list = field(default_factory=lambda: [0.0])
    rho2: list = field(default_factory=lambda: [0.0])
    assignment: list = field(default_factory=lambda: ["rct"])
    methods: list = field(default_factory=lambda: list(METHOD_TAGS))
    replications: int = 100
    master_seed: int = 0
    out: str = "study_out"
    jobs: int = 1
    tol: float = 1e-6
    max_iter: int = 1000
    freeze_truth: bool = False

    def __post_init__(self):
        unknown = [mt for mt in self.methods if mt not in METHOD_TAGS]
        if unknown:
            raise DataValidationError(f"unknown methods {unknown}; choose from {list(METHOD_TAGS)}")
        if not self.methods:
            raise DataValidationError("method set is empty")
        bad = [a for a in self.assignment if a not in ASSIGNMENTS]
        if bad:
            raise DataValidationError(f"unknown assignment modes {bad}")
        if self.replications < 1:
            raise DataValidationError("replications must be >= 1")
        if self.jobs < 1:
            raise DataValidationError("jobs must be >= 1")
        if not self.cells():
            raise DataValidationError("scenario grid is empty (check that r <= min(p, m))")

    def cells(self):
        out = []
        for n, p, m, r, rho1, rho2, assignment in itertools.product(
            self.n, self.p, self.m, self.r, self.rho1, self.rho2, self.assignment
        ):
            if r > min(p, m):
                continue
            out.append(ScenarioConfig(
                int(n), int(p), int(m), int(r), float(rho1), float(rho2), assignment,
                self.replications, self.master_seed, self.freeze_truth,
            ))
        return out

    def ordered_methods(self):
        return [mt for mt in METHOD_TAGS if mt in self.methods]

    @classmethod
    def from_mapping(cls, mapping):
        allowed = set(cls.__dataclass_fields__)
        unknown = set(mapping) - allowed
        if unknown:
            raise DataValidationError(f"unknown study config keys: {sorted(unknown)}")
        kwargs = {}
        for key, value in mapping.items():
            is_list = cls.__dataclass_fields__[key].default_factory is not MISSING
            if is_list and not isinstance(value, list):
                value = [value]
            kwargs[key] = value
        return cls(**kwargs)

    @classmethod
    def from_yaml(cls, path, **overrides):
        with open(path, encoding="utf-8") as fh:
            mapping = yaml.safe_load(fh) or {}
        mapping.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(mapping)


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _fit_base(name, data, options):
    """Fit one base estimator; returns (payload, iterations, converged)."""
    if name == "R3W":
        fit = fit_r3w(data, options)
        return fit, fit.iterations, fit.converged
    if name == "R3A":
        fit = fit_r3a(data, options)
        return fit, fit.iterations, fit.converged
    if name == "MW":
        fit = fit_mw(data, options)
        return fit, int(fit.iterations.max()), bool(fit.converged.all())
    if name == "MA":
        fit = fit_ma(data, options)
        return fit, int(fit.iterations.max()), bool(fit.converged.all())
    if name == "Full":
        fit = fit_full(data)
        return fit, int(fit.iterations.max()), True
    raise ValueError(name)


def _effect(method, fit, data):
    X = data.X
    if method == "R3W":
        return raw_effect(fit.coeffs, X, "R3W")
    if method == "R3A":
        return raw_effect(fit.coeffs, X, "R3A")
    if method == "R3Amod":
        return corrected_effect(fit.coeffs, X, data.pi, "R3Amod")
    if method == "MW":
        return linear_effect(fit.gamma, X, "MW")
    if method == "MA":
        return linear_effect(fit.gamma, X, "MA")
    if method == "MAmod":
        return corrected_effect_univariate(fit.gamma, X, data.pi, "MAmod")
    if method == "Full":
        return full_effect(fit, X, "Full")
    raise ValueError(method)


def run_cell_replication(cell: ScenarioConfig, replication, methods, tol=1e-6, max_iter=1000):
    """Evaluate every requested method on one simulated dataset.

    Returns ``(rows, errors, scores)`` where ``scores`` maps method to
    ``(s_hat, s_true)`` for pooling ROC curves.
    """
    rows, errors, scores = [], [], {}
    try:
        ds = generate_scenario(cell, replication)
    except (HTEError, np.linalg.LinAlgError) as exc:
        return [], [[cell.scenario_id, replication, mt, f"data generation: {exc}"] for mt in methods], {}
    data = ds.data
    s_true = subject_scores(ds.H_true)
    options = SolverOptions(rank=cell.r, tol=tol, max_iter=max_iter, init_seed=fit_seed(cell, replication))

    fits = {}
    for base in dict.fromkeys(_BASE_FIT[mt] for mt in methods):
        t0 = time.perf_counter()
        try:
            fits[base] = (*_fit_base(base, data, options), time.perf_counter() - t0)
        except (HTEError, np.linalg.LinAlgError) as exc:
            fits[base] = exc

    for mt in methods:
        base = fits[_BASE_FIT[mt]]
        if isinstance(base, Exception):
            errors.append([cell.scenario_id, replication, mt, f"{type(base).__name__}: {base}"])
            continue
        fit, iterations, converged, seconds = base
        t0 = time.perf_counter()
        try:
            H = _effect(mt, fit, data).H
            s_hat = subject_scores(H)
            fpr, fnr, _ = classification_rates(s_hat, s_true, 0.0)
            auc = roc_and_auc(s_hat, s_true).auc
            err = mse(H, ds.H_true)
        except HTEError as exc:
            errors.append([cell.scenario_id, replication, mt, f"{type(exc).__name__}: {exc}"])
            continue
        seconds += time.perf_counter() - t0
        rows.append([
            cell.scenario_id, cell.n, cell.p, cell.m, cell.r, cell.rho1, cell.rho2, cell.assignment,
            replication, mt, err, fpr, fnr, auc, iterations, converged, seconds,
        ])
        scores[mt] = (s_hat, s_true)
    return rows, errors, scores


def _task(args):
    cell, replication, methods, tol, max_iter = args
    return run_cell_replication(cell, replication, methods, tol, max_iter)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _quantiles(values):
    if not values:
        return ["", "", ""]
    q1, med, q3 = np.percentile(values, [25, 50, 75])
    return [med, q1, q3]


def run_simulation_study(config: StudyConfig):
    """Run the study and write the CSV outputs into ``config.out``.

    Output is a pure function of the config (seed included), independent of
    ``config.jobs``.  Returns a dict of output paths.
    """
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise DataValidationError(f"output directory {out} is not writable")
    cells = config.cells()
    methods = config.ordered_methods()
    tasks = [(cell, rep, methods, config.tol, config.max_iter)
             for cell in cells for rep in range(config.replications)]
    logger.info("running %d cells x %d replications x %d methods", len(cells), config.replications, len(methods))

    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(_task, tasks, chunksize=1))
    else:
        outcomes = [_task(t) for t in tasks]

    results, errors = [], []
    pooled = {}
    for (cell, rep, *_), (rows, errs, scores) in zip(tasks, outcomes):
        results.extend(rows)
        errors.extend(errs)
        for mt, (s_hat, s_true) in scores.items():
            pooled.setdefault((cell.scenario_id, mt), []).append((s_hat, s_true))

    paths = {name: out / f"{name}.csv" for name in ("results", "errors", "summary", "roc_points")}
    _write_csv(paths["results"], RESULTS_HEADER, results)
    _write_csv(paths["errors"], ERRORS_HEADER, errors)

    summary = []
    for cell in cells:
        for mt in methods:
            sel = [row for row in results if row[0] == cell.scenario_id and row[9] == mt]
            mses = [row[10] for row in sel]
            aucs = [row[13] for row in sel]
            fprs = [row[11] for row in sel]
            fnrs = [row[12] for row in sel]
            summary.append([
                cell.scenario_id, cell.n, cell.p, cell.m, cell.r, cell.rho1, cell.rho2, cell.assignment, mt,
                len(sel), *_quantiles(mses), *_quantiles(aucs),
                float(np.mean(aucs)) if aucs else "",
                float(np.median(fprs)) if fprs else "",
                float(np.median(fnrs)) if fnrs else "",
            ])
    _write_csv(paths["summary"], SUMMARY_HEADER, summary)

    roc_rows = []
    for cell in cells:
        for mt in methods:
            parts = pooled.get((cell.scenario_id, mt))
            if not parts:
                continue
            s_hat = np.concatenate([a for a, _ in parts])
            s_true = np.concatenate([b for _, b in parts])
            curve = roc_and_auc(s_hat, s_true)
            for th, f, t in zip(curve.thresholds, curve.fpr, curve.tpr):
                roc_rows.append([cell.scenario_id, mt, float(th), float(f), float(t)])
    _write_csv(paths["roc_points"], ROC_HEADER, roc_rows)

    with open(out / "config_used.yaml", "w", encoding="utf-8") as fh:
        yaml.safe_dump(asdict(config), fh, sort_keys=True)
    return paths
