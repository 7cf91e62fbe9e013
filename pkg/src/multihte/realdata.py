"""Real-data analysis on a user-supplied trial CSV, plus simulated-dataset dumps."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from .data import TrialData, center_columns, estimate_propensity, to_pm1
from .effects import corrected_effect, raw_effect
from .errors import DataValidationError
from .simulation import SimulatedDataset
from .solver import SolverOptions, fit_r3a, fit_r3w


@dataclass
class RealDataConfig:
    """Column roles and fit settings for :func:`run_real_data`.

    ``dichotomize`` lists the outcome columns to split at their median
    (value > median -> 1); the others must already be 0/1.  ``propensity``
    is ``"constant"``, ``"empirical"``, ``"logistic"`` or ``"column"`` (read
    from ``propensity_column``).
    """

    data: str
    treatment: str
    outcomes: list
    covariates: list
    treated_level: object = 1
    dichotomize: list = field(default_factory=list)
    rank: int = 2
    propensity: str = "constant"
    propensity_constant: float = 0.5
    propensity_column: str | None = None
    threshold: float = 0.1
    standardize: bool = False
    with_r3amod: bool = False
    out: str = "analysis_out"
    tol: float = 1e-6
    max_iter: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not self.outcomes or not self.covariates:
            raise DataValidationError("need at least one outcome and one covariate column")
        roles = [[self.treatment], list(self.outcomes), list(self.covariates)]
        if self.propensity_column:
            roles.append([self.propensity_column])
        flat = [c for group in roles for c in group]
        dup = sorted({c for c in flat if flat.count(c) > 1})
        if dup:
            raise DataValidationError(f"columns assigned to more than one role: {dup}")
        extra = set(self.dichotomize) - set(self.outcomes)
        if extra:
            raise DataValidationError(f"dichotomize names non-outcome columns: {sorted(extra)}")
        if not 1 <= self.rank <= min(len(self.outcomes), len(self.covariates)):
            raise DataValidationError(
                f"rank {self.rank} must lie in [1, min(#outcomes, #covariates)]"
            )
        if self.propensity == "column" and not self.propensity_column:
            raise DataValidationError("propensity='column' needs propensity_column")

    @classmethod
    def from_yaml(cls, path, **overrides):
        with open(path, encoding="utf-8") as fh:
            mapping = yaml.safe_load(fh) or {}
        mapping.update({k: v for k, v in overrides.items() if v is not None})
        unknown = set(mapping) - set(cls.__dataclass_fields__)
        if unknown:
            raise DataValidationError(f"unknown analysis config keys: {sorted(unknown)}")
        return cls(**mapping)


def median_dichotomize(values):
    """``1`` where the value exceeds the column median, else ``0``."""
    values = np.asarray(values, dtype=float)
    return (values > np.median(values)).astype(float)


def _numeric_column(df, name):
    col = pd.to_numeric(df[name], errors="coerce")
    bad = col.isna() & df[name].notna()
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise DataValidationError(
            f"non-numeric value {df[name].iloc[row]!r} in column {name!r} at data row {row + 1}"
        )
    if col.isna().any():
        row = int(np.flatnonzero(col.isna().to_numpy())[0])
        raise DataValidationError(f"missing value in column {name!r} at data row {row + 1}")
    return col.to_numpy(dtype=float)


def _coerce_level(level, column):
    if pd.api.types.is_numeric_dtype(column):
        try:
            return float(level)
        except (TypeError, ValueError):
            raise DataValidationError(f"treated level {level!r} is not numeric but the column is")
    return str(level)


def load_dataset_csv(config: RealDataConfig) -> TrialData:
    path = Path(config.data)
    if not path.is_file():
        raise DataValidationError(f"data file {path} does not exist")
    df = pd.read_csv(path, float_precision="round_trip")
    needed = [config.treatment, *config.outcomes, *config.covariates]
    if config.propensity == "column":
        needed.append(config.propensity_column)
    missing = [c for c in needed if c not in df.columns]
    if missing:
        raise DataValidationError(f"columns not found in {path.name}: {missing}")
    if len(df) < 2:
        raise DataValidationError("need at least two rows")

    tcol = df[config.treatment]
    if tcol.isna().any():
        raise DataValidationError(f"missing treatment value at data row {int(np.flatnonzero(tcol.isna())[0]) + 1}")
    t = to_pm1(tcol.to_numpy(), _coerce_level(config.treated_level, tcol))

    Y = np.empty((len(df), len(config.outcomes)))
    for j, name in enumerate(config.outcomes):
        col = _numeric_column(df, name)
        if name in config.dichotomize:
            col = median_dichotomize(col)
        elif not np.all(np.isin(col, (0.0, 1.0))):
            raise DataValidationError(f"outcome {name!r} is not 0/1; list it under dichotomize")
        if np.all(col == col[0]):
            raise DataValidationError(f"outcome {name!r} is constant after dichotomization")
        Y[:, j] = col

    X_raw = np.column_stack([_numeric_column(df, c) for c in config.covariates])
    X = center_columns(X_raw)
    if config.standardize:
        sd = X.std(axis=0, ddof=1)
        if np.any(sd == 0):
            const = [c for c, s in zip(config.covariates, sd) if s == 0]
            raise DataValidationError(f"cannot standardize constant covariates {const}")
        X = X / sd

    if config.propensity == "column":
        pi = _numeric_column(df, config.propensity_column)
    else:
        pi = estimate_propensity(X, t, config.propensity, config.propensity_constant).predict(X)
    return TrialData(X, Y, t, pi)


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _num(x):
    return repr(float(x))


def _write_loadings(out, prefix, fit, config):
    r = fit.coeffs.r
    dims = [f"dim{k + 1}" for k in range(r)]
    V, W = fit.coeffs.V, fit.coeffs.W
    _write_rows(out / f"{prefix}V.csv", ["outcome", *dims],
                [[name, *map(_num, V[j])] for j, name in enumerate(config.outcomes)])
    _write_rows(out / f"{prefix}W.csv", ["covariate", *dims],
                [[name, *map(_num, W[k])] for k, name in enumerate(config.covariates)])
    _write_rows(out / f"{prefix}W_thresholded.csv", ["covariate", *dims],
                [[name, *(_num(w) if abs(w) >= config.threshold else "" for w in W[k])]
                 for k, name in enumerate(config.covariates)])


def _write_effects(path, H, config):
    _write_rows(path, ["id", *config.outcomes, "score"],
                [[i + 1, *map(_num, row), _num(row.sum())] for i, row in enumerate(H)])


def run_real_data(config: RealDataConfig):
    """Fit R3W (and optionally R3A with bias correction) and write the report CSVs.

    Returns a dict with the loaded data and the fit results.
    """
    data = load_dataset_csv(config)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    options = SolverOptions(rank=config.rank, tol=config.tol, max_iter=config.max_iter, init_seed=config.seed)

    fits = {"R3W": fit_r3w(data, options)}
    _write_loadings(out, "", fits["R3W"], config)
    _write_effects(out / "effects.csv", raw_effect(fits["R3W"].coeffs, data.X).H, config)
    if config.with_r3amod:
        fits["R3A"] = fit_r3a(data, options)
        _write_loadings(out, "r3a_", fits["R3A"], config)
        _write_effects(out / "r3amod_effects.csv",
                       corrected_effect(fits["R3A"].coeffs, data.X, data.pi).H, config)

    meta = []
    for name, fit in fits.items():
        for k, val in enumerate(fit.objective_trace):
            meta.append([name, k, _num(val), "true" if fit.converged else "false",
                         fit.iterations, _num(fit.ridge)])
    _write_rows(out / "fit_meta.csv", ["method", "iteration", "objective", "converged", "iterations", "ridge"], meta)
    return {"data": data, "fits": fits, "out": out}


def dump_dataset(ds: SimulatedDataset, path_prefix):
    """Write ``<prefix>.csv`` (``id,t,pi,y1..ym,x1..xp``) and ``<prefix>_truth.csv`` (``id,h1..hm``)."""
    prefix = Path(path_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    d = ds.data
    ys = [f"y{j + 1}" for j in range(d.m)]
    xs = [f"x{k + 1}" for k in range(d.p)]
    rows = [[i + 1, int(d.t[i]), _num(d.pi[i]), *(int(v) for v in d.Y[i]), *map(_num, d.X[i])]
            for i in range(d.n)]
    data_path = prefix.with_name(prefix.name + ".csv")
    truth_path = prefix.with_name(prefix.name + "_truth.csv")
    _write_rows(data_path, ["id", "t", "pi", *ys, *xs], rows)
    _write_rows(truth_path, ["id", *[f"h{j + 1}" for j in range(d.m)]],
                [[i + 1, *map(_num, ds.H_true[i])] for i in range(d.n)])
    return data_path, truth_path
