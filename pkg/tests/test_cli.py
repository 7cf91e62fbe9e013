import csv

import numpy as np
import pandas as pd
import pytest

from multihte.cli import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, main


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_simulate_flags(tmp_path, capsys):
    code = main(["simulate", "--n", "60", "--p", "4", "--m", "3", "--r", "1,2", "--rho1", "0,1/3",
                 "--replications", "1", "--seed", "5", "--out", str(tmp_path), "--jobs", "1",
                 "--methods", "R3W,MW"])
    assert code == EXIT_OK
    assert len(rows(tmp_path / "results.csv")) == 1 + 2 * 2 * 2
    assert "results" in capsys.readouterr().out


def test_simulate_config_file_with_override(tmp_path):
    cfg = tmp_path / "study.yaml"
    cfg.write_text(f"n: [60]\np: [4]\nm: [3]\nr: [2]\nreplications: 3\nmaster_seed: 1\njobs: 1\n"
                   f"methods: [R3W]\nout: {tmp_path / 'x'}\n")
    assert main(["simulate", "--config", str(cfg), "--replications", "2"]) == EXIT_OK
    assert len(rows(tmp_path / "x" / "results.csv")) == 3


def test_simulate_missing_mandatory(tmp_path, capsys):
    assert main(["simulate", "--n", "60", "--out", str(tmp_path)]) == EXIT_INVALID
    err = capsys.readouterr().err
    assert "--seed" in err and "--jobs" in err and "--methods" in err


def test_simulate_bad_method(tmp_path):
    assert main(["simulate", "--seed", "1", "--out", str(tmp_path), "--jobs", "1", "--methods", "Lasso"]) == EXIT_INVALID


def test_gen_data_then_analyze(tmp_path):
    assert main(["gen-data", "--n", "90", "--p", "5", "--m", "3", "--r", "2", "--seed", "2",
                 "--replications", "2", "--out", str(tmp_path / "d")]) == EXIT_OK
    files = sorted((tmp_path / "d").glob("*_rep1.csv"))
    assert len(files) == 1
    code = main(["analyze", "--data", str(files[0]), "--treatment", "t", "--outcomes", "y1,y2,y3",
                 "--covariates", "x1,x2,x3,x4,x5", "--rank", "2", "--out", str(tmp_path / "a"),
                 "--standardize", "--with-r3amod"])
    assert code == EXIT_OK
    assert (tmp_path / "a" / "r3amod_effects.csv").exists()


def test_analyze_validation_error(tmp_path):
    assert main(["analyze", "--data", str(tmp_path / "none.csv"), "--treatment", "t",
                 "--outcomes", "y", "--covariates", "x", "--rank", "1", "--out", str(tmp_path)]) == EXIT_INVALID


def test_analyze_runtime_failure(tmp_path, capsys):
    rng = np.random.default_rng(0)
    df = pd.DataFrame({"t": rng.integers(0, 2, 50), "y": rng.integers(0, 2, 50), "x": 1.0})
    df.to_csv(tmp_path / "flat.csv", index=False)
    code = main(["analyze", "--data", str(tmp_path / "flat.csv"), "--treatment", "t", "--outcomes", "y",
                 "--covariates", "x", "--rank", "1", "--out", str(tmp_path / "o")])
    assert code == EXIT_RUNTIME
    assert "ridge" in capsys.readouterr().err


def test_analyze_config_file(tmp_path):
    rng = np.random.default_rng(1)
    df = pd.DataFrame(rng.standard_normal((80, 3)), columns=["a", "b", "c"])
    df["arm"] = rng.integers(0, 2, 80)
    df["o1"] = rng.integers(0, 2, 80)
    df["o2"] = rng.normal(size=80)
    df.to_csv(tmp_path / "d.csv", index=False)
    cfg = tmp_path / "an.yaml"
    cfg.write_text(f"data: {tmp_path / 'd.csv'}\ntreatment: arm\noutcomes: [o1, o2]\ndichotomize: [o2]\n"
                   f"covariates: [a, b, c]\nrank: 1\nout: {tmp_path / 'o'}\n")
    assert main(["analyze", "--config", str(cfg), "--threshold", "0.05"]) == EXIT_OK
    assert (tmp_path / "o" / "W_thresholded.csv").exists()


def test_unknown_subcommand():
    with pytest.raises(SystemExit):
        main(["plot"])
