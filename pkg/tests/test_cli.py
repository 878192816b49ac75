import os

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from dlmf.cli import SUBCOMMANDS, build_parser, main
from dlmf.data import Dataset, ExperimentConfig
from dlmf.io import CSVParseError, emit_config, load_csv, parse_config, write_csv
from dlmf.realdata import (
    run_wine_pipeline,
    split_indices,
    split_real_data,
    standardize_fit_apply,
)

WINE_COLUMNS = ["fixed acidity", "volatile acidity", "citric acid", "residual sugar", "chlorides",
                "free sulfur dioxide", "total sulfur dioxide", "density", "pH", "sulphates",
                "alcohol", "quality"]


def write_wine_like(path, n, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 11)) * np.arange(1, 12) + 10
    y = np.round(5 + x[:, 10] / 10 + rng.normal(size=n))
    with open(path, "w") as fh:
        fh.write(";".join(f'"{c}"' for c in WINE_COLUMNS) + "\n")
        for xi, yi in zip(x, y):
            fh.write(";".join(repr(float(v)) for v in xi) + f";{yi:g}\n")


def test_semicolon_file_with_quoted_header(tmp_path):
    path = tmp_path / "wine.csv"
    write_wine_like(path, 37)
    ds = load_csv(path, ";", "quality")
    assert (ds.n, ds.d) == (37, 11)
    assert ds.feature_names[0] == "fixed acidity"


def test_non_numeric_cell_is_located(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,y\n1,2,3\n4,oops,6\n")
    with pytest.raises(CSVParseError) as err:
        load_csv(path)
    assert (err.value.row, err.value.column) == (2, "b")


def test_missing_target_column(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(KeyError):
        load_csv(path, ",", "quality")


@settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 4)),
              elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_csv_round_trip_is_bit_identical(tmp_path, values):
    ds = Dataset(values[:, 1:] if values.shape[1] > 1 else values, values[:, 0])
    path = tmp_path / "rt.csv"
    write_csv(ds, path)
    back = load_csv(path, ",", "y")
    assert back.x.tobytes() == ds.x.tobytes() and back.y.tobytes() == ds.y.tobytes()


def test_split_sizes():
    s = split_indices(1599, 199, 1)
    assert (s.train.size, s.validation.size, s.test.size) == (199, 280, 1120)
    s = split_indices(10, 6, 1)
    assert (s.train.size, s.validation.size, s.test.size) == (6, 1, 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 300), st.data())
def test_splits_partition_the_rows(n, data):
    n_train = data.draw(st.integers(1, n - 1))
    seed = data.draw(st.integers(0, 2**32))
    s = split_indices(n, n_train, seed)
    rows = np.concatenate([s.train, s.validation, s.test])
    assert np.array_equal(np.sort(rows), np.arange(n))
    again = split_indices(n, n_train, seed)
    assert all(np.array_equal(getattr(s, k), getattr(again, k)) for k in ("train", "validation", "test"))


def test_split_needs_rows_left_over():
    ds = Dataset(np.zeros((5, 1)), np.zeros(5))
    with pytest.raises(ValueError):
        split_real_data(ds, 5, 0)


def test_standardize_examples():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(50, 3))
    x = (x - x.mean(axis=0)) / x.std(axis=0)
    x[:, 2] = 4.0
    train = Dataset(x, rng.normal(size=50))
    other = Dataset(x[:5] + 1, np.zeros(5))
    scaler, (t2, o2) = standardize_fit_apply(train, other)
    np.testing.assert_allclose(t2.x[:, :2], x[:, :2], atol=1e-12)
    assert scaler.scale[2] == 1.0 and np.all(t2.x[:, 2] == 0)
    assert np.all(np.abs(t2.x.mean(axis=0)) < 1e-10)
    assert np.array_equal(t2.y, train.y)
    np.testing.assert_allclose(o2.x[:, :2], x[:5, :2] + 1, atol=1e-12)


def test_config_round_trip():
    cfg = ExperimentConfig(model="model3", n=500, alpha=0.1, hidden=(35, 35), lr=0.0005, early_stop=False)
    text = emit_config(cfg)
    assert emit_config(parse_config(text)) == text
    assert parse_config(text) == cfg


def test_config_comments_and_errors():
    cfg = parse_config("# desk run\nn = 200   # small\n\nref = uniform:3\nearly_stop = false\n")
    assert (cfg.n, cfg.ref, cfg.early_stop) == (200, "uniform:3", False)
    with pytest.raises(ValueError, match="unknown key"):
        parse_config("epochz = 3\n")
    with pytest.raises(ValueError, match="line 1"):
        parse_config("n = many\n")


def test_constant_response_wine_pipeline(tmp_path):
    path = tmp_path / "flat.csv"
    x = np.random.default_rng(0).normal(size=200)
    path.write_text("acidity;quality\n" + "".join(f"{v!r};6\n" for v in x.tolist()))
    cfg = ExperimentConfig(n=100, S=200, B=40, epochs=5000, hidden=(20,), gen_hidden=(20,),
                           disc_hidden=(8, 4), early_stop=False, target="quality")
    rows, splits = run_wine_pipeline(cfg, {"flat": path}, ps=(2,), intervals=("qpi",))
    assert splits["flat"].test.size == 80
    mspe = {r.method: r.mspe for r in rows if np.isfinite(r.mspe)}
    assert set(mspe) == {"DLMF", "DG-KL", "DG-WA"}
    assert mspe["DLMF"] < 0.01
    assert mspe["DG-KL"] < 0.05
    # the unit-clipped critic moves a point mass slowly; still small against y^2 = 36
    assert mspe["DG-WA"] < 0.02 * 36
    for r in rows:
        assert r.dataset == "flat" and r.p == 2


def test_parser_knows_every_subcommand():
    parser = build_parser()
    for name in SUBCOMMANDS:
        args = parser.parse_args([name, "--method", "ckde", "--pi", "ppi", "--p", "5", "--n", "20",
                                  "--alpha", "0.1", "--seed", "3", "--out", "x"])
        assert args.command == name


def test_simulate_train_predict_interval(tmp_path):
    out = str(tmp_path)
    common = ["--seed", "5", "--set", "epochs=30", "--set", "O=10", "--set", "hidden=8", "--set", "S=50", "--p", "2"]
    assert main(["simulate", "--n", "80", "--out", out, *common]) == 0
    data = os.path.join(out, "data.csv")
    assert load_csv(data, ",", "y").n == 80
    manifest = open(os.path.join(out, "manifest.txt")).read()
    assert "# master_seed: 5" in manifest and "n = 80" in manifest

    main(["train", "--out", out, "--set", f"csv={data}", "--set", "target=y", "--set", "delimiter=,",
          *common])
    main(["predict", "--out", out, "--model-file", os.path.join(out, "model.txt"), "--points", data,
          *common])
    preds = open(os.path.join(out, "predictions.csv")).read().splitlines()
    assert len(preds) == 81 and preds[0] == "row,l2,l1"

    main(["interval", "--pi", "qpi", "--out", out, "--points", data, *common])
    ivs = open(os.path.join(out, "intervals.csv")).read().splitlines()
    assert len(ivs) == 81 and ivs[1].split(",")[1] == "QPI"


def test_experiment_subcommands_write_reports(tmp_path):
    out = str(tmp_path)
    tiny = ["--set", "T=3", "--set", "R=2", "--set", "S=40", "--set", "S_prime=100", "--set", "B=40",
            "--set", "V=20", "--set", "O=10", "--set", "epochs=20", "--set", "hidden=6", "--n", "50"]
    main(["point-experiment", "--method", "dlmf", "--p", "2", "3", "--out", out, *tiny])
    lines = open(os.path.join(out, "point_report.csv")).read().splitlines()
    assert lines[0] == "method,p,optimizer,L_tilde" and len(lines) == 3
    main(["coverage-experiment", "--pi", "qpi", "ppi", "--p", "2", "--out", out, *tiny])
    lines = open(os.path.join(out, "coverage_report.csv")).read().splitlines()
    assert [ln.split(",")[0] for ln in lines[1:]] == ["QPI", "PPI"]
    assert os.path.exists(os.path.join(out, "p2_n50", "cv2_hist_ppi.csv"))
    assert os.path.exists(os.path.join(out, "p2_n50", "cv2_hist_ppi_under.csv"))


WINE_DIR = os.environ.get("DLMF_WINE_DIR", "")


@pytest.mark.skipif(not os.path.exists(os.path.join(WINE_DIR, "winequality-red.csv")),
                    reason="set DLMF_WINE_DIR to the folder holding the UCI wine-quality CSVs")
def test_wine_files_have_documented_shape():
    red = load_csv(os.path.join(WINE_DIR, "winequality-red.csv"), ";", "quality")
    white = load_csv(os.path.join(WINE_DIR, "winequality-white.csv"), ";", "quality")
    assert (red.n, red.d) == (1599, 11)
    assert (white.n, white.d) == (4898, 11)
