import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from mewls.bspline import KnotVector, design_matrix
from mewls.cli import main
from mewls.data import load_csv, normalize
from mewls.maxent import ols_state


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


@pytest.fixture
def profile_csv(tmp_path):
    path = tmp_path / "profile.csv"
    assert main(["synth", "profile", "--seed", "0", "--out", str(path)]) == 0
    return path


def planted_of(path):
    _, rows = read_csv(str(path).replace(".csv", ".planted.csv"))
    return [int(r[0]) for r in rows]


def test_synth_spiral_and_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["synth", "spiral", "--n", "200", "--a", "1", "--b", "4", "--var", "30", "--seed", "7"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    header, rows = read_csv(a)
    assert header == ["t", "x", "y"] and len(rows) == 200
    assert len(planted_of(a)) == 100


def test_synth_helix(tmp_path):
    out = tmp_path / "h.csv"
    assert main(["synth", "helix", "--n", "400", "--m", "100", "--var", "20",
                 "--out", str(out), "--planted", str(tmp_path / "p.csv")]) == 0
    header, rows = read_csv(out)
    assert header == ["t", "x", "y", "z"] and len(rows) == 400
    assert len(read_csv(tmp_path / "p.csv")[1]) == 100


def test_unknown_synth_kind(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["synth", "torus", "--out", str(tmp_path / "x.csv")])
    assert info.value.code == 2


def test_fit_artifacts(profile_csv, tmp_path):
    out = tmp_path / "fit"
    code = main(["fit", str(profile_csv), "--header", "--degree", "2", "--n-basis", "20",
                 "--r-final", "500", "--stages", "50", "--out", str(out)])
    assert code == 0
    header, curve = read_csv(out / "curve.csv")
    assert header == ["t", "y0"] and len(curve) == 512
    header, weights = read_csv(out / "weights.csv")
    assert header == ["index", "t", "weight", "r2"] and len(weights) == 44
    w = np.array([float(r[2]) for r in weights])
    assert sorted(np.flatnonzero(w < 1e-4 * w.max()).tolist()) == planted_of(profile_csv)
    header, trace = read_csv(out / "trace.csv")
    assert header == ["stage", "r", "mse_target", "mse", "lambda2", "entropy", "iterations"]
    assert len(trace) == 51
    doc = json.loads((out / "fit.json").read_text())
    for key in ("degree", "knots", "control_points", "transform", "config", "converged",
                "stages_completed"):
        assert key in doc
    assert doc["converged"] and doc["stages_completed"] == 50

    # The stored model reproduces the sampled curve.
    kv = KnotVector(doc["degree"], doc["knots"])
    tf = doc["transform"]
    t = np.array([float(r[0]) for r in curve])
    x = np.clip((t - tf["t_min"]) / tf["t_range"], 0, 1)
    values = design_matrix(kv, x) @ np.array(doc["control_points"])
    np.testing.assert_allclose(values[:, 0], [float(r[1]) for r in curve], rtol=0, atol=1e-10)


def test_fit_is_byte_deterministic(profile_csv, tmp_path):
    outs = [tmp_path / "o1", tmp_path / "o2"]
    for o in outs:
        assert main(["fit", str(profile_csv), "--header", "--degree", "2", "--n-basis", "20",
                     "--r-final", "100", "--stages", "10", "--out", str(o)]) == 0
    for name in ("curve.csv", "weights.csv", "trace.csv", "fit.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_r_final_one_is_ols(profile_csv, tmp_path):
    out = tmp_path / "ols"
    assert main(["fit", str(profile_csv), "--header", "--degree", "2", "--n-basis", "20",
                 "--r-final", "1", "--stages", "1", "--out", str(out), "--normalized"]) == 0
    _, trace = read_csv(out / "trace.csv")
    assert len(trace) == 1 and float(trace[0][5]) == pytest.approx(math.log(44), rel=1e-14)
    ds = normalize(load_csv(profile_csv, header=True))
    kv = KnotVector(2, json.loads((out / "fit.json").read_text())["knots"])
    ref = ols_state(design_matrix(kv, ds.t), ds.y).coef
    doc = json.loads((out / "fit.json").read_text())
    np.testing.assert_allclose(doc["control_points_normalized"], ref, rtol=1e-10)


def test_detect(profile_csv, tmp_path, capsys):
    out = tmp_path / "det"
    assert main(["detect", str(profile_csv), "--header", "--degree", "2", "--n-basis", "20",
                 "--r-final", "500", "--stages", "50", "--out", str(out)]) == 0
    header, rows = read_csv(out / "outliers.csv")
    assert header == ["index", "t", "weight", "flagged", "score"]
    flagged = [int(r[0]) for r in rows if r[3] == "1"]
    assert flagged == planted_of(profile_csv)
    assert sorted(int(r[4]) for r in rows if r[3] == "1") == list(range(1, 13))
    assert "12 of 44" in capsys.readouterr().out


def test_detect_clean_data(tmp_path):
    path = tmp_path / "clean.csv"
    assert main(["synth", "profile", "--n-outliers", "0", "--out", str(path)]) == 0
    out = tmp_path / "det"
    assert main(["detect", str(path), "--header", "--degree", "2", "--n-basis", "20",
                 "--r-final", "2", "--stages", "2", "--out", str(out)]) == 0
    _, rows = read_csv(out / "outliers.csv")
    assert not any(r[3] == "1" for r in rows)


def test_detect_rejects_tol_one(profile_csv, tmp_path, capsys):
    code = main(["detect", str(profile_csv), "--header", "--tol-classify", "1",
                 "--out", str(tmp_path / "x")])
    assert code == 2
    assert "invalid-threshold" in capsys.readouterr().err


def test_score(profile_csv, tmp_path):
    out = tmp_path / "score"
    assert main(["score", str(profile_csv), "--header", "--degree", "2", "--n-basis", "20",
                 "--r-final", "500", "--stages", "50", "--n-outliers", "10",
                 "--out", str(out)]) == 0
    header, rows = read_csv(out / "ranked.csv")
    assert header == ["rank", "index", "t", "entry_r", "weight"]
    assert len(rows) >= 10
    assert [int(r[0]) for r in rows] == list(range(1, len(rows) + 1))
    assert {int(r[1]) for r in rows[:10]} <= set(planted_of(profile_csv))


def test_score_zero_and_too_many(profile_csv, tmp_path):
    out = tmp_path / "s0"
    assert main(["score", str(profile_csv), "--header", "--n-outliers", "0",
                 "--out", str(out)]) == 0
    assert read_csv(out / "ranked.csv")[1] == []
    assert main(["score", str(profile_csv), "--header", "--n-outliers", "44",
                 "--out", str(out)]) == 2


def test_score_partial(tmp_path, capsys):
    path = tmp_path / "line.csv"
    path.write_text("0,0.2\n0.2,0.3\n0.4,0.4\n0.6,0.95\n0.8,0.6\n1,0.7\n")
    code = main(["score", str(path), "--degree", "1", "--n-basis", "2", "--r-final", "2",
                 "--stages", "1", "--n-outliers", "5", "--out", str(tmp_path / "o")])
    assert code == 3
    assert "partial [infeasible-target]" in capsys.readouterr().err


def test_fit_partial(tmp_path):
    path = tmp_path / "line.csv"
    path.write_text("0,0.2\n0.2,0.3\n0.4,0.4\n0.6,0.95\n0.8,0.6\n1,0.7\n")
    out = tmp_path / "o"
    assert main(["fit", str(path), "--degree", "1", "--n-basis", "2", "--r-final", "1e15",
                 "--stages", "1", "--out", str(out)]) == 3
    assert json.loads((out / "fit.json").read_text())["converged"] is False


def test_malformed_csv(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("t,y\n0,1\n1,2\n2,oops\n")
    assert main(["fit", str(path), "--header", "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "[parse]" in err and "row 4" in err and "column 2" in err


def test_missing_file(tmp_path, capsys):
    assert main(["fit", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o")]) == 2
    assert "[io]" in capsys.readouterr().err


def test_non_convergence_is_solver_error(profile_csv, tmp_path, capsys):
    code = main(["fit", str(profile_csv), "--header", "--degree", "2", "--n-basis", "20",
                 "--r-final", "500", "--stages", "2", "--max-outer-iters", "1",
                 "--no-acceleration", "--out", str(tmp_path / "o")])
    assert code == 1
    assert "[non-convergence]" in capsys.readouterr().err


def test_invalid_model_options(profile_csv, tmp_path):
    base = ["fit", str(profile_csv), "--header", "--out", str(tmp_path / "o")]
    assert main(base + ["--r-final", "0.5"]) == 2
    assert main(base + ["--stages", "0"]) == 2
    assert main(base + ["--degree", "3", "--n-basis", "3"]) == 2
    assert main(base + ["--samples", "1"]) == 2
    assert main(base + ["--knots", "0,0,0.5,0.2,1,1", "--degree", "1"]) == 2


def test_column_selection_and_filter(tmp_path):
    path = tmp_path / "air.csv"
    rng = np.random.default_rng(0)
    rows = ["day,o3,temp"] + [f"{i},{20 + 5 * math.sin(i / 5) + rng.normal():.4f},{i % 90}"
                              for i in range(60)]
    path.write_text("\n".join(rows) + "\n")
    out = tmp_path / "o"
    assert main(["fit", str(path), "--header", "--t-col", "day", "--y-cols", "o3",
                 "--filter", "temp<=40", "--degree", "2", "--n-basis", "6",
                 "--r-final", "2", "--stages", "2", "--out", str(out)]) == 0
    _, weights = read_csv(out / "weights.csv")
    assert len(weights) == 41


def test_module_entry_point(tmp_path):
    out = tmp_path / "p.csv"
    proc = subprocess.run([sys.executable, "-m", "mewls", "synth", "profile", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and out.exists()
