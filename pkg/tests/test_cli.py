import argparse
import hashlib
import re
import subprocess
import sys

import numpy as np
import pytest

from skewguard.cli import build_parser, main, stratified_folds
from skewguard.dataio import read_csv
from skewguard.numkit import RngStream


def _digest(*paths):
    return [hashlib.sha256(p.read_bytes()).hexdigest() for p in paths]


@pytest.fixture
def sim(tmp_path):
    full, tr, te = tmp_path / "all.csv", tmp_path / "train.csv", tmp_path / "test.csv"
    code = main(["simulate", str(full), "--setting", "2", "--p", "4", "--seed", "3",
                 "--train-out", str(tr), "--test-out", str(te)])
    assert code == 0
    return full, tr, te


def _subparsers():
    parser = build_parser()
    group = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return group.choices


@pytest.mark.parametrize("command", ["oversample", "evaluate", "bench", "simulate"])
def test_help_lists_every_flag_with_default(command):
    sub = _subparsers()[command]
    body = sub.format_help().split("options:", 1)[1]
    # one entry per option, starting at a line indented by two spaces and a dash
    entries = [" ".join(e.split()) for e in re.split(r"\n(?=  -)", body) if e.strip()]
    for action in sub._actions:
        if not action.option_strings or action.dest == "help":
            continue
        flag = action.option_strings[-1]
        entry = next((e for e in entries if e.startswith(flag + " ") or e.startswith(flag + ",")
                      or e == flag), None)
        assert entry is not None, flag
        assert "(default:" in entry, flag


def test_version_and_no_command(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert main([]) == 1


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "skewguard", "bench", "--help"],
                         capture_output=True, text=True, check=True)
    assert "--reps" in out.stdout


def test_simulate_outputs(sim):
    full, tr, te = sim
    d, train, test = read_csv(full), read_csv(tr), read_csv(te)
    assert (d.n, d.p, d.n1) == (1000, 4, 100)
    assert (train.n1, test.n1) == (70, 30)
    assert (train.X[:, 0] < -6).sum() >= 5  # contaminated rows live near -10


def test_oversample_is_byte_identical_on_rerun(sim, tmp_path, capsys):
    _, tr, _ = sim
    outs = [tmp_path / f"o{i}.csv" for i in range(3)]
    for i, o in enumerate(outs):
        seed = "5" if i < 2 else "6"
        assert main(["oversample", str(tr), str(o), "--seed", seed]) == 0
    a, b, c = _digest(*outs)
    assert a == b != c
    out = read_csv(outs[0])
    assert out.n1 == 700 and out.synthetic.sum() == 630
    err = capsys.readouterr().err
    assert "excluded_count=" in err


@pytest.mark.parametrize("method", ["smote", "rose", "robrose"])
def test_oversample_methods_with_scaling(sim, tmp_path, method):
    _, tr, _ = sim
    o = tmp_path / "o.csv"
    assert main(["oversample", str(tr), str(o), "--method", method, "--scaling", "robust",
                 "--target", "2"]) == 0
    out, orig = read_csv(o), read_csv(tr)
    np.testing.assert_array_equal(out.X[: orig.n], orig.X)
    assert out.n == orig.n + 70


def test_evaluate_none_matches_library(sim, capsys):
    from skewguard import classify, metrics

    _, tr, te = sim
    assert main(["evaluate", "--train", str(tr), "--test", str(te)]) == 0
    lines = capsys.readouterr().out.splitlines()
    train, test = read_csv(tr), read_csv(te)
    s = classify.predict_proba(classify.fit_logit(train.X, train.y), test.X)
    auc = float(lines[1].split(",")[1])
    assert auc == pytest.approx(metrics.roc_auc(s, test.y).area, rel=1e-9)


def test_evaluate_curves_and_report(sim, tmp_path, capsys):
    _, tr, te = sim
    cdir, rep = tmp_path / "curves", tmp_path / "rep.csv"
    args = ["evaluate", "--train", str(tr), "--test", str(te), "--method", "robrose",
            "--curves", str(cdir), "--report", str(rep), "--seed", "2"]
    assert main(args) == 0
    first = _digest(cdir / "roc.csv", cdir / "pr.csv", rep)
    assert main(args) == 0
    assert _digest(cdir / "roc.csv", cdir / "pr.csv", rep) == first
    assert (cdir / "roc.csv").read_text().startswith("# kind=roc,area=")
    assert rep.read_text().startswith("metric,mean,se,n\nauc,")


def test_evaluate_cross_validation(sim, capsys):
    full, _, _ = sim
    assert main(["evaluate", "--data", str(full), "--method", "rose", "--folds", "2",
                 "--repeats", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1].endswith(",6") and lines[2].startswith("auprc,")


def test_evaluate_ingests_kaggle_schema(tmp_path, capsys):
    g = np.random.default_rng(0)
    n = 300
    header = ["Time"] + [f"V{i}" for i in range(1, 29)] + ["Amount", "Class"]
    y = (np.arange(n) % 15 == 0).astype(int)
    V = g.standard_normal((n, 28)) + y[:, None] * 0.8
    rows = [",".join(f'"{h}"' for h in header)]
    for i in range(n):
        vals = [f"{i * 3.0}"] + [repr(float(v)) for v in V[i]] + [f"{g.uniform(0, 900):.2f}", f'"{y[i]}"']
        rows.append(",".join(vals))
    f = tmp_path / "creditcard.csv"
    f.write_text("\n".join(rows) + "\n")
    code = main(["evaluate", "--data", str(f), "--label", "Class", "--drop", "Time",
                 "--log1p", "Amount", "--scaling", "robust", "--method", "robrose",
                 "--mcd-starts", "50", "--repeats", "1"])
    assert code == 0
    assert capsys.readouterr().out.startswith("metric,mean,se,n\nauc,")


def test_bench_outputs_and_metadata(tmp_path, capsys):
    csv, table = tmp_path / "b.csv", tmp_path / "b.txt"
    args = ["bench", "--setting", "1", "--n0", "9900", "--p", "5", "--reps", "2",
            "--methods", "imbalanced,robrose", "--workers", "1",
            "--out-csv", str(csv), "--out-table", str(table)]
    assert main(args) == 0
    first = _digest(csv, table)
    assert main(args) == 0
    assert _digest(csv, table) == first
    text = table.read_text()
    assert " 1.0%" in text and "2 repetitions" in text
    assert csv.read_text().splitlines()[0] == "setting,n0,method,metric,mean,se,n_excluded"


def test_config_file_and_flag_override(sim, tmp_path):
    _, tr, _ = sim
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nmethod = smote\ntarget = 3\nk = 2\nseed = 4\n")
    a, b, c = (tmp_path / f"{x}.csv" for x in "abc")
    assert main(["oversample", str(tr), str(a), "--config", str(cfg)]) == 0
    assert main(["oversample", str(tr), str(b), "--method", "smote", "--target", "3",
                 "--k", "2", "--seed", "4"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert main(["oversample", str(tr), str(c), "--config", str(cfg), "--target", "2"]) == 0
    assert read_csv(c).n1 == 140


def test_exit_codes(sim, tmp_path, capsys):
    _, tr, _ = sim
    assert main(["oversample", str(tr)]) == 1
    assert main(["bench", "--methods", "magic"]) == 1
    bad_cfg = tmp_path / "bad.cfg"
    bad_cfg.write_text("no_such_key = 1\n")
    assert main(["oversample", str(tr), str(tmp_path / "x.csv"), "--config", str(bad_cfg)]) == 1
    assert main(["oversample", str(tmp_path / "missing.csv"), str(tmp_path / "x.csv")]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("a,class\n1,0\n2,7\n")
    assert main(["oversample", str(bad), str(tmp_path / "x.csv")]) == 2
    assert "error: NonBinaryLabel:" in capsys.readouterr().err
    singular = tmp_path / "singular.csv"
    t = np.arange(40.0)
    rows = ["a,b,class"] + [f"{v},{2 * v + 1},1" for v in t] + [f"{v},{-v},0" for v in range(50)]
    singular.write_text("\n".join(rows) + "\n")
    assert main(["oversample", str(singular), str(tmp_path / "x.csv")]) == 3
    assert "error: SingularData:" in capsys.readouterr().err


def test_stratified_folds_partition():
    y = np.r_[np.zeros(20), np.ones(7)]
    folds = stratified_folds(y, 3, RngStream(0))
    allrows = np.sort(np.concatenate(folds))
    np.testing.assert_array_equal(allrows, np.arange(27))
    assert sorted(int(y[f].sum()) for f in folds) == [2, 2, 3]
