import csv
import json

import pytest

from oaindex.cli import main
from oaindex.fixture import write_fixture

GOLDEN_OAI = (
    "soc_code,title,oai,scenario\n"
    "13-2011.00,Accountants and Auditors,0.3459,baseline\n"
    "15-2051.00,Data Scientists,0.7821,baseline\n"
    "29-1141.00,Registered Nurses,0.1265,baseline\n"
    "43-9021.00,Data Entry Keyers,0.7000,baseline\n"
    "47-2111.00,Electricians,0.0000,baseline\n"
)


@pytest.fixture
def fx(tmp_path):
    return write_fixture(tmp_path / "fx")


def run(*argv):
    return main([str(a) for a in argv])


def compute(fx, out, *extra):
    return run("compute", "--taxonomy", fx["scores"].parent, "--scores", fx["scores"], "--out", out, *extra)


def test_compute_golden(fx, tmp_path):
    assert compute(fx, tmp_path / "o") == 0
    assert (tmp_path / "o" / "oai.csv").read_text() == GOLDEN_OAI
    s = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert s["counts"] == {"high": 2, "medium": 1, "low": 2}
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["command"] == "compute"
    assert set(man["inputs"]) == {"dwa_file", "task_file", "occupation_file", "task_dwa_file", "scores"}
    assert all(v["digest"].startswith("sha256:") for v in man["inputs"].values())
    assert "sensitivity.json" in " ".join(man["outputs"]["omitted"])


def test_reruns_are_byte_identical(fx, tmp_path):
    compute(fx, tmp_path / "a", "--breakdown")
    compute(fx, tmp_path / "b", "--breakdown")
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes(), n


def test_per_file_taxonomy_flags(fx, tmp_path):
    rc = run(
        "compute", "--dwas", fx["dwa_file"], "--tasks", fx["task_file"], "--occupations", fx["occupation_file"],
        "--task-dwa", fx["task_dwa_file"], "--scores", fx["scores"], "--out", tmp_path / "o", "--formats", "csv",
    )
    assert rc == 0
    assert (tmp_path / "o" / "oai.csv").read_text() == GOLDEN_OAI


def test_out_dir_from_environment(fx, tmp_path, monkeypatch):
    monkeypatch.setenv("OAINDEX_OUT_DIR", str(tmp_path / "env"))
    assert run("compute", "--taxonomy", fx["scores"].parent, "--scores", fx["scores"], "--formats", "csv") == 0
    assert (tmp_path / "env" / "oai.csv").exists()


def test_all_zero_matrix(fx, tmp_path):
    m = tmp_path / "zero.json"
    m.write_text(json.dumps({"name": "zero", "cells": [[0] * 5] * 4}))
    assert compute(fx, tmp_path / "o", "--matrix", m) == 0
    s = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert s["counts"] == {"high": 0, "medium": 0, "low": 5}


def test_bad_matrix_exit_2(fx, tmp_path, capsys):
    m = tmp_path / "bad.json"
    m.write_text(json.dumps({"cells": [[0] * 5] * 3}))
    assert compute(fx, tmp_path / "o", "--matrix", m) == 2
    assert "4 rows" in capsys.readouterr().err


def test_non_monotone_matrix_warns_but_runs(fx, tmp_path, capsys):
    m = tmp_path / "odd.json"
    m.write_text(json.dumps({"cells": [[0] * 5, [0] * 5, [0, 0, 0, 0.5, 0], [0] * 5]}))
    assert compute(fx, tmp_path / "o", "--matrix", m, "--formats", "csv") == 0
    assert "monotonicity" in capsys.readouterr().err


def test_dangling_edge_exit_2(fx, tmp_path, capsys):
    with open(fx["task_dwa_file"], "a") as fh:
        fh.write("T01,X999\n")
    assert run("validate", "--taxonomy", fx["scores"].parent) == 2
    err = capsys.readouterr().err
    assert "X999" in err and "task_dwa.csv:" in err


def test_validate_ok(fx, capsys):
    assert run("validate", "--taxonomy", fx["scores"].parent) == 0
    report = json.loads(capsys.readouterr().out)
    assert (report["occupations"], report["tasks"], report["dwas"]) == (5, 12, 20)
    assert (report["min_dwas_per_task"], report["max_dwas_per_task"]) == (2, 3)


def test_unscored_dwa_exit_3(fx, tmp_path, capsys):
    rows = fx["scores"].read_text().splitlines(keepends=True)
    fx["scores"].write_text("".join(r for r in rows if not r.startswith("D07,")))
    assert compute(fx, tmp_path / "o") == 3
    assert "D07" in capsys.readouterr().err
    assert not (tmp_path / "o" / "oai.csv").exists()


def test_missing_taxonomy_path_exit_2(fx, tmp_path):
    assert run("compute", "--scores", fx["scores"], "--out", tmp_path / "o") == 2


def test_unwritable_output_exit_4(fx, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert compute(fx, blocker / "sub") == 4


def test_sensitivity(fx, tmp_path, capsys):
    rc = run("sensitivity", "--taxonomy", fx["scores"].parent, "--scores", fx["scores"], "--out", tmp_path / "s")
    assert rc == 0
    out = tmp_path / "s"
    assert sorted(p.name for p in out.iterdir()) == [
        "manifest.json", "matrix_heatmap.png", "oai.csv", "oai_density.png", "sensitivity.json", "summary.json",
    ]
    sens = json.loads((out / "sensitivity.json").read_text())
    assert [(c["a"], c["b"]) for c in sens] == [("baseline", "aggressive"), ("baseline", "conservative")]
    assert sens[0]["rho"] == 1.0
    assert sens[1]["rho"] == pytest.approx(0.974679434481, abs=1e-12)
    with open(out / "oai.csv") as fh:
        assert {r["scenario"] for r in csv.DictReader(fh)} == {"baseline", "aggressive", "conservative"}


def test_sensitivity_tables_mismatch_exit_3(fx, tmp_path):
    compute(fx, tmp_path / "a", "--formats", "csv")
    b = tmp_path / "b.csv"
    b.write_text(GOLDEN_OAI.replace("47-2111.00", "47-2111.01").replace("baseline", "other"))
    assert run("sensitivity", "--tables", tmp_path / "a" / "oai.csv", b, "--out", tmp_path / "s") == 3


def test_sensitivity_tables_mode(fx, tmp_path):
    compute(fx, tmp_path / "a", "--formats", "csv")
    compute(fx, tmp_path / "b", "--formats", "csv", "--scenario", "conservative")
    rc = run("sensitivity", "--tables", tmp_path / "a" / "oai.csv", tmp_path / "b" / "oai.csv", "--out", tmp_path / "s")
    assert rc == 0
    sens = json.loads((tmp_path / "s" / "sensitivity.json").read_text())
    assert sens[0]["rho"] == pytest.approx(0.974679434481, abs=1e-9)


def test_fuse_and_sample(fx, tmp_path, capsys):
    assert run("fuse", "--scores", fx["scores"], "--out", tmp_path / "f") == 0
    fused = tmp_path / "f" / "fused.csv"
    assert json.loads(capsys.readouterr().out)["strata"] == {"Consensus": 10, "SlightFriction": 5, "SevereDivergence": 5}
    assert run("sample", "--fused", fused, "--counts", "2,2,2", "--seed", 7, "--out", tmp_path / "s") == 0
    with open(tmp_path / "s" / "sample.csv") as fh:
        ids = [r["dwa_id"] for r in csv.DictReader(fh)]
    assert ids == ["D13", "D01", "D06", "D16", "D20", "D15"]
    man = json.loads((tmp_path / "s" / "manifest.json").read_text())
    assert man["seed"] == 7 and man["prng"] == "splitmix64"


def test_sample_clamped_warns(fx, tmp_path, capsys):
    run("fuse", "--scores", fx["scores"], "--out", tmp_path / "f")
    assert run("sample", "--fused", tmp_path / "f" / "fused.csv", "--seed", 1, "--out", tmp_path / "s") == 0
    assert "only 10 available" in capsys.readouterr().err
    man = json.loads((tmp_path / "s" / "manifest.json").read_text())
    assert man["clamped"] == {"Consensus": 49, "SlightFriction": 17, "SevereDivergence": 34}


@pytest.mark.parametrize("counts", ["1,2", "a,b,c", "1,-1,2"])
def test_sample_bad_counts(fx, tmp_path, counts):
    run("fuse", "--scores", fx["scores"], "--out", tmp_path / "f")
    assert run("sample", "--fused", tmp_path / "f" / "fused.csv", "--seed", 1, "--counts", counts, "--out", tmp_path / "s") == 2


def test_hitl_golden(fx, tmp_path):
    run("fuse", "--scores", fx["scores"], "--out", tmp_path / "f")
    assert run("hitl", "--hitl", fx["hitl"], "--fused", tmp_path / "f" / "fused.csv", "--out", tmp_path / "h") == 0
    res = json.loads((tmp_path / "h" / "tests.json").read_text())
    assert res["wilcoxon"]["W_plus"] == 107.0
    assert res["wilcoxon"]["p"] == pytest.approx(0.155166625977, abs=1e-12)
    assert res["ordered_logit"]["beta"] == pytest.approx(0.160911880626, abs=1e-9)
    assert res["ordered_logit"]["converged"] is True
    assert res["descriptive_premium"]["caveat"]
    table2 = (tmp_path / "h" / "table2.csv").read_text().splitlines()
    assert table2[1:] == [
        "Consensus,10,2.90,2.87,2.87,40,30,30",
        "SlightFriction,5,3.05,3.00,3.07,20,15,15",
        "SevereDivergence,5,3.00,3.33,3.60,20,15,15",
    ]


def test_hitl_single_cohort(fx, tmp_path, capsys):
    run("fuse", "--scores", fx["scores"], "--out", tmp_path / "f")
    rows = fx["hitl"].read_text().splitlines(keepends=True)
    only_tech = tmp_path / "tech.csv"
    only_tech.write_text(rows[0] + "".join(r for r in rows[1:] if ",tech," in r))
    assert run("hitl", "--hitl", only_tech, "--fused", tmp_path / "f" / "fused.csv", "--out", tmp_path / "h") == 0
    res = json.loads((tmp_path / "h" / "tests.json").read_text())
    assert res["wilcoxon"] is None and res["ordered_logit"] is None
    assert res["spearman"]["risk"]["tech"]["n"] == 20
    assert "ensemble means" in capsys.readouterr().err


def test_hitl_unknown_dwa_exit_3(fx, tmp_path):
    run("fuse", "--scores", fx["scores"], "--out", tmp_path / "f")
    with open(fx["hitl"], "a") as fh:
        fh.write("Q01,t1,tech,2,3\n")
    assert run("hitl", "--hitl", fx["hitl"], "--fused", tmp_path / "f" / "fused.csv", "--out", tmp_path / "h") == 3


def test_fixture_flag(tmp_path, capsys):
    assert run("--fixture", tmp_path / "fx") == 0
    assert (tmp_path / "fx" / "scores.csv").exists()
    assert (tmp_path / "fx" / "hitl.csv").exists()


def test_no_command_exit_2(capsys):
    assert main([]) == 2
