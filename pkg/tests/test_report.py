import json
from fractions import Fraction as F

import pytest

from oaindex import plots
from oaindex.aggregate import OaiRecord, OaiTable, compute_all
from oaindex.errors import PreconditionError
from oaindex.matrix import constant_matrix, preset
from oaindex.report import (
    ExposureCategory,
    Formats,
    categorize,
    comparisons_for,
    oai_csv_bytes,
    rank_occupations,
    read_oai_csv,
    scenario_compare,
    summary,
    write_report,
)


def table(values, scenario="s"):
    return OaiTable(scenario, tuple(OaiRecord(soc, soc, F(v), ()) for soc, v in values.items()))


@pytest.mark.parametrize(
    "v, cat",
    [
        ("0.60", ExposureCategory.HIGH),
        ("0.5999", ExposureCategory.MEDIUM),
        ("0.30", ExposureCategory.MEDIUM),
        ("0.2999", ExposureCategory.LOW),
        ("0", ExposureCategory.LOW),
        ("1", ExposureCategory.HIGH),
    ],
)
def test_category_boundaries(v, cat):
    assert categorize(F(v)) is cat


def test_category_out_of_range():
    with pytest.raises(ValueError):
        categorize(F(11, 10))


def test_rank_ties_share_average_rank():
    ranked = rank_occupations(table({"c": "0.5", "a": "0.5", "b": "0.9", "d": "0.1"}))
    assert [(r.soc_code, r.rank, r.average_rank) for r in ranked] == [
        ("b", 1, 1.0),
        ("a", 2, 2.5),
        ("c", 3, 2.5),
        ("d", 4, 4.0),
    ]


def test_empty_table_rejected():
    with pytest.raises(PreconditionError):
        rank_occupations(table({}))
    with pytest.raises(PreconditionError):
        summary(table({}))


def test_summary_fixture(taxonomy, fused):
    s = summary(compute_all(taxonomy, fused, preset("baseline")))
    assert s["counts"] == {"high": 2, "medium": 1, "low": 2}
    assert sum(s["counts"].values()) == s["n"] == 5
    assert s["distribution"]["max"] == pytest.approx(0.782051, abs=1e-6)


def test_compare_identical_tables():
    t = table({"a": "0.1", "b": "0.5", "c": "0.9"})
    c = scenario_compare(t, t)
    assert c.rho == pytest.approx(1.0)
    assert all(ra == rb for _, ra, rb in c.rank_deltas)


def test_compare_constant_tables():
    t = table({"a": "0", "b": "0", "c": "0"})
    assert scenario_compare(t, t).rho == 1.0


def test_compare_mismatched_sets():
    with pytest.raises(PreconditionError, match="differ"):
        scenario_compare(table({"a": 1, "b": 0, "c": 0}), table({"a": 1, "b": 0, "d": 0}))


def test_fixture_sensitivity(taxonomy, fused):
    tables = {s: compute_all(taxonomy, fused, preset(s)) for s in ("baseline", "aggressive", "conservative")}
    comps = {c.scenario_b: c for c in comparisons_for(tables)}
    assert comps["aggressive"].rho == pytest.approx(1.0)
    assert comps["conservative"].rho == pytest.approx(9.5 / 95**0.5, abs=1e-12)
    assert comps["conservative"].p_value == pytest.approx(1 / 30, abs=1e-12)
    movers = comps["conservative"].to_json()["top_movers"]
    assert len(movers) == 5


def test_oai_csv_golden(taxonomy, fused):
    text = oai_csv_bytes([compute_all(taxonomy, fused, preset("baseline"))]).decode()
    assert text == (
        "soc_code,title,oai,scenario\n"
        "13-2011.00,Accountants and Auditors,0.3459,baseline\n"
        "15-2051.00,Data Scientists,0.7821,baseline\n"
        "29-1141.00,Registered Nurses,0.1265,baseline\n"
        "43-9021.00,Data Entry Keyers,0.7000,baseline\n"
        "47-2111.00,Electricians,0.0000,baseline\n"
    )


def test_oai_csv_rounds_half_up():
    text = oai_csv_bytes([table({"x": F(12345, 100000)})]).decode()
    assert "x,x,0.1235,s" in text


def test_csv_roundtrip(tmp_path, taxonomy, fused):
    t = compute_all(taxonomy, fused, preset("aggressive"))
    p = tmp_path / "oai.csv"
    p.write_bytes(oai_csv_bytes([t]))
    back = read_oai_csv(p)["aggressive"]
    for soc, v in t.oai_map().items():
        assert abs(back.oai_map()[soc] - v) <= F(1, 20000)


def test_formats_parse():
    assert Formats.parse("all") == Formats()
    assert Formats.parse("csv") == Formats(True, False, False)
    with pytest.raises(ValueError):
        Formats.parse("csv,xlsx")


def test_write_report_all_formats(tmp_path, taxonomy, fused):
    tables = [compute_all(taxonomy, fused, preset(s)) for s in ("baseline", "conservative")]
    comps = [scenario_compare(*tables)]
    m = write_report(tables, comps, tmp_path, matrix=preset("baseline"))
    assert sorted(m["files"]) == ["matrix_heatmap.png", "oai.csv", "oai_density.png", "sensitivity.json", "summary.json"]
    assert m["omitted"] == []
    for name, meta in m["files"].items():
        assert (tmp_path / name).stat().st_size == meta["bytes"]
    assert isinstance(json.loads((tmp_path / "summary.json").read_text()), list)
    assert not any(p.name.startswith(".oai-staging") for p in tmp_path.iterdir())


def test_write_report_csv_only(tmp_path, taxonomy, fused):
    t = compute_all(taxonomy, fused, preset("baseline"))
    m = write_report([t], [], tmp_path, Formats.parse("csv"))
    assert sorted(p.name for p in tmp_path.iterdir()) == ["oai.csv"]
    assert "plots: disabled by formats" in m["omitted"]


def test_single_table_omits_sensitivity(tmp_path, taxonomy, fused):
    m = write_report([compute_all(taxonomy, fused, preset("baseline"))], [], tmp_path, Formats.parse("csv,json"))
    assert any(o.startswith("sensitivity.json") for o in m["omitted"])
    assert isinstance(json.loads((tmp_path / "summary.json").read_text()), dict)


def test_write_report_is_deterministic(tmp_path, taxonomy, fused):
    tables = [compute_all(taxonomy, fused, preset(s)) for s in ("baseline", "aggressive")]
    a = write_report(tables, [scenario_compare(*tables)], tmp_path / "a", matrix=preset("aggressive"))
    b = write_report(tables, [scenario_compare(*tables)], tmp_path / "b", matrix=preset("aggressive"))
    assert a == b


def test_failure_leaves_nothing_behind(tmp_path, taxonomy, fused, monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(plots, "oai_density", boom)
    with pytest.raises(RuntimeError):
        write_report([compute_all(taxonomy, fused, preset("baseline"))], [], tmp_path)
    assert list(tmp_path.iterdir()) == []


def test_all_zero_matrix_all_low(taxonomy, fused):
    s = summary(compute_all(taxonomy, fused, constant_matrix(0)))
    assert s["counts"] == {"high": 0, "medium": 0, "low": 5}
