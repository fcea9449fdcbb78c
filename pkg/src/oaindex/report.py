"""Rankings, exposure categories, scenario comparison and file emission."""

from __future__ import annotations

import enum
import json
import os
import shutil
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .aggregate import OaiTable
from .csvio import bytes_digest, fmt_decimal, write_csv_bytes
from .errors import PreconditionError
from .stats import COHORTS, spearman

HIGH_THRESHOLD = Fraction(60, 100)
MEDIUM_THRESHOLD = Fraction(30, 100)
OAI_PLACES = 4
TOP_MOVERS = 10


class ExposureCategory(str, enum.Enum):
    HIGH = "High"
    MEDIUM = "Medium"
    LOW = "Low"

    def __str__(self) -> str:
        return self.value


def categorize(oai) -> ExposureCategory:
    v = Fraction(oai)
    if not 0 <= v <= 1:
        raise ValueError(f"OAI {float(v)} outside [0, 1]")
    if v >= HIGH_THRESHOLD:
        return ExposureCategory.HIGH
    if v >= MEDIUM_THRESHOLD:
        return ExposureCategory.MEDIUM
    return ExposureCategory.LOW


@dataclass(frozen=True)
class RankedOccupation:
    rank: int
    average_rank: float
    soc_code: str
    title: str
    oai: Fraction
    category: ExposureCategory


def rank_occupations(t: OaiTable) -> list[RankedOccupation]:
    """Descending by OAI, ties by ascending soc_code.

    ``rank`` is the 1-based position; ``average_rank`` gives tied OAIs the
    mean of their positions (what correlation uses).
    """
    if not t.records:
        raise PreconditionError("cannot rank an empty table")
    ordered = sorted(t.records, key=lambda r: (-r.oai, r.soc_code))
    out = []
    i = 0
    while i < len(ordered):
        j = i
        while j + 1 < len(ordered) and ordered[j + 1].oai == ordered[i].oai:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for k in range(i, j + 1):
            r = ordered[k]
            out.append(RankedOccupation(k + 1, mean_rank, r.soc_code, r.title, r.oai, categorize(r.oai)))
        i = j + 1
    return out


def summary(t: OaiTable) -> dict:
    """Category counts/shares plus distribution statistics of the OAI column."""
    if not t.records:
        raise PreconditionError("cannot summarize an empty table")
    n = len(t.records)
    counts = {c: 0 for c in ExposureCategory}
    for r in t.records:
        counts[categorize(r.oai)] += 1
    vals = np.array([float(r.oai) for r in t.records])
    deciles = np.quantile(vals, np.linspace(0.1, 0.9, 9))
    mean = sum((r.oai for r in t.records), Fraction(0)) / n
    return {
        "scenario": t.scenario,
        "n": n,
        "counts": {c.value.lower(): counts[c] for c in ExposureCategory},
        "shares": {c.value.lower(): round(counts[c] / n, 6) for c in ExposureCategory},
        "distribution": {
            "min": float(fmt_decimal(min(r.oai for r in t.records), 6)),
            "max": float(fmt_decimal(max(r.oai for r in t.records), 6)),
            "mean": float(fmt_decimal(mean, 6)),
            "deciles": [round(float(d), 6) for d in deciles],
        },
    }


@dataclass(frozen=True)
class ScenarioComparison:
    scenario_a: str
    scenario_b: str
    rho: float
    p_value: float
    n: int
    rank_deltas: tuple[tuple[str, int, int], ...]  # (soc_code, rank_a, rank_b), |delta| desc

    def to_json(self, top: int = TOP_MOVERS) -> dict:
        return {
            "a": self.scenario_a,
            "b": self.scenario_b,
            "rho": round(self.rho, 12),
            "p": _json_float(self.p_value),
            "n": self.n,
            "top_movers": [
                {"soc_code": s, "rank_a": ra, "rank_b": rb} for s, ra, rb in self.rank_deltas[:top]
            ],
        }


def _json_float(v: float) -> float:
    return float(f"{v:.12g}")


def scenario_compare(a: OaiTable, b: OaiTable) -> ScenarioComparison:
    """Spearman rank agreement of two tables over the same occupations."""
    ma, mb = a.oai_map(), b.oai_map()
    if set(ma) != set(mb):
        only_a = sorted(set(ma) - set(mb))
        only_b = sorted(set(mb) - set(ma))
        raise PreconditionError(f"occupation sets differ: only in a {only_a[:5]}, only in b {only_b[:5]}")
    socs = sorted(ma)
    if len(set(ma.values())) == 1 and ma == mb:
        rho, p = 1.0, 0.0
    else:
        res = spearman([float(ma[s]) for s in socs], [float(mb[s]) for s in socs])
        rho, p = res.statistic, res.p_value
    ra = {r.soc_code: r.rank for r in rank_occupations(a)}
    rb = {r.soc_code: r.rank for r in rank_occupations(b)}
    deltas = sorted(((s, ra[s], rb[s]) for s in socs), key=lambda t: (-abs(t[1] - t[2]), t[0]))
    return ScenarioComparison(a.scenario, b.scenario, rho, p, len(socs), tuple(deltas))


# -- emission --------------------------------------------------------------

OAI_HEADER = ("soc_code", "title", "oai", "scenario")


def oai_csv_bytes(tables: Sequence[OaiTable]) -> bytes:
    rows = []
    for t in tables:
        for r in sorted(t.records, key=lambda r: r.soc_code):
            rows.append((r.soc_code, r.title, fmt_decimal(r.oai, OAI_PLACES), t.scenario))
    return write_csv_bytes(OAI_HEADER, rows)


def breakdown_json(t: OaiTable) -> dict:
    return {
        "scenario": t.scenario,
        "occupations": [
            {
                "soc_code": r.soc_code,
                "title": r.title,
                "oai": str(r.oai),
                "tasks": [
                    {
                        "task_id": s.task_id,
                        "weight": str(s.weight),
                        "ai_task": str(s.ai_task),
                        "bottleneck_dwa": s.argmin_dwa_id,
                    }
                    for s in r.task_breakdown
                ],
            }
            for r in sorted(t.records, key=lambda r: r.soc_code)
        ],
        "dwa_index": {d: str(v) for d, v in sorted(t.dwa_index.items())},
    }


def json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=False, ensure_ascii=False) + "\n").encode("utf-8")


def table2_csv_bytes(grid, n_dwas: Mapping | None = None) -> bytes:
    header = ["stratum", "n_dwas"] + [f"{c.value}_mean" for c in COHORTS] + [f"{c.value}_n" for c in COHORTS]
    rows = []
    for stratum, cells in grid.items():
        row = [stratum.value, (n_dwas or {}).get(stratum, "")]
        row += [fmt_decimal(cells[c].mean, 2) if cells[c] is not None else "" for c in COHORTS]
        row += [cells[c].count if cells[c] is not None else 0 for c in COHORTS]
        rows.append(row)
    return write_csv_bytes(header, rows)


@dataclass
class Formats:
    csv: bool = True
    json: bool = True
    plots: bool = True

    @classmethod
    def parse(cls, spec: str | None) -> "Formats":
        if not spec or spec == "all":
            return cls()
        parts = {p.strip() for p in spec.split(",") if p.strip()}
        unknown = parts - {"csv", "json", "plots"}
        if unknown:
            raise ValueError(f"unknown format(s): {sorted(unknown)}")
        return cls(csv="csv" in parts, json="json" in parts, plots="plots" in parts)


def write_report(
    tables: Sequence[OaiTable],
    comparisons: Sequence[ScenarioComparison],
    out_dir: str | os.PathLike,
    formats: Formats | None = None,
    *,
    matrix=None,
    hitl_grid=None,
    hitl_n_dwas: Mapping | None = None,
    breakdown: bool = False,
) -> dict:
    """Write the report files and return a manifest ``{"files": {...}, "omitted": [...]}``.

    Files are staged in a temporary directory next to ``out_dir`` and moved
    in only after every file has been written, so a failure leaves no
    partial output behind.
    """
    formats = formats or Formats()
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory not writable: {out}")

    staged: dict[str, bytes | Path] = {}
    omitted: list[str] = []
    if formats.csv and tables:
        staged["oai.csv"] = oai_csv_bytes(tables)
    if formats.json and tables:
        sums = [summary(t) for t in tables]
        staged["summary.json"] = json_bytes(sums[0] if len(sums) == 1 else sums)
        if breakdown:
            staged["oai_breakdown.json"] = json_bytes([breakdown_json(t) for t in tables])
    if formats.json:
        if comparisons:
            staged["sensitivity.json"] = json_bytes([c.to_json() for c in comparisons])
        else:
            omitted.append("sensitivity.json: no scenario comparisons")
    if hitl_grid is not None and formats.csv:
        staged["table2.csv"] = table2_csv_bytes(hitl_grid, hitl_n_dwas)

    tmp = Path(tempfile.mkdtemp(prefix=".oai-staging-", dir=out))
    moved: list[Path] = []
    try:
        for name, data in staged.items():
            (tmp / name).write_bytes(data)
        if formats.plots:
            from . import plots

            if tables:
                plots.oai_density(tables, tmp / "oai_density.png")
                staged["oai_density.png"] = tmp / "oai_density.png"
            if matrix is not None:
                plots.matrix_heatmap(matrix, tmp / "matrix_heatmap.png")
                staged["matrix_heatmap.png"] = tmp / "matrix_heatmap.png"
            if hitl_grid is not None:
                plots.cognitive_gap(hitl_grid, tmp / "cognitive_gap.png")
                staged["cognitive_gap.png"] = tmp / "cognitive_gap.png"
        else:
            omitted.append("plots: disabled by formats")
        files = {}
        for name in sorted(staged):
            data = (tmp / name).read_bytes()
            files[name] = {"digest": bytes_digest(data), "bytes": len(data)}
        for name in sorted(staged):
            dest = out / name
            os.replace(tmp / name, dest)
            moved.append(dest)
    except BaseException:
        for p in moved:
            p.unlink(missing_ok=True)
        raise
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
    return {"files": files, "omitted": omitted}


def read_oai_csv(path: str | os.PathLike) -> dict[str, OaiTable]:
    """Read an ``oai.csv`` back into per-scenario tables (4-decimal values)."""
    from .aggregate import OaiRecord
    from .csvio import parse_fraction, read_rows
    from .errors import InputValidationError

    rows: dict[str, list[OaiRecord]] = {}
    for line, row in read_rows(path, OAI_HEADER):
        if row is None:
            raise InputValidationError(f"{path}:{line}: malformed row")
        try:
            v = parse_fraction(row[2])
        except ValueError as exc:
            raise InputValidationError(f"{path}:{line}: {exc}") from None
        rows.setdefault(row[3], []).append(OaiRecord(row[0], row[1], v, ()))
    return {s: OaiTable(s, tuple(recs)) for s, recs in rows.items()}


def mismatched(tables: Iterable[OaiTable]) -> bool:
    sets = [frozenset(t.oai_map()) for t in tables]
    return len(set(sets)) > 1


def cell_grid_json(grid) -> dict:
    out = {}
    for stratum, cells in grid.items():
        out[stratum.value] = {
            c.value: (None if v is None else {"mean": round(float(v.mean), 6), "n": v.count})
            for c, v in cells.items()
        }
    return out


def comparisons_for(tables: Mapping[str, OaiTable], base: str = "baseline") -> list[ScenarioComparison]:
    return [scenario_compare(tables[base], t) for name, t in tables.items() if name != base]
