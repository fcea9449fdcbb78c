"""Bundled synthetic datasets.

``write_fixture`` materializes a small hand-authored taxonomy (5 occupations,
12 tasks, 20 DWAs), four mock models' scores and a HITL rating file.
``random_dataset`` builds full-size random inputs (923 occupations, 2,087 DWAs) for smoke tests.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from .csvio import write_csv_bytes
from .ensemble import SCORES_HEADER, SplitMix64, fuse_all, ScoreRecord
from .taxonomy import DWA_HEADER, OCCUPATION_HEADER, TASK_DWA_HEADER, TASK_HEADER

MODELS = ("model-a", "model-b", "model-c", "model-d")

# dwa_id, title, tech scores per model, risk scores per model
DWAS = [
    ("D01", "Draft routine correspondence", (3, 3, 3, 3), (1, 1, 1, 1)),
    ("D02", "Compile statistical summaries", (3, 3, 3, 2), (2, 2, 2, 2)),
    ("D03", "Proofread written material", (3, 3, 3, 3), (1, 1, 1, 2)),
    ("D04", "Enter information into databases", (3, 3, 2, 3), (2, 2, 3, 3)),
    ("D05", "Write computer programs", (3, 3, 3, 3), (3, 3, 3, 3)),
    ("D06", "Analyze financial records", (2, 3, 2, 2), (4, 4, 4, 3)),
    ("D07", "Prepare legal documents", (3, 3, 3, 3), (4, 4, 4, 4)),
    ("D08", "Schedule appointments", (2, 2, 2, 2), (1, 1, 2, 2)),
    ("D09", "Research information from online sources", (2, 2, 2, 3), (2, 2, 2, 2)),
    ("D10", "Monitor equipment operation", (1, 1, 1, 1), (3, 3, 3, 3)),
    ("D11", "Operate heavy construction equipment", (0, 0, 0, 1), (5, 5, 5, 5)),
    ("D12", "Lift or move heavy materials", (0, 0, 0, 0), (3, 3, 3, 4)),
    ("D13", "Clean work areas", (0, 0, 1, 1), (2, 2, 2, 2)),
    ("D14", "Administer medications to patients", (1, 1, 1, 2), (5, 5, 4, 5)),
    ("D15", "Explain medical procedures to patients", (2, 2, 2, 2), (3, 3, 4, 4)),
    ("D16", "Maintain operational records", (3, 3, 3, 3), (2, 2, 2, 3)),
    ("D17", "Inspect structures for defects", (1, 1, 1, 1), (4, 4, 4, 4)),
    ("D18", "Coordinate project activities", (2, 2, 2, 2), (2, 3, 3, 4)),
    ("D19", "Negotiate terms with clients", (2, 2, 1, 1), (3, 3, 3, 3)),
    ("D20", "Repair electrical wiring", (1, 1, 0, 0), (4, 4, 5, 5)),
]

OCCUPATIONS = [
    ("15-2051.00", "Data Scientists"),
    ("43-9021.00", "Data Entry Keyers"),
    ("13-2011.00", "Accountants and Auditors"),
    ("29-1141.00", "Registered Nurses"),
    ("47-2111.00", "Electricians"),
]

# task_id, soc_code, title, importance, dwa_ids
TASKS = [
    ("T01", "15-2051.00", "Build predictive models from data", "4.5", ("D02", "D05")),
    ("T02", "15-2051.00", "Review literature on analytic methods", "4.0", ("D09", "D01")),
    ("T03", "15-2051.00", "Document analysis results", "3.2", ("D03", "D16")),
    ("T04", "43-9021.00", "Key data into record systems", "4.2", ("D04", "D16")),
    ("T05", "43-9021.00", "Arrange work schedules with staff", "3.0", ("D08", "D01")),
    ("T06", "13-2011.00", "Examine accounts for compliance", "4.6", ("D06", "D09")),
    ("T07", "13-2011.00", "Prepare statutory filings", "3.8", ("D07", "D02")),
    ("T08", "13-2011.00", "Advise clients on engagements", "2.5", ("D18", "D19")),
    ("T09", "29-1141.00", "Treat patients at bedside", "4.8", ("D14", "D15")),
    ("T10", "29-1141.00", "Educate patients about care plans", "3.5", ("D15", "D08")),
    ("T11", "47-2111.00", "Install wiring on construction sites", "4.4", ("D20", "D17", "D11")),
    ("T12", "47-2111.00", "Maintain tools and job sites", "3.1", ("D10", "D13", "D12")),
]

HITL_SEED = 20250101
HUMAN_EVALUATORS = (("t1", "tech"), ("t2", "tech"), ("t3", "tech"), ("g1", "mgmt"), ("g2", "mgmt"), ("g3", "mgmt"))


def score_records() -> list[ScoreRecord]:
    out = []
    for dwa_id, title, techs, risks in DWAS:
        for m, t, r in zip(MODELS, techs, risks):
            out.append(ScoreRecord(dwa_id, m, t, r, f"synthetic rating of '{title}'"))
    return out


def hitl_rows() -> list[tuple]:
    """Deterministic synthetic expert ratings around the AI consensus.

    Management raters add a premium that grows with model disagreement.
    """
    rng = SplitMix64(HITL_SEED)
    fused = fuse_all(score_records())
    premium_odds = {"Consensus": 0, "SlightFriction": 1, "SevereDivergence": 2}  # out of 4
    rows = []
    for rec in score_records():
        rows.append((rec.dwa_id, rec.model_id, "ai", rec.tech_level, rec.risk_score))
    for dwa_id, *_ in DWAS:
        f = fused[dwa_id]
        for ev, cohort in HUMAN_EVALUATORS:
            noise = (-1, 0, 0, 1)[rng.below(4)]
            bump = 0
            if cohort == "mgmt" and rng.below(4) < premium_odds[f.stratum.value]:
                bump = 1
            risk = min(5, max(1, f.risk_score + noise + bump))
            tech = min(3, max(0, f.tech_level + (-1, 0, 0, 0, 1)[rng.below(5)]))
            rows.append((dwa_id, ev, cohort, tech, risk))
    return rows


def _write(path: Path, data: bytes) -> None:
    path.write_bytes(data)


def write_fixture(out_dir: str | os.PathLike) -> dict[str, Path]:
    """Write the synthetic dataset; returns the paths by role."""
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    paths = {
        "dwa_file": d / "dwas.csv",
        "task_file": d / "tasks.csv",
        "occupation_file": d / "occupations.csv",
        "task_dwa_file": d / "task_dwa.csv",
        "scores": d / "scores.csv",
        "hitl": d / "hitl.csv",
        "endpoints": d / "endpoints.json",
    }
    _write(paths["dwa_file"], write_csv_bytes(DWA_HEADER, [(i, t) for i, t, *_ in DWAS]))
    _write(paths["occupation_file"], write_csv_bytes(OCCUPATION_HEADER, OCCUPATIONS))
    _write(paths["task_file"], write_csv_bytes(TASK_HEADER, [(t, o, ti, imp) for t, o, ti, imp, _ in TASKS]))
    _write(
        paths["task_dwa_file"],
        write_csv_bytes(TASK_DWA_HEADER, [(t, dw) for t, *_, dwas in TASKS for dw in dwas]),
    )
    _write(
        paths["scores"],
        write_csv_bytes(
            SCORES_HEADER,
            [(r.dwa_id, r.model_id, r.tech_level, r.risk_score, r.reasoning) for r in score_records()],
        ),
    )
    _write(
        paths["hitl"],
        write_csv_bytes(("dwa_id", "evaluator_id", "cohort", "tech_rating", "risk_rating"), hitl_rows()),
    )
    endpoints = [
        {"base_url": "http://127.0.0.1:8000/v1", "model_id": m, "timeout": 60, "max_retries": 3, "temperature": 0}
        for m in MODELS
    ]
    paths["endpoints"].write_text(json.dumps(endpoints, indent=2) + "\n", encoding="utf-8")
    return paths


def random_dataset(
    out_dir: str | os.PathLike,
    *,
    n_occupations: int = 923,
    n_dwas: int = 2087,
    tasks_per_occupation: tuple[int, int] = (8, 30),
    dwas_per_task: tuple[int, int] = (1, 4),
    n_models: int = 4,
    seed: int = 1,
) -> dict[str, Path]:
    """Random taxonomy + scores of the given shape (default: full O*NET size)."""
    rng = SplitMix64(seed)

    def between(lo, hi):
        return lo + rng.below(hi - lo + 1)

    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    dwa_ids = [f"R{i:05d}" for i in range(n_dwas)]
    occ_rows, task_rows, edge_rows = [], [], []
    used = set()
    tid = 0
    for k in range(n_occupations):
        soc = f"{11 + k // 100:02d}-{k % 100:04d}.00"
        occ_rows.append((soc, f"Synthetic occupation {k}"))
        for _ in range(between(*tasks_per_occupation)):
            task_id = f"S{tid:06d}"
            tid += 1
            task_rows.append((task_id, soc, f"Synthetic task {task_id}", f"{between(100, 500) / 100:.2f}"))
            for _ in range(between(*dwas_per_task)):
                dw = dwa_ids[rng.below(n_dwas)]
                used.add(dw)
                edge_rows.append((task_id, dw))
    # every DWA referenced at least once
    for i, dw in enumerate(dwa_ids):
        if dw not in used:
            edge_rows.append((task_rows[i % len(task_rows)][0], dw))
    score_rows = []
    for dw in dwa_ids:
        base_t, base_r = rng.below(4), 1 + rng.below(5)
        for m in range(n_models):
            t = min(3, max(0, base_t + (-1, 0, 0, 1)[rng.below(4)]))
            r = min(5, max(1, base_r + (-1, 0, 0, 1)[rng.below(4)]))
            score_rows.append((dw, f"model-{m}", t, r, ""))
    paths = {
        "dwa_file": d / "dwas.csv",
        "task_file": d / "tasks.csv",
        "occupation_file": d / "occupations.csv",
        "task_dwa_file": d / "task_dwa.csv",
        "scores": d / "scores.csv",
    }
    _write(paths["dwa_file"], write_csv_bytes(DWA_HEADER, [(dw, f"Synthetic activity {dw}") for dw in dwa_ids]))
    _write(paths["occupation_file"], write_csv_bytes(OCCUPATION_HEADER, occ_rows))
    _write(paths["task_file"], write_csv_bytes(TASK_HEADER, task_rows))
    _write(paths["task_dwa_file"], write_csv_bytes(TASK_DWA_HEADER, edge_rows))
    _write(paths["scores"], write_csv_bytes(SCORES_HEADER, score_rows))
    return paths
