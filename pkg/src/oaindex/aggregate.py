"""Upward aggregation: DWA index → task index (min) → occupation index (weighted sum).

All arithmetic is exact (``fractions.Fraction``); decimals appear only when
tables are written out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .ensemble import FusedScore
from .errors import PreconditionError, UnscoredDwaError
from .matrix import MappingMatrix, automation_index
from .taxonomy import Occupation, Task, Taxonomy


@dataclass(frozen=True)
class TaskIndexRecord:
    task_id: str
    ai_task: Fraction
    argmin_dwa_id: str
    n_dwas: int


@dataclass(frozen=True)
class TaskShare:
    task_id: str
    weight: Fraction
    ai_task: Fraction
    argmin_dwa_id: str = ""


@dataclass(frozen=True)
class OaiRecord:
    soc_code: str
    title: str
    oai: Fraction
    task_breakdown: tuple[TaskShare, ...]


@dataclass(frozen=True)
class OaiTable:
    scenario: str
    records: tuple[OaiRecord, ...]
    provenance: Mapping[str, str] = field(default_factory=dict)
    dwa_index: Mapping[str, Fraction] = field(default_factory=dict)

    def by_soc(self) -> dict[str, OaiRecord]:
        return {r.soc_code: r for r in self.records}

    def oai_map(self) -> dict[str, Fraction]:
        return {r.soc_code: r.oai for r in self.records}

    def __len__(self) -> int:
        return len(self.records)


def task_index(
    task: Task, dwa_ai: Mapping[str, Fraction], order: Mapping[str, int] | None = None
) -> TaskIndexRecord:
    """Bottleneck index of one task: the minimum over its DWAs.

    Ties on the minimum report the lexicographically smallest DWA id.
    ``order`` optionally maps each DWA to the rank of its index value, which
    spares the Fraction comparisons on large corpora.
    """
    if not task.dwa_ids:
        raise PreconditionError(f"task {task.task_id!r} has no DWAs")
    missing = [d for d in task.dwa_ids if d not in dwa_ai]
    if missing:
        raise UnscoredDwaError(missing)
    best_id = min(sorted(task.dwa_ids), key=(order or dwa_ai).__getitem__)
    return TaskIndexRecord(task.task_id, dwa_ai[best_id], best_id, len(task.dwa_ids))


def task_weights(occupation: Occupation, tasks: Mapping[str, Task]) -> dict[str, Fraction]:
    total = sum((tasks[t].importance for t in occupation.task_ids), Fraction(0))
    if total <= 0:
        raise PreconditionError(f"occupation {occupation.soc_code!r} has zero cumulative importance")
    return {t: tasks[t].importance / total for t in sorted(occupation.task_ids)}


def all_task_weights(taxonomy: Taxonomy) -> dict[str, dict[str, Fraction]]:
    """Per-occupation weights; they do not depend on the matrix, so reuse across scenarios."""
    return {soc: task_weights(occ, taxonomy.tasks) for soc, occ in taxonomy.occupations.items()}


def occupation_index(
    occupation: Occupation,
    weights: Mapping[str, Fraction],
    task_indices: Mapping[str, TaskIndexRecord | Fraction],
) -> OaiRecord:
    expected = set(occupation.task_ids)
    if set(weights) != expected or set(task_indices) != expected:
        raise PreconditionError(
            f"occupation {occupation.soc_code!r}: weights/indices do not cover exactly its tasks"
        )
    shares = []
    for t in sorted(expected):
        rec = task_indices[t]
        if isinstance(rec, TaskIndexRecord):
            shares.append(TaskShare(t, weights[t], rec.ai_task, rec.argmin_dwa_id))
        else:
            shares.append(TaskShare(t, weights[t], Fraction(rec)))
    oai = sum((s.weight * s.ai_task for s in shares if s.ai_task), Fraction(0))
    return OaiRecord(occupation.soc_code, occupation.title, oai, tuple(shares))


def dwa_indices(
    taxonomy: Taxonomy, fused: Mapping[str, FusedScore], m: MappingMatrix
) -> dict[str, Fraction]:
    needed = taxonomy.referenced_dwas()
    missing = needed - set(fused)
    if missing:
        raise UnscoredDwaError(missing)
    return {d: automation_index(m, fused[d].tech_level, fused[d].risk_score) for d in sorted(needed)}


def compute_all(
    taxonomy: Taxonomy,
    fused_scores: Mapping[str, FusedScore],
    m: MappingMatrix,
    provenance: Mapping[str, str] | None = None,
    weights: Mapping[str, Mapping[str, Fraction]] | None = None,
) -> OaiTable:
    """OAI for every occupation under one mapping matrix.

    ``weights`` may carry the output of :func:`all_task_weights` when the
    same taxonomy is evaluated under several matrices.
    """
    dwa_ai = dwa_indices(taxonomy, fused_scores, m)
    levels = {v: i for i, v in enumerate(sorted(set(dwa_ai.values())))}
    order = {d: levels[v] for d, v in dwa_ai.items()}
    t_index = {tid: task_index(task, dwa_ai, order) for tid, task in taxonomy.tasks.items()}
    records = []
    for soc in sorted(taxonomy.occupations):
        occ = taxonomy.occupations[soc]
        w = weights[soc] if weights is not None else task_weights(occ, taxonomy.tasks)
        records.append(occupation_index(occ, w, {t: t_index[t] for t in occ.task_ids}))
    return OaiTable(m.name, tuple(records), dict(provenance or {}), dwa_ai)
