"""Occupation → task → DWA hierarchy loaded from O*NET-layout CSV files.

Four headed CSV files describe the taxonomy::

    dwas.csv          dwa_id,title
    tasks.csv         task_id,occupation_code,title,importance
    occupations.csv   soc_code,title
    task_dwa.csv      task_id,dwa_id

Loading is all-or-nothing. Every rejected row is reported with its file and
line number, and ``rows_in == rows_loaded + rows_rejected`` holds per file.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

from .csvio import parse_fraction, read_rows
from .errors import TaxonomyError

DWA_HEADER = ("dwa_id", "title")
TASK_HEADER = ("task_id", "occupation_code", "title", "importance")
OCCUPATION_HEADER = ("soc_code", "title")
TASK_DWA_HEADER = ("task_id", "dwa_id")

DEFAULT_FILENAMES = {
    "dwa_file": "dwas.csv",
    "task_file": "tasks.csv",
    "occupation_file": "occupations.csv",
    "task_dwa_file": "task_dwa.csv",
}


@dataclass(frozen=True)
class Dwa:
    dwa_id: str
    title: str


@dataclass(frozen=True)
class Task:
    task_id: str
    occupation_code: str
    title: str
    importance: Fraction
    dwa_ids: frozenset[str]


@dataclass(frozen=True)
class Occupation:
    soc_code: str
    title: str
    task_ids: frozenset[str]


@dataclass(frozen=True)
class Issue:
    file: str
    line: int | None
    message: str

    def __str__(self) -> str:
        where = f"{self.file}:{self.line}" if self.line is not None else self.file
        return f"{where}: {self.message}"


@dataclass
class FileStats:
    rows_in: int = 0
    rows_loaded: int = 0
    rows_rejected: int = 0
    duplicates_merged: int = 0


@dataclass
class LoadReport:
    files: dict[str, FileStats] = field(default_factory=dict)
    issues: list[Issue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues


@dataclass(frozen=True)
class Taxonomy:
    dwas: Mapping[str, Dwa]
    tasks: Mapping[str, Task]
    occupations: Mapping[str, Occupation]

    def __post_init__(self):
        # Freeze the mappings so a Taxonomy can be shared between readers.
        for name in ("dwas", "tasks", "occupations"):
            m = getattr(self, name)
            if not isinstance(m, MappingProxyType):
                object.__setattr__(self, name, MappingProxyType(dict(sorted(m.items()))))

    def tasks_of(self, soc_code: str) -> list[Task]:
        return [self.tasks[t] for t in sorted(self.occupations[soc_code].task_ids)]

    def referenced_dwas(self) -> set[str]:
        return {d for t in self.tasks.values() for d in t.dwa_ids}

    def __eq__(self, other):
        if not isinstance(other, Taxonomy):
            return NotImplemented
        return (
            dict(self.dwas) == dict(other.dwas)
            and dict(self.tasks) == dict(other.tasks)
            and dict(self.occupations) == dict(other.occupations)
        )

    __hash__ = None


def taxonomy_paths(directory: str | os.PathLike) -> dict[str, Path]:
    d = Path(directory)
    return {k: d / v for k, v in DEFAULT_FILENAMES.items()}


def load_taxonomy(dwa_file, task_file, occupation_file, task_dwa_file) -> Taxonomy:
    """Load and cross-validate the four taxonomy files.

    Raises ``TaxonomyError`` listing every problem found (with line numbers)
    if any row is rejected or any reference dangles.
    """
    tax, report = read_taxonomy(dwa_file, task_file, occupation_file, task_dwa_file)
    if not report.ok:
        raise TaxonomyError(report.issues, report)
    return tax


def load_taxonomy_dir(directory) -> Taxonomy:
    return load_taxonomy(**taxonomy_paths(directory))


def read_taxonomy(dwa_file, task_file, occupation_file, task_dwa_file) -> tuple[Taxonomy | None, LoadReport]:
    """Like :func:`load_taxonomy` but returns the report instead of raising.

    The taxonomy is None whenever the report carries issues.
    """
    report = LoadReport()
    issues = report.issues

    def stats_for(path) -> FileStats:
        return report.files.setdefault(Path(path).name, FileStats())

    # -- DWAs
    dwas: dict[str, Dwa] = {}
    st = stats_for(dwa_file)
    name = Path(dwa_file).name
    for line, row in read_rows(dwa_file, DWA_HEADER):
        st.rows_in += 1
        if row is None:
            st.rows_rejected += 1
            issues.append(Issue(name, line, f"malformed row: expected {len(DWA_HEADER)} columns"))
            continue
        dwa_id, title = row[0].strip(), row[1].strip()
        if not dwa_id or not title:
            st.rows_rejected += 1
            issues.append(Issue(name, line, "empty dwa_id or title"))
        elif dwa_id in dwas:
            st.rows_rejected += 1
            issues.append(Issue(name, line, f"duplicate dwa_id {dwa_id!r}"))
        else:
            dwas[dwa_id] = Dwa(dwa_id, title)
            st.rows_loaded += 1

    # -- occupations
    occ_titles: dict[str, str] = {}
    st = stats_for(occupation_file)
    name = Path(occupation_file).name
    for line, row in read_rows(occupation_file, OCCUPATION_HEADER):
        st.rows_in += 1
        if row is None:
            st.rows_rejected += 1
            issues.append(Issue(name, line, f"malformed row: expected {len(OCCUPATION_HEADER)} columns"))
            continue
        soc, title = row[0].strip(), row[1].strip()
        if not soc or not title:
            st.rows_rejected += 1
            issues.append(Issue(name, line, "empty soc_code or title"))
        elif soc in occ_titles:
            st.rows_rejected += 1
            issues.append(Issue(name, line, f"duplicate soc_code {soc!r}"))
        else:
            occ_titles[soc] = title
            st.rows_loaded += 1

    # -- tasks
    task_rows: dict[str, tuple[str, str, Fraction, int]] = {}
    st = stats_for(task_file)
    name = Path(task_file).name
    for line, row in read_rows(task_file, TASK_HEADER):
        st.rows_in += 1
        if row is None:
            st.rows_rejected += 1
            issues.append(Issue(name, line, f"malformed row: expected {len(TASK_HEADER)} columns"))
            continue
        task_id, soc, title, imp_text = (c.strip() for c in row)
        problem = None
        try:
            importance = parse_fraction(imp_text)
        except ValueError as exc:
            problem = str(exc)
        else:
            if importance <= 0:
                problem = f"non-positive importance {imp_text!r} for task {task_id!r}"
        if problem is None and (not task_id or not title):
            problem = "empty task_id or title"
        if problem is None and task_id in task_rows:
            problem = f"duplicate task_id {task_id!r}"
        if problem is None and soc not in occ_titles:
            problem = f"task {task_id!r} references unknown occupation {soc!r}"
        if problem is not None:
            st.rows_rejected += 1
            issues.append(Issue(name, line, problem))
            continue
        task_rows[task_id] = (soc, title, importance, line)
        st.rows_loaded += 1

    # -- task ↔ DWA edges
    edges: dict[str, set[str]] = {t: set() for t in task_rows}
    st = stats_for(task_dwa_file)
    name = Path(task_dwa_file).name
    for line, row in read_rows(task_dwa_file, TASK_DWA_HEADER):
        st.rows_in += 1
        if row is None:
            st.rows_rejected += 1
            issues.append(Issue(name, line, f"malformed row: expected {len(TASK_DWA_HEADER)} columns"))
            continue
        task_id, dwa_id = row[0].strip(), row[1].strip()
        if task_id not in task_rows:
            st.rows_rejected += 1
            issues.append(Issue(name, line, f"edge references unknown task {task_id!r}"))
        elif dwa_id not in dwas:
            st.rows_rejected += 1
            issues.append(Issue(name, line, f"task {task_id!r} references unknown DWA {dwa_id!r}"))
        else:
            if dwa_id in edges[task_id]:
                st.duplicates_merged += 1
            edges[task_id].add(dwa_id)
            st.rows_loaded += 1

    tasks: dict[str, Task] = {}
    task_name = Path(task_file).name
    for task_id, (soc, title, importance, line) in task_rows.items():
        if not edges[task_id]:
            task_stats = report.files[task_name]
            task_stats.rows_loaded -= 1
            task_stats.rows_rejected += 1
            issues.append(Issue(task_name, line, f"task has no DWAs: {task_id!r}"))
            continue
        tasks[task_id] = Task(task_id, soc, title, importance, frozenset(edges[task_id]))

    by_occ: dict[str, set[str]] = {soc: set() for soc in occ_titles}
    for task_id, (soc, *_rest) in task_rows.items():
        by_occ[soc].add(task_id)
    occupations: dict[str, Occupation] = {}
    for soc, title in occ_titles.items():
        if not by_occ[soc]:
            issues.append(Issue(Path(occupation_file).name, None, f"occupation has no tasks: {soc!r}"))
            continue
        occupations[soc] = Occupation(soc, title, frozenset(by_occ[soc]))

    if issues:
        return None, report
    return Taxonomy(dwas, tasks, occupations), report


def taxonomy_report(t: Taxonomy) -> dict:
    """Counts and fan-out ranges of a loaded taxonomy."""
    dpt = [len(task.dwa_ids) for task in t.tasks.values()]
    tpo = [len(o.task_ids) for o in t.occupations.values()]
    return {
        "occupations": len(t.occupations),
        "tasks": len(t.tasks),
        "dwas": len(t.dwas),
        "min_dwas_per_task": min(dpt),
        "max_dwas_per_task": max(dpt),
        "min_tasks_per_occupation": min(tpo),
        "max_tasks_per_occupation": max(tpo),
    }
