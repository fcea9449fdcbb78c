"""Straight-line recomputation of the occupation index from the raw CSV files.

Shares no code with the package: plain csv, floats, and the mapping rules
written out as nested conditionals.
"""

import csv
import math
from collections import defaultdict


def baseline_cell(t, r):
    if r == 5 or t == 0:
        return 0.0
    if t == 3 and r <= 2:
        return 1.0
    if (t == 3 and r == 3) or (t == 2 and r <= 2):
        return 0.7
    if t == 2 and r == 3:
        return 0.5
    if (t in (2, 3) and r == 4) or (t == 1 and r <= 3):
        return 0.3
    return 0.0


def nearest(x):
    return int(math.floor(x + 0.5))


def oracle_oai(directory, cell=baseline_cell):
    with open(f"{directory}/scores.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    techs, risks = defaultdict(list), defaultdict(list)
    for row in rows:
        techs[row["dwa_id"]].append(int(row["tech_level"]))
        risks[row["dwa_id"]].append(int(row["risk_score"]))
    dwa_ai = {}
    for d in techs:
        t = nearest(sum(techs[d]) / len(techs[d]))
        r = nearest(sum(risks[d]) / len(risks[d]))
        dwa_ai[d] = cell(t, r)

    with open(f"{directory}/task_dwa.csv", newline="") as fh:
        edges = defaultdict(list)
        for row in csv.DictReader(fh):
            edges[row["task_id"]].append(row["dwa_id"])
    task_ai = {t: min(dwa_ai[d] for d in ds) for t, ds in edges.items()}

    with open(f"{directory}/tasks.csv", newline="") as fh:
        by_occ = defaultdict(list)
        for row in csv.DictReader(fh):
            by_occ[row["occupation_code"]].append((row["task_id"], float(row["importance"])))
    out = {}
    for soc, tasks in by_occ.items():
        total = sum(i for _, i in tasks)
        out[soc] = sum(i / total * task_ai[t] for t, i in tasks)
    return out
