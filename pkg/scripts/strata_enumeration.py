"""Tabulate the sample variance of every 4-model risk tuple.

Shows which variances occur and how the 625 tuples split over the strata;
nothing falls strictly between 0.25 and 1/3.
"""

from __future__ import annotations

import itertools
from collections import Counter

from oaindex.ensemble import ScoreRecord, fuse_scores

if __name__ == "__main__":
    by_var: Counter = Counter()
    by_stratum: Counter = Counter()
    for tup in itertools.product(range(1, 6), repeat=4):
        f = fuse_scores([ScoreRecord("X", f"m{i}", 2, r) for i, r in enumerate(tup)])
        by_var[f.risk_variance] += 1
        by_stratum[f.stratum.value] += 1
    print("variance     tuples")
    for v in sorted(by_var):
        print(f"{str(v):>8s} {float(v):8.4f} {by_var[v]:6d}")
    print()
    for s, n in by_stratum.items():
        print(f"{s:18s} {n}")
