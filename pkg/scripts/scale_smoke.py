"""Time compute + sensitivity on a random corpus of the full taxonomy's shape.

    python3 scripts/scale_smoke.py [--occupations 923] [--dwas 2087] [--seed 1]
"""

from __future__ import annotations

import argparse
import tempfile
import time
from pathlib import Path

from oaindex.cli import main
from oaindex.fixture import random_dataset

if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--occupations", type=int, default=923)
    ap.add_argument("--dwas", type=int, default=2087)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        d = Path(tmp)
        paths = random_dataset(d / "data", n_occupations=args.occupations, n_dwas=args.dwas, seed=args.seed)
        timings = {}
        for cmd in ("compute", "sensitivity"):
            t0 = time.perf_counter()
            rc = main([cmd, "--taxonomy", str(d / "data"), "--scores", str(paths["scores"]), "--out", str(d / cmd)])
            timings[cmd] = time.perf_counter() - t0
            assert rc == 0, cmd
    for k, v in timings.items():
        print(f"{k:12s} {v:6.2f} s")
    print(f"{'total':12s} {sum(timings.values()):6.2f} s")
