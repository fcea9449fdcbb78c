"""Run every CLI stage on the bundled synthetic dataset.

    python3 scripts/run_fixture_pipeline.py [OUT_DIR]
"""

from __future__ import annotations

import sys
from pathlib import Path

from oaindex.cli import main


def run(*argv) -> None:
    rc = main([str(a) for a in argv])
    if rc != 0:
        raise SystemExit(f"{argv[0]} exited with {rc}")


if __name__ == "__main__":
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "fixture-run")
    fx = out / "fixture"
    run("--fixture", fx)
    run("validate", "--taxonomy", fx)
    run("fuse", "--scores", fx / "scores.csv", "--out", out / "fuse")
    for scenario in ("baseline", "aggressive", "conservative"):
        run("compute", "--taxonomy", fx, "--scores", fx / "scores.csv", "--scenario", scenario,
            "--breakdown", "--out", out / f"compute-{scenario}")
    run("sensitivity", "--taxonomy", fx, "--scores", fx / "scores.csv", "--out", out / "sensitivity")
    run("sample", "--fused", out / "fuse" / "fused.csv", "--counts", "4,2,2", "--seed", 2025,
        "--out", out / "sample")
    run("hitl", "--hitl", fx / "hitl.csv", "--fused", out / "fuse" / "fused.csv", "--out", out / "hitl")
    print(f"outputs under {out.resolve()}")
