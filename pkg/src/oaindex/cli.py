"""Command-line entry point: ``oaindex <subcommand> ...``.

Stages are file-driven: validate → score → fuse → compute → sensitivity,
plus sample and hitl for the validation study. Every run writes
``manifest.json`` next to its outputs.

Exit codes: 0 success, 2 input validation failure, 3 computation
precondition failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from pathlib import Path

from . import __version__
from .aggregate import all_task_weights, compute_all
from .csvio import file_digest
from .ensemble import STRATA, fuse_all, fused_csv_bytes, load_fused, load_scores, sample_csv_bytes, stratified_sample
from .errors import InputValidationError, OaiError, PreconditionError
from .matrix import ScenarioId, load_matrix, preset
from .report import Formats, comparisons_for, json_bytes, mismatched, read_oai_csv, scenario_compare, write_report
from .taxonomy import DEFAULT_FILENAMES, load_taxonomy, taxonomy_report

EXIT_OK, EXIT_INPUT, EXIT_PRECONDITION, EXIT_IO = 0, 2, 3, 4
OUT_ENV = "OAINDEX_OUT_DIR"

log = logging.getLogger("oaindex")


def _taxonomy_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("taxonomy")
    g.add_argument("--taxonomy", type=Path, help="directory holding dwas.csv, tasks.csv, occupations.csv, task_dwa.csv")
    g.add_argument("--dwas", type=Path)
    g.add_argument("--tasks", type=Path)
    g.add_argument("--occupations", type=Path)
    g.add_argument("--task-dwa", type=Path)


def _taxonomy_paths(args) -> dict[str, Path]:
    base = args.taxonomy
    out = {}
    for key, attr in (("dwa_file", "dwas"), ("task_file", "tasks"), ("occupation_file", "occupations"), ("task_dwa_file", "task_dwa")):
        explicit = getattr(args, attr)
        if explicit is not None:
            out[key] = explicit
        elif base is not None:
            out[key] = base / DEFAULT_FILENAMES[key]
        else:
            raise InputValidationError(f"no path for {DEFAULT_FILENAMES[key]}: pass --taxonomy DIR or --{attr.replace('_', '-')}")
    return out


def _out_dir(args) -> Path:
    if args.out is not None:
        return args.out
    env = os.environ.get(OUT_ENV)
    if env:
        return Path(env)
    return Path("oaindex-out")


def _add_out(p):
    p.add_argument("--out", type=Path, default=None, help=f"output directory (default ${OUT_ENV} or ./oaindex-out)")


def _manifest(out: Path, command: str, args, inputs: dict[str, Path], outputs: dict, **extra) -> None:
    config = {}
    for k, v in sorted(vars(args).items()):
        if k in ("func", "out"):
            continue
        if isinstance(v, Path):
            v = v.name
        elif isinstance(v, list):
            v = [x.name if isinstance(x, Path) else x for x in v]
        config[k] = v
    doc = {
        "artifact_version": __version__,
        "command": command,
        "config": config,
        "inputs": {name: {"file": p.name, "digest": file_digest(p)} for name, p in sorted(inputs.items())},
        **extra,
        "outputs": outputs,
    }
    (out / "manifest.json").write_bytes(json_bytes(doc))


def _write_files(out: Path, files: dict[str, bytes]) -> dict:
    from .csvio import bytes_digest

    out.mkdir(parents=True, exist_ok=True)
    manifest = {}
    for name, data in files.items():
        (out / name).write_bytes(data)
        manifest[name] = {"digest": bytes_digest(data), "bytes": len(data)}
    return {"files": manifest, "omitted": []}


def _provenance(paths: dict[str, Path]) -> dict[str, str]:
    return {p.name: file_digest(p) for p in paths.values()}


# -- subcommands -----------------------------------------------------------


def cmd_validate(args) -> int:
    paths = _taxonomy_paths(args)
    tax = load_taxonomy(**paths)
    print(json.dumps(taxonomy_report(tax), indent=2))
    return EXIT_OK


def cmd_fuse(args) -> int:
    fused = fuse_all(load_scores(args.scores))
    out = _out_dir(args)
    outputs = _write_files(out, {"fused.csv": fused_csv_bytes(fused)})
    _manifest(out, "fuse", args, {"scores": args.scores}, outputs)
    counts = {s.value: sum(1 for f in fused.values() if f.stratum == s) for s in STRATA}
    print(json.dumps({"dwas": len(fused), "strata": counts}, indent=2))
    return EXIT_OK


def _matrix(args):
    if args.matrix is not None:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            m = load_matrix(args.matrix)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        return m
    return preset(args.scenario)


def cmd_compute(args) -> int:
    tpaths = _taxonomy_paths(args)
    tax = load_taxonomy(**tpaths)
    fused = fuse_all(load_scores(args.scores))
    m = _matrix(args)
    inputs = {**tpaths, "scores": args.scores}
    if args.matrix is not None:
        inputs["matrix"] = args.matrix
    table = compute_all(tax, fused, m, _provenance(inputs))
    out = _out_dir(args)
    outputs = write_report([table], [], out, Formats.parse(args.formats), matrix=m, breakdown=args.breakdown)
    _manifest(out, "compute", args, inputs, outputs, scenario=m.name)
    print(json.dumps({"scenario": m.name, "occupations": len(table), "out": str(out)}))
    return EXIT_OK


def cmd_sensitivity(args) -> int:
    out = _out_dir(args)
    if args.tables:
        loaded = [read_oai_csv(p) for p in args.tables]
        tables = [t for d in loaded for t in d.values()]
        if len(tables) < 2:
            raise InputValidationError("--tables needs at least two scenario tables in total")
        if mismatched(tables):
            raise PreconditionError("occupation sets differ between the supplied tables")
        comps = [scenario_compare(tables[0], t) for t in tables[1:]]
        outputs = write_report([], comps, out, Formats(csv=False, json=True, plots=False))
        _manifest(out, "sensitivity", args, {f"table{i}": p for i, p in enumerate(args.tables)}, outputs)
        print(json.dumps([c.to_json(top=0) for c in comps]))
        return EXIT_OK

    tpaths = _taxonomy_paths(args)
    if args.scores is None:
        raise InputValidationError("--scores is required unless --tables is given")
    tax = load_taxonomy(**tpaths)
    fused = fuse_all(load_scores(args.scores))
    inputs = {**tpaths, "scores": args.scores}
    prov = _provenance(inputs)
    weights = all_task_weights(tax)
    tables = {s.value: compute_all(tax, fused, preset(s), prov, weights) for s in ScenarioId}
    comps = comparisons_for(tables, "baseline")
    outputs = write_report(
        list(tables.values()), comps, out, Formats.parse(args.formats), matrix=preset("baseline")
    )
    _manifest(out, "sensitivity", args, inputs, outputs, scenarios=list(tables))
    print(json.dumps([c.to_json(top=0) for c in comps]))
    return EXIT_OK


def _parse_counts(text: str) -> dict:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise InputValidationError("--counts takes three integers: consensus,slight,severe")
    try:
        vals = [int(p) for p in parts]
    except ValueError:
        raise InputValidationError(f"--counts: not integers: {text!r}") from None
    if any(v < 0 for v in vals):
        raise InputValidationError("--counts must be non-negative")
    return dict(zip(STRATA, vals))


def cmd_sample(args) -> int:
    fused = load_fused(args.fused)
    counts = _parse_counts(args.counts)
    sample = stratified_sample(fused.values(), counts, args.seed)
    out = _out_dir(args)
    outputs = _write_files(out, {"sample.csv": sample_csv_bytes(sample, fused)})
    for s, k in sample.clamped.items():
        print(f"warning: requested {k} from {s.value} but only {len(sample.drawn[s])} available", file=sys.stderr)
    _manifest(
        out,
        "sample",
        args,
        {"fused": args.fused},
        outputs,
        seed=args.seed,
        prng="splitmix64",
        clamped={s.value: k for s, k in sample.clamped.items()},
    )
    print(json.dumps({s.value: len(sample.drawn[s]) for s in STRATA}))
    return EXIT_OK


def cmd_hitl(args) -> int:
    from .hitl import analyze, dwas_per_stratum, load_hitl
    from .stats import cell_means

    fused = load_fused(args.fused)
    obs = load_hitl(args.hitl, fused)
    if not obs:
        raise InputValidationError(f"{args.hitl}: no ratings")
    result = analyze(obs, fused)
    grid = cell_means(obs)
    out = _out_dir(args)
    outputs = write_report(
        [], [], out, Formats.parse(args.formats), hitl_grid=grid, hitl_n_dwas=dwas_per_stratum(obs)
    )
    outputs["omitted"] = [o for o in outputs["omitted"] if not o.startswith("sensitivity.json")]
    data = json_bytes(result)
    (out / "tests.json").write_bytes(data)
    from .csvio import bytes_digest

    outputs["files"]["tests.json"] = {"digest": bytes_digest(data), "bytes": len(data)}
    outputs["files"] = dict(sorted(outputs["files"].items()))
    _manifest(out, "hitl", args, {"hitl": args.hitl, "fused": args.fused}, outputs)
    for w in result["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_score(args) -> int:
    from .client import dwas_from_csv, load_endpoints, score_corpus

    dwas = dwas_from_csv(args.dwas)
    endpoints = load_endpoints(args.endpoints)
    out = _out_dir(args)
    run = score_corpus(dwas, endpoints, args.concurrency, out, backoff=args.backoff)
    print(json.dumps({"scored": run.scored, "skipped": run.skipped, "failed": len(run.failed)}))
    for w in run.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oaindex", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--fixture", type=Path, metavar="DIR", help="write the bundled synthetic dataset to DIR and exit")
    p.add_argument("--log-level", default="WARNING")
    sub = p.add_subparsers(dest="command")

    s = sub.add_parser("validate", help="load and check the taxonomy files")
    _taxonomy_args(s)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("fuse", help="fuse per-model scores into fused.csv")
    s.add_argument("--scores", type=Path, required=True)
    _add_out(s)
    s.set_defaults(func=cmd_fuse)

    s = sub.add_parser("compute", help="occupation indices under one scenario or custom matrix")
    _taxonomy_args(s)
    s.add_argument("--scores", type=Path, required=True)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--scenario", choices=[x.value for x in ScenarioId], default="baseline")
    g.add_argument("--matrix", type=Path, help="custom matrix.json")
    s.add_argument("--formats", default="all", help="comma list of csv,json,plots (default all)")
    s.add_argument("--breakdown", action="store_true", help="also write oai_breakdown.json")
    _add_out(s)
    s.set_defaults(func=cmd_compute)

    s = sub.add_parser("sensitivity", help="baseline vs aggressive/conservative rank stability")
    _taxonomy_args(s)
    s.add_argument("--scores", type=Path)
    s.add_argument("--tables", type=Path, nargs="+", help="compare existing oai.csv files instead")
    s.add_argument("--formats", default="all")
    _add_out(s)
    s.set_defaults(func=cmd_sensitivity)

    s = sub.add_parser("sample", help="variance-stratified HITL sample")
    s.add_argument("--fused", type=Path, required=True)
    s.add_argument("--counts", default="49,17,34", help="consensus,slight,severe")
    s.add_argument("--seed", type=int, required=True)
    _add_out(s)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("hitl", help="stratum × cohort table and validation tests")
    s.add_argument("--hitl", type=Path, required=True)
    s.add_argument("--fused", type=Path, required=True)
    s.add_argument("--formats", default="all")
    _add_out(s)
    s.set_defaults(func=cmd_hitl)

    s = sub.add_parser("score", help="collect model scores from chat-completion endpoints")
    s.add_argument("--dwas", type=Path, required=True)
    s.add_argument("--endpoints", type=Path, required=True)
    s.add_argument("--concurrency", type=int, default=4)
    s.add_argument("--backoff", type=float, default=1.0, help="base retry delay in seconds")
    _add_out(s)
    s.set_defaults(func=cmd_score)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    if args.fixture is not None:
        from .fixture import write_fixture

        try:
            paths = write_fixture(args.fixture)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(json.dumps({k: str(v) for k, v in paths.items()}, indent=2))
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_INPUT
    try:
        return args.func(args)
    except InputValidationError as exc:
        _report_issues(exc)
        return EXIT_INPUT
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OaiError as exc:  # pragma: no cover - every subclass is handled above
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def _report_issues(exc: InputValidationError) -> None:
    issues = getattr(exc, "issues", None)
    if issues:
        for i in issues:
            print(f"error: {i}", file=sys.stderr)
    else:
        print(f"error: {exc}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
