"""Collect DWA scores from chat-completion endpoints using the fixed scoring prompt.

Wire format (one request per DWA and model)::

    POST {base_url}/chat/completions
    {"model": ..., "messages": [{"role": "system", ...}, {"role": "user", ...}],
     "temperature": 0}

The reply text is ``choices[0].message.content`` and must be a JSON object
with exactly ``tech_level``, ``risk_score`` and ``reasoning``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import httpx

from .ensemble import SCORES_HEADER, ScoreRecord
from .errors import InputValidationError, ProtocolError
from .taxonomy import Dwa

log = logging.getLogger(__name__)

# Line breaks and trailing blanks are part of the frozen prompt text.
SYSTEM_PROMPT = "\n".join(
    (
        'You are a top-tier assessment expert at the intersection of labor economics and ',
        'artificial intelligence. Your task is to evaluate the given [Detailed Work Activity ',
        '(DWA)] and score it across two dimensions: Technical Implementation Path (tech_level) ',
        'and Failure Risk Penalty (risk_score).',
        '',
        '[Dimension 1: Technical Implementation Path (tech_level)]',
        'Level 3: Native LLM Replacement. Pure text/data processing; current LLMs can ',
        'complete it without external tools.',
        'Level 2: Agent/MCP Integration. The model requires specific plugins (e.g., web search, ',
        'file reading) to complete it fully automatically.',
        'Level 1: System Integration. Technically feasible, but requires IT departments to ',
        'develop APIs to connect legacy systems or hardware.',
        'Level 0: Human-in-the-loop Required. Involves complex physical world interaction, ',
        'highly nuanced emotional support, or critical moral/legal final decisions. Current AI ',
        'cannot close the loop independently.',
        '',
        '[Dimension 2: Failure Risk Penalty (risk_score)]',
        '1: No risk (e.g., drafting a document with typos, easily fixable).',
        '2: Minor business impact (e.g., sending an incorrect internal email).',
        '3: Moderate loss (e.g., losing a single client or causing minor financial loss).',
        '4: Severe loss (e.g., facing legal action, severe reputation crisis, or major ',
        'safety incident).',
        '5: Fatal impact (e.g., endangering human life, license revocation, or company ',
        'bankruptcy).',
        '',
        '[Output Requirements]',
        'You MUST ONLY return a valid JSON object. Do not output any Markdown formatting ',
        '(like ```json), and do not include any conversational filler.',
        'The format must be exactly as follows:',
        '{"tech_level": 2, "risk_score": 3, "reasoning": "A brief explanation of why."}',
    )
)

SYSTEM_PROMPT_SHA256 = hashlib.sha256(SYSTEM_PROMPT.encode("utf-8")).hexdigest()

REQUIRED_KEYS = ("tech_level", "risk_score", "reasoning")
_FENCE = re.compile(r"^\s*```[A-Za-z0-9_-]*[ \t]*\n(.*?)\n?```\s*$", re.DOTALL)

FAILURES_HEADER = ("dwa_id", "model_id", "attempts", "last_error")


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model_id: str
    timeout: float = 60.0
    max_retries: int = 3
    temperature: float = 0.0
    api_key: str | None = None

    def __post_init__(self):
        if self.max_retries < 0:
            raise InputValidationError(f"max_retries must be >= 0 (model {self.model_id})")
        if self.timeout <= 0:
            raise InputValidationError(f"timeout must be > 0 (model {self.model_id})")


def load_endpoints(path: str | os.PathLike) -> list[EndpointConfig]:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputValidationError(f"{path}: {exc}") from None
    if isinstance(data, dict):
        data = data.get("endpoints", [])
    if not isinstance(data, list) or not data:
        raise InputValidationError(f"{path}: expected a non-empty list of endpoints")
    out = []
    for i, item in enumerate(data):
        try:
            out.append(EndpointConfig(**item))
        except TypeError as exc:
            raise InputValidationError(f"{path}: endpoint #{i}: {exc}") from None
    ids = [e.model_id for e in out]
    if len(set(ids)) != len(ids):
        raise InputValidationError(f"{path}: duplicate model_id")
    return out


@dataclass(frozen=True)
class RawResponse:
    dwa_id: str
    model_id: str
    body: str
    latency: float
    attempt: int
    error: str = ""


@dataclass(frozen=True)
class ParsedScore:
    tech_level: int
    risk_score: int
    reasoning: str
    warnings: tuple[str, ...] = ()


def build_prompt(dwa: Dwa, endpoint: EndpointConfig | None = None) -> dict:
    """Chat-completions request body for one DWA."""
    if not dwa.title.strip():
        raise InputValidationError(f"DWA {dwa.dwa_id!r} has an empty title")
    payload = {
        "messages": [
            {"role": "system", "content": SYSTEM_PROMPT},
            {"role": "user", "content": dwa.title},
        ],
        "temperature": 0.0,
    }
    if endpoint is not None:
        payload = {"model": endpoint.model_id, **payload, "temperature": endpoint.temperature}
    return payload


def parse_response(body: str) -> ParsedScore:
    """Validate a model reply against the scoring protocol.

    A single fenced code block around the object is unwrapped with a warning;
    unexpected extra keys are also only a warning.
    """
    notes: list[str] = []
    text = body.strip()
    m = _FENCE.match(text)
    if m:
        text = m.group(1).strip()
        notes.append("response wrapped in a code fence; unwrapped")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"response is not JSON: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ProtocolError(f"response is JSON {type(obj).__name__}, expected an object")
    missing = [k for k in REQUIRED_KEYS if k not in obj]
    if missing:
        raise ProtocolError(f"missing key(s): {', '.join(missing)}")
    extra = sorted(set(obj) - set(REQUIRED_KEYS))
    if extra:
        notes.append(f"ignored extra key(s): {', '.join(extra)}")
    tech, risk, reasoning = obj["tech_level"], obj["risk_score"], obj["reasoning"]
    for key, val, lo, hi in (("tech_level", tech, 0, 3), ("risk_score", risk, 1, 5)):
        if isinstance(val, bool) or not isinstance(val, int):
            raise ProtocolError(f"{key} must be an integer, got {val!r}")
        if not lo <= val <= hi:
            raise ProtocolError(f"{key} {val} outside {lo}..{hi}")
    if not isinstance(reasoning, str):
        raise ProtocolError("reasoning must be a string")
    return ParsedScore(tech, risk, reasoning, tuple(notes))


def serialize_score(tech_level: int, risk_score: int, reasoning: str = "") -> str:
    return json.dumps({"tech_level": tech_level, "risk_score": risk_score, "reasoning": reasoning})


def extract_content(response_json) -> str:
    try:
        content = response_json["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise ProtocolError("no choices[0].message.content in completion") from None
    if not isinstance(content, str):
        raise ProtocolError("message content is not text")
    return content


# -- corpus scoring --------------------------------------------------------


@dataclass
class ScoreRun:
    scored: int = 0
    skipped: int = 0
    failed: list[tuple[str, str, int, str]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


class _Sink:
    """Serialized, flushed appends to scores.csv, failures.csv and the raw log."""

    def __init__(self, out_dir: Path):
        self.lock = threading.Lock()
        self.scores_path = out_dir / "scores.csv"
        self.failures_path = out_dir / "failures.csv"
        self.raw_path = out_dir / "raw_responses.jsonl"
        if not self.scores_path.exists():
            with open(self.scores_path, "w", newline="", encoding="utf-8") as fh:
                csv.writer(fh, lineterminator="\n").writerow(SCORES_HEADER)
        else:
            _drop_partial_line(self.scores_path)
        with open(self.failures_path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerow(FAILURES_HEADER)

    def score(self, rec: ScoreRecord):
        with self.lock, open(self.scores_path, "a", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerow(
                (rec.dwa_id, rec.model_id, rec.tech_level, rec.risk_score, rec.reasoning)
            )
            fh.flush()

    def failure(self, dwa_id, model_id, attempts, err):
        with self.lock, open(self.failures_path, "a", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerow((dwa_id, model_id, attempts, err))

    def raw(self, r: RawResponse):
        line = json.dumps(
            {
                "dwa_id": r.dwa_id,
                "model_id": r.model_id,
                "attempt": r.attempt,
                "latency": round(r.latency, 4),
                "body": r.body,
                "error": r.error,
            },
            ensure_ascii=False,
        )
        with self.lock, open(self.raw_path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")


def _drop_partial_line(path: Path) -> None:
    """Cut a trailing row left unterminated by an interrupted write."""
    data = path.read_bytes()
    if data and not data.endswith(b"\n"):
        with open(path, "r+b") as fh:
            fh.truncate(data.rfind(b"\n") + 1)


def already_scored(path: Path) -> set[tuple[str, str]]:
    if not path.exists():
        return set()
    done = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for row in reader:
            if len(row) == len(SCORES_HEADER):
                done.add((row[0], row[1]))
    return done


def score_corpus(
    dwas: Sequence[Dwa],
    endpoints: Sequence[EndpointConfig],
    concurrency: int,
    out: str | os.PathLike,
    *,
    transport: httpx.BaseTransport | None = None,
    backoff: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
) -> ScoreRun:
    """Score every (DWA, model) pair not already present in ``out/scores.csv``.

    At most ``concurrency`` requests are in flight per endpoint. A pair is
    retried up to ``max_retries`` times with exponential backoff
    (``backoff * 2**attempt`` seconds) on transport errors, non-2xx replies
    and protocol violations. Pairs that still fail go to ``failures.csv``;
    the run raises only if every attempted pair failed.
    """
    if concurrency < 1:
        raise InputValidationError("concurrency must be >= 1")
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    sink = _Sink(out_dir)
    done = already_scored(sink.scores_path)
    run = ScoreRun()
    run_lock = threading.Lock()

    def work(client: httpx.Client, ep: EndpointConfig, dwa: Dwa):
        payload = build_prompt(dwa, ep)
        last_error = ""
        attempts = ep.max_retries + 1
        for attempt in range(1, attempts + 1):
            t0 = time.perf_counter()
            body = ""
            try:
                resp = client.post("/chat/completions", json=payload)
                body = resp.text
                if resp.status_code // 100 != 2:
                    raise ProtocolError(f"HTTP {resp.status_code}")
                parsed = parse_response(extract_content(resp.json()))
            except (httpx.HTTPError, ProtocolError, ValueError) as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                sink.raw(RawResponse(dwa.dwa_id, ep.model_id, body, time.perf_counter() - t0, attempt, last_error))
                if attempt < attempts:
                    sleep(backoff * 2 ** (attempt - 1))
                continue
            sink.raw(RawResponse(dwa.dwa_id, ep.model_id, body, time.perf_counter() - t0, attempt))
            rec = ScoreRecord(dwa.dwa_id, ep.model_id, parsed.tech_level, parsed.risk_score, parsed.reasoning)
            sink.score(rec)
            with run_lock:
                run.scored += 1
                run.warnings.extend(f"{dwa.dwa_id}/{ep.model_id}: {w}" for w in parsed.warnings)
            if attempt > 1:
                log.info("%s/%s succeeded on attempt %d", dwa.dwa_id, ep.model_id, attempt)
            return
        sink.failure(dwa.dwa_id, ep.model_id, attempts, last_error)
        with run_lock:
            run.failed.append((dwa.dwa_id, ep.model_id, attempts, last_error))
        log.warning("%s/%s failed after %d attempts: %s", dwa.dwa_id, ep.model_id, attempts, last_error)

    clients = []
    pools = []
    futures = []
    try:
        for ep in endpoints:
            headers = {"Authorization": f"Bearer {ep.api_key}"} if ep.api_key else {}
            client = httpx.Client(
                base_url=ep.base_url.rstrip("/"), timeout=ep.timeout, transport=transport, headers=headers
            )
            clients.append(client)
            pool = ThreadPoolExecutor(max_workers=concurrency, thread_name_prefix=f"score-{ep.model_id}")
            pools.append(pool)
            for dwa in sorted(dwas, key=lambda d: d.dwa_id):
                if (dwa.dwa_id, ep.model_id) in done:
                    run.skipped += 1
                    continue
                futures.append(pool.submit(work, client, ep, dwa))
        for f in futures:
            f.result()
    finally:
        for f in futures:
            f.cancel()
        for pool in pools:
            pool.shutdown(wait=True, cancel_futures=True)
        for c in clients:
            c.close()

    attempted = run.scored + len(run.failed)
    if attempted and run.scored == 0:
        raise ProtocolError(f"every one of {attempted} scoring requests failed; see failures.csv")
    return run


def dwas_from_csv(path) -> list[Dwa]:
    from .csvio import read_rows
    from .taxonomy import DWA_HEADER

    out = []
    for line, row in read_rows(path, DWA_HEADER):
        if row is None or not row[0].strip() or not row[1].strip():
            raise InputValidationError(f"{path}:{line}: malformed DWA row")
        out.append(Dwa(row[0].strip(), row[1].strip()))
    return out
