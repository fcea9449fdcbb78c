"""Fusing per-model DWA scores into consensus integers and HITL sampling.

Scores from several models are averaged exactly (rationals), rounded half
away from zero, and tagged with a disagreement stratum derived from the
sample variance (divisor n-1) of the risk scores.
"""

from __future__ import annotations

import enum
import os
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .csvio import fmt_decimal, parse_fraction, read_rows, write_csv_bytes
from .errors import InputValidationError, ScoreError

TECH_LEVELS = range(0, 4)
RISK_SCORES = range(1, 6)

SCORES_HEADER = ("dwa_id", "model_id", "tech_level", "risk_score", "reasoning")
FUSED_HEADER = (
    "dwa_id",
    "n_models",
    "mean_tech",
    "mean_risk",
    "tech_level",
    "risk_score",
    "risk_variance",
    "stratum",
)

SEVERE_THRESHOLD = Fraction(1, 3)


class Stratum(str, enum.Enum):
    CONSENSUS = "Consensus"
    SLIGHT_FRICTION = "SlightFriction"
    SEVERE_DIVERGENCE = "SevereDivergence"

    def __str__(self) -> str:
        return self.value


STRATA = (Stratum.CONSENSUS, Stratum.SLIGHT_FRICTION, Stratum.SEVERE_DIVERGENCE)


@dataclass(frozen=True)
class ScoreRecord:
    dwa_id: str
    model_id: str
    tech_level: int
    risk_score: int
    reasoning: str = ""

    def __post_init__(self):
        if self.tech_level not in TECH_LEVELS:
            raise ScoreError(f"tech_level {self.tech_level} outside 0..3 ({self.dwa_id}/{self.model_id})")
        if self.risk_score not in RISK_SCORES:
            raise ScoreError(f"risk_score {self.risk_score} outside 1..5 ({self.dwa_id}/{self.model_id})")


@dataclass(frozen=True)
class FusedScore:
    dwa_id: str
    n_models: int
    mean_tech: Fraction
    mean_risk: Fraction
    tech_level: int
    risk_score: int
    risk_variance: Fraction
    stratum: Stratum
    tech_variance: Fraction = Fraction(0)


def round_half_away(x: Fraction) -> int:
    """Nearest integer, ties away from zero (3.25 → 3, 3.5 → 4, -2.5 → -3)."""
    x = Fraction(x)
    num, den = abs(x.numerator), x.denominator
    n = (2 * num + den) // (2 * den)
    return -n if x < 0 else n


def sample_variance(values: Sequence[int | Fraction]) -> Fraction:
    n = len(values)
    if n < 2:
        return Fraction(0)
    if all(isinstance(v, int) for v in values):
        # n * sum(x^2) - (sum x)^2 over n(n-1), in integers
        s1, s2 = sum(values), sum(v * v for v in values)
        return Fraction(n * s2 - s1 * s1, n * (n - 1))
    mean = Fraction(sum(values), n)
    return sum((Fraction(v) - mean) ** 2 for v in values) / (n - 1)


def assign_stratum(risk_variance) -> Stratum:
    v = Fraction(risk_variance)
    if v < 0:
        raise ValueError(f"negative variance: {risk_variance}")
    if v == 0:
        return Stratum.CONSENSUS
    if v < SEVERE_THRESHOLD:
        return Stratum.SLIGHT_FRICTION
    return Stratum.SEVERE_DIVERGENCE


def fuse_scores(records: Sequence[ScoreRecord]) -> FusedScore:
    """Consensus (T, R) for one DWA from its per-model records."""
    if not records:
        raise ScoreError("cannot fuse an empty list of score records")
    dwa_ids = {r.dwa_id for r in records}
    if len(dwa_ids) != 1:
        raise ScoreError(f"mixed dwa_ids in one fusion: {sorted(dwa_ids)}")
    models = [r.model_id for r in records]
    if len(set(models)) != len(models):
        dupes = sorted({m for m in models if models.count(m) > 1})
        raise ScoreError(f"duplicate model_id for {records[0].dwa_id}: {dupes}")

    n = len(records)
    techs = [r.tech_level for r in records]
    risks = [r.risk_score for r in records]
    mean_tech = Fraction(sum(techs), n)
    mean_risk = Fraction(sum(risks), n)
    var = sample_variance(risks)
    return FusedScore(
        dwa_id=records[0].dwa_id,
        n_models=n,
        mean_tech=mean_tech,
        mean_risk=mean_risk,
        tech_level=round_half_away(mean_tech),
        risk_score=round_half_away(mean_risk),
        risk_variance=var,
        stratum=assign_stratum(var),
        tech_variance=sample_variance(techs),
    )


def fuse_all(records: Iterable[ScoreRecord]) -> dict[str, FusedScore]:
    grouped: dict[str, list[ScoreRecord]] = defaultdict(list)
    for r in records:
        grouped[r.dwa_id].append(r)
    return {d: fuse_scores(grouped[d]) for d in sorted(grouped)}


# -- files -----------------------------------------------------------------


def _parse_int(text: str, what: str, line: int, path) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ScoreError(f"{path}:{line}: {what} is not an integer: {text!r}") from None


def load_scores(path: str | os.PathLike) -> list[ScoreRecord]:
    """Read ``scores.csv``. Any bad row or duplicate (dwa, model) is fatal."""
    out: list[ScoreRecord] = []
    seen: set[tuple[str, str]] = set()
    name = Path(path).name
    for line, row in read_rows(path, SCORES_HEADER):
        if row is None:
            raise ScoreError(f"{name}:{line}: malformed row: expected {len(SCORES_HEADER)} columns")
        dwa_id, model_id = row[0].strip(), row[1].strip()
        if not dwa_id or not model_id:
            raise ScoreError(f"{name}:{line}: empty dwa_id or model_id")
        tech = _parse_int(row[2], "tech_level", line, name)
        risk = _parse_int(row[3], "risk_score", line, name)
        key = (dwa_id, model_id)
        if key in seen:
            raise ScoreError(f"{name}:{line}: duplicate score for {dwa_id}/{model_id}")
        seen.add(key)
        try:
            out.append(ScoreRecord(dwa_id, model_id, tech, risk, row[4]))
        except ScoreError as exc:
            raise ScoreError(f"{name}:{line}: {exc}") from None
    return out


def fused_csv_bytes(fused: Mapping[str, FusedScore]) -> bytes:
    rows = (
        (
            f.dwa_id,
            f.n_models,
            fmt_decimal(f.mean_tech, 6),
            fmt_decimal(f.mean_risk, 6),
            f.tech_level,
            f.risk_score,
            fmt_decimal(f.risk_variance, 6),
            f.stratum.value,
        )
        for f in (fused[k] for k in sorted(fused))
    )
    return write_csv_bytes(FUSED_HEADER, rows)


def load_fused(path: str | os.PathLike) -> dict[str, FusedScore]:
    """Read ``fused.csv``. The stratum column is authoritative (means are rounded text)."""
    out: dict[str, FusedScore] = {}
    name = Path(path).name
    for line, row in read_rows(path, FUSED_HEADER):
        if row is None:
            raise InputValidationError(f"{name}:{line}: malformed row")
        try:
            stratum = Stratum(row[7].strip())
            f = FusedScore(
                dwa_id=row[0].strip(),
                n_models=int(row[1]),
                mean_tech=parse_fraction(row[2]),
                mean_risk=parse_fraction(row[3]),
                tech_level=int(row[4]),
                risk_score=int(row[5]),
                risk_variance=parse_fraction(row[6]),
                stratum=stratum,
            )
        except ValueError as exc:
            raise InputValidationError(f"{name}:{line}: {exc}") from None
        if f.tech_level not in TECH_LEVELS or f.risk_score not in RISK_SCORES:
            raise InputValidationError(f"{name}:{line}: fused score out of range")
        if f.dwa_id in out:
            raise InputValidationError(f"{name}:{line}: duplicate dwa_id {f.dwa_id!r}")
        out[f.dwa_id] = f
    return out


# -- sampling --------------------------------------------------------------

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 generator (Steele, Lea & Flood 2014), 64-bit state.

    Kept in-house so a seed reproduces the same HITL sample in any language
    implementing the same three-line recurrence.
    """

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n


@dataclass(frozen=True)
class StrataSample:
    seed: int
    requested: dict[Stratum, int]
    drawn: dict[Stratum, list[str]]
    clamped: dict[Stratum, int] = field(default_factory=dict)

    @property
    def all_ids(self) -> list[str]:
        return [d for s in STRATA for d in self.drawn.get(s, [])]


def stratified_sample(
    fused: Iterable[FusedScore], counts: Mapping[Stratum | str, int], seed: int
) -> StrataSample:
    """Uniform sampling without replacement inside each disagreement stratum.

    Within a stratum the ids are sorted lexicographically and a partial
    Fisher-Yates shuffle driven by ``SplitMix64(seed)`` picks the first k.
    Strata are visited in the fixed order Consensus, SlightFriction,
    SevereDivergence with one generator shared across them. Requests larger
    than a stratum are clamped and recorded in ``clamped``.
    """
    req = {Stratum(s): int(k) for s, k in counts.items()}
    for s, k in req.items():
        if k < 0:
            raise ValueError(f"negative sample count for {s}: {k}")
    pools: dict[Stratum, list[str]] = {s: [] for s in STRATA}
    for f in fused:
        pools[f.stratum].append(f.dwa_id)
    rng = SplitMix64(seed)
    drawn: dict[Stratum, list[str]] = {}
    clamped: dict[Stratum, int] = {}
    for s in STRATA:
        k = req.get(s, 0)
        pool = sorted(pools[s])
        if k > len(pool):
            clamped[s] = k
            k = len(pool)
        for i in range(k):
            j = i + rng.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        drawn[s] = pool[:k]
    return StrataSample(seed=seed, requested={s: req.get(s, 0) for s in STRATA}, drawn=drawn, clamped=clamped)


def sample_csv_bytes(sample: StrataSample, fused: Mapping[str, FusedScore]) -> bytes:
    rows = []
    for s in STRATA:
        for d in sample.drawn[s]:
            f = fused[d]
            rows.append((d, s.value, f.tech_level, f.risk_score, fmt_decimal(f.risk_variance, 6)))
    return write_csv_bytes(("dwa_id", "stratum", "tech_level", "risk_score", "risk_variance"), rows)
