"""Human-in-the-loop validation: load expert/AI ratings and run the test battery."""

from __future__ import annotations

import os
from collections import defaultdict
from fractions import Fraction
from pathlib import Path
from typing import Mapping

from .csvio import read_rows
from .ensemble import STRATA, FusedScore
from .errors import InputValidationError, PreconditionError, StatsError
from .stats import (
    HUMAN_COHORTS,
    Cohort,
    RatingObservation,
    cell_means,
    ordered_logit_fit,
    spearman,
    wilcoxon_signed_rank,
)

HITL_HEADER = ("dwa_id", "evaluator_id", "cohort", "tech_rating", "risk_rating")

PREMIUM_CAVEAT = (
    "Descriptive difference of cell means only. AI and human ratings are on "
    "non-equivalent scales; use the ordered-logit coefficient for inference."
)


def load_hitl(path: str | os.PathLike, fused: Mapping[str, FusedScore]) -> list[RatingObservation]:
    """Read ``hitl.csv`` and attach each DWA's stratum from the fused scores."""
    name = Path(path).name
    out: list[RatingObservation] = []
    seen: set[tuple[str, str]] = set()
    for line, row in read_rows(path, HITL_HEADER):
        if row is None:
            raise InputValidationError(f"{name}:{line}: malformed row: expected {len(HITL_HEADER)} columns")
        dwa_id, ev, cohort, tech, risk = (c.strip() for c in row)
        try:
            c = Cohort(cohort)
        except ValueError:
            raise InputValidationError(f"{name}:{line}: unknown cohort {cohort!r} (ai|tech|mgmt)") from None
        if (dwa_id, ev) in seen:
            raise InputValidationError(f"{name}:{line}: duplicate rating for {dwa_id}/{ev}")
        seen.add((dwa_id, ev))
        if dwa_id not in fused:
            raise PreconditionError(f"{name}:{line}: DWA {dwa_id!r} not present in fused scores")
        try:
            obs = RatingObservation(
                dwa_id, ev, c, int(risk), int(tech) if tech else None, fused[dwa_id].stratum
            )
        except ValueError as exc:
            raise InputValidationError(f"{name}:{line}: {exc}") from None
        out.append(obs)
    return out


def _means(obs, cohorts, attr="risk_rating") -> dict[str, Fraction]:
    acc: dict[str, list[int]] = defaultdict(list)
    for o in obs:
        v = getattr(o, attr)
        if o.cohort in cohorts and v is not None:
            acc[o.dwa_id].append(v)
    return {d: Fraction(sum(v), len(v)) for d, v in acc.items()}


def _num(v: float | None):
    if v is None:
        return None
    v = float(v)
    if v != v:  # NaN
        return None
    return float(f"{v:.12g}")


def _spearman_json(a: Mapping[str, Fraction], b: Mapping[str, Fraction], warnings: list, label: str):
    common = sorted(set(a) & set(b))
    try:
        r = spearman([float(a[d]) for d in common], [float(b[d]) for d in common])
    except StatsError as exc:
        warnings.append(f"spearman {label}: {exc}")
        return None
    return {"rho": _num(r.statistic), "p": _num(r.p_value), "n": r.n_effective, "method": r.method}


def analyze(obs: list[RatingObservation], fused: Mapping[str, FusedScore]) -> dict:
    """Wilcoxon, ordered logit, per-cohort Spearman and the stratum × cohort grid."""
    warnings: list[str] = []
    cohorts_present = {o.cohort for o in obs}
    humans_present = [c for c in HUMAN_COHORTS if c in cohorts_present]
    has_ai = Cohort.AI_MODEL in cohorts_present

    if has_ai:
        ai_risk = _means(obs, {Cohort.AI_MODEL})
        ai_tech = _means(obs, {Cohort.AI_MODEL}, "tech_rating")
    else:
        warnings.append("no AI ratings in HITL file: using fused ensemble means as the AI reference")
        dwas = {o.dwa_id for o in obs}
        ai_risk = {d: fused[d].mean_risk for d in dwas}
        ai_tech = {d: fused[d].mean_tech for d in dwas}

    result: dict = {
        "n_observations": len(obs),
        "n_dwas": len({o.dwa_id for o in obs}),
        "cohorts": sorted(c.value for c in cohorts_present),
        "wilcoxon": None,
        "ordered_logit": None,
        "spearman": {"risk": {}, "tech": {}},
    }

    groups = [(c.value, {c}) for c in humans_present]
    if len(humans_present) > 1:
        groups.append(("overall", set(humans_present)))
    for label, cs in groups:
        result["spearman"]["risk"][label] = _spearman_json(_means(obs, cs), ai_risk, warnings, f"risk/{label}")
        tech_means = _means(obs, cs, "tech_rating")
        if tech_means:
            result["spearman"]["tech"][label] = _spearman_json(tech_means, ai_tech, warnings, f"tech/{label}")

    if not humans_present:
        warnings.append("no human cohort present: nothing to compare")
    elif not has_ai or len(cohorts_present) < 2:
        warnings.append("single cohort against ensemble means: Wilcoxon and ordered logit skipped")
    else:
        human_risk = _means(obs, set(humans_present))
        common = sorted(set(human_risk) & set(ai_risk))
        try:
            w = wilcoxon_signed_rank([(human_risk[d], ai_risk[d]) for d in common])
            result["wilcoxon"] = {
                "W_plus": _num(w.statistic),
                "p": _num(w.p_value),
                "n_effective": w.n_effective,
                "method": w.method,
                "pairing": "per-DWA mean human rating minus per-DWA mean AI rating",
            }
        except StatsError as exc:
            warnings.append(f"wilcoxon: {exc}")
        pairs = [(o.risk_rating, 0 if o.cohort == Cohort.AI_MODEL else 1) for o in obs]
        try:
            fit = ordered_logit_fit(pairs)
            result["ordered_logit"] = {
                "beta": _num(fit.beta),
                "std_err": _num(fit.std_err_beta),
                "z": _num(fit.z),
                "p": _num(fit.p_value),
                "thresholds": [_num(t) for t in fit.thresholds],
                "categories": list(fit.categories),
                "log_likelihood": _num(fit.log_likelihood),
                "iterations": fit.iterations,
                "converged": fit.converged,
                "dummy": "0 = AI, 1 = human expert",
            }
            warnings.extend(f"ordered_logit: {w}" for w in fit.warnings)
        except StatsError as exc:
            warnings.append(f"ordered_logit: {exc}")

    grid = cell_means(obs)
    premium = {}
    for s in STRATA:
        ai, mg = grid[s][Cohort.AI_MODEL], grid[s][Cohort.MGMT_EXPERT]
        premium[s.value] = None if ai is None or mg is None else _num(mg.mean - ai.mean)
    result["descriptive_premium"] = {"mgmt_minus_ai": premium, "caveat": PREMIUM_CAVEAT}
    result["warnings"] = warnings
    return result


def dwas_per_stratum(obs: list[RatingObservation]) -> dict:
    acc: dict = defaultdict(set)
    for o in obs:
        acc[o.stratum].add(o.dwa_id)
    return {s: len(acc.get(s, ())) for s in STRATA}
