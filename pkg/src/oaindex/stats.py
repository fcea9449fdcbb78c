"""Statistical kernel for the HITL validation and scenario comparison.

Spearman's rho (tie-aware), the Wilcoxon signed-rank test, a
proportional-odds ordered logit with one binary regressor, and the
stratum × cohort table of mean risk ratings.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy import special
from scipy import stats as sps

from .ensemble import STRATA, Stratum
from .errors import StatsError

SPEARMAN_EXACT_MAX_N = 10
WILCOXON_EXACT_MAX_N = 20


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    n_effective: int
    method: str  # "exact" | "approximate"
    extra: dict = field(default_factory=dict, compare=False)

    __test__ = False  # keep pytest from collecting this as a test class


# -- ranking ---------------------------------------------------------------


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of the ranks they span."""
    a = np.asarray(values, dtype=float)
    n = a.size
    order = np.argsort(a, kind="mergesort")
    ranks = np.empty(n, dtype=float)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and a[order[j + 1]] == a[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _tie_sizes(ranks: np.ndarray) -> list[int]:
    _, counts = np.unique(ranks, return_counts=True)
    return [int(c) for c in counts if c > 1]


# -- Spearman --------------------------------------------------------------


def spearman(x: Sequence[float], y: Sequence[float]) -> TestResult:
    """Spearman's rho as the Pearson correlation of average ranks.

    Two-sided p: exact permutation distribution for n <= 10, otherwise the
    t approximation with n - 2 degrees of freedom.
    """
    if len(x) != len(y):
        raise StatsError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 3:
        raise StatsError(f"need at least 3 pairs, got {n}")
    rx, ry = average_ranks(x), average_ranks(y)
    dx, dy = rx - rx.mean(), ry - ry.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise StatsError("rho undefined for constant input")
    rho = float(dx @ dy) / math.sqrt(sxx * syy)
    rho = max(-1.0, min(1.0, rho))

    if n <= SPEARMAN_EXACT_MAX_N:
        return TestResult(rho, _spearman_exact_p(rx, ry), n, "exact")
    if abs(rho) == 1.0:
        p = 0.0
    else:
        t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
        p = float(2.0 * sps.t.sf(abs(t), n - 2))
    return TestResult(rho, min(1.0, p), n, "approximate")


def _spearman_exact_p(rx: np.ndarray, ry: np.ndarray) -> float:
    """Fraction of the n! pairings whose |rho| is at least the observed |rho|.

    Ranks are doubled to integers; the permutation distribution of
    sum(a_i * b_pi(i)) is built by dynamic programming over subsets.
    """
    a = [int(round(2 * v)) for v in rx]
    b = [int(round(2 * v)) for v in ry]
    n = len(a)
    sa, sb = sum(a), sum(b)
    s_obs = sum(ai * bi for ai, bi in zip(a, b))
    c_obs = abs(n * s_obs - sa * sb)
    top = sum(p * q for p, q in zip(sorted(a), sorted(b)))
    dp: list[np.ndarray | None] = [None] * (1 << n)
    dp[0] = np.zeros(top + 1, dtype=np.int64)
    dp[0][0] = 1
    for mask in range(1 << n):
        cur = dp[mask]
        if cur is None:
            continue
        i = bin(mask).count("1")
        if i == n:
            continue
        for j in range(n):
            bit = 1 << j
            if mask & bit:
                continue
            shift = a[i] * b[j]
            nxt = dp[mask | bit]
            if nxt is None:
                nxt = dp[mask | bit] = np.zeros(top + 1, dtype=np.int64)
            nxt[shift:] += cur[: top + 1 - shift]
        if mask:
            dp[mask] = None  # free memory once expanded
    dist = dp[(1 << n) - 1]
    sums = np.arange(top + 1)
    extreme = np.abs(n * sums - sa * sb) >= c_obs
    return float(dist[extreme].sum() / math.factorial(n))


# -- Wilcoxon --------------------------------------------------------------


def wilcoxon_signed_rank(pairs: Iterable[tuple[float, float]]) -> TestResult:
    """Wilcoxon signed-rank test on differences ``a - b``.

    Zero differences are dropped, tied magnitudes get average ranks and the
    statistic is W+ (sum of ranks of positive differences). The two-sided p
    is exact (full sign distribution) up to 20 non-zero differences, normal
    with tie and continuity correction above that.
    """
    d = np.array([float(a) - float(b) for a, b in pairs], dtype=float)
    d = d[d != 0]
    n = int(d.size)
    if n == 0:
        raise StatsError("all differences are zero")
    ranks = average_ranks(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    if n <= WILCOXON_EXACT_MAX_N:
        p = _wilcoxon_exact_p(ranks, w_plus)
        return TestResult(w_plus, p, n, "exact")
    p, z = _wilcoxon_normal_p(ranks, w_plus)
    return TestResult(w_plus, p, n, "approximate", {"z": z})


def _wilcoxon_exact_p(ranks: np.ndarray, w_plus: float) -> float:
    r2 = [int(round(2 * r)) for r in ranks]
    total = sum(r2)
    dist = np.zeros(total + 1, dtype=np.int64)
    dist[0] = 1
    for r in r2:
        dist[r:] = dist[r:] + dist[: total + 1 - r].copy()
    w2 = int(round(2 * w_plus))
    count = float(1 << len(r2))
    lower = dist[: w2 + 1].sum() / count
    upper = dist[w2:].sum() / count
    return float(min(1.0, 2.0 * min(lower, upper)))


def wilcoxon_normal_p(pairs: Iterable[tuple[float, float]]) -> float:
    """Normal-approximation p regardless of sample size (for comparisons)."""
    d = np.array([float(a) - float(b) for a, b in pairs], dtype=float)
    d = d[d != 0]
    if d.size == 0:
        raise StatsError("all differences are zero")
    ranks = average_ranks(np.abs(d))
    return _wilcoxon_normal_p(ranks, float(ranks[d > 0].sum()))[0]


def _wilcoxon_normal_p(ranks: np.ndarray, w_plus: float) -> tuple[float, float]:
    n = ranks.size
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - sum(t**3 - t for t in _tie_sizes(ranks)) / 48.0
    if var <= 0:
        return 1.0, 0.0
    diff = w_plus - mean
    if abs(diff) <= 0.5:
        z = 0.0
    else:
        z = (diff - math.copysign(0.5, diff)) / math.sqrt(var)
    return float(min(1.0, 2.0 * sps.norm.sf(abs(z)))), z


# -- ordered logit ---------------------------------------------------------


@dataclass(frozen=True)
class OrderedLogitFit:
    beta: float
    thresholds: tuple[float, ...]
    std_err_beta: float
    z: float
    p_value: float
    log_likelihood: float
    iterations: int
    converged: bool
    categories: tuple[int, ...] = ()
    loglik_path: tuple[float, ...] = ()
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class _CellData:
    """Observations collapsed to counts per (category, x)."""

    k: np.ndarray  # category index 1..K for each cell
    x: np.ndarray  # 0/1
    w: np.ndarray  # count
    K: int


def _cells(y: Sequence[int], x: Sequence[int], K: int) -> _CellData:
    ks, xs, ws = [], [], []
    yy = np.asarray(y, dtype=int)
    xx = np.asarray(x, dtype=int)
    for k in range(1, K + 1):
        for xv in (0, 1):
            c = int(np.sum((yy == k) & (xx == xv)))
            if c:
                ks.append(k)
                xs.append(xv)
                ws.append(c)
    return _CellData(np.array(ks), np.array(xs, dtype=float), np.array(ws, dtype=float), K)


def _thresholds_from_phi(phi: np.ndarray, K: int) -> np.ndarray:
    theta = np.empty(K - 1)
    theta[0] = phi[1]
    for j in range(1, K - 1):
        theta[j] = theta[j - 1] + math.exp(phi[1 + j])
    return theta


def _phi_from_thresholds(beta: float, theta: Sequence[float]) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return np.concatenate([[beta, theta[0]], np.log(np.diff(theta))])


def _loglik_z(z: np.ndarray, cd: _CellData, derivs: bool = True):
    """Log-likelihood (and gradient/Hessian) in the natural (beta, theta) space."""
    K = cd.K
    beta, theta = z[0], z[1:]
    ext = np.concatenate([[-np.inf], theta, [np.inf]])
    a = ext[cd.k] - beta * cd.x  # upper cut for category k
    b = ext[cd.k - 1] - beta * cd.x  # lower cut
    Fa = special.expit(a)
    Fb = special.expit(b)
    P = np.maximum(Fa - Fb, 1e-300)
    ll = float(np.sum(cd.w * np.log(P)))
    if not derivs:
        return ll
    fa = Fa * (1 - Fa)
    fb = Fb * (1 - Fb)
    dfa = fa * (1 - 2 * Fa)
    dfb = fb * (1 - 2 * Fb)
    la = fa / P
    lb = -fb / P
    laa = dfa / P - la**2
    lbb = -dfb / P - lb**2
    lab = fa * fb / P**2

    m = len(cd.k)
    Ja = np.zeros((m, K))
    Jb = np.zeros((m, K))
    Ja[:, 0] = -cd.x
    Jb[:, 0] = -cd.x
    for i, k in enumerate(cd.k):
        if k < K:
            Ja[i, k] = 1.0
        if k > 1:
            Jb[i, k - 1] = 1.0
    w = cd.w
    g = Ja.T @ (w * la) + Jb.T @ (w * lb)
    H = (
        (Ja * (w * laa)[:, None]).T @ Ja
        + (Jb * (w * lbb)[:, None]).T @ Jb
        + (Ja * (w * lab)[:, None]).T @ Jb
        + (Jb * (w * lab)[:, None]).T @ Ja
    )
    return ll, g, H


def _loglik_phi(phi: np.ndarray, cd: _CellData, derivs: bool = True):
    K = cd.K
    z = np.concatenate([[phi[0]], _thresholds_from_phi(phi, K)])
    if not derivs:
        return _loglik_z(z, cd, derivs=False)
    ll, gz, Hz = _loglik_z(z, cd)
    # Jacobian dz/dphi
    G = np.zeros((K, K))
    G[0, 0] = 1.0
    for j in range(1, K):  # theta_j (1-based j) lives at z index j
        G[j, 1] = 1.0
        for i in range(1, j):  # delta_i at phi index 1 + i
            G[j, 1 + i] = math.exp(phi[1 + i])
    g = G.T @ gz
    H = G.T @ Hz @ G
    for i in range(1, K - 1):
        H[1 + i, 1 + i] += math.exp(phi[1 + i]) * float(np.sum(gz[1 + i :]))
    return ll, g, H


def ordered_logit_loglik(params: Sequence[float], y: Sequence[int], x: Sequence[int]) -> float:
    """Log-likelihood at ``params = (beta, theta_1, delta_1, ...)`` (ordering-safe form)."""
    K = int(max(y))
    return _loglik_phi(np.asarray(params, float), _cells(y, x, K), derivs=False)


def ordered_logit_gradient(params: Sequence[float], y: Sequence[int], x: Sequence[int]) -> np.ndarray:
    K = int(max(y))
    return _loglik_phi(np.asarray(params, float), _cells(y, x, K))[1]


def ordered_logit_hessian(params: Sequence[float], y: Sequence[int], x: Sequence[int]) -> np.ndarray:
    K = int(max(y))
    return _loglik_phi(np.asarray(params, float), _cells(y, x, K))[2]


def _separated(y: np.ndarray, x: np.ndarray) -> bool:
    y0, y1 = y[x == 0], y[x == 1]
    return y0.max() <= y1.min() or y1.max() <= y0.min()


def ordered_logit_fit(
    obs: Iterable[tuple[int, int]],
    *,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> OrderedLogitFit:
    """Proportional-odds MLE for ``P(y <= k | x) = logistic(theta_k - beta * x)``.

    ``obs`` holds ``(y, x)`` pairs with ordinal ``y`` and a 0/1 dummy ``x``.
    A positive beta means the x = 1 group tends toward higher categories.
    Damped Newton on (beta, theta_1, log gaps); standard errors come from
    the observed information.
    """
    data = [(int(yv), int(xv)) for yv, xv in obs]
    if not data:
        raise StatsError("no observations")
    y_raw = np.array([d[0] for d in data])
    x = np.array([d[1] for d in data])
    if not set(np.unique(x)) <= {0, 1}:
        raise StatsError("x must be a 0/1 dummy")
    if len(np.unique(x)) < 2:
        raise StatsError("both x groups must be present")
    observed = sorted(int(v) for v in np.unique(y_raw))
    if len(observed) < 2:
        raise StatsError("only a single outcome category observed")
    notes: list[str] = []
    gaps = sorted(set(range(observed[0], observed[-1] + 1)) - set(observed))
    if gaps:
        notes.append(f"unobserved intermediate categories {gaps} collapsed")
    relabel = {c: i + 1 for i, c in enumerate(observed)}
    y = np.array([relabel[v] for v in y_raw])
    K = len(observed)
    cd = _cells(y, x, K)

    separated = _separated(y, x)
    if separated:
        notes.append("complete separation between x groups: likelihood unbounded in beta")

    cum = np.array([np.mean(y <= k) for k in range(1, K)])
    theta0 = special.logit(np.clip(cum, 1e-6, 1 - 1e-6))
    theta0 = np.maximum.accumulate(theta0 + np.arange(K - 1) * 1e-9)
    phi = _phi_from_thresholds(0.0, theta0)

    ll, g, H = _loglik_phi(phi, cd)
    path = [ll]
    it = 0
    converged = bool(np.max(np.abs(g)) < tol)
    while not converged and it < max_iter:
        it += 1
        step = None
        try:
            cand = np.linalg.solve(H, -g)
            if np.all(np.isfinite(cand)) and float(cand @ g) > 0:
                step = cand
        except np.linalg.LinAlgError:
            pass
        if step is None:  # Hessian not negative definite: fall back to steepest ascent
            step = g / max(1.0, float(np.max(np.abs(g))))
        t = 1.0
        accepted = False
        for _ in range(60):
            trial = phi + t * step
            ll_new = _loglik_phi(trial, cd, derivs=False)
            if np.isfinite(ll_new) and ll_new >= ll:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        phi = trial
        ll, g, H = _loglik_phi(phi, cd)
        path.append(ll)
        converged = bool(np.max(np.abs(g)) < tol)

    if separated:
        converged = False
    if not converged:
        notes.append(f"did not converge after {it} iterations (max |grad| = {float(np.max(np.abs(g))):.3g})")

    theta = _thresholds_from_phi(phi, K)
    z_params = np.concatenate([[phi[0]], theta])
    _, _, Hz = _loglik_z(z_params, cd)
    try:
        cov = np.linalg.inv(-Hz)
        se = float(math.sqrt(cov[0, 0])) if cov[0, 0] > 0 else float("nan")
    except np.linalg.LinAlgError:
        se = float("nan")
    beta = float(phi[0])
    if se > 0 and math.isfinite(se):
        zstat = beta / se
        p = float(math.erfc(abs(zstat) / math.sqrt(2.0)))
    else:
        zstat, p = float("nan"), float("nan")
    return OrderedLogitFit(
        beta=beta,
        thresholds=tuple(float(t) for t in theta),
        std_err_beta=se,
        z=zstat,
        p_value=p,
        log_likelihood=float(ll),
        iterations=it,
        converged=converged,
        categories=tuple(observed),
        loglik_path=tuple(path),
        warnings=tuple(notes),
    )


# -- HITL observations and the stratum × cohort table ----------------------


class Cohort(str, enum.Enum):
    AI_MODEL = "ai"
    TECH_EXPERT = "tech"
    MGMT_EXPERT = "mgmt"

    def __str__(self) -> str:
        return self.value


COHORTS = (Cohort.AI_MODEL, Cohort.TECH_EXPERT, Cohort.MGMT_EXPERT)
HUMAN_COHORTS = (Cohort.TECH_EXPERT, Cohort.MGMT_EXPERT)


@dataclass(frozen=True)
class RatingObservation:
    dwa_id: str
    evaluator_id: str
    cohort: Cohort
    risk_rating: int
    tech_rating: int | None = None
    stratum: Stratum | None = None

    def __post_init__(self):
        if not 1 <= self.risk_rating <= 5:
            raise ValueError(f"risk_rating {self.risk_rating} outside 1..5")
        if self.tech_rating is not None and not 0 <= self.tech_rating <= 3:
            raise ValueError(f"tech_rating {self.tech_rating} outside 0..3")


@dataclass(frozen=True)
class Cell:
    mean: Fraction
    count: int


def cell_means(obs: Iterable[RatingObservation]) -> dict[Stratum, dict[Cohort, Cell | None]]:
    """Mean risk rating per (stratum, cohort); cells without data are None."""
    sums: dict[tuple[Stratum, Cohort], list[int]] = {}
    for o in obs:
        if o.stratum is None:
            raise StatsError(f"observation {o.dwa_id}/{o.evaluator_id} has no stratum")
        sums.setdefault((Stratum(o.stratum), Cohort(o.cohort)), []).append(o.risk_rating)
    grid: dict[Stratum, dict[Cohort, Cell | None]] = {}
    for s in STRATA:
        grid[s] = {}
        for c in COHORTS:
            vals = sums.get((s, c))
            grid[s][c] = Cell(Fraction(sum(vals), len(vals)), len(vals)) if vals else None
    return grid
