"""Paired t-test, effect sizes and sample-size solving for the metric table.

Difference convention throughout: ``diff = impaired - baseline``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate

from .errors import (
    InvalidDf,
    InvalidParams,
    LengthMismatch,
    MissingSession,
    PursuitError,
    TooFewSubjects,
    Unattainable,
    ZeroEffect,
    ZeroVariance,
)
from .features import METRIC_NAMES

TABLE_LABELS = {
    "mean_radius_deg": "mean radius",
    "v_gain": "V gain",
    "skew_radial": "skew radial",
    "skew_phase": "skew phase error",
    "kurt_phase": "kurtosis phase error",
    "blink_loss_pct": "blink loss percent",
}
STATS_HEADER = ("metric", "n", "t_stat", "df", "p_value", "cohen_dz", "cohen_d_pooled",
                "n_req_one_sided", "n_req_two_sided")

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAX_ITER = 100_000
DF_NORMAL = 1e5


# --------------------------------------------------------------------------
# Student t via the regularized incomplete beta function

def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for I_x(a, b), modified Lentz evaluation."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _lgamma_ratio(a: float, b: float) -> float:
    """log Gamma(a + b) - log Gamma(a), stable when a >> b."""
    if a < 1e3:
        return math.lgamma(a + b) - math.lgamma(a)
    # Stirling difference; the plain lgamma subtraction cancels catastrophically here
    ab = a + b
    return (b * math.log(a) + (ab - 0.5) * math.log1p(b / a) - b
            - b / (12.0 * a * ab)
            + ((b / a) * (3.0 + 3.0 * b / a + (b / a) ** 2) / (360.0 * ab ** 3) if a < 1e30 else 0.0))


def _log_beta(a: float, b: float) -> float:
    if a < b:
        a, b = b, a
    return math.lgamma(b) - _lgamma_ratio(a, b)


def betainc_reg(a: float, b: float, x: float, y: float | None = None) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and 0 <= x <= 1.

    ``y`` may carry an exactly computed 1 - x when x is close to 1.
    """
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if y is None:
        y = 1.0 - x
    if x == 0.0 or y == 0.0:
        return 0.0 if x == 0.0 else 1.0
    log_x = math.log1p(-y) if y < 0.5 else math.log(x)
    log_y = math.log1p(-x) if x < 0.5 else math.log(y)
    log_front = a * log_x + b * log_y - _log_beta(a, b)
    # equivalent to x < (a+1)/(a+b+2), but stays meaningful when a >> b
    if y > (b + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, y) / b


def t_tail(t: float, df: float) -> float:
    """P(T > |t|) for Student t with ``df`` degrees of freedom (real df allowed)."""
    if not df > 0 or math.isinf(df) or math.isnan(df):
        raise InvalidDf(f"df must be positive and finite, got {df}")
    if t == 0.0:
        return 0.5
    if df > DF_NORMAL:
        # normal limit with its 1/df correction; the continued fraction needs O(sqrt(df)) terms here
        z = abs(t)
        return _norm_cdf(-z) + math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi) * (z ** 3 + z) / (4.0 * df)
    t2 = t * t
    return 0.5 * betainc_reg(df / 2.0, 0.5, df / (df + t2), t2 / (df + t2))


def t_cdf(t: float, df: float) -> float:
    if df < 1:
        raise InvalidDf(f"df must be >= 1, got {df}")
    tail = t_tail(t, df)
    return 1.0 - tail if t > 0 else tail


def t_ppf(q: float, df: float) -> float:
    """Quantile of Student t by bracketing + bisection on t_cdf."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    if q == 0.5:
        return 0.0
    if q < 0.5:
        return -t_ppf(1.0 - q, df)
    lo, hi = 0.0, 1.0
    while t_cdf(hi, df) < q:
        lo, hi = hi, hi * 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_cdf(mid, df) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def _norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def _norm_ppf(p: float) -> float:
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _norm_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# paired test and effect sizes

def _paired_diffs(baseline: Sequence[float], impaired: Sequence[float]) -> np.ndarray:
    b = np.asarray(baseline, dtype=float)
    i = np.asarray(impaired, dtype=float)
    if b.shape != i.shape or b.ndim != 1:
        raise LengthMismatch(f"baseline has {b.size} values, impaired has {i.size}")
    if b.size < 2:
        raise TooFewSubjects("paired t-test needs at least 2 subjects")
    return i - b


def paired_t(baseline: Sequence[float], impaired: Sequence[float]) -> tuple[float, int, float]:
    """Two-tailed dependent t-test on per-subject values: (t, df, p)."""
    d = _paired_diffs(baseline, impaired)
    n = d.size
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        raise ZeroVariance("all paired differences are equal")
    t = float(np.mean(d)) / (sd / math.sqrt(n))
    df = n - 1
    return t, df, p_two_tailed(t, df)


def p_two_tailed(t: float, df: float) -> float:
    return min(1.0, 2.0 * t_tail(t, df))


def cohens_d(baseline: Sequence[float], impaired: Sequence[float]) -> tuple[float, float]:
    """(dz, d_pooled): paired-difference and pooled-SD standardized effects."""
    d = _paired_diffs(baseline, impaired)
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        raise ZeroVariance("all paired differences are equal")
    dz = float(np.mean(d)) / sd
    b = np.asarray(baseline, dtype=float)
    i = np.asarray(impaired, dtype=float)
    pooled = math.sqrt((np.var(b, ddof=1) + np.var(i, ddof=1)) / 2.0)
    if pooled == 0.0:
        raise ZeroVariance("both sessions are constant")
    return dz, float((np.mean(i) - np.mean(b)) / pooled)


# --------------------------------------------------------------------------
# power and sample size

def _scaled_chi_logpdf(s: float, df: float) -> float:
    # density of S = sqrt(V / df), V ~ chi2(df)
    h = df / 2.0
    return math.log(2.0) + h * math.log(h) - math.lgamma(h) + (df - 1.0) * math.log(s) - h * s * s


def nct_sf(c: float, df: float, nc: float) -> float:
    """P(T' > c) for noncentral t, integrating the normal tail over the scaled chi law."""
    mode = math.sqrt(max(df - 1.0, 0.5) / df)
    spread = 1.0 / math.sqrt(2.0 * df)
    upper = mode + 40.0 * spread + 1.0

    def f(s: float) -> float:
        if s <= 0.0:
            return 0.0
        return _norm_cdf(nc - c * s) * math.exp(_scaled_chi_logpdf(s, df))

    pts = [max(mode - 5 * spread, 1e-9), mode, mode + 5 * spread]
    val, _ = integrate.quad(f, 0.0, upper, points=pts, limit=200, epsabs=1e-12, epsrel=1e-11)
    return min(max(val, 0.0), 1.0)


def _sided_factor(sided: str) -> int:
    if sided not in ("one", "two"):
        raise InvalidParams("sided must be 'one' or 'two'")
    return 1 if sided == "one" else 2


def t_test_power(d: float, n: float, alpha: float, sided: str = "two") -> float:
    """Power of a paired t-test with effect ``d`` and ``n`` (real) pairs.

    Uses df = n - 1 without rounding, so power is smooth in n.
    """
    s = _sided_factor(sided)
    df = n - 1.0
    crit = t_ppf(1.0 - alpha / s, df)
    nc = abs(d) * math.sqrt(n)
    power = nct_sf(crit, df, nc)
    if s == 2:
        power += 1.0 - nct_sf(-crit, df, nc)
    return power


N_MIN = 2.0
N_NORMAL = 1e6  # beyond this, t and normal quantiles agree to well under 1e-6


def required_n(d: float, alpha: float = 0.05, power: float = 0.8, sided: str = "one") -> float:
    """Smallest real n >= 2 at which the paired t-test reaches ``power``."""
    s = _sided_factor(sided)
    if d == 0 or not math.isfinite(d):
        raise ZeroEffect("effect size must be non-zero and finite")
    if not (0.0 < alpha < 1.0 and 0.0 < power < 1.0):
        raise InvalidParams("alpha and power must lie in (0, 1)")
    if power <= alpha / s:
        raise Unattainable("target power does not exceed the false-positive rate")
    ad = abs(d)

    def gap(n: float) -> float:
        return t_test_power(ad, n, alpha, sided) - power

    if gap(N_MIN) >= 0.0:
        return N_MIN
    z0 = ((_norm_ppf(1.0 - alpha / s) + _norm_ppf(power)) / ad) ** 2
    if z0 > N_NORMAL:
        return z0
    lo, hi = N_MIN, max(z0, N_MIN + 1.0)
    while gap(hi) < 0.0:
        lo, hi = hi, hi * 2.0
    while True:
        mid = 0.5 * (lo + hi)
        g = gap(mid)
        if abs(g) < 1e-6 or hi - lo < 1e-10:
            return mid
        if g < 0.0:
            lo = mid
        else:
            hi = mid


def mc_power(d: float, n: int, alpha: float = 0.05, sided: str = "two",
             n_sims: int = 100_000, seed: int = 0, chunk: int = 20_000) -> float:
    """Monte Carlo power: diffs ~ Normal(d, 1), rejection by the exact t test."""
    s = _sided_factor(sided)
    if n < 2 or n_sims < 1000 or not 0.0 < alpha < 1.0:
        raise InvalidParams("need n >= 2, n_sims >= 1000, 0 < alpha < 1")
    crit = t_ppf(1.0 - alpha / s, n - 1)
    rng = np.random.default_rng(seed)
    rejected = 0
    done = 0
    while done < n_sims:
        m = min(chunk, n_sims - done)
        x = rng.standard_normal((m, n)) + d
        t = x.mean(axis=1) / (x.std(axis=1, ddof=1) / math.sqrt(n))
        if s == 1:
            # one-sided in the direction of the effect
            hit = t > crit if d >= 0 else t < -crit
        else:
            hit = np.abs(t) > crit
        rejected += int(np.count_nonzero(hit))
        done += m
    return rejected / n_sims


# --------------------------------------------------------------------------
# table

@dataclass(frozen=True)
class StatsRow:
    metric: str
    n_subjects: int
    t_stat: float = math.nan
    df: int = 0
    p_value: float = math.nan
    cohen_dz: float = math.nan
    cohen_d_pooled: float = math.nan
    n_required_one: float = math.nan
    n_required_two: float = math.nan
    error: str | None = None

    @property
    def label(self) -> str:
        return TABLE_LABELS.get(self.metric, self.metric)


def subject_means(features: Iterable) -> dict[str, dict[str, np.ndarray]]:
    """Average each subject's MetricVectors per session.

    ``features`` yields (subject_id, session, MetricVector) triples.
    """
    acc: dict[str, dict[str, list]] = {}
    for sid, session, mv in features:
        acc.setdefault(sid, {"baseline": [], "impaired": []})[session].append(mv.as_tuple())
    out = {}
    for sid in sorted(acc):
        out[sid] = {}
        for session, rows in acc[sid].items():
            if not rows:
                raise MissingSession(sid, session)
            out[sid][session] = np.mean(np.array(rows), axis=0)
    return out


def stats_table(features: Iterable) -> list[StatsRow]:
    """One row per metric in table order; per-row failures are recorded, not raised."""
    means = subject_means(features)
    sids = list(means)
    n = len(sids)
    rows = []
    for k, metric in enumerate(METRIC_NAMES):
        b = [means[s]["baseline"][k] for s in sids]
        i = [means[s]["impaired"][k] for s in sids]
        try:
            t, df, p = paired_t(b, i)
            dz, dp = cohens_d(b, i)
        except PursuitError as exc:
            rows.append(StatsRow(metric, n, df=n - 1, error=f"{type(exc).__name__}: {exc}"))
            continue
        try:
            n1 = required_n(dz, 0.05, 0.8, "one")
            n2 = required_n(dz, 0.05, 0.8, "two")
        except PursuitError:
            n1 = n2 = math.inf
        rows.append(StatsRow(metric, n, t, df, p, dz, dp, n1, n2))
    return rows


def _cell(v: float, spec: str) -> str:
    return "" if math.isnan(v) else format(v, spec)


def stats_tsv(rows: Sequence[StatsRow]) -> str:
    lines = ["\t".join(STATS_HEADER)]
    for r in rows:
        lines.append("\t".join([
            r.metric, str(r.n_subjects), _cell(r.t_stat, ".6f"), str(r.df), _cell(r.p_value, ".6g"),
            _cell(r.cohen_dz, ".6f"), _cell(r.cohen_d_pooled, ".6f"),
            _cell(r.n_required_one, ".6f"), _cell(r.n_required_two, ".6f"),
        ]))
    return "\n".join(lines) + "\n"


def stats_markdown(rows: Sequence[StatsRow]) -> str:
    out = ["| Metric | T-Stat | p value | Cohen's dz | Cohen's d (pooled) | N req. (one-sided) | N req. (two-sided) |",
           "|---|---|---|---|---|---|---|"]
    for r in rows:
        if r.error:
            out.append(f"| {r.label} | {r.error} | | | | | |")
            continue
        out.append(f"| {r.label} | {r.t_stat:.3f} | {r.p_value:.4g} | {r.cohen_dz:.3f} | "
                   f"{r.cohen_d_pooled:.3f} | {r.n_required_one:.3f} | {r.n_required_two:.3f} |")
    out.append("")
    out.append(f"n = {rows[0].n_subjects if rows else 0} subjects; two-tailed dependent t-test; "
               "diff = impaired - baseline.")
    return "\n".join(out) + "\n"
