import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special, stats as sps

from pursuitlab.errors import (
    InvalidDf,
    InvalidParams,
    LengthMismatch,
    MissingSession,
    TooFewSubjects,
    Unattainable,
    ZeroEffect,
    ZeroVariance,
)
from pursuitlab.features import METRIC_NAMES, MetricVector
from pursuitlab.stats import (
    STATS_HEADER,
    betainc_reg,
    cohens_d,
    mc_power,
    nct_sf,
    p_two_tailed,
    paired_t,
    required_n,
    stats_markdown,
    stats_table,
    stats_tsv,
    t_cdf,
    t_ppf,
    t_test_power,
)


# -- t distribution -----------------------------------------------------------

def test_t_cdf_closed_forms():
    assert t_cdf(0.0, 7) == 0.5
    assert abs(t_cdf(1.0, 1) - 0.75) <= 1e-10
    for t in (-4.0, -0.3, 2.2, 9.0):
        assert t_cdf(t, 1) == pytest.approx(0.5 + math.atan(t) / math.pi, abs=1e-13)
        assert t_cdf(t, 2) == pytest.approx(0.5 + t / (2 * math.sqrt(t * t + 2)), abs=1e-13)


def test_t_cdf_normal_limit():
    assert t_cdf(1.96, 1e6) == pytest.approx(0.5 * (1 + math.erf(1.96 / math.sqrt(2))), abs=1e-4)


def test_t_cdf_against_scipy_grid():
    worst = 0.0
    for df in (1, 2, 3, 4, 7, 18, 30, 99, 250, 1000):
        for t in np.linspace(-50, 50, 401):
            worst = max(worst, abs(t_cdf(t, df) - sps.t.cdf(t, df)))
    assert worst <= 1e-10


@pytest.mark.parametrize("df", [1e4, 1e5 + 1, 1e7, 1e12, 1e150])
def test_t_cdf_large_df_stable(df):
    for t in (-5.0, -1.75, 0.3, 3.0):
        assert t_cdf(t, df) == pytest.approx(sps.t.cdf(t, df), abs=1e-10)


def test_betainc_against_scipy():
    rng = np.random.default_rng(1)
    for _ in range(2000):
        a, b = np.exp(rng.uniform(-3, 7, 2))
        x = rng.uniform()
        assert betainc_reg(a, b, x) == pytest.approx(special.betainc(a, b, x), abs=1e-11)


@given(st.floats(-60, 60), st.integers(1, 1000))
def test_t_cdf_symmetry(t, df):
    assert abs(t_cdf(t, df) + t_cdf(-t, df) - 1.0) <= 1e-12


def test_invalid_df():
    with pytest.raises(InvalidDf):
        t_cdf(1.0, 0)


@pytest.mark.parametrize("q, df", [(0.975, 18), (0.95, 3), (0.6, 1), (0.01, 40)])
def test_t_ppf_inverts(q, df):
    assert t_ppf(q, df) == pytest.approx(sps.t.ppf(q, df), abs=1e-9)


# -- paired t and effect sizes ------------------------------------------------

def test_paired_t_hand_example():
    t, df, p = paired_t([0, 0, 0], [1, 2, 3])
    assert t == pytest.approx(2 * math.sqrt(3), abs=1e-12)
    assert df == 2
    # closed-form df=2 tail
    assert p == pytest.approx(1 - t / math.sqrt(t * t + 2), abs=1e-12)
    assert p == pytest.approx(0.0742, abs=5e-5)


def test_paired_t_matches_scipy():
    rng = np.random.default_rng(3)
    b, i = rng.normal(size=19), rng.normal(0.4, 1, size=19)
    t, df, p = paired_t(b, i)
    ref = sps.ttest_rel(i, b)
    assert t == pytest.approx(ref.statistic, rel=1e-12)
    assert p == pytest.approx(ref.pvalue, abs=1e-12)


def test_paired_errors():
    with pytest.raises(LengthMismatch):
        paired_t([1, 2], [1, 2, 3])
    with pytest.raises(TooFewSubjects):
        paired_t([1], [2])
    with pytest.raises(ZeroVariance):
        paired_t([1, 2, 3], [2, 3, 4])
    with pytest.raises(ZeroVariance):
        cohens_d([1, 2, 3], [2, 3, 4])


def test_p_for_t_minus_three():
    assert p_two_tailed(-3.0, 18) == pytest.approx(0.0077, abs=5e-5)


@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=3, max_size=30))
def test_dz_identity(pairs):
    b = np.array([p[0] for p in pairs])
    i = np.array([p[1] for p in pairs])
    d = i - b
    if np.std(d) < 1e-6 * max(1.0, np.abs(d).max()):
        return
    t, _, _ = paired_t(b, i)
    dz, _ = cohens_d(b, i)
    assert dz == pytest.approx(t / math.sqrt(len(b)), rel=1e-12, abs=1e-12)


def test_pooled_d_formula_and_antisymmetry():
    rng = np.random.default_rng(4)
    b, i = rng.normal(size=12), rng.normal(0.5, 2, size=12)
    dz, dp = cohens_d(b, i)
    pooled = math.sqrt((np.var(b, ddof=1) + np.var(i, ddof=1)) / 2)
    assert dp == pytest.approx((i.mean() - b.mean()) / pooled, rel=1e-12)
    dz2, dp2 = cohens_d(i, b)
    assert (dz2, dp2) == pytest.approx((-dz, -dp), rel=1e-12)


def test_common_offset_leaves_t_unchanged():
    rng = np.random.default_rng(5)
    b, i = rng.normal(size=10), rng.normal(size=10)
    off = rng.normal(size=10) * 100
    assert paired_t(b + off, i + off) == pytest.approx(paired_t(b, i), rel=1e-9)


# -- power --------------------------------------------------------------------

@pytest.mark.parametrize("c, df, nc", [(1.734, 18, 2.0), (2.1, 5, 0.5), (-1.0, 3.5, 1.2), (2.0, 60, 3.0)])
def test_nct_sf_against_scipy(c, df, nc):
    assert nct_sf(c, df, nc) == pytest.approx(sps.nct.sf(c, df, nc), abs=1e-9)


def test_required_n_reference_points():
    assert required_n(1.568) == pytest.approx(4.224, abs=0.01)
    assert 13.5 <= required_n(0.67) <= 16.5
    assert required_n(0.5, sided="two") == pytest.approx(34, abs=1.0)
    assert required_n(10.0) == 2.0
    assert required_n(-1.568) == required_n(1.568)


def test_required_n_hits_target_power():
    n = required_n(0.8, 0.05, 0.8, "one")
    assert t_test_power(0.8, n, 0.05, "one") == pytest.approx(0.8, abs=1e-6)


def test_required_n_monotone():
    ns = [required_n(d) for d in (0.3, 0.5, 0.8, 1.2)]
    assert all(a > b for a, b in zip(ns, ns[1:]))
    ps = [required_n(0.6, power=p) for p in (0.6, 0.7, 0.8, 0.9)]
    assert all(a < b for a, b in zip(ps, ps[1:]))


def test_required_n_tiny_effect_finite():
    n = required_n(1e-60)
    assert math.isfinite(n) and n > 1e100


def test_required_n_errors():
    with pytest.raises(ZeroEffect):
        required_n(0.0)
    with pytest.raises(InvalidParams):
        required_n(0.5, alpha=1.5)
    with pytest.raises(Unattainable):
        required_n(0.5, alpha=0.5, power=0.3)


def test_mc_power_null_rate():
    assert mc_power(0.0, 20, 0.05, "two", 100_000, seed=1) == pytest.approx(0.05, abs=0.003)


def test_mc_power_huge_effect():
    assert mc_power(3.0, 20, 0.05, "two", 10_000, seed=1) > 0.999


def test_mc_power_agrees_with_curve():
    analytic = t_test_power(0.67, 15, 0.05, "one")
    assert mc_power(0.67, 15, 0.05, "one", 100_000, seed=2) == pytest.approx(analytic, abs=0.02)


def test_mc_power_invalid():
    with pytest.raises(InvalidParams):
        mc_power(0.5, 1, 0.05, "two", 10_000)
    with pytest.raises(InvalidParams):
        mc_power(0.5, 10, 0.05, "two", 10)


# -- table --------------------------------------------------------------------

def _mv(vals):
    return MetricVector(*vals)


def _cohort(n, shift, rng):
    out = []
    for s in range(n):
        sid = f"{s:02d}"
        base = rng.normal(size=6) + 10
        for r in range(3):
            out.append((sid, "baseline", _mv(base + 0.1 * rng.normal(size=6))))
            out.append((sid, "impaired", _mv(base + shift + 0.1 * rng.normal(size=6))))
    return out


def test_table_order_and_df():
    rows = stats_table(_cohort(5, 0.2, np.random.default_rng(0)))
    assert [r.metric for r in rows] == list(METRIC_NAMES)
    assert all(r.df == 4 and r.n_subjects == 5 for r in rows)
    assert all(0 <= r.p_value <= 1 and r.n_required_one >= 2 for r in rows)


def test_table_two_subjects():
    rows = stats_table(_cohort(2, 0.2, np.random.default_rng(1)))
    assert all(r.df == 1 and r.error is None for r in rows)


def test_table_identical_sessions_all_zero_variance():
    rng = np.random.default_rng(2)
    feats = []
    for s in range(4):
        v = _mv(rng.normal(size=6))
        feats += [(str(s), "baseline", v), (str(s), "impaired", v)]
    rows = stats_table(feats)
    assert all(r.error and "ZeroVariance" in r.error for r in rows)
    assert "ZeroVariance" in stats_markdown(rows)


def test_table_missing_session():
    feats = _cohort(3, 0.1, np.random.default_rng(3))
    feats = [f for f in feats if not (f[0] == "01" and f[1] == "impaired")]
    with pytest.raises(MissingSession) as exc:
        stats_table(feats)
    assert exc.value.subject_id == "01"


def test_tsv_header():
    rows = stats_table(_cohort(4, 0.3, np.random.default_rng(4)))
    lines = stats_tsv(rows).splitlines()
    assert lines[0].split("\t") == list(STATS_HEADER)
    assert len(lines) == 7
