"""Tests for per-recording parameters and paired position statistics."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from cardiocausal.param_features import (
    CvSet,
    FeatureError,
    ParamVector,
    PairedTestResult,
    TestKind,
    breathing_regularity,
    cardiac_params,
    paired_compare,
    param_vector,
    respiratory_params,
    wilcoxon_signed_rank,
)
from cardiocausal.record_io import Position
from cardiocausal.resp_signals import BreathSeries

TestKind.__test__ = False  # enum of statistical tests, not a test class


def make_breaths(
    n_insp=6,
    period=4.0,
    ins_t=1.5,
    ins_v=None,
    exp_v=None,
    n_exp=None,
    start=0.0,
):
    """Regular breath series: N inspiratory onsets every `period` seconds."""
    if n_exp is None:
        n_exp = n_insp
    insp = [start + period * i for i in range(n_insp)]
    exp = [t + ins_t for t in insp[:n_exp]]
    exp_t = [insp[i + 1] - exp[i] for i in range(n_insp - 1)]
    if ins_v is None:
        ins_v = [1.0] * n_exp
    if exp_v is None:
        exp_v = [1.0] * (n_insp - 1)
    return BreathSeries(
        insp_onsets_s=tuple(insp),
        exp_onsets_s=tuple(exp),
        ins_t_s=tuple(ins_t for _ in range(n_exp)),
        exp_t_s=tuple(exp_t),
        ins_v=tuple(ins_v),
        exp_v=tuple(exp_v),
        i_rr_s=tuple(period for _ in range(n_insp - 1)),
    )


class TestCardiacParams:
    def test_hand_computed_triplet(self):
        out = cardiac_params([800.0, 810.0, 790.0])
        assert out.hr_bpm == 75.0
        assert out.rmssd_ms == pytest.approx(math.sqrt(250.0), rel=1e-12)
        assert out.ln_rmssd == pytest.approx(2.7607, abs=5e-5)
        assert out.ln_rmssd == math.log(out.rmssd_ms)

    def test_constant_rhythm_rejected(self):
        with pytest.raises(FeatureError):
            cardiac_params([1000.0, 1000.0, 1000.0])

    def test_too_few_intervals(self):
        with pytest.raises(FeatureError):
            cardiac_params([500.0])
        with pytest.raises(FeatureError):
            cardiac_params([500.0, 510.0])

    def test_invalid_intervals(self):
        with pytest.raises(FeatureError):
            cardiac_params([800.0, -10.0, 820.0])
        with pytest.raises(FeatureError):
            cardiac_params([800.0, math.nan, 820.0])

    def test_hr_oracle_on_random_intervals(self):
        rng = np.random.default_rng(0)
        rr = rng.uniform(700.0, 1100.0, 50)
        out = cardiac_params(rr)
        assert out.hr_bpm == pytest.approx(60000.0 / rr.mean(), rel=1e-12)
        sq = [(rr[i + 1] - rr[i]) ** 2 for i in range(len(rr) - 1)]
        assert out.rmssd_ms == pytest.approx(math.sqrt(sum(sq) / len(sq)), rel=1e-12)


class TestRespiratoryParams:
    def test_constant_breathing(self):
        out = respiratory_params(make_breaths(n_insp=6))
        assert out.rr_brpm == 15.0
        assert out.cv.as_tuple() == (0.0, 0.0, 0.0, 0.0, 0.0)

    def test_hand_computed_amplitude_cv(self):
        series = make_breaths(n_insp=6, n_exp=5, ins_v=[1.0, 1.0, 1.0, 1.0, 2.0])
        out = respiratory_params(series)
        # population sd 0.4 over mean 1.2
        assert out.cv.cv_ins_v == pytest.approx(1.0 / 3.0, rel=1e-12)

    def test_too_few_breaths(self):
        with pytest.raises(FeatureError):
            respiratory_params(make_breaths(n_insp=5, n_exp=4))

    def test_amplitude_scale_invariance(self):
        rng = np.random.default_rng(1)
        iv = rng.uniform(0.5, 2.0, 6).tolist()
        ev = rng.uniform(0.5, 2.0, 5).tolist()
        base = respiratory_params(make_breaths(n_insp=6, ins_v=iv, exp_v=ev))
        for c in (1e-4, 0.3, 7.0, 1e5):
            scaled = respiratory_params(
                make_breaths(n_insp=6, ins_v=[c * v for v in iv], exp_v=[c * v for v in ev])
            )
            assert scaled.cv.cv_ins_v == pytest.approx(base.cv.cv_ins_v, rel=1e-9)
            assert scaled.cv.cv_exp_v == pytest.approx(base.cv.cv_exp_v, rel=1e-9)
            assert scaled.rr_brpm == base.rr_brpm

    def test_time_shift_invariance(self):
        iv = [1.0, 1.2, 0.9, 1.1, 1.05, 1.3]
        a = respiratory_params(make_breaths(n_insp=6, ins_v=iv, start=0.0))
        b = respiratory_params(make_breaths(n_insp=6, ins_v=iv, start=16.0))
        assert a == b


class TestBreathingRegularity:
    def test_zero_cvs_give_100(self):
        assert breathing_regularity(CvSet(0.0, 0.0, 0.0, 0.0, 0.0)) == 100.0

    def test_saturation_limit_is_0(self):
        br = breathing_regularity(CvSet(50.0, 50.0, 50.0, 50.0, 50.0))
        assert 0.0 <= br <= 1e-40

    def test_direct_evaluation_at_0p1(self):
        br = breathing_regularity(CvSet(0.1, 0.1, 0.1, 0.1, 0.1))
        assert br == pytest.approx(100.0 - 100.0 * math.tanh(0.1), rel=1e-12)
        assert br == pytest.approx(90.033, abs=1e-3)

    def test_bounds_on_random_cv_vectors(self):
        rng = np.random.default_rng(2)
        for _ in range(10_000):
            cv = CvSet(*np.abs(rng.normal(0.0, 2.0, 5)))
            assert 0.0 <= breathing_regularity(cv) <= 100.0

    def test_strictly_decreasing_in_each_component(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            base = rng.uniform(0.0, 3.0, 5)
            br0 = breathing_regularity(CvSet(*base))
            for i in range(5):
                bumped = base.copy()
                bumped[i] += 0.1
                assert breathing_regularity(CvSet(*bumped)) < br0

    def test_negative_cv_rejected(self):
        with pytest.raises(FeatureError):
            CvSet(-0.1, 0.0, 0.0, 0.0, 0.0)
        with pytest.raises(FeatureError):
            CvSet(math.inf, 0.0, 0.0, 0.0, 0.0)


class TestParamVector:
    def test_assembly_and_row(self):
        vec = param_vector([800.0, 810.0, 790.0], make_breaths(n_insp=8))
        row = vec.to_row("s001", Position.SUPINE)
        assert set(row.params) == {
            "HR", "RMSSD", "lnRMSSD", "RR", "ciRR",
            "cInsT", "cExpT", "cInsV", "cExpV", "BR",
        }
        assert row.params["HR"] == 75.0
        assert row.params["RR"] == 15.0
        assert row.params["BR"] == 100.0

    def test_invariant_violations_rejected(self):
        good = dict(
            hr_bpm=60.0, rmssd_ms=20.0, ln_rmssd=math.log(20.0), rr_brpm=15.0,
            ci_rr=0.1, c_ins_t=0.1, c_exp_t=0.1, c_ins_v=0.1, c_exp_v=0.1,
            br_percent=90.0,
        )
        ParamVector(**good)
        with pytest.raises(FeatureError):
            ParamVector(**{**good, "ln_rmssd": math.log(20.0) + 1e-3})
        with pytest.raises(FeatureError):
            ParamVector(**{**good, "br_percent": 101.0})
        with pytest.raises(FeatureError):
            ParamVector(**{**good, "hr_bpm": 0.0})


def enum_wilcoxon(d):
    """Exact two-sided signed-rank p by enumerating all sign assignments.

    Ranks are tie-averaged by hand: rank of |d_i| = mean 1-based position of
    its equals in the sorted magnitudes.
    """
    d = np.asarray(d, dtype=float)
    d = d[d != 0]
    n = d.size
    mags = np.sort(np.abs(d))
    ranks = np.array(
        [np.mean(np.nonzero(mags == abs(v))[0] + 1.0) for v in d]
    )
    w_obs = float(ranks[d > 0].sum())
    bits = np.array(list(itertools.product([0.0, 1.0], repeat=n)))
    w_all = bits @ ranks
    p_le = float(np.mean(w_all <= w_obs))
    p_ge = float(np.mean(w_all >= w_obs))
    return w_obs, min(1.0, 2.0 * min(p_le, p_ge))


class TestWilcoxonSignedRank:
    def test_distinct_magnitudes_hand_case(self):
        d = [3.0, -1.0, 4.0, -2.0, 6.0, 5.0, -7.0, 8.0, 9.0, 10.0]
        w, p = wilcoxon_signed_rank(d)
        assert w == 45.0  # ranks 3+4+6+5+8+9+10 of the positives
        w_ref, p_ref = enum_wilcoxon(d)
        assert w == w_ref
        assert p == pytest.approx(p_ref, abs=1e-12)

    def test_zeros_dropped(self):
        d = [0.0, 1.5, -2.5, 0.0, 3.5, -4.5, 5.5]
        assert wilcoxon_signed_rank(d) == wilcoxon_signed_rank([v for v in d if v != 0])

    def test_all_zero_rejected(self):
        with pytest.raises(FeatureError):
            wilcoxon_signed_rank([0.0, 0.0, 0.0])

    def test_exact_agrees_with_scipy_without_ties(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            mag = rng.permutation(np.arange(1, 11)) * 0.7
            d = mag * rng.choice([-1.0, 1.0], 10)
            w, p = wilcoxon_signed_rank(d)
            ref = stats.wilcoxon(d, alternative="two-sided", method="exact")
            # scipy reports min(W+, W-); both sums carry the same information
            assert min(w, 55.0 - w) == ref.statistic
            assert p == pytest.approx(ref.pvalue, abs=1e-12)

    def test_large_n_matches_scipy_normal_approximation(self):
        rng = np.random.default_rng(5)
        d = rng.normal(0.3, 1.0, 40)
        _, p = wilcoxon_signed_rank(d)
        ref = stats.wilcoxon(d, alternative="two-sided", method="approx", correction=True)
        assert p == pytest.approx(ref.pvalue, abs=1e-12)

    @settings(max_examples=150, deadline=None)
    @given(
        st.lists(
            st.integers(min_value=-9, max_value=9), min_size=1, max_size=12
        ).filter(lambda d: any(v != 0 for v in d))
    )
    def test_matches_exact_enumeration_oracle(self, d):
        d = [float(v) for v in d]
        w, p = wilcoxon_signed_rank(d)
        w_ref, p_ref = enum_wilcoxon(d)
        assert w == w_ref
        assert p == pytest.approx(p_ref, abs=1e-12)


class TestPairedCompare:
    def test_constant_shift_exact_differences(self):
        # quarter-integer values keep x + 10 exact, so every difference is
        # exactly 10.0: Shapiro returns 1.0 and the zero-variance paired t
        # is decisive
        rng = np.random.default_rng(6)
        supine = np.round(rng.uniform(50.0, 80.0, 20) * 4.0) / 4.0
        res = paired_compare(supine, supine + 10.0, "HR")
        assert res.test_used is TestKind.PAIRED_T
        assert res.statistic == math.inf
        assert res.p_value < 1e-12

    def test_constant_shift_with_rounding_jitter(self):
        # generic floats leave ~1 ulp jitter in (x + 10) - x; Shapiro then
        # rejects and the signed-rank test returns its exact minimum
        # two-sided p of 2 / 2^20
        rng = np.random.default_rng(6)
        supine = rng.normal(60.0, 5.0, 20)
        res = paired_compare(supine, supine + 10.0, "HR")
        if res.test_used is TestKind.PAIRED_T:
            assert res.p_value < 1e-12
        else:
            assert res.p_value == pytest.approx(2.0 / 2.0**20, abs=1e-15)

    def test_identical_samples_rejected(self):
        x = np.linspace(50.0, 80.0, 10)
        with pytest.raises(FeatureError):
            paired_compare(x, x.copy(), "HR")

    def test_length_mismatch_and_small_n(self):
        with pytest.raises(FeatureError):
            paired_compare([1.0] * 10, [2.0] * 9, "HR")
        with pytest.raises(FeatureError):
            paired_compare(np.arange(7.0), np.arange(7.0) + 1.0, "HR")

    def test_normal_differences_use_paired_t(self):
        rng = np.random.default_rng(7)
        supine = rng.normal(60.0, 5.0, 30)
        d = rng.normal(2.0, 1.0, 30)
        res = paired_compare(supine, supine + d, "RMSSD")
        assert res.test_used is TestKind.PAIRED_T
        assert res.normality_p >= 0.05
        t_ref, p_ref = stats.ttest_rel(supine + d, supine)
        assert res.statistic == pytest.approx(t_ref, rel=1e-10)
        assert res.p_value == pytest.approx(p_ref, rel=1e-10)

    def test_heavy_tailed_differences_use_wilcoxon(self):
        rng = np.random.default_rng(11)
        supine = rng.normal(60.0, 5.0, 30)
        d = rng.lognormal(0.0, 1.0, 30) ** 3 * rng.choice([-1.0, 1.0], 30)
        res = paired_compare(supine, supine + d, "BR")
        assert res.test_used is TestKind.WILCOXON_SIGNED_RANK
        assert res.normality_p < 0.05
        w_ref, p_ref = wilcoxon_signed_rank((supine + d) - supine)
        assert res.statistic == w_ref
        assert res.p_value == p_ref

    def test_result_consistency_enforced(self):
        with pytest.raises(FeatureError):
            PairedTestResult("HR", TestKind.PAIRED_T, 1.0, 0.5, normality_p=0.01)
        with pytest.raises(FeatureError):
            PairedTestResult("HR", TestKind.PAIRED_T, 1.0, 1.5, normality_p=0.5)
