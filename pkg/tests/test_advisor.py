import json

import numpy as np
import pytest

from hpolens import (
    AdvisorThresholds,
    BoundRecommendation,
    ParamDef,
    advise_from_shap,
    advise_from_skew,
    histogram,
)
from hpolens.advisor import _decode_bounds, recommendations_to_json, render_recommendations
from hpolens.explain import DependenceSeries

UNIT = ParamDef("x", "continuous", 0.0, 1.0)


def beta_histogram(a, b, pdef=UNIT, n=400, seed=0):
    rng = np.random.default_rng(seed)
    lo, hi = pdef.encoded_bounds()
    return histogram(lo + (hi - lo) * rng.beta(a, b, n), pdef)


def series(values, shap_values, feature="x"):
    pts = tuple((float(v), float(s), 0.0) for v, s in zip(values, shap_values))
    return DependenceSeries(feature, "other", pts)


class TestSkewRules:
    def test_top_heavy_shifts_up(self):
        rec = advise_from_skew(beta_histogram(8, 2), UNIT)
        assert rec.action == "shift_up"
        assert rec.suggested_bounds == (0.25, 1.25)

    def test_bottom_heavy_shifts_down(self):
        rec = advise_from_skew(beta_histogram(2, 8), UNIT)
        assert rec.action == "shift_down"

    def test_uniform_expands(self):
        rec = advise_from_skew(beta_histogram(1, 1), UNIT)
        assert rec.action == "expand"
        assert rec.suggested_bounds == (-0.25, 1.25)

    def test_uniformity_checked_before_skew(self):
        # mild skew but still statistically uniform must expand, not shift
        h = beta_histogram(1.15, 1, n=60, seed=3)
        if h.uniform_p > 0.05:
            assert advise_from_skew(h, UNIT).action == "expand"

    def test_symmetric_peak_keeps(self):
        rec = advise_from_skew(beta_histogram(30, 30), UNIT)
        assert rec.action == "keep"
        assert rec.suggested_bounds == (0.0, 1.0)

    def test_evidence_carries_statistics(self):
        h = beta_histogram(8, 2)
        rec = advise_from_skew(h, UNIT)
        stats = {e["statistic"]: e["value"] for e in rec.evidence}
        assert stats["skew"] == h.skew
        assert stats["uniform_p"] == h.uniform_p
        assert all(e["rule"] for e in rec.evidence)

    def test_deterministic(self):
        h = beta_histogram(2, 8)
        assert advise_from_skew(h, UNIT) == advise_from_skew(h, UNIT)

    def test_custom_thresholds_respected(self):
        h = beta_histogram(8, 2)
        lax = AdvisorThresholds(skew_thresh=10.0, p_unif=1e-12)
        assert advise_from_skew(h, UNIT, lax).action == "keep"

    def test_hard_bounds_clamp_shift(self):
        p = ParamDef("x", "continuous", 0.0, 1.0, hard_lower=0.0, hard_upper=1.0)
        rec = advise_from_skew(beta_histogram(8, 2, pdef=p), p)
        assert rec.action == "shift_up"
        assert rec.suggested_bounds == (0.25, 1.0)

    def test_log_param_bounds_in_raw_space(self):
        p = ParamDef("lr", "continuous", 1e-4, 1e-2, log_scale=True)
        rec = advise_from_skew(beta_histogram(8, 2, pdef=p), p)
        assert rec.action == "shift_up"
        lo, hi = rec.suggested_bounds
        # encoded [-4, -2] shifted by +0.5 -> raw [10^-3.5, 10^-1.5]
        assert lo == pytest.approx(10**-3.5)
        assert hi == pytest.approx(10**-1.5)

    def test_integer_rounds_outward(self):
        p = ParamDef("n", "integer", 0, 100)
        rec = advise_from_skew(beta_histogram(8, 2, pdef=p), p)
        lo, hi = rec.suggested_bounds
        assert isinstance(lo, int) and isinstance(hi, int)
        assert (lo, hi) == (25, 125)


class TestShapRules:
    def test_positive_impact_high_shifts_up(self, rng):
        vals = rng.uniform(0, 1, 200)
        rec = advise_from_shap(series(vals, np.where(vals > 0.75, 1.0, -1.0)), UNIT)
        assert rec.action == "shift_up"
        assert rec.suggested_bounds == (0.25, 1.25)

    def test_positive_impact_low_shifts_down(self, rng):
        vals = rng.uniform(0, 1, 200)
        rec = advise_from_shap(series(vals, np.where(vals < 0.25, 1.0, -1.0)), UNIT)
        assert rec.action == "shift_down"

    def test_mid_range_contracts(self, rng):
        vals = rng.uniform(0, 1, 300)
        mid = (vals > 0.35) & (vals < 0.65)
        rec = advise_from_shap(series(vals, np.where(mid, 1.0, -1.0)), UNIT)
        assert rec.action == "contract"
        assert rec.suggested_bounds == (0.25, 0.75)

    def test_tight_cluster_fixes_value(self, rng):
        vals = np.concatenate([rng.uniform(0.79, 0.81, 95), rng.uniform(0, 1, 5)])
        shap = np.concatenate([np.ones(95), -np.ones(5)])
        rec = advise_from_shap(series(vals, shap), UNIT)
        assert rec.action == "fix_value"
        assert rec.fixed_value == pytest.approx(0.8, abs=0.02)
        assert rec.suggested_bounds is None

    def test_fix_checked_before_shift(self, rng):
        # a tight cluster in the top third must fix, not merely shift up
        vals = rng.uniform(0.9, 0.92, 100)
        rec = advise_from_shap(series(vals, np.ones(100)), UNIT)
        assert rec.action == "fix_value"

    def test_no_positive_points_keeps(self, rng):
        vals = rng.uniform(0, 1, 50)
        rec = advise_from_shap(series(vals, -np.ones(50)), UNIT)
        assert rec.action == "keep"
        assert rec.evidence[0]["value"] == 0

    def test_scattered_positive_keeps(self, rng):
        vals = np.linspace(0.01, 0.99, 99)
        rec = advise_from_shap(series(vals, np.ones(99)), UNIT)
        assert rec.action == "keep"

    def test_empty_series_rejected(self):
        with pytest.raises(ValueError):
            advise_from_shap(DependenceSeries("x", "y", ()), UNIT)

    def test_integer_fix_value_decoded(self, rng):
        p = ParamDef("n", "integer", 0, 100)
        vals = rng.uniform(49.6, 50.4, 100)
        rec = advise_from_shap(series(vals, np.ones(100)), p)
        assert rec.action == "fix_value"
        assert rec.fixed_value == 50
        assert isinstance(rec.fixed_value, int)


class TestDecodeBounds:
    def test_plain_passthrough(self):
        assert _decode_bounds(UNIT, 0.2, 0.7) == (0.2, 0.7)

    def test_log_exponentiates(self):
        p = ParamDef("lr", "continuous", 1e-4, 1e-1, log_scale=True)
        lo, hi = _decode_bounds(p, -3.0, -2.0)
        assert (lo, hi) == (pytest.approx(1e-3), pytest.approx(1e-2))

    def test_hard_clamp(self):
        p = ParamDef("x", "continuous", 0.0, 1.0, hard_lower=0.1, hard_upper=0.9)
        assert _decode_bounds(p, -0.5, 1.5) == (0.1, 0.9)

    def test_collapsed_interval_falls_back(self):
        p = ParamDef("x", "continuous", 0.0, 1.0, hard_upper=0.2)
        # both ends clamp to 0.2 -> fall back to declared span
        assert _decode_bounds(p, 0.5, 0.9) == (0.0, 1.0)


class TestRecommendationType:
    def test_unknown_action_rejected(self):
        with pytest.raises(ValueError):
            BoundRecommendation("x", "teleport", ({"statistic": "s", "value": 1, "rule": "r"},))

    def test_evidence_required(self):
        with pytest.raises(ValueError):
            BoundRecommendation("x", "keep", ())

    def test_ill_ordered_bounds_rejected(self):
        with pytest.raises(ValueError):
            BoundRecommendation(
                "x", "expand", ({"statistic": "s", "value": 1, "rule": "r"},),
                suggested_bounds=(1.0, 1.0),
            )


class TestSerialization:
    def recs(self):
        return [
            advise_from_skew(beta_histogram(8, 2), UNIT),
            advise_from_skew(beta_histogram(1, 1), UNIT),
        ]

    def test_json_round_trips(self):
        docs = json.loads(recommendations_to_json(self.recs()))
        assert [d["param"] for d in docs] == ["x", "x"]
        assert docs[0]["action"] == "shift_up"
        assert docs[0]["suggested_bounds"] == [0.25, 1.25]

    def test_text_render_one_line_per_rec(self):
        text = render_recommendations(self.recs())
        lines = text.splitlines()
        assert len(lines) == 2
        assert lines[0].startswith("x: shift_up")
        assert text.endswith("\n")
