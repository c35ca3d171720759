"""Rule engines turning histogram and SHAP-dependence statistics into
search-bound refinement advice (shift / expand / contract / fix / keep)."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .explain import DependenceSeries
from .space import ParamDef
from .stats import HistogramStats

ACTIONS = ("shift_up", "shift_down", "expand", "contract", "fix_value", "keep")


@dataclass(frozen=True)
class AdvisorThresholds:
    """Codified cutoffs for judgments analysts usually make visually.

    All of them are surfaced on the CLI; defaults are documented here and
    nowhere else.
    """

    skew_thresh: float = 0.5
    p_unif: float = 0.05
    expand_factor: float = 0.25
    shift_factor: float = 0.25
    fix_thresh: float = 0.9
    conc_thresh: float = 0.5
    spread_factor: float = 0.05


@dataclass(frozen=True)
class BoundRecommendation:
    param: str
    action: str
    evidence: tuple  # of {"statistic", "value", "rule"}
    suggested_bounds: tuple | None = None  # (lower, upper) in raw space
    fixed_value: float | None = None

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise ValueError(f"unknown action {self.action!r}")
        if not self.evidence:
            raise ValueError("every recommendation must cite evidence")
        if self.suggested_bounds is not None:
            lo, hi = self.suggested_bounds
            if not lo < hi:
                raise ValueError("suggested bounds must be well-ordered")


def _decode_bounds(pdef: ParamDef, lo_enc: float, hi_enc: float) -> tuple:
    """Map encoded-space bounds back to raw values, clamped to hard limits.

    Integer parameters round outward so no previously-feasible value is lost.
    """
    if pdef.log_scale:
        lo, hi = 10.0 ** lo_enc, 10.0 ** hi_enc
    else:
        lo, hi = lo_enc, hi_enc
    if pdef.hard_lower is not None:
        lo = max(lo, pdef.hard_lower)
        hi = max(hi, pdef.hard_lower)
    if pdef.hard_upper is not None:
        lo = min(lo, pdef.hard_upper)
        hi = min(hi, pdef.hard_upper)
    if pdef.kind == "integer":
        lo, hi = math.floor(lo), math.ceil(hi)
    if not lo < hi:  # clamping collapsed the interval; fall back to hard/declared span
        lo, hi = pdef.lower, pdef.upper
    return (lo, hi)


def advise_from_skew(
    h: HistogramStats, pdef: ParamDef, thresholds: AdvisorThresholds = AdvisorThresholds()
) -> BoundRecommendation:
    """Histogram-shape rules over objective-filtered successful trials.

    First match wins: a near-uniform spread means the bounds are not yet
    informative and should be expanded; otherwise a strong negative skew
    (mass piled at the top) shifts both bounds up, a positive skew down.
    """
    lo, hi = pdef.encoded_bounds()
    width = hi - lo
    ev = [
        {"statistic": "skew", "value": h.skew, "rule": None},
        {"statistic": "uniform_p", "value": h.uniform_p, "rule": None},
    ]

    def fired(rule):
        return tuple(
            {**e, "rule": rule} for e in ev
        )

    if h.uniform_p > thresholds.p_unif:
        d = thresholds.expand_factor * width
        return BoundRecommendation(
            pdef.name,
            "expand",
            fired(f"uniform_p > {thresholds.p_unif}"),
            suggested_bounds=_decode_bounds(pdef, lo - d, hi + d),
        )
    if h.skew < -thresholds.skew_thresh:
        d = thresholds.shift_factor * width
        return BoundRecommendation(
            pdef.name,
            "shift_up",
            fired(f"skew < -{thresholds.skew_thresh}"),
            suggested_bounds=_decode_bounds(pdef, lo + d, hi + d),
        )
    if h.skew > thresholds.skew_thresh:
        d = thresholds.shift_factor * width
        return BoundRecommendation(
            pdef.name,
            "shift_down",
            fired(f"skew > {thresholds.skew_thresh}"),
            suggested_bounds=_decode_bounds(pdef, lo - d, hi - d),
        )
    return BoundRecommendation(
        pdef.name,
        "keep",
        fired("no rule fired"),
        suggested_bounds=(pdef.lower, pdef.upper),
    )


def advise_from_shap(
    d: DependenceSeries, pdef: ParamDef, thresholds: AdvisorThresholds = AdvisorThresholds()
) -> BoundRecommendation:
    """Dependence-plot rules: where do the positive-impact values sit?

    Splits the declared range into thirds and looks at the feature values of
    points with positive SHAP value. Mass concentrated at one end shifts the
    bounds toward it, mid-range concentration contracts both ends, and a
    tight near-unanimous cluster pins the value outright.
    """
    if not d.points:
        raise ValueError("empty dependence series")
    lo, hi = pdef.encoded_bounds()
    width = hi - lo
    positive = np.array([p[0] for p in d.points if p[1] > 0], dtype=float)
    if positive.size == 0:
        return BoundRecommendation(
            pdef.name,
            "keep",
            (
                {
                    "statistic": "n_positive",
                    "value": 0,
                    "rule": "no positive-impact observations",
                },
            ),
            suggested_bounds=(pdef.lower, pdef.upper),
        )
    thirds = np.clip(((positive - lo) / width * 3).astype(int), 0, 2)
    fractions = np.bincount(thirds, minlength=3) / positive.size
    modal = int(np.argmax(fractions))
    concentration = float(fractions[modal])
    spread = float(np.std(positive))
    ev = (
        {"statistic": "n_positive", "value": int(positive.size), "rule": None},
        {"statistic": "modal_third", "value": modal, "rule": None},
        {"statistic": "concentration", "value": concentration, "rule": None},
        {"statistic": "spread", "value": spread, "rule": None},
    )

    def fired(rule):
        return tuple({**e, "rule": rule} for e in ev)

    if (
        concentration >= thresholds.fix_thresh
        and spread < thresholds.spread_factor * width
    ):
        value = pdef.decode_value(float(np.median(positive)))
        return BoundRecommendation(
            pdef.name,
            "fix_value",
            fired(f"concentration >= {thresholds.fix_thresh} with low spread"),
            fixed_value=value,
        )
    if concentration >= thresholds.conc_thresh:
        if modal == 2:
            dd = thresholds.shift_factor * width
            return BoundRecommendation(
                pdef.name,
                "shift_up",
                fired("positive impact concentrated in top third"),
                suggested_bounds=_decode_bounds(pdef, lo + dd, hi + dd),
            )
        if modal == 0:
            dd = thresholds.shift_factor * width
            return BoundRecommendation(
                pdef.name,
                "shift_down",
                fired("positive impact concentrated in bottom third"),
                suggested_bounds=_decode_bounds(pdef, lo - dd, hi - dd),
            )
        dd = thresholds.expand_factor * width
        return BoundRecommendation(
            pdef.name,
            "contract",
            fired("positive impact concentrated mid-range"),
            suggested_bounds=_decode_bounds(pdef, lo + dd, hi - dd),
        )
    return BoundRecommendation(
        pdef.name,
        "keep",
        fired("no rule fired"),
        suggested_bounds=(pdef.lower, pdef.upper),
    )


def recommendations_to_json(recs) -> str:
    docs = []
    for r in recs:
        docs.append(
            {
                "param": r.param,
                "action": r.action,
                "evidence": list(r.evidence),
                "suggested_bounds": list(r.suggested_bounds)
                if r.suggested_bounds is not None
                else None,
                "fixed_value": r.fixed_value,
            }
        )
    return json.dumps(docs, indent=2, sort_keys=True)


def render_recommendations(recs) -> str:
    lines = []
    for r in recs:
        if r.action == "fix_value":
            target = f"fix at {r.fixed_value}"
        elif r.suggested_bounds is not None:
            target = f"bounds -> [{r.suggested_bounds[0]}, {r.suggested_bounds[1]}]"
        else:
            target = ""
        rule = r.evidence[0]["rule"]
        lines.append(f"{r.param}: {r.action} ({rule}) {target}".rstrip())
    return "\n".join(lines) + "\n"
