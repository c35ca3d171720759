"""Tree-structured Parzen estimator sampling over mixed search spaces.

Good and bad trial densities are weighted mixtures of truncated Gaussian
kernels (or weighted category distributions); candidates drawn from the
good density are ranked by the l/g ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .space import ParamDef
from .study import Study

MIN_BANDWIDTH_FACTOR = 1e-3


@dataclass(frozen=True)
class TpeConfig:
    gamma: float = 0.25
    n_startup: int = 10
    n_candidates: int = 24
    prior_weight: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.gamma < 1.0):
            raise ValueError("gamma must lie in (0, 1)")
        if self.n_startup < 1 or self.n_candidates < 1:
            raise ValueError("n_startup and n_candidates must be >= 1")


@dataclass(frozen=True)
class ParzenEstimator:
    """Kernel density over one encoded dimension.

    Numeric kinds hold (center, bandwidth, weight) truncated-Gaussian
    components over ``support``; categoricals hold a probability vector.
    """

    kind: str
    support: tuple
    components: tuple = ()
    category_weights: tuple = ()

    def __post_init__(self):
        if self.kind == "categorical":
            w = np.asarray(self.category_weights, dtype=float)
            if w.size == 0 or np.any(w < 0) or not math.isclose(w.sum(), 1.0):
                raise ValueError("category weights must be non-negative and sum to 1")
        else:
            if not self.components:
                raise ValueError("numeric estimator needs at least one kernel")
            w = np.array([c[2] for c in self.components])
            if np.any(w < 0) or not math.isclose(w.sum(), 1.0):
                raise ValueError("kernel weights must be non-negative and sum to 1")
            if any(c[1] <= 0 for c in self.components):
                raise ValueError("bandwidths must be positive")

    def density(self, x: float) -> float:
        """Mixture density at x; x must lie within the support."""
        if self.kind == "categorical":
            idx = int(round(x))
            if not (0 <= idx < len(self.category_weights)):
                raise ValueError(f"category index {x} outside support")
            return float(self.category_weights[idx])
        lo, hi = self.support
        if not (lo <= x <= hi):
            raise ValueError(f"value {x} outside support [{lo}, {hi}]")
        total = 0.0
        for c, b, w in self.components:
            z = ndtr((hi - c) / b) - ndtr((lo - c) / b)
            pdf = math.exp(-0.5 * ((x - c) / b) ** 2) / (b * math.sqrt(2.0 * math.pi))
            total += w * pdf / z
        return total

    def sample(self, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        """Draw from the mixture by inverse-CDF within the truncation window."""
        if self.kind == "categorical":
            w = np.asarray(self.category_weights, dtype=float)
            return rng.choice(len(w), size=size, p=w).astype(float)
        lo, hi = self.support
        weights = np.array([c[2] for c in self.components])
        idx = rng.choice(len(self.components), size=size, p=weights)
        out = np.empty(size)
        for i, k in enumerate(idx):
            c, b, _ = self.components[k]
            a, z = ndtr((lo - c) / b), ndtr((hi - c) / b)
            u = rng.uniform(a, z)
            out[i] = min(max(c + b * ndtri(u), lo), hi)
        return out


@dataclass(frozen=True)
class ParzenPair:
    """Good-trial density l and bad-trial density g over the same support."""

    l: ParzenEstimator
    g: ParzenEstimator

    def __post_init__(self):
        if self.l.kind != self.g.kind or self.l.support != self.g.support:
            raise ValueError("l and g must share kind and support")


def split_trials(trials, gamma: float):
    """Partition (item, objective) pairs into good (top ceil(gamma*n)) and bad.

    Objectives are higher-is-better; ties go to the earlier trial. Both
    returned lists preserve original trial order.
    """
    trials = list(trials)
    if not trials:
        raise ValueError("cannot split an empty trial list")
    n = len(trials)
    k = math.ceil(gamma * n)
    order = sorted(range(n), key=lambda i: (-trials[i][1], i))
    good_idx = set(order[:k])
    good = [trials[i] for i in range(n) if i in good_idx]
    bad = [trials[i] for i in range(n) if i not in good_idx]
    return good, bad


def fit_parzen(values, pdef: ParamDef, prior_weight: float = 1.0) -> ParzenEstimator:
    """Build the kernel density for one dimension from encoded observations.

    One truncated-Gaussian kernel per observation plus a wide prior kernel
    at the support midpoint; the prior guarantees positive density
    everywhere, so l/g ratios stay finite.
    """
    values = [float(v) for v in values]
    if pdef.kind == "categorical":
        k = len(pdef.choices)
        counts = np.zeros(k)
        for v in values:
            counts[int(round(v))] += 1.0
        counts += prior_weight
        total = counts.sum()
        if total <= 0:
            raise ValueError("no observations and zero prior weight")
        return ParzenEstimator(
            kind="categorical",
            support=(0.0, float(k - 1)),
            category_weights=tuple(counts / total),
        )

    lo, hi = pdef.encoded_bounds()
    width = hi - lo
    n = len(values)
    if n == 0 and prior_weight <= 0:
        raise ValueError("no observations and zero prior weight")
    bw = max(width / (1 + n), MIN_BANDWIDTH_FACTOR * width)
    total = n + prior_weight
    components = [(v, bw, 1.0 / total) for v in values]
    if prior_weight > 0:
        components.append(((lo + hi) / 2.0, width, prior_weight / total))
    return ParzenEstimator(kind=pdef.kind, support=(lo, hi), components=tuple(components))


def density(estimator: ParzenEstimator, x: float) -> float:
    return estimator.density(x)


def expected_improvement(pair: ParzenPair, x: float) -> float:
    """l(x)/g(x); finite and positive because both densities carry a prior kernel."""
    return pair.l.density(x) / pair.g.density(x)


def _uniform_draw(pdef: ParamDef, rng: np.random.Generator):
    if pdef.kind == "categorical":
        return pdef.choices[int(rng.integers(len(pdef.choices)))]
    lo, hi = pdef.encoded_bounds()
    x = rng.uniform(lo, hi)
    return pdef.decode_value(x)


def _clip_integer(pdef: ParamDef, raw: float):
    v = int(round(raw))
    return min(max(v, int(pdef.lower)), int(pdef.upper))


def _suggest_scalar(good_vals, bad_vals, pdef: ParamDef, cfg: TpeConfig, rng):
    l = fit_parzen(good_vals, pdef, cfg.prior_weight)
    g = fit_parzen(bad_vals, pdef, cfg.prior_weight)
    pair = ParzenPair(l, g)
    candidates = np.sort(l.sample(rng, cfg.n_candidates))
    scores = np.array([expected_improvement(pair, c) for c in candidates])
    best = candidates[int(np.argmax(scores))]  # first max after sort = smallest tie
    if pdef.kind == "categorical":
        return pdef.choices[int(round(best))]
    raw = pdef.decode_value(float(best))
    if pdef.kind == "integer":
        return _clip_integer(pdef, raw)
    return raw


def suggest(study: Study, pdef: ParamDef, cfg: TpeConfig, rng: np.random.Generator):
    """Propose the next value for one parameter given the trial history.

    Uniform (log-uniform for log scale) until ``n_startup`` trials exist;
    afterwards draws candidates from the good density and returns the one
    maximising the l/g ratio. Each dimension is treated independently.
    """
    if len(study) < cfg.n_startup:
        if pdef.arity > 1:
            length = int(rng.integers(1, pdef.arity + 1))
            return [_uniform_draw(pdef, rng) for _ in range(length)]
        return _uniform_draw(pdef, rng)

    good, bad = split_trials(
        [(t, t.objective) for t in study.trials], cfg.gamma
    )
    good_trials = [t for t, _ in good]
    bad_trials = [t for t, _ in bad]

    def encoded(trials, extract):
        out = []
        for t in trials:
            v = extract(t.config[pdef.name])
            if v is not None:
                out.append(pdef.encode_value(v))
        return out

    if pdef.arity == 1:
        return _suggest_scalar(
            encoded(good_trials, lambda v: v),
            encoded(bad_trials, lambda v: v),
            pdef,
            cfg,
            rng,
        )

    # Variable-arity parameter: pick the slot count first, then each slot.
    len_def = ParamDef(name=f"{pdef.name}.len", kind="integer", lower=1, upper=pdef.arity)
    length = _suggest_scalar(
        [float(len(t.config[pdef.name])) for t in good_trials],
        [float(len(t.config[pdef.name])) for t in bad_trials],
        len_def,
        cfg,
        rng,
    )
    slots = []
    for i in range(int(length)):
        pick = lambda v, i=i: v[i] if i < len(v) else None
        slots.append(
            _suggest_scalar(
                encoded(good_trials, pick), encoded(bad_trials, pick), pdef, cfg, rng
            )
        )
    return slots


def suggest_config(study: Study, cfg: TpeConfig, rng: np.random.Generator) -> dict:
    """Suggest a full configuration, one independent dimension at a time."""
    return {p.name: suggest(study, p, cfg, rng) for p in study.space}
