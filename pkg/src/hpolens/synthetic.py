"""Synthetic planted-structure objectives and study simulation.

These stand in for expensive real training runs: the ground-truth effect
weights and directions are known, so recovery of importance orderings and
correlation signs can be asserted. Evaluation is a pure function of
(spec, config): noise is seeded from a hash of the configuration, which
makes duplicate configs exact duplicates.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .space import ParamDef, SearchSpace
from .study import Study, TrialRecord, validate_trial
from .tpe import TpeConfig, suggest_config

SHAPE_KINDS = ("monotone_up", "monotone_down", "peak", "step", "quadratic_peak")


@dataclass(frozen=True)
class EffectShape:
    kind: str
    center: float = 0.5
    width: float = 0.25
    threshold: float = 0.5

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise ValueError(f"unknown shape kind {self.kind!r}")

    def __call__(self, t: float) -> float:
        """Effect response on the unit interval, centred so 0 is neutral."""
        if self.kind == "monotone_up":
            return t - 0.5
        if self.kind == "monotone_down":
            return 0.5 - t
        if self.kind == "peak":
            return float(np.exp(-0.5 * ((t - self.center) / self.width) ** 2)) - 0.5
        if self.kind == "step":
            return 0.5 if t >= self.threshold else -0.5
        # quadratic_peak: with a lone unit-weight effect the objective is
        # exactly 1 - (t - center)^2, maximal at the center
        return 0.5 - (t - self.center) ** 2


@dataclass(frozen=True)
class Effect:
    param: str
    shape: EffectShape
    weight: float


@dataclass(frozen=True)
class Interaction:
    param_a: str
    param_b: str
    weight: float


@dataclass(frozen=True)
class SyntheticSpec:
    space: SearchSpace
    effects: tuple = ()
    interactions: tuple = ()
    noise_sigma: float = 0.0
    seed: int = 0

    def importance_order(self):
        """Parameter names sorted by descending planted effect weight."""
        return [
            e.param
            for e in sorted(self.effects, key=lambda e: -abs(e.weight))
        ]


def _unit_position(pdef: ParamDef, value) -> float:
    lo, hi = pdef.encoded_bounds()
    return (pdef.encode_value(value) - lo) / (hi - lo)


def _noise(spec: SyntheticSpec, config: dict) -> float:
    if spec.noise_sigma <= 0:
        return 0.0
    canon = json.dumps(config, sort_keys=True, default=list)
    digest = hashlib.blake2b(
        f"{spec.seed}:{canon}".encode(), digest_size=8
    ).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "big"))
    return float(rng.normal(0.0, spec.noise_sigma))


def eval_synthetic(spec: SyntheticSpec, config: dict) -> float:
    """Deterministic objective in [0, 1]; 0.5 is the neutral baseline."""
    trial = TrialRecord("probe", config, 0.5)
    validate_trial(trial, spec.space)
    total_weight = sum(abs(e.weight) for e in spec.effects) + sum(
        abs(i.weight) for i in spec.interactions
    )
    value = 0.5
    if total_weight > 0:
        for e in spec.effects:
            t = _unit_position(spec.space.get(e.param), config[e.param])
            value += (e.weight / total_weight) * e.shape(t)
        for i in spec.interactions:
            ta = _unit_position(spec.space.get(i.param_a), config[i.param_a])
            tb = _unit_position(spec.space.get(i.param_b), config[i.param_b])
            value += (i.weight / total_weight) * 2.0 * (ta - 0.5) * (tb - 0.5)
    value += _noise(spec, config)
    return float(min(max(value, 0.0), 1.0))


def _random_config(space: SearchSpace, rng: np.random.Generator) -> dict:
    config = {}
    for p in space:
        def draw():
            if p.kind == "categorical":
                return p.choices[int(rng.integers(len(p.choices)))]
            lo, hi = p.encoded_bounds()
            return p.decode_value(float(rng.uniform(lo, hi)))

        if p.arity > 1:
            length = int(rng.integers(1, p.arity + 1))
            config[p.name] = [draw() for _ in range(length)]
        else:
            config[p.name] = draw()
    return config


def simulate_study(
    spec: SyntheticSpec,
    sampler: str = "random",
    n_trials: int = 100,
    seed: int = 0,
    tpe_config: TpeConfig | None = None,
) -> Study:
    """Run a sampler against the synthetic objective and collect the trials."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if sampler not in ("random", "tpe"):
        raise ValueError(f"unknown sampler {sampler!r}")
    rng = np.random.default_rng(seed)
    cfg = tpe_config or TpeConfig(seed=seed)
    trials = []
    study = Study(spec.space, ())
    for i in range(n_trials):
        if sampler == "random":
            config = _random_config(spec.space, rng)
        else:
            config = suggest_config(study, cfg, rng)
        objective = eval_synthetic(spec, config)
        trials.append(TrialRecord(f"t{i:05d}", config, objective, {"sampler": sampler}))
        study = Study(spec.space, tuple(trials))
    return study


# --- shipped benchmark specs ------------------------------------------------


def quadratic_1d_spec() -> SyntheticSpec:
    """1-D landscape f(x) = 1 - (x - 0.3)^2 on [0, 1]; optimum 1.0 at x = 0.3."""
    space = SearchSpace((ParamDef("x", "continuous", 0.0, 1.0),))
    return SyntheticSpec(
        space,
        effects=(Effect("x", EffectShape("quadratic_peak", center=0.3), 1.0),),
    )


def planted_importance_spec(seed: int = 0, noise_sigma: float = 0.02) -> SyntheticSpec:
    """Three monotone-up drivers with 10:3:1 effect weights."""
    space = SearchSpace(
        (
            ParamDef("alpha", "continuous", 0.0, 1.0),
            ParamDef("beta", "continuous", 0.0, 1.0),
            ParamDef("gamma", "continuous", 0.0, 1.0),
        )
    )
    up = EffectShape("monotone_up")
    return SyntheticSpec(
        space,
        effects=(
            Effect("alpha", up, 10.0),
            Effect("beta", up, 3.0),
            Effect("gamma", up, 1.0),
        ),
        noise_sigma=noise_sigma,
        seed=seed,
    )


def planted_interaction_spec(seed: int = 0, noise_sigma: float = 0.02) -> SyntheticSpec:
    """A strong positive (a, b) product interaction next to weaker main effects."""
    space = SearchSpace(
        (
            ParamDef("a", "continuous", 0.0, 1.0),
            ParamDef("b", "continuous", 0.0, 1.0),
            ParamDef("c", "continuous", 0.0, 1.0),
            ParamDef("d", "continuous", 0.0, 1.0),
        )
    )
    return SyntheticSpec(
        space,
        effects=(Effect("c", EffectShape("monotone_up"), 1.0),),
        interactions=(Interaction("a", "b", 6.0),),
        noise_sigma=noise_sigma,
        seed=seed,
    )


BUILTIN_SPECS = {
    "quadratic-1d": quadratic_1d_spec,
    "planted-importance": planted_importance_spec,
    "planted-interaction": planted_interaction_spec,
}


def spec_to_dict(spec: SyntheticSpec) -> dict:
    from .space import space_to_dict

    return {
        "space": space_to_dict(spec.space),
        "effects": [
            {
                "param": e.param,
                "shape": {
                    "kind": e.shape.kind,
                    "center": e.shape.center,
                    "width": e.shape.width,
                    "threshold": e.shape.threshold,
                },
                "weight": e.weight,
            }
            for e in spec.effects
        ],
        "interactions": [
            {"param_a": i.param_a, "param_b": i.param_b, "weight": i.weight}
            for i in spec.interactions
        ],
        "noise_sigma": spec.noise_sigma,
        "seed": spec.seed,
    }


def spec_from_dict(doc: dict) -> SyntheticSpec:
    from .space import space_from_dict

    effects = tuple(
        Effect(
            e["param"],
            EffectShape(
                e["shape"]["kind"],
                center=e["shape"].get("center", 0.5),
                width=e["shape"].get("width", 0.25),
                threshold=e["shape"].get("threshold", 0.5),
            ),
            float(e["weight"]),
        )
        for e in doc.get("effects", ())
    )
    interactions = tuple(
        Interaction(i["param_a"], i["param_b"], float(i["weight"]))
        for i in doc.get("interactions", ())
    )
    return SyntheticSpec(
        space_from_dict(doc["space"]),
        effects=effects,
        interactions=interactions,
        noise_sigma=float(doc.get("noise_sigma", 0.0)),
        seed=int(doc.get("seed", 0)),
    )
