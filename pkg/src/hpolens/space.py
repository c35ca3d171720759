"""Search-space definitions: parameter kinds, bounds, scales and JSON (de)serialization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


class SpaceError(ValueError):
    """Raised for an inconsistent parameter or search-space definition."""


@dataclass(frozen=True)
class ParamDef:
    """One hyperparameter dimension.

    ``arity`` > 1 means the parameter holds up to ``arity`` repeated scalar
    slots (e.g. one width per hidden layer); a trial may supply fewer slots
    than ``arity``, the actual count is tracked as its own encoded column.
    ``hard_lower``/``hard_upper`` are domain limits that bound-refinement
    advice may never cross (e.g. probabilities stay inside [0, 1]).
    """

    name: str
    kind: str = "continuous"  # continuous | integer | categorical
    lower: float = 0.0
    upper: float = 1.0
    log_scale: bool = False
    choices: tuple = ()
    arity: int = 1
    hard_lower: float | None = None
    hard_upper: float | None = None

    def __post_init__(self):
        if self.kind not in ("continuous", "integer", "categorical"):
            raise SpaceError(f"{self.name}: unknown kind {self.kind!r}")
        if self.arity < 1:
            raise SpaceError(f"{self.name}: arity must be >= 1")
        if self.kind == "categorical":
            if not self.choices:
                raise SpaceError(f"{self.name}: categorical parameter needs choices")
            if len(set(self.choices)) != len(self.choices):
                raise SpaceError(f"{self.name}: duplicate choices")
            object.__setattr__(self, "choices", tuple(self.choices))
        else:
            if not (self.lower < self.upper):
                raise SpaceError(f"{self.name}: requires lower < upper")
            if self.log_scale and self.lower <= 0:
                raise SpaceError(f"{self.name}: log scale requires lower > 0")

    @property
    def is_numeric(self) -> bool:
        return self.kind != "categorical"

    # Encoded space: log10 for log-scale numerics, ordinal index for categoricals.
    def encode_value(self, v) -> float:
        if self.kind == "categorical":
            try:
                return float(self.choices.index(v))
            except ValueError:
                raise SpaceError(f"{self.name}: {v!r} not in choices")
        x = float(v)
        return math.log10(x) if self.log_scale else x

    def decode_value(self, x: float):
        if self.kind == "categorical":
            return self.choices[int(round(x))]
        v = 10.0 ** x if self.log_scale else x
        if self.kind == "integer":
            return int(round(v))
        return v

    def encoded_bounds(self) -> tuple[float, float]:
        if self.kind == "categorical":
            return 0.0, float(len(self.choices) - 1)
        if self.log_scale:
            return math.log10(self.lower), math.log10(self.upper)
        return float(self.lower), float(self.upper)

    def contains(self, v) -> bool:
        if self.kind == "categorical":
            return v in self.choices
        try:
            x = float(v)
        except (TypeError, ValueError):
            return False
        if self.kind == "integer" and x != int(x):
            return False
        return self.lower <= x <= self.upper


@dataclass(frozen=True)
class SearchSpace:
    """Ordered collection of parameter definitions.

    The parameter order is stable and fixes the column order of every
    downstream matrix (encodings, correlation matrices, SHAP outputs).
    """

    params: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise SpaceError("duplicate parameter names in search space")

    def __iter__(self):
        return iter(self.params)

    def __len__(self):
        return len(self.params)

    def get(self, name: str) -> ParamDef:
        for p in self.params:
            if p.name == name:
                return p
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.params]

    def column_names(self) -> list[str]:
        """Encoded column names: a length column plus indexed slots for arity > 1."""
        cols = []
        for p in self.params:
            if p.arity == 1:
                cols.append(p.name)
            else:
                cols.append(f"{p.name}.len")
                cols.extend(f"{p.name}[{i}]" for i in range(p.arity))
        return cols

    def column_defs(self) -> list[tuple[str, ParamDef, str]]:
        """(column name, owning param, role) with role in {value, len, slot}."""
        out = []
        for p in self.params:
            if p.arity == 1:
                out.append((p.name, p, "value"))
            else:
                out.append((f"{p.name}.len", p, "len"))
                out.extend((f"{p.name}[{i}]", p, "slot") for i in range(p.arity))
        return out

    def column_bounds(self, column: str) -> tuple[float, float]:
        """Declared bounds of one encoded column (encoded space)."""
        for name, p, role in self.column_defs():
            if name == column:
                if role == "len":
                    return 1.0, float(p.arity)
                return p.encoded_bounds()
        raise KeyError(column)

    def column_param(self, column: str) -> ParamDef:
        for name, p, _role in self.column_defs():
            if name == column:
                return p
        raise KeyError(column)


def space_to_dict(space: SearchSpace) -> dict:
    params = []
    for p in space:
        d = {
            "name": p.name,
            "kind": p.kind,
            "lower": p.lower,
            "upper": p.upper,
            "log_scale": p.log_scale,
            "choices": list(p.choices),
            "arity": p.arity,
        }
        if p.hard_lower is not None:
            d["hard_lower"] = p.hard_lower
        if p.hard_upper is not None:
            d["hard_upper"] = p.hard_upper
        params.append(d)
    return {"params": params}


def space_from_dict(doc: dict) -> SearchSpace:
    if "params" not in doc:
        raise SpaceError("search-space document missing 'params'")
    params = []
    for d in doc["params"]:
        params.append(
            ParamDef(
                name=d["name"],
                kind=d.get("kind", "continuous"),
                lower=float(d.get("lower", 0.0)),
                upper=float(d.get("upper", 1.0)),
                log_scale=bool(d.get("log_scale", False)),
                choices=tuple(d.get("choices", ())),
                arity=int(d.get("arity", 1)),
                hard_lower=d.get("hard_lower"),
                hard_upper=d.get("hard_upper"),
            )
        )
    return SearchSpace(tuple(params))


def load_space(path) -> SearchSpace:
    with open(path) as fh:
        return space_from_dict(json.load(fh))


def save_space(space: SearchSpace, path) -> None:
    with open(path, "w") as fh:
        json.dump(space_to_dict(space), fh, indent=2)
        fh.write("\n")
