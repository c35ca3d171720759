"""Trial corpora: ingestion, validation, aggregation, filtering and numeric encoding."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .space import ParamDef, SearchSpace


class StudyParseError(ValueError):
    """Malformed trial file (bad JSON, wrong types)."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TrialValidationError(ValueError):
    """A trial that does not fit its search space."""

    def __init__(self, message, trial_id=None, fieldname=None):
        self.trial_id = trial_id
        self.fieldname = fieldname
        if trial_id is not None:
            message = f"trial {trial_id!r}, field {fieldname!r}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class TrialRecord:
    """One observation: a configuration and its objective value in [0, 1]."""

    trial_id: str
    config: dict
    objective: float
    tags: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Study:
    space: SearchSpace
    trials: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "trials", tuple(self.trials))

    def __len__(self):
        return len(self.trials)

    def objectives(self) -> np.ndarray:
        return np.array([t.objective for t in self.trials], dtype=float)


@dataclass(frozen=True)
class EncodedMatrix:
    """Feature matrix in encoded space plus the objective vector."""

    columns: tuple
    X: np.ndarray
    y: np.ndarray
    trial_ids: tuple = ()

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def column_index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise KeyError(name)


def _check_scalar(p: ParamDef, v, trial_id):
    if p.kind == "categorical":
        if v not in p.choices:
            raise TrialValidationError(
                f"value {v!r} not among choices", trial_id, p.name
            )
        return
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise TrialValidationError(f"non-numeric value {v!r}", trial_id, p.name)
    if not math.isfinite(float(v)):
        raise TrialValidationError("non-finite value", trial_id, p.name)
    if p.kind == "integer" and float(v) != int(v):
        raise TrialValidationError(f"non-integral value {v!r}", trial_id, p.name)
    if not (p.lower <= float(v) <= p.upper):
        raise TrialValidationError(
            f"value {v} outside bounds [{p.lower}, {p.upper}]", trial_id, p.name
        )


def validate_trial(trial: TrialRecord, space: SearchSpace) -> None:
    if not isinstance(trial.objective, (int, float)) or not math.isfinite(
        float(trial.objective)
    ):
        raise TrialValidationError("objective not finite", trial.trial_id, "objective")
    if not (0.0 <= trial.objective <= 1.0):
        raise TrialValidationError(
            f"objective {trial.objective} outside [0, 1]", trial.trial_id, "objective"
        )
    for name in trial.config:
        if name not in space.names:
            raise TrialValidationError("unknown parameter", trial.trial_id, name)
    for p in space:
        if p.name not in trial.config:
            raise TrialValidationError("missing parameter", trial.trial_id, p.name)
        v = trial.config[p.name]
        if p.arity > 1:
            if not isinstance(v, (list, tuple)):
                raise TrialValidationError(
                    "expected a list of slot values", trial.trial_id, p.name
                )
            if not (1 <= len(v) <= p.arity):
                raise TrialValidationError(
                    f"slot count {len(v)} outside [1, {p.arity}]",
                    trial.trial_id,
                    p.name,
                )
            for s in v:
                _check_scalar(p, s, trial.trial_id)
        else:
            _check_scalar(p, v, trial.trial_id)


def parse_study(stream, space: SearchSpace, negate_objective: bool = False) -> Study:
    """Read a JSON-lines trial file into a validated Study.

    Each line is an object {"trial_id", "params", "objective", "tags"?}.
    ``negate_objective`` maps y -> 1 - y for minimisation studies.
    """
    trials = []
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        if not raw.strip():
            continue
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise StudyParseError(f"invalid JSON ({exc.msg})", line=lineno)
        if not isinstance(doc, dict):
            raise StudyParseError("expected a JSON object", line=lineno)
        for key in ("trial_id", "params", "objective"):
            if key not in doc:
                raise StudyParseError(f"missing key {key!r}", line=lineno)
        obj = doc["objective"]
        if negate_objective and isinstance(obj, (int, float)):
            obj = 1.0 - obj
        trial = TrialRecord(
            trial_id=str(doc["trial_id"]),
            config=doc["params"],
            objective=obj,
            tags=doc.get("tags", {}),
        )
        validate_trial(trial, space)
        trials.append(trial)
    return Study(space, tuple(trials))


def dump_study(study: Study, fh) -> None:
    for t in study.trials:
        fh.write(
            json.dumps(
                {
                    "trial_id": t.trial_id,
                    "params": t.config,
                    "objective": t.objective,
                    "tags": t.tags,
                },
                sort_keys=True,
            )
        )
        fh.write("\n")


def coverage(success_flags) -> float:
    """Mean success rate over a non-empty list of boolean evaluation outcomes."""
    flags = list(success_flags)
    if not flags:
        raise ValueError("coverage of an empty evaluation list is undefined")
    return sum(bool(f) for f in flags) / len(flags)


def _config_key(trial: TrialRecord, space: SearchSpace) -> tuple:
    key = []
    for p in space:
        v = trial.config[p.name]
        if p.arity > 1:
            key.append(tuple(p.encode_value(s) for s in v))
        else:
            key.append(p.encode_value(v))
    return tuple(key)


def aggregate_duplicates(study: Study) -> Study:
    """Merge trials with identical configs into one trial with the mean objective.

    Output order is first-occurrence order; every output trial carries a
    ``group_size`` tag so the original trial count stays recoverable. The
    operation is idempotent (group sizes accumulate, never reset).
    """
    groups: dict[tuple, list[TrialRecord]] = {}
    order = []
    for t in study.trials:
        k = _config_key(t, study.space)
        if k not in groups:
            groups[k] = []
            order.append(k)
        groups[k].append(t)
    out = []
    for k in order:
        members = groups[k]
        sizes = [int(t.tags.get("group_size", 1)) for t in members]
        total = sum(sizes)
        obj = sum(t.objective * s for t, s in zip(members, sizes)) / total
        first = members[0]
        tags = dict(first.tags)
        tags["group_size"] = total
        out.append(replace(first, objective=obj, tags=tags))
    return Study(study.space, tuple(out))


def filter_by_objective(study: Study, threshold: float) -> Study:
    """Keep exactly the trials with objective strictly above the threshold."""
    if not (0.0 <= threshold <= 1.0):
        raise ValueError("threshold must be in [0, 1]")
    kept = tuple(t for t in study.trials if t.objective > threshold)
    return Study(study.space, kept)


def encode(study: Study) -> EncodedMatrix:
    """Encode a study as an n x p matrix in SearchSpace column order.

    Log-scale values are stored as log10, categoricals as ordinal indices.
    For arity > 1 parameters the actual slot count becomes a ``name.len``
    column and absent slots are filled with the parameter's lower bound.
    """
    if len(study) == 0:
        raise ValueError("cannot encode an empty study")
    cols = study.space.column_names()
    rows = []
    for t in study.trials:
        row = []
        for p in study.space:
            v = t.config[p.name]
            if p.arity > 1:
                vals = list(v)
                row.append(float(len(vals)))
                for i in range(p.arity):
                    raw = vals[i] if i < len(vals) else p.lower
                    row.append(p.encode_value(raw))
            else:
                row.append(p.encode_value(v))
        rows.append(row)
    X = np.array(rows, dtype=float)
    y = study.objectives()
    return EncodedMatrix(tuple(cols), X, y, tuple(t.trial_id for t in study.trials))


def decode_row(space: SearchSpace, row) -> dict:
    """Inverse of :func:`encode` for one row; absent slots are dropped via the len column."""
    row = np.asarray(row, dtype=float)
    config = {}
    i = 0
    for p in space:
        if p.arity > 1:
            length = int(round(row[i]))
            i += 1
            slots = [p.decode_value(row[i + j]) for j in range(length)]
            i += p.arity
            config[p.name] = slots
        else:
            config[p.name] = p.decode_value(row[i])
            i += 1
    return config
