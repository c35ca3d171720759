import numpy as np
import pytest

from hpolens import ParamDef, SearchSpace, Study, TrialRecord


@pytest.fixture
def unit_space():
    return SearchSpace(
        (
            ParamDef("a", "continuous", 0.0, 1.0),
            ParamDef("b", "continuous", 0.0, 1.0),
        )
    )


@pytest.fixture
def mixed_space():
    return SearchSpace(
        (
            ParamDef("lr", "continuous", 1e-4, 1e-1, log_scale=True),
            ParamDef("units", "integer", 16, 256),
            ParamDef("opt", "categorical", choices=("sgd", "adam", "rmsprop")),
            ParamDef("layers", "integer", 32, 512, arity=3),
        )
    )


def make_study(space, configs, objectives, ids=None):
    trials = tuple(
        TrialRecord(
            ids[i] if ids else f"t{i}",
            configs[i],
            objectives[i],
        )
        for i in range(len(configs))
    )
    return Study(space, trials)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
