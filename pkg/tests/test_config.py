import os

import pytest
from mock import patch

from sclbench.config import (
    ExperimentConfig,
    ForestConfig,
    KnnConfig,
    NaiveBayesConfig,
    NeuralConfig,
    dump_config,
    parse_config,
)
from sclbench.exceptions import ConfigError
from sclbench.strategies import batch_size_for, build_detector, build_learner
from sclbench.utils import dict_deep_update, parse_overrides

HEADER = "scenarios:\n  - kind: virtual\nstrategies:\n  - kind: nb\n"


def write(tmp_path, text: str):
    path = tmp_path / "config.yaml"
    path.write_text(text, encoding="utf-8")
    return path


def test_defaults(minimal_config):
    config = parse_config(minimal_config)
    assert config.seeds == [0, 1, 2]
    assert config.evaluation.window == 1000
    assert config.evaluation.batch_classical == 1
    assert config.evaluation.batch_neural == 10
    assert config.evaluation.boundaries == "known"
    assert config.output_dir == "results"
    assert isinstance(config.strategies[0], NaiveBayesConfig)
    assert isinstance(config.strategies[1], KnnConfig)
    assert config.scenarios[0].label == "virtual"
    assert config.scenarios[0].noise == 0.05


def test_unknown_key_is_located(tmp_path):
    path = write(tmp_path, HEADER + "seeds: [0]\nevaluation:\n  windw: 10\n")
    with pytest.raises(ConfigError) as error:
        parse_config(path)
    assert error.value.key == "evaluation.windw"
    assert error.value.line == 7
    assert "evaluation.windw" in str(error.value)


def test_missing_seeds(tmp_path):
    with pytest.raises(ConfigError) as error:
        parse_config(write(tmp_path, HEADER))
    assert error.value.key == "seeds"


def test_strategy_field_error_is_located(tmp_path):
    text = "scenarios:\n  - kind: virtual\nstrategies:\n  - kind: knn\n    k: 0\nseeds: [0]\n"
    with pytest.raises(ConfigError) as error:
        parse_config(write(tmp_path, text))
    assert error.value.key == "strategies.0.k"
    assert error.value.line == 5


def test_unknown_strategy_kind(tmp_path):
    text = "scenarios:\n  - kind: virtual\nstrategies:\n  - kind: xgboost\nseeds: [0]\n"
    with pytest.raises(ConfigError) as error:
        parse_config(write(tmp_path, text))
    assert error.value.key.startswith("strategies.0")
    assert error.value.line == 4


@pytest.mark.parametrize(
    "text",
    [
        "- just\n- a list\n",
        "scenarios: [\n",
        HEADER + "seeds: [1, 1]\n",
        HEADER + "  - kind: nb\nseeds: [1]\n",
        "scenarios:\n  - kind: csv\nstrategies:\n  - kind: nb\nseeds: [1]\n",
        "scenarios:\n  - kind: real\n    task_order: [parity]\nstrategies:\n  - kind: nb\n"
        "seeds: [1]\n",
    ],
)
def test_invalid_documents(tmp_path, text):
    with pytest.raises(ConfigError):
        parse_config(write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "nope.yaml")


def test_dump_and_parse_again(tmp_path):
    text = (
        "scenarios:\n"
        "  - kind: real\n"
        "    speed: {kind: gradual, width: 100}\n"
        "  - kind: geometry\n"
        "    geometry: zoom_in\n"
        "strategies:\n"
        "  - kind: er\n"
        "    hidden: 32\n"
        "  - kind: forest\n"
        "    max_features: 2\n"
        "seeds: [3, 4]\n"
    )
    config = parse_config(write(tmp_path, text))
    assert isinstance(config.strategies[0], NeuralConfig)
    assert isinstance(config.strategies[1], ForestConfig)
    assert config.scenarios[1].label == "geometry_zoom_in"
    again = tmp_path / "again.yaml"
    again.write_text(dump_config(config), encoding="utf-8")
    assert parse_config(again) == config


def test_overrides(minimal_config):
    overrides = parse_overrides(["evaluation.window=50", "master_seed=9", "output_dir=out"])
    assert overrides == {"evaluation": {"window": 50}, "master_seed": 9, "output_dir": "out"}
    config = parse_config(minimal_config, overrides)
    assert config.evaluation.window == 50
    assert config.evaluation.batch_neural == 10
    assert config.master_seed == 9
    with pytest.raises(ValueError):
        parse_overrides(["window"])


def test_effective_jobs():
    config = ExperimentConfig(
        scenarios=[{"kind": "virtual"}], strategies=[{"kind": "nb"}], seeds=[0]
    )
    with patch.dict(os.environ, {"SCLBENCH_JOBS": "3"}):
        assert config.effective_jobs() == 3
        assert config.effective_jobs(2) == 2
        config.jobs = 5
        assert config.effective_jobs() == 5
    with patch.dict(os.environ, {"SCLBENCH_JOBS": "many"}):
        config.jobs = None
        assert config.effective_jobs() == 1


def test_build_from_config(rng):
    config = ExperimentConfig(
        scenarios=[{"kind": "virtual"}],
        strategies=[{"kind": "agem", "hidden": 8}, {"kind": "knn", "k": 3}],
        seeds=[0],
        evaluation={"boundaries": "detected", "detector": "adwin"},
    )
    agem, knn = (build_learner(s, 7, 2, rng) for s in config.strategies)
    assert agem.neural and agem.params.W1.shape == (8, 7)
    assert knn.k == 3
    assert batch_size_for(config.strategies[0], config.evaluation) == 10
    assert batch_size_for(config.strategies[1], config.evaluation) == 1
    assert type(build_detector(config.evaluation)).__name__ == "Adwin"
    config.evaluation.boundaries = "known"
    assert build_detector(config.evaluation) is None


def test_overrides_merge_into_nested_sections():
    overrides = parse_overrides(["evaluation.window=50", "evaluation.batch_neural=20"])
    assert overrides == {"evaluation": {"window": 50, "batch_neural": 20}}
    target = {"evaluation": {"window": 500, "boundaries": "known"}, "jobs": 1}
    assert dict_deep_update(target, overrides, {"jobs": 2}) == {
        "evaluation": {"window": 50, "boundaries": "known", "batch_neural": 20},
        "jobs": 2,
    }


def test_replay_memory_may_be_disabled(tmp_path, rng):
    config = ExperimentConfig(
        scenarios=[{"kind": "virtual"}], strategies=[{"kind": "er", "memory_size": 0}], seeds=[0]
    )
    assert build_learner(config.strategies[0], 7, 2, rng).memory.capacity == 0
    text = (
        "scenarios:\n  - kind: virtual\n"
        "strategies:\n  - kind: er\n    memory_size: -1\n"
        "seeds: [0]\n"
    )
    with pytest.raises(ConfigError) as error:
        parse_config(write(tmp_path, text))
    assert error.value.key == "strategies.0.memory_size"
