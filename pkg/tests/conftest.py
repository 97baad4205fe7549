import numpy as np
import pytest

from sclbench.streams import build_real_scenario, build_virtual_scenario


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_virtual():
    return build_virtual_scenario(seed=7, examples_per_concept=200, test_per_concept=40)


@pytest.fixture(scope="session")
def small_real():
    return build_real_scenario(seed=7, examples_per_concept=200, test_per_concept=40)


@pytest.fixture
def hand_matrix() -> list[list[float]]:
    return [[0.9], [0.5, 0.8]]


@pytest.fixture
def minimal_config(tmp_path):
    path = tmp_path / "experiment.yaml"
    path.write_text(
        "scenarios:\n"
        "  - kind: virtual\n"
        "    examples_per_concept: 60\n"
        "    test_per_concept: 20\n"
        "strategies:\n"
        "  - kind: nb\n"
        "  - kind: knn\n"
        "seeds: [0, 1, 2]\n",
        encoding="utf-8",
    )
    return path
