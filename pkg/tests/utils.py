import math
from typing import Self, Sequence

import numpy as np

from sclbench.base import Learner
from sclbench.streams import Concept, DriftSchedule, LabeledExample, Scenario


def make_scenario(
    segments: Sequence[Sequence[tuple[tuple[float, ...], int]]],
    tests: Sequence[Sequence[tuple[tuple[float, ...], int]]] | None = None,
    name: str = "handmade",
) -> Scenario:
    """Scenario with one concept per segment, built from (features, label) pairs."""
    stream, boundaries = [], []
    for concept, segment in enumerate(segments):
        if concept:
            boundaries.append(len(stream))
        stream.extend(
            LabeledExample(features=tuple(x), label=y, concept=concept) for x, y in segment
        )
    tests = tests or segments
    concepts = tuple(
        Concept(
            index=index,
            name=f"c{index}",
            test=tuple(
                LabeledExample(features=tuple(x), label=y, concept=index) for x, y in test
            ),
        )
        for index, test in enumerate(tests)
    )
    return Scenario(
        name=name,
        concepts=concepts,
        stream=tuple(stream),
        schedule=DriftSchedule(boundaries=tuple(boundaries)),
        drift_kinds=("virtual",) * len(boundaries),
        n_features=len(stream[0].features),
    )


def counting_scenario(lengths: Sequence[int]) -> Scenario:
    """Every example carries its stream position as its only feature."""
    segments, step = [], 0
    for length in lengths:
        segments.append([((float(step + i),), (step + i) % 2) for i in range(length)])
        step += length
    return make_scenario(segments)


class SpyLearner(Learner):
    """Records every call, predicts class 0."""

    def __init__(self, n_features: int = 1, n_classes: int = 2) -> None:
        super().__init__(n_features, n_classes)
        self.calls: list[tuple[str, tuple[float, ...]]] = []

    def learn_one(self, features, label: int) -> Self:
        self.calls.append(("learn", tuple(self._check_features(features).tolist())))
        return self

    def predict_one(self, features) -> tuple[int, np.ndarray]:
        self.calls.append(("predict", tuple(self._check_features(features).tolist())))
        return 0, np.array([1.0, 0.0])


class MemorizerLearner(Learner):
    """Predicts the last label seen for an identical input, class 0 otherwise."""

    def __init__(self, n_features: int = 1, n_classes: int = 2) -> None:
        super().__init__(n_features, n_classes)
        self.memory: dict[tuple[float, ...], int] = {}

    def learn_one(self, features, label: int) -> Self:
        self.memory[tuple(self._check_features(features).tolist())] = int(label)
        return self

    def predict_one(self, features) -> tuple[int, np.ndarray]:
        label = self.memory.get(tuple(self._check_features(features).tolist()), 0)
        scores = np.zeros(self.n_classes)
        scores[label] = 1.0
        return label, scores


class OracleLearner(MemorizerLearner):
    """Knows every label of a scenario in advance."""

    def __init__(self, scenario: Scenario) -> None:
        super().__init__(scenario.n_features)
        for example in scenario.stream:
            self.memory[example.features] = example.label
        for concept in scenario.concepts:
            for example in concept.test:
                self.memory[example.features] = example.label

    def learn_one(self, features, label: int) -> Self:
        return self


class ConstantLearner(MemorizerLearner):
    def __init__(self, label: int, n_features: int = 1) -> None:
        super().__init__(n_features)
        self.label = label

    def learn_one(self, features, label: int) -> Self:
        return self

    def predict_one(self, features) -> tuple[int, np.ndarray]:
        self._check_features(features)
        scores = np.zeros(self.n_classes)
        scores[self.label] = 1.0
        return self.label, scores


def brute_force_adwin_first_detection(
    values: Sequence[float], delta: float = 0.002, min_side: int = 5
) -> int | None:
    """First step at which some split of the whole history is significant,
    checking every cut instead of bucket boundaries only.
    """
    values = np.asarray(values, dtype=np.float64)
    for t in range(2 * min_side - 1, values.size):
        window = values[: t + 1]
        n = window.size
        mean = window.mean()
        variance = max(float(np.mean(window**2)) - mean * mean, 0.0)
        log_term = math.log(2.0 * n / delta)
        # n1 newest items against n0 older ones
        newest = np.cumsum(window[::-1])
        for n1 in range(min_side, n - min_side + 1):
            n0 = n - n1
            s1 = newest[n1 - 1]
            m = 1.0 / (1.0 / n0 + 1.0 / n1)
            bound = math.sqrt(2.0 / m * variance * log_term) + 2.0 / (3.0 * m) * log_term
            if abs((window.sum() - s1) / n0 - s1 / n1) > bound:
                return t
    return None
