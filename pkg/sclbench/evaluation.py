"""Prequential (test-then-train) evaluation and per-segment checkpoint scoring."""
import logging
from typing import Sequence

import numpy as np
from pydantic import model_validator

from sclbench.base import Learner
from sclbench.detectors import DriftDetector
from sclbench.exceptions import InvalidArgumentError
from sclbench.metrics import (
    ConfusionMatrix,
    KappaMatrix,
    MatrixMetric,
    RollingWindow,
    accuracy,
    kappa,
)
from sclbench.models import Record
from sclbench.streams import LabeledExample, Scenario, as_arrays

logger = logging.getLogger(__name__)


class PrequentialTrace(Record):
    scenario: str
    strategy: str
    steps: tuple[int, ...]
    concepts: tuple[int, ...]
    y_true: tuple[int, ...]
    y_pred: tuple[int, ...]
    kappa: tuple[float, ...]
    #: known drift steps of the scenario
    boundaries: tuple[int, ...] = ()
    #: steps at which the rolling window was emptied
    resets: tuple[int, ...] = ()

    @model_validator(mode="after")
    def check_records(self) -> "PrequentialTrace":
        columns = (self.concepts, self.y_true, self.y_pred, self.kappa)
        if any(len(column) != len(self.steps) for column in columns):
            raise ValueError("every per-step column must have one entry per step")
        if any(a >= b for a, b in zip(self.steps, self.steps[1:])):
            raise ValueError("steps must be strictly increasing")
        return self

    def __len__(self) -> int:
        return len(self.steps)

    def correct(self) -> np.ndarray:
        return np.asarray(self.y_true) == np.asarray(self.y_pred)


def prequential_run(
    scenario: Scenario,
    learner: Learner,
    batch_size: int = 1,
    window_size: int = 1000,
    detector: DriftDetector | None = None,
    strategy_name: str | None = None,
) -> tuple[PrequentialTrace, list[Learner]]:
    """Predict every example of a minibatch with the current model, then
    train once on the minibatch. A checkpoint is taken at the end of every
    segment. The rolling window is emptied at the known boundaries, or when
    `detector` signals a drift on the prequential errors.
    """
    if scenario.n_features != learner.n_features:
        raise InvalidArgumentError(
            f"scenario has {scenario.n_features} features, learner expects {learner.n_features}"
        )
    if batch_size < 1:
        raise InvalidArgumentError(f"batch_size must be >= 1, got {batch_size}")
    X, y, concepts = scenario.stream_arrays()
    boundaries = set(scenario.schedule.boundaries)
    window = RollingWindow(window_size, learner.n_classes)
    predictions = np.empty(len(y), dtype=np.int64)
    kappas = np.empty(len(y))
    resets: list[int] = []
    checkpoints: list[Learner] = []

    for start, end in scenario.segment_bounds():
        for low in range(start, end, batch_size):
            high = min(low + batch_size, end)
            predicted = learner.predict_batch(X[low:high])
            for step in range(low, high):
                label = int(predicted[step - low])
                if detector is not None:
                    reset = detector.update(float(label != y[step]))
                else:
                    reset = step in boundaries
                if reset:
                    resets.append(step)
                predictions[step] = label
                kappas[step] = window.update(int(y[step]), label, is_drift_boundary=reset)
            learner.learn_batch(X[low:high], y[low:high])
        checkpoints.append(learner.snapshot())

    trace = PrequentialTrace(
        scenario=scenario.name,
        strategy=strategy_name or type(learner).__name__,
        steps=tuple(range(len(y))),
        concepts=tuple(concepts.tolist()),
        y_true=tuple(y.tolist()),
        y_pred=tuple(predictions.tolist()),
        kappa=tuple(kappas.tolist()),
        boundaries=scenario.schedule.boundaries,
        resets=tuple(resets),
    )
    logger.debug(
        f"{trace.strategy} on {scenario.name}: {len(trace)} steps, "
        f"{len(checkpoints)} checkpoints, {len(resets)} window resets"
    )
    return trace, checkpoints


def cl_matrix(
    checkpoints: Sequence[Learner],
    test_sets: Sequence[Sequence[LabeledExample]],
    metric: MatrixMetric = "kappa",
) -> KappaMatrix:
    """Score checkpoint `i` on the test sets `0..i`."""
    if len(checkpoints) != len(test_sets):
        raise InvalidArgumentError(
            f"{len(checkpoints)} checkpoints but {len(test_sets)} test sets"
        )
    if not checkpoints:
        raise InvalidArgumentError("at least one checkpoint is needed")
    score = kappa if metric == "kappa" else accuracy
    n_features = checkpoints[0].n_features
    n_classes = checkpoints[0].n_classes
    arrays = [as_arrays(test, n_features)[:2] for test in test_sets]
    rows = []
    for i, checkpoint in enumerate(checkpoints):
        row = []
        for X, y in arrays[: i + 1]:
            predicted = checkpoint.predict_batch(X)
            row.append(score(ConfusionMatrix.from_pairs(y, predicted, n_classes)))
        rows.append(tuple(row))
    return KappaMatrix(values=tuple(rows), metric=metric)
