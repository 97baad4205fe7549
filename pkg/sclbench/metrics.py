"""Chance-corrected agreement, rolling prequential windows and the
continual-learning summaries computed from a kappa/accuracy matrix.

Matrices are lower triangular: row `i` holds the scores of the checkpoint
taken at the end of segment `i` on the test sets of segments `0..i`.
"""
from collections import deque
from typing import Literal, Sequence

import numpy as np
from pydantic import ValidationError, field_validator, model_validator

from sclbench.exceptions import InvalidArgumentError, UndefinedMetricError
from sclbench.models import Record

MatrixMetric = Literal["kappa", "accuracy"]


class ConfusionMatrix:
    def __init__(self, n_classes: int = 2) -> None:
        if n_classes < 2:
            raise InvalidArgumentError(f"need at least two classes, got {n_classes}")
        self.counts = np.zeros((n_classes, n_classes), dtype=np.int64)

    @classmethod
    def from_pairs(cls, y_true, y_pred, n_classes: int = 2) -> "ConfusionMatrix":
        y_true = np.asarray(y_true, dtype=np.int64)
        y_pred = np.asarray(y_pred, dtype=np.int64)
        if y_true.shape != y_pred.shape:
            raise InvalidArgumentError(f"{y_true.size} labels but {y_pred.size} predictions")
        matrix = cls(n_classes)
        np.add.at(matrix.counts, (y_true, y_pred), 1)
        return matrix

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def add(self, y_true: int, y_pred: int, count: int = 1) -> None:
        self.counts[y_true, y_pred] += count

    def clear(self) -> None:
        self.counts[:] = 0


def kappa(confusion: ConfusionMatrix | np.ndarray) -> float:
    """Cohen's kappa. Zero when chance agreement is already perfect."""
    counts = confusion.counts if isinstance(confusion, ConfusionMatrix) else np.asarray(confusion)
    total = int(counts.sum())
    if not total:
        raise UndefinedMetricError("kappa is undefined on an empty confusion matrix")
    rows = counts.sum(axis=1).astype(object)
    cols = counts.sum(axis=0).astype(object)
    chance = int(np.dot(rows, cols))
    # integer comparison keeps the p_e == 1 test exact
    if chance == total * total:
        return 0.0
    p_o = int(np.trace(counts)) / total
    p_e = chance / (total * total)
    return float(np.clip((p_o - p_e) / (1.0 - p_e), -1.0, 1.0))


def accuracy(confusion: ConfusionMatrix | np.ndarray) -> float:
    counts = confusion.counts if isinstance(confusion, ConfusionMatrix) else np.asarray(confusion)
    total = int(counts.sum())
    if not total:
        raise UndefinedMetricError("accuracy is undefined on an empty confusion matrix")
    return int(np.trace(counts)) / total


class RollingWindow:
    """Confusion counts over the last `capacity` prequential pairs, emptied
    at every drift boundary.
    """

    def __init__(self, capacity: int = 1000, n_classes: int = 2) -> None:
        if capacity < 1:
            raise InvalidArgumentError(f"window capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.pairs: deque[tuple[int, int]] = deque()
        self.confusion = ConfusionMatrix(n_classes)
        self.step = 0
        self.last_reset = 0

    def __len__(self) -> int:
        return len(self.pairs)

    def reset(self) -> None:
        self.pairs.clear()
        self.confusion.clear()
        self.last_reset = self.step

    def update(self, y_true: int, y_pred: int, is_drift_boundary: bool = False) -> float:
        """Insert one pair and return the kappa of the window afterwards."""
        if is_drift_boundary:
            self.reset()
        if len(self.pairs) == self.capacity:
            old_true, old_pred = self.pairs.popleft()
            self.confusion.add(old_true, old_pred, -1)
        self.pairs.append((int(y_true), int(y_pred)))
        self.confusion.add(y_true, y_pred)
        self.step += 1
        return kappa(self.confusion)


class KappaMatrix(Record):
    """Lower-triangular score matrix, `values[i][j]` for j <= i."""

    values: tuple[tuple[float, ...], ...]
    metric: MatrixMetric = "kappa"

    @field_validator("values")
    @classmethod
    def check_triangular(cls, values: tuple[tuple[float, ...], ...]):
        if not values:
            raise ValueError("the matrix needs at least one row")
        for i, row in enumerate(values):
            if len(row) != i + 1:
                raise ValueError(f"row {i} must hold {i + 1} entries, got {len(row)}")
        return values

    @model_validator(mode="after")
    def check_range(self) -> "KappaMatrix":
        low = -1.0 if self.metric == "kappa" else 0.0
        for row in self.values:
            if any(not low <= value <= 1.0 for value in row):
                raise ValueError(f"{self.metric} entries must be in [{low}, 1], got {row}")
        return self

    @property
    def n(self) -> int:
        return len(self.values)

    def value(self, i: int, j: int) -> float:
        if not 0 <= j <= i < self.n:
            raise InvalidArgumentError(f"no entry ({i}, {j}) in a {self.n}x{self.n} matrix")
        return self.values[i][j]

    def row_means(self) -> list[float]:
        """Average score over the current and previous test sets after each segment."""
        return [float(np.mean(row)) for row in self.values]


def as_matrix(
    matrix: KappaMatrix | Sequence[Sequence[float]], metric: MatrixMetric = "kappa"
) -> KappaMatrix:
    if isinstance(matrix, KappaMatrix):
        return matrix
    try:
        values = tuple(tuple(float(v) for v in row) for row in matrix)
        return KappaMatrix(values=values, metric=metric)
    except ValidationError as error:
        raise InvalidArgumentError(f"not a complete lower-triangular matrix: {error}") from error


def _size(matrix: KappaMatrix, n: int | None) -> int:
    n = matrix.n if n is None else n
    if not 1 <= n <= matrix.n:
        raise InvalidArgumentError(f"the matrix only covers {matrix.n} segments, asked for {n}")
    return n


def k_avg(matrix: KappaMatrix | Sequence[Sequence[float]], n: int | None = None) -> float:
    """Mean over the lower triangle of the first `n` rows."""
    matrix = as_matrix(matrix)
    n = _size(matrix, n)
    entries = [value for row in matrix.values[:n] for value in row]
    return float(np.mean(entries))


def bwt(matrix: KappaMatrix | Sequence[Sequence[float]], n: int | None = None) -> float:
    """Backward transfer: mean change `K[i][j] - K[j][j]` over every later
    checkpoint `i` and earlier segment `j`.
    """
    matrix = as_matrix(matrix)
    n = _size(matrix, n)
    if n < 2:
        raise UndefinedMetricError("backward transfer needs at least two segments")
    values = matrix.values
    return float(np.mean([values[i][j] - values[j][j] for i in range(1, n) for j in range(i)]))


def acc_final(matrix: KappaMatrix | Sequence[Sequence[float]], n: int | None = None) -> float:
    matrix = as_matrix(matrix, metric="accuracy")
    n = _size(matrix, n)
    return float(np.mean(matrix.values[n - 1][:n]))


def anytime_accuracy(trace) -> float:
    """Mean over all steps of the running accuracy measured at that step.

    `trace` is a prequential trace or a sequence of per-step correctness flags.
    """
    correct = trace.correct() if hasattr(trace, "correct") else trace
    correct = np.asarray(correct, dtype=np.float64).reshape(-1)
    if not correct.size:
        raise UndefinedMetricError("anytime accuracy of an empty stream")
    running = np.cumsum(correct) / np.arange(1, correct.size + 1)
    return float(np.mean(running))
