import copy
from abc import ABC, abstractmethod
from typing import Self

import numpy as np

from sclbench.exceptions import InvalidArgumentError
from sclbench.streams import LabeledExample


def vote(labels: np.ndarray, n_classes: int) -> tuple[int, np.ndarray]:
    """Majority vote, ties go to the lowest class index. An empty vote is a
    vote for class 0.
    """
    counts = np.bincount(np.asarray(labels, dtype=np.int64), minlength=n_classes)
    if not counts.sum():
        return 0, np.full(n_classes, 1.0 / n_classes)
    return int(np.argmax(counts)), counts / counts.sum()


class Learner(ABC):
    """A single-pass classifier that can be queried at any time.

    `predict_*` never mutates the learner, `snapshot` returns an independent
    checkpoint whose predictions are unaffected by further learning.
    """

    #: neural strategies are trained on minibatches, classical ones on single examples
    neural: bool = False

    def __init__(self, n_features: int, n_classes: int = 2) -> None:
        if n_features < 1 or n_classes < 2:
            raise InvalidArgumentError(
                f"need at least one feature and two classes, got {n_features}/{n_classes}"
            )
        self.n_features = n_features
        self.n_classes = n_classes

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__}: {self.n_features} features, {self.n_classes} classes>"

    def _check_features(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] != self.n_features:
            raise InvalidArgumentError(
                f"expected a vector of {self.n_features} features, got shape {x.shape}"
            )
        return x

    def _check_batch(self, features, labels=None) -> tuple[np.ndarray, np.ndarray | None]:
        X = np.asarray(features, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise InvalidArgumentError(
                f"expected a batch of {self.n_features} features, got shape {X.shape}"
            )
        if labels is None:
            return X, None
        y = np.asarray(labels, dtype=np.int64).reshape(-1)
        if y.shape[0] != X.shape[0]:
            raise InvalidArgumentError(f"{X.shape[0]} examples but {y.shape[0]} labels")
        if y.size and (y.min() < 0 or y.max() >= self.n_classes):
            raise InvalidArgumentError(f"labels must be in 0..{self.n_classes - 1}")
        return X, y

    def _check_label(self, label) -> int:
        label = int(label)
        if not 0 <= label < self.n_classes:
            raise InvalidArgumentError(f"label must be in 0..{self.n_classes - 1}, got {label}")
        return label

    @abstractmethod
    def learn_one(self, features, label: int) -> Self:
        ...

    def learn_example(self, example: LabeledExample) -> Self:
        return self.learn_one(example.features, example.label)

    def learn_batch(self, features, labels) -> Self:
        X, y = self._check_batch(features, labels)
        for x, label in zip(X, y):
            self.learn_one(x, label)
        return self

    @abstractmethod
    def predict_one(self, features) -> tuple[int, np.ndarray]:
        """Return the predicted class and the per-class scores."""

    def predict_batch(self, features) -> np.ndarray:
        X, _ = self._check_batch(features)
        return np.array([self.predict_one(x)[0] for x in X], dtype=np.int64)

    def snapshot(self) -> Self:
        return copy.deepcopy(self)
