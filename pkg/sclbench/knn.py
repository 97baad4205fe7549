from collections import deque
from typing import Self

import numpy as np

from sclbench.base import Learner, vote
from sclbench.exceptions import InvalidArgumentError


class KnnWindow(Learner):
    """k nearest neighbors over a FIFO window of the last `window` examples."""

    def __init__(self, n_features: int, n_classes: int = 2, k: int = 5, window: int = 500) -> None:
        super().__init__(n_features, n_classes)
        if k < 1 or window < 1:
            raise InvalidArgumentError(f"k and window must be >= 1, got {k}/{window}")
        self.k = k
        self.window: deque[tuple[np.ndarray, int]] = deque(maxlen=window)

    def learn_one(self, features, label: int) -> Self:
        self.window.append((self._check_features(features), self._check_label(label)))
        return self

    def predict_one(self, features) -> tuple[int, np.ndarray]:
        x = self._check_features(features)
        if not self.window:
            return vote(np.empty(0), self.n_classes)
        stored = np.stack([item[0] for item in self.window])
        labels = np.array([item[1] for item in self.window])
        distances = np.linalg.norm(stored - x, axis=1)
        # stable sort: equally distant neighbors are taken oldest first
        nearest = np.argsort(distances, kind="stable")[: self.k]
        return vote(labels[nearest], self.n_classes)
