import logging
import math
from typing import Literal, Self

import numpy as np

from sclbench.base import Learner, vote
from sclbench.detectors import Adwin
from sclbench.exceptions import InvalidArgumentError
from sclbench.tree import HoeffdingTree

logger = logging.getLogger(__name__)


class AdaptiveForest(Learner):
    """Online bagging of Hoeffding trees, each watched by its own ADWIN on
    the tree's prequential error. A tree whose detector fires while its
    error rises is replaced by a fresh one.
    """

    def __init__(
        self,
        n_features: int,
        n_classes: int = 2,
        n_trees: int = 10,
        poisson_lambda: float = 6.0,
        delta: float = 0.002,
        grace_period: int = 200,
        confidence: float = 1e-7,
        tie_threshold: float = 0.05,
        max_features: int | Literal["sqrt"] | None = None,
        rng: np.random.Generator | None = None,
    ) -> None:
        super().__init__(n_features, n_classes)
        if n_trees < 1:
            raise InvalidArgumentError(f"n_trees must be >= 1, got {n_trees}")
        if poisson_lambda < 0:
            raise InvalidArgumentError(f"poisson_lambda must be >= 0, got {poisson_lambda}")
        if max_features == "sqrt":
            max_features = max(1, round(math.sqrt(n_features)))
        self.n_trees = n_trees
        self.poisson_lambda = poisson_lambda
        self.delta = delta
        self.tree_params = dict(
            grace_period=grace_period,
            confidence=confidence,
            tie_threshold=tie_threshold,
            max_features=max_features,
        )
        self.rng = rng if rng is not None else np.random.default_rng()
        self.trees = [self._new_tree() for _ in range(n_trees)]
        self.detectors = [Adwin(delta) for _ in range(n_trees)]
        self.resets = 0

    def _new_tree(self) -> HoeffdingTree:
        return HoeffdingTree(self.n_features, self.n_classes, rng=self.rng, **self.tree_params)

    def _error_increased(self, i: int, error: float) -> bool:
        """Only a signal on a rising error estimate counts, an improving tree is kept."""
        detector = self.detectors[i]
        before = detector.total / detector.width if detector.width else 0.0
        if not detector.update(error):
            return False
        after, _ = detector.estimate()
        return after > before

    def learn_one(self, features, label: int) -> Self:
        x = self._check_features(features)
        label = self._check_label(label)
        for i, tree in enumerate(self.trees):
            predicted, _ = tree.predict_one(x)
            if self._error_increased(i, float(predicted != label)):
                logger.debug(f"Tree {i} replaced after a drift signal")
                tree = self.trees[i] = self._new_tree()
                self.detectors[i] = Adwin(self.delta)
                self.resets += 1
            weight = int(self.rng.poisson(self.poisson_lambda))
            if weight:
                tree.learn_one(x, label, weight=weight)
        return self

    def predict_one(self, features) -> tuple[int, np.ndarray]:
        x = self._check_features(features)
        votes = np.array([tree.predict_one(x)[0] for tree in self.trees])
        return vote(votes, self.n_classes)
