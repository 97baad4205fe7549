"""Incremental decision tree with Hoeffding-bound split decisions.

Leaves keep, per candidate feature, a histogram of class weights for every
distinct value seen. Splits are binary `x[f] <= threshold` tests with the
threshold at the midpoint between two consecutive observed values.
"""
import logging
import math
from typing import Self

import numpy as np

from sclbench.base import Learner
from sclbench.exceptions import InvalidArgumentError

logger = logging.getLogger(__name__)


def hoeffding_bound(value_range: float, confidence: float, n: float) -> float:
    if value_range < 0 or not 0.0 < confidence < 1.0 or n < 1:
        raise InvalidArgumentError(
            f"need range >= 0, 0 < confidence < 1 and n >= 1, got {value_range}/{confidence}/{n}"
        )
    return math.sqrt(value_range**2 * math.log(1.0 / confidence) / (2.0 * n))


def entropy(counts: np.ndarray) -> np.ndarray:
    """Base-2 entropy of class-count rows (last axis)."""
    counts = np.asarray(counts, dtype=np.float64)
    totals = counts.sum(axis=-1, keepdims=True)
    p = np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)
    logs = np.log2(p, out=np.zeros_like(p), where=p > 0)
    return -(p * logs).sum(axis=-1)


class Leaf:
    __slots__ = ("class_counts", "observers", "features", "weight", "fallback", "depth")

    def __init__(self, n_classes: int, features: tuple[int, ...], fallback: int, depth: int):
        self.class_counts = [0.0] * n_classes
        self.observers: list[dict[float, list[float]]] = [{} for _ in features]
        self.features = features
        self.weight = 0.0
        self.fallback = fallback
        self.depth = depth

    @property
    def label(self) -> int:
        if not self.weight:
            return self.fallback
        return int(np.argmax(self.class_counts))


class Split:
    __slots__ = ("feature", "threshold", "left", "right")

    def __init__(self, feature: int, threshold: float, left, right) -> None:
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right


class SplitCandidate:
    __slots__ = ("gain", "feature", "threshold", "left_counts", "right_counts")

    def __init__(self, gain, feature=None, threshold=None, left_counts=None, right_counts=None):
        self.gain = gain
        self.feature = feature
        self.threshold = threshold
        self.left_counts = left_counts
        self.right_counts = right_counts


class HoeffdingTree(Learner):
    def __init__(
        self,
        n_features: int,
        n_classes: int = 2,
        grace_period: int = 200,
        confidence: float = 1e-7,
        tie_threshold: float = 0.05,
        max_features: int | None = None,
        rng: np.random.Generator | None = None,
    ) -> None:
        super().__init__(n_features, n_classes)
        if grace_period < 1:
            raise InvalidArgumentError(f"grace_period must be >= 1, got {grace_period}")
        if max_features is not None and not 1 <= max_features <= n_features:
            raise InvalidArgumentError(f"max_features must be in 1..{n_features}")
        hoeffding_bound(1.0, confidence, 1)
        self.grace_period = grace_period
        self.confidence = confidence
        self.tie_threshold = tie_threshold
        self.max_features = max_features
        self.rng = rng if rng is not None else np.random.default_rng()
        self.value_range = math.log2(n_classes)
        self.n_splits = 0
        self.root: Leaf | Split = self._new_leaf(fallback=0, depth=0)

    def _new_leaf(self, fallback: int, depth: int) -> Leaf:
        if self.max_features is None:
            features = tuple(range(self.n_features))
        else:
            chosen = self.rng.choice(self.n_features, size=self.max_features, replace=False)
            features = tuple(sorted(int(f) for f in chosen))
        return Leaf(self.n_classes, features, fallback, depth)

    def _route(self, x: list[float]) -> Leaf:
        node = self.root
        while isinstance(node, Split):
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node

    @property
    def n_leaves(self) -> int:
        return self.n_splits + 1

    @property
    def depth(self) -> int:
        def walk(node) -> int:
            if isinstance(node, Leaf):
                return node.depth
            return max(walk(node.left), walk(node.right))

        return walk(self.root)

    def learn_one(self, features, label: int, weight: float = 1.0) -> Self:
        x = self._check_features(features).tolist()
        label = self._check_label(label)
        if weight < 0:
            raise InvalidArgumentError(f"weight must be >= 0, got {weight}")
        if not weight:
            return self
        leaf = self._route(x)
        previous = leaf.weight
        leaf.weight += weight
        leaf.class_counts[label] += weight
        for observer, feature in zip(leaf.observers, leaf.features):
            counts = observer.get(x[feature])
            if counts is None:
                counts = observer[x[feature]] = [0.0] * self.n_classes
            counts[label] += weight
        if leaf.weight // self.grace_period > previous // self.grace_period:
            self._attempt_split(leaf)
        return self

    def _best_threshold(self, observer: dict[float, list[float]], feature: int) -> SplitCandidate:
        if len(observer) < 2:
            return SplitCandidate(-math.inf)
        values = np.array(sorted(observer))
        counts = np.array([observer[v] for v in values])
        total = counts.sum(axis=0)
        left = np.cumsum(counts, axis=0)[:-1]
        right = total - left
        w_left = left.sum(axis=1)
        w_right = right.sum(axis=1)
        impurity = (w_left * entropy(left) + w_right * entropy(right)) / total.sum()
        gains = entropy(total) - impurity
        best = int(np.argmax(gains))
        return SplitCandidate(
            float(gains[best]),
            feature,
            float((values[best] + values[best + 1]) / 2.0),
            left[best],
            right[best],
        )

    def _attempt_split(self, leaf: Leaf) -> None:
        if sum(1 for c in leaf.class_counts if c > 0) < 2:
            return
        candidates = [
            self._best_threshold(observer, feature)
            for observer, feature in zip(leaf.observers, leaf.features)
        ]
        # not splitting is always a candidate with zero gain
        candidates.append(SplitCandidate(0.0))
        candidates.sort(key=lambda c: c.gain, reverse=True)
        best, second = candidates[0], candidates[1]
        if best.feature is None or best.gain <= 0:
            return
        epsilon = hoeffding_bound(self.value_range, self.confidence, leaf.weight)
        if best.gain - second.gain > epsilon or epsilon < self.tie_threshold:
            self._split(leaf, best)

    def _split(self, leaf: Leaf, candidate: SplitCandidate) -> None:
        fallbacks = []
        for counts in (candidate.left_counts, candidate.right_counts):
            fallbacks.append(int(np.argmax(counts)) if counts.sum() else leaf.label)
        split = Split(
            candidate.feature,
            candidate.threshold,
            self._new_leaf(fallbacks[0], leaf.depth + 1),
            self._new_leaf(fallbacks[1], leaf.depth + 1),
        )
        self._replace(leaf, split)
        self.n_splits += 1
        logger.debug(
            f"Split on x{candidate.feature} <= {candidate.threshold:.4g} "
            f"(gain {candidate.gain:.4f}, {leaf.weight:g} examples)"
        )

    def _replace(self, leaf: Leaf, split: Split) -> None:
        if self.root is leaf:
            self.root = split
            return
        stack = [self.root]
        while stack:
            node = stack.pop()
            if not isinstance(node, Split):
                continue
            if node.left is leaf:
                node.left = split
                return
            if node.right is leaf:
                node.right = split
                return
            stack.extend((node.left, node.right))

    def predict_one(self, features) -> tuple[int, np.ndarray]:
        leaf = self._route(self._check_features(features).tolist())
        label = leaf.label
        if not leaf.weight:
            scores = np.zeros(self.n_classes)
            scores[label] = 1.0
            return label, scores
        counts = np.asarray(leaf.class_counts)
        return label, counts / counts.sum()
