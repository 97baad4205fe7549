from typing import Self

import numpy as np

from sclbench.base import Learner

VARIANCE_FLOOR = 1e-6


class GaussianNaiveBayes(Learner):
    """Gaussian naive Bayes with per-class running means and variances
    (Welford updates, population variance).
    """

    def __init__(
        self, n_features: int, n_classes: int = 2, var_floor: float = VARIANCE_FLOOR
    ) -> None:
        super().__init__(n_features, n_classes)
        self.var_floor = var_floor
        self.counts = np.zeros(n_classes, dtype=np.int64)
        self.means = np.zeros((n_classes, n_features))
        self._m2 = np.zeros((n_classes, n_features))

    @property
    def variances(self) -> np.ndarray:
        counts = self.counts[:, None].astype(np.float64)
        return np.divide(self._m2, counts, out=np.zeros_like(self._m2), where=counts > 0)

    def learn_one(self, features, label: int) -> Self:
        x = self._check_features(features)
        label = self._check_label(label)
        self.counts[label] += 1
        delta = x - self.means[label]
        self.means[label] += delta / self.counts[label]
        self._m2[label] += delta * (x - self.means[label])
        return self

    def joint_log_likelihood(self, features) -> np.ndarray:
        x = self._check_features(features)
        seen = self.counts > 0
        scores = np.full(self.n_classes, -np.inf)
        variances = np.maximum(self.variances[seen], self.var_floor)
        log_prior = np.log(self.counts[seen] / self.counts.sum())
        log_likelihood = -0.5 * np.sum(
            np.log(2.0 * np.pi * variances) + (x - self.means[seen]) ** 2 / variances, axis=1
        )
        scores[seen] = log_prior + log_likelihood
        return scores

    def predict_one(self, features) -> tuple[int, np.ndarray]:
        if not self.counts.sum():
            self._check_features(features)
            return 0, np.full(self.n_classes, 1.0 / self.n_classes)
        scores = self.joint_log_likelihood(features)
        label = int(np.argmax(scores))
        probabilities = np.exp(scores - scores[label])
        return label, probabilities / probabilities.sum()
