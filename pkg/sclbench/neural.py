"""One-hidden-layer ReLU network trained with SGD and momentum, plus the
rehearsal strategies built on it.

Parameters follow the `W @ x` convention: `W1` is (hidden, inputs) and `W2`
is (classes, hidden).
"""
import logging
from dataclasses import dataclass, fields
from typing import Self

import numpy as np

from sclbench.base import Learner
from sclbench.exceptions import InvalidArgumentError, NumericError

logger = logging.getLogger(__name__)


@dataclass
class MlpParams:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def __post_init__(self) -> None:
        hidden, inputs = self.W1.shape
        classes = self.W2.shape[0]
        if (
            self.b1.shape != (hidden,)
            or self.W2.shape != (classes, hidden)
            or self.b2.shape != (classes,)
        ):
            raise InvalidArgumentError(
                f"inconsistent shapes {[a.shape for a in self.arrays()]} for {inputs} inputs"
            )

    @classmethod
    def init(
        cls, n_inputs: int, n_hidden: int, n_classes: int, rng: np.random.Generator
    ) -> Self:
        """Glorot uniform weights, zero biases."""

        def glorot(fan_out: int, fan_in: int) -> np.ndarray:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-limit, limit, size=(fan_out, fan_in))

        return cls(
            glorot(n_hidden, n_inputs),
            np.zeros(n_hidden),
            glorot(n_classes, n_hidden),
            np.zeros(n_classes),
        )

    @classmethod
    def zeros_like(cls, other: "MlpParams") -> Self:
        return cls(*(np.zeros_like(a) for a in other.arrays()))

    def arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(getattr(self, f.name) for f in fields(self))

    def copy(self) -> Self:
        return type(self)(*(a.copy() for a in self.arrays()))

    def flatten(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def unflatten(self, vector: np.ndarray) -> Self:
        """Parameters shaped like `self` holding the values of `vector`."""
        vector = np.asarray(vector, dtype=np.float64)
        if vector.size != sum(a.size for a in self.arrays()):
            raise InvalidArgumentError(f"vector of size {vector.size} does not match parameters")
        parts, offset = [], 0
        for array in self.arrays():
            parts.append(vector[offset : offset + array.size].reshape(array.shape).copy())
            offset += array.size
        return type(self)(*parts)

    @property
    def n_inputs(self) -> int:
        return self.W1.shape[1]


@dataclass
class OptimizerState:
    velocity: MlpParams
    lr: float = 0.001
    momentum: float = 0.9

    @classmethod
    def for_params(cls, params: MlpParams, lr: float = 0.001, momentum: float = 0.9) -> Self:
        return cls(MlpParams.zeros_like(params), lr, momentum)


def _check_inputs(params: MlpParams, batch: np.ndarray) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != params.n_inputs or not batch.shape[0]:
        raise InvalidArgumentError(
            f"expected a non-empty batch of {params.n_inputs} inputs, got shape {batch.shape}"
        )
    return batch


def mlp_forward(params: MlpParams, batch: np.ndarray) -> np.ndarray:
    batch = _check_inputs(params, batch)
    hidden = np.maximum(batch @ params.W1.T + params.b1, 0.0)
    return hidden @ params.W2.T + params.b2


def mlp_backward(
    params: MlpParams, batch: np.ndarray, labels: np.ndarray
) -> tuple[MlpParams, float]:
    """Gradients of the mean softmax cross-entropy, and the loss itself."""
    batch = _check_inputs(params, batch)
    labels = np.asarray(labels, dtype=np.int64)
    n = batch.shape[0]
    if labels.shape != (n,):
        raise InvalidArgumentError(f"{n} examples but labels of shape {labels.shape}")
    pre = batch @ params.W1.T + params.b1
    hidden = np.maximum(pre, 0.0)
    logits = hidden @ params.W2.T + params.b2
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    loss = float(np.mean(log_norm - shifted[np.arange(n), labels]))

    d_logits = np.exp(shifted - log_norm[:, None])
    d_logits[np.arange(n), labels] -= 1.0
    d_logits /= n
    d_hidden = (d_logits @ params.W2) * (pre > 0)
    gradients = MlpParams(
        d_hidden.T @ batch,
        d_hidden.sum(axis=0),
        d_logits.T @ hidden,
        d_logits.sum(axis=0),
    )
    return gradients, loss


def sgd_momentum_step(
    params: MlpParams, state: OptimizerState, gradients: MlpParams
) -> tuple[MlpParams, OptimizerState]:
    """v <- momentum * v + g, theta <- theta - lr * v; updates in place."""
    if not all(np.all(np.isfinite(g)) for g in gradients.arrays()):
        raise NumericError("non-finite gradient")
    for theta, velocity, gradient in zip(
        params.arrays(), state.velocity.arrays(), gradients.arrays()
    ):
        velocity *= state.momentum
        velocity += gradient
        theta -= state.lr * velocity
    return params, state


def agem_project(gradient: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Remove from `gradient` its component against `reference` when the
    two disagree, so that the step does not increase the reference loss.
    """
    dot = float(gradient @ reference)
    if dot >= 0:
        return gradient
    norm = float(reference @ reference)
    if norm == 0.0:
        return gradient
    return gradient - dot / norm * reference


class ReplayMemory:
    """Fixed-capacity reservoir of past examples."""

    def __init__(self, capacity: int) -> None:
        if capacity < 0:
            raise InvalidArgumentError(f"capacity must be >= 0, got {capacity}")
        self.capacity = capacity
        self.features: list[np.ndarray] = []
        self.labels: list[int] = []
        self.seen = 0

    def __len__(self) -> int:
        return len(self.labels)

    def sample(self, size: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        if not self.labels:
            raise InvalidArgumentError("cannot sample from an empty memory")
        chosen = rng.choice(len(self.labels), size=min(size, len(self.labels)), replace=False)
        return (
            np.stack([self.features[i] for i in chosen]),
            np.array([self.labels[i] for i in chosen], dtype=np.int64),
        )


def reservoir_update(
    memory: ReplayMemory, features: np.ndarray, labels: np.ndarray, rng: np.random.Generator
) -> ReplayMemory:
    """Every example seen so far stays in memory with probability capacity / seen."""
    for x, label in zip(np.asarray(features, dtype=np.float64), labels):
        memory.seen += 1
        if len(memory) < memory.capacity:
            memory.features.append(x.copy())
            memory.labels.append(int(label))
            continue
        slot = int(rng.integers(0, memory.seen))
        if slot < memory.capacity:
            memory.features[slot] = x.copy()
            memory.labels[slot] = int(label)
    return memory


class NaiveStrategy(Learner):
    """Plain fine-tuning on the incoming minibatches."""

    neural = True

    def __init__(
        self,
        n_features: int,
        n_classes: int = 2,
        hidden: int = 512,
        lr: float = 0.001,
        momentum: float = 0.9,
        rng: np.random.Generator | None = None,
    ) -> None:
        super().__init__(n_features, n_classes)
        if hidden < 1:
            raise InvalidArgumentError(f"hidden must be >= 1, got {hidden}")
        self.rng = rng if rng is not None else np.random.default_rng()
        self.params = MlpParams.init(n_features, hidden, n_classes, self.rng)
        self.optimizer = OptimizerState.for_params(self.params, lr, momentum)
        self.last_loss: float | None = None

    def _gradients(self, X: np.ndarray, y: np.ndarray) -> MlpParams:
        gradients, self.last_loss = mlp_backward(self.params, X, y)
        return gradients

    def learn_batch(self, features, labels) -> Self:
        X, y = self._check_batch(features, labels)
        if not X.shape[0]:
            raise InvalidArgumentError("empty minibatch")
        sgd_momentum_step(self.params, self.optimizer, self._gradients(X, y))
        return self

    def learn_one(self, features, label: int) -> Self:
        return self.learn_batch([self._check_features(features)], [label])

    def predict_batch(self, features) -> np.ndarray:
        X, _ = self._check_batch(features)
        if not X.shape[0]:
            return np.empty(0, dtype=np.int64)
        return np.argmax(mlp_forward(self.params, X), axis=1)

    def predict_one(self, features) -> tuple[int, np.ndarray]:
        logits = mlp_forward(self.params, self._check_features(features)[None, :])[0]
        scores = np.exp(logits - logits.max())
        return int(np.argmax(logits)), scores / scores.sum()


class ReplayStrategy(NaiveStrategy):
    """Experience replay: each minibatch is trained together with a sample
    drawn from a reservoir memory of the stream.
    """

    def __init__(
        self,
        n_features: int,
        n_classes: int = 2,
        memory_size: int = 500,
        replay_size: int = 10,
        **kwargs,
    ) -> None:
        super().__init__(n_features, n_classes, **kwargs)
        self.memory = ReplayMemory(memory_size)
        self.replay_size = replay_size

    def _gradients(self, X: np.ndarray, y: np.ndarray) -> MlpParams:
        if len(self.memory):
            X_mem, y_mem = self.memory.sample(self.replay_size, self.rng)
            return super()._gradients(np.vstack([X, X_mem]), np.concatenate([y, y_mem]))
        return super()._gradients(X, y)

    def learn_batch(self, features, labels) -> Self:
        X, y = self._check_batch(features, labels)
        super().learn_batch(X, y)
        reservoir_update(self.memory, X, y, self.rng)
        return self


class AgemStrategy(ReplayStrategy):
    """Averaged gradient episodic memory: the minibatch gradient is projected
    whenever it conflicts with the gradient on a sample of the memory.
    """

    def __init__(self, *args, **kwargs) -> None:
        super().__init__(*args, **kwargs)
        self.projections = 0

    def _gradients(self, X: np.ndarray, y: np.ndarray) -> MlpParams:
        gradients, self.last_loss = mlp_backward(self.params, X, y)
        if not len(self.memory):
            return gradients
        X_ref, y_ref = self.memory.sample(self.replay_size, self.rng)
        reference, _ = mlp_backward(self.params, X_ref, y_ref)
        flat = gradients.flatten()
        projected = agem_project(flat, reference.flatten())
        if projected is not flat:
            self.projections += 1
        return gradients.unflatten(projected)
