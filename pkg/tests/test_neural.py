import numpy as np
import pytest

from sclbench.exceptions import InvalidArgumentError, NumericError
from sclbench.neural import (
    AgemStrategy,
    MlpParams,
    NaiveStrategy,
    OptimizerState,
    ReplayMemory,
    ReplayStrategy,
    agem_project,
    mlp_backward,
    mlp_forward,
    reservoir_update,
    sgd_momentum_step,
)


def identity_net() -> MlpParams:
    return MlpParams(
        W1=np.array([[1.0]]),
        b1=np.array([0.0]),
        W2=np.array([[1.0], [0.0]]),
        b2=np.array([0.0, 0.0]),
    )


def test_forward_small_net():
    assert mlp_forward(identity_net(), np.array([[2.0]])).tolist() == [[2.0, 0.0]]
    assert mlp_forward(identity_net(), np.array([[-2.0]])).tolist() == [[0.0, 0.0]]


def test_forward_rejects_bad_batches():
    with pytest.raises(InvalidArgumentError):
        mlp_forward(identity_net(), np.empty((0, 1)))
    with pytest.raises(InvalidArgumentError):
        mlp_forward(identity_net(), np.ones((3, 2)))


def test_params_shapes_are_checked():
    with pytest.raises(InvalidArgumentError):
        MlpParams(np.ones((4, 3)), np.zeros(5), np.ones((2, 4)), np.zeros(2))


def test_flatten_unflatten(rng):
    params = MlpParams.init(3, 4, 2, rng)
    again = params.unflatten(params.flatten())
    assert all(np.array_equal(a, b) for a, b in zip(params.arrays(), again.arrays()))
    with pytest.raises(InvalidArgumentError):
        params.unflatten(np.zeros(3))


def test_gradient_matches_finite_differences():
    step = 1e-5
    for seed in range(10):
        rng = np.random.default_rng(seed)
        params = MlpParams.init(4, 6, 3, rng)
        params.b1 += rng.normal(0.0, 0.1, size=6)
        batch = rng.normal(size=(5, 4))
        labels = rng.integers(0, 3, size=5)
        gradients, _ = mlp_backward(params, batch, labels)
        analytic = gradients.flatten()
        flat = params.flatten()
        numeric = np.empty_like(flat)
        for i in range(flat.size):
            up, down = flat.copy(), flat.copy()
            up[i] += step
            down[i] -= step
            numeric[i] = (
                mlp_backward(params.unflatten(up), batch, labels)[1]
                - mlp_backward(params.unflatten(down), batch, labels)[1]
            ) / (2 * step)
        relative = np.abs(analytic - numeric) / np.maximum(
            np.abs(analytic) + np.abs(numeric), 1e-4
        )
        assert relative.max() <= 1e-4


def test_loss_of_uniform_logits():
    params = MlpParams(np.zeros((2, 3)), np.zeros(2), np.zeros((2, 2)), np.zeros(2))
    _, loss = mlp_backward(params, np.ones((4, 3)), np.array([0, 1, 0, 1]))
    assert loss == pytest.approx(np.log(2.0))


def test_sgd_momentum_step():
    params = identity_net()
    state = OptimizerState.for_params(params, lr=0.1, momentum=0.5)
    gradients = MlpParams(np.array([[1.0]]), np.array([0.0]), np.zeros((2, 1)), np.zeros(2))
    sgd_momentum_step(params, state, gradients)
    assert params.W1[0, 0] == pytest.approx(0.9)
    sgd_momentum_step(params, state, gradients)
    assert state.velocity.W1[0, 0] == pytest.approx(1.5)
    assert params.W1[0, 0] == pytest.approx(0.75)


def test_sgd_rejects_non_finite_gradient():
    params = identity_net()
    gradients = MlpParams(np.array([[np.nan]]), np.zeros(1), np.zeros((2, 1)), np.zeros(2))
    with pytest.raises(NumericError):
        sgd_momentum_step(params, OptimizerState.for_params(params), gradients)


def test_agem_project():
    projected = agem_project(np.array([1.0, -1.0]), np.array([0.0, 1.0]))
    assert projected.tolist() == [1.0, 0.0]
    gradient = np.array([1.0, 2.0])
    assert agem_project(gradient, np.array([1.0, 0.0])) is gradient
    assert agem_project(gradient, np.zeros(2)) is gradient


def test_agem_projection_never_opposes_reference(rng):
    for _ in range(100):
        g, ref = rng.normal(size=5), rng.normal(size=5)
        assert agem_project(g, ref) @ ref >= -1e-12


def test_reservoir_is_bounded(rng):
    memory = ReplayMemory(50)
    for start in range(0, 1000, 10):
        reservoir_update(memory, np.arange(start, start + 10)[:, None], np.zeros(10), rng)
        assert len(memory) <= 50
        assert memory.seen >= len(memory)
    assert memory.seen == 1000


def test_reservoir_inclusion_frequency():
    counts = np.zeros(100)
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        memory = ReplayMemory(10)
        reservoir_update(memory, np.arange(100.0)[:, None], np.zeros(100), rng)
        for x in memory.features:
            counts[int(x[0])] += 1
    # every item stays with probability 10 / 100
    assert counts / 1000 == pytest.approx(np.full(100, 0.1), abs=0.04)


def test_memory_sample(rng):
    memory = ReplayMemory(5)
    with pytest.raises(InvalidArgumentError):
        memory.sample(3, rng)
    reservoir_update(memory, np.eye(3), np.array([0, 1, 0]), rng)
    X, y = memory.sample(10, rng)
    assert X.shape == (3, 3)
    assert sorted(y.tolist()) == [0, 0, 1]


@pytest.mark.parametrize("strategy", [ReplayStrategy, AgemStrategy])
def test_rehearsal_matches_naive_on_first_batch(strategy):
    naive = NaiveStrategy(3, hidden=8, rng=np.random.default_rng(5))
    other = strategy(3, hidden=8, rng=np.random.default_rng(5))
    X = np.random.default_rng(0).normal(size=(10, 3))
    y = np.arange(10) % 2
    naive.learn_batch(X, y)
    other.learn_batch(X, y)
    assert np.array_equal(naive.params.W1, other.params.W1)
    assert len(other.memory) == 10


def test_naive_strategy_fits_a_separable_problem(rng):
    learner = NaiveStrategy(2, hidden=16, lr=0.05, rng=rng)
    X = rng.normal(size=(400, 2))
    y = (X[:, 0] > 0).astype(int)
    for _ in range(20):
        for start in range(0, 400, 10):
            learner.learn_batch(X[start : start + 10], y[start : start + 10])
    assert np.mean(learner.predict_batch(X) == y) > 0.95


def test_snapshot_keeps_parameters(rng):
    learner = ReplayStrategy(2, hidden=4, rng=rng)
    checkpoint = learner.snapshot()
    learner.learn_batch(rng.normal(size=(10, 2)), np.ones(10, dtype=int))
    assert not np.array_equal(checkpoint.params.W2, learner.params.W2)


def test_zero_capacity_memory_stays_empty(rng):
    memory = ReplayMemory(0)
    for _ in range(5):
        reservoir_update(memory, rng.normal(size=(10, 2)), np.ones(10), rng)
    assert len(memory) == 0
    assert memory.seen == 50
    with pytest.raises(InvalidArgumentError):
        ReplayMemory(-1)


def test_replay_without_memory_is_fine_tuning():
    naive = NaiveStrategy(3, hidden=8, rng=np.random.default_rng(5))
    replay = ReplayStrategy(3, hidden=8, memory_size=0, rng=np.random.default_rng(5))
    data = np.random.default_rng(1)
    for _ in range(5):
        X, y = data.normal(size=(10, 3)), data.integers(0, 2, size=10)
        naive.learn_batch(X, y)
        replay.learn_batch(X, y)
    assert len(replay.memory) == 0
    for name in ("W1", "b1", "W2", "b2"):
        assert np.array_equal(getattr(naive.params, name), getattr(replay.params, name))


@pytest.mark.parametrize("strategy", [NaiveStrategy, ReplayStrategy, AgemStrategy])
def test_empty_minibatch_is_rejected(strategy):
    learner = strategy(3, hidden=4, rng=np.random.default_rng(0))
    with pytest.raises(InvalidArgumentError):
        learner.learn_batch(np.empty((0, 3)), np.empty(0, dtype=int))


@pytest.mark.parametrize("strategy", [ReplayStrategy, AgemStrategy])
def test_memory_fills_to_capacity(strategy, rng):
    learner = strategy(2, hidden=4, memory_size=500, rng=rng)
    for _ in range(200):
        learner.learn_batch(rng.normal(size=(10, 2)), rng.integers(0, 2, size=10))
    assert len(learner.memory) == 500
    assert learner.memory.seen == 2000
