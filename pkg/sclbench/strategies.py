import numpy as np

from sclbench.base import Learner
from sclbench.bayes import GaussianNaiveBayes
from sclbench.config import (
    EvaluationConfig,
    ForestConfig,
    HoeffdingTreeConfig,
    KnnConfig,
    NaiveBayesConfig,
    NeuralConfig,
    StrategyConfig,
)
from sclbench.detectors import Adwin, Ddm, DriftDetector
from sclbench.exceptions import InvalidArgumentError
from sclbench.forest import AdaptiveForest
from sclbench.knn import KnnWindow
from sclbench.neural import AgemStrategy, NaiveStrategy, ReplayStrategy
from sclbench.tree import HoeffdingTree

NEURAL_STRATEGIES: dict[str, type[NaiveStrategy]] = {
    "naive": NaiveStrategy,
    "er": ReplayStrategy,
    "agem": AgemStrategy,
}


def build_learner(
    config: StrategyConfig, n_features: int, n_classes: int, rng: np.random.Generator
) -> Learner:
    match config:
        case NeuralConfig(kind="naive"):
            return NaiveStrategy(
                n_features,
                n_classes,
                hidden=config.hidden,
                lr=config.lr,
                momentum=config.momentum,
                rng=rng,
            )
        case NeuralConfig():
            return NEURAL_STRATEGIES[config.kind](
                n_features,
                n_classes,
                memory_size=config.memory_size,
                replay_size=config.replay_size,
                hidden=config.hidden,
                lr=config.lr,
                momentum=config.momentum,
                rng=rng,
            )
        case ForestConfig():
            return AdaptiveForest(
                n_features,
                n_classes,
                n_trees=config.n_trees,
                poisson_lambda=config.poisson_lambda,
                delta=config.delta,
                grace_period=config.grace_period,
                confidence=config.confidence,
                tie_threshold=config.tie_threshold,
                max_features=config.max_features,
                rng=rng,
            )
        case HoeffdingTreeConfig():
            return HoeffdingTree(
                n_features,
                n_classes,
                grace_period=config.grace_period,
                confidence=config.confidence,
                tie_threshold=config.tie_threshold,
                rng=rng,
            )
        case NaiveBayesConfig():
            return GaussianNaiveBayes(n_features, n_classes, var_floor=config.var_floor)
        case KnnConfig():
            return KnnWindow(n_features, n_classes, k=config.k, window=config.window)
    raise InvalidArgumentError(f"unknown strategy {config!r}")


def batch_size_for(config: StrategyConfig, evaluation: EvaluationConfig) -> int:
    return evaluation.batch_neural if config.neural else evaluation.batch_classical


def build_detector(evaluation: EvaluationConfig) -> DriftDetector | None:
    if evaluation.boundaries == "known":
        return None
    return Adwin() if evaluation.detector == "adwin" else Ddm()
