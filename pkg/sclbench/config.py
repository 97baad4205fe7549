"""Experiment configuration files (YAML).

Minimal example::

    scenarios:
      - kind: virtual
    strategies:
      - kind: naive
      - kind: er
    seeds: [0, 1, 2]
"""
import logging
import os
from pathlib import Path
from typing import Annotated, Any, Literal, Union

import yaml
from pydantic import Field, ValidationError, model_validator

from sclbench.exceptions import ConfigError
from sclbench.models import Settings
from sclbench.streams import BUILTIN_TASK_ORDER, DriftSpeed, GeometryKind
from sclbench.utils import dict_deep_update

logger = logging.getLogger(__name__)

JOBS_ENV = "SCLBENCH_JOBS"


class SpeedConfig(Settings):
    kind: Literal["abrupt", "gradual", "incremental", "recurring"] = "abrupt"
    width: int = Field(default=0, ge=0)
    stages: int = Field(default=0, ge=0)
    cycle: list[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_speed(self) -> "SpeedConfig":
        try:
            self.to_speed()
        except ValidationError as error:
            raise ValueError(error.errors()[0]["msg"]) from error
        return self

    def to_speed(self) -> DriftSpeed:
        return DriftSpeed(kind=self.kind, width=self.width, stages=self.stages, cycle=self.cycle)


class ScenarioConfig(Settings):
    kind: Literal["virtual", "real", "geometry", "csv"]
    name: str | None = None
    examples_per_concept: int = Field(default=2000, gt=0)
    test_per_concept: int = Field(default=500, gt=0)
    noise: float = Field(default=0.05, ge=0.0, lt=0.5)
    jitter: float = Field(default=0.0, ge=0.0)
    task_order: list[str] | None = None
    geometry: GeometryKind = "expansionary"
    path: str | None = None
    speed: SpeedConfig = Field(default_factory=SpeedConfig)

    @model_validator(mode="after")
    def check_kind_options(self) -> "ScenarioConfig":
        if self.kind == "csv" and not self.path:
            raise ValueError("a csv scenario needs a `path`")
        if self.task_order is not None and sorted(self.task_order) != sorted(BUILTIN_TASK_ORDER):
            raise ValueError(f"task_order must be a permutation of {list(BUILTIN_TASK_ORDER)}")
        return self

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind == "geometry":
            return f"geometry_{self.geometry}"
        if self.kind == "csv":
            return Path(self.path).stem
        return self.kind


class StrategyConfig(Settings):
    name: str | None = None

    @property
    def label(self) -> str:
        return self.name or self.kind

    @property
    def neural(self) -> bool:
        return False


class NeuralConfig(StrategyConfig):
    kind: Literal["naive", "er", "agem"]
    hidden: int = Field(default=512, gt=0)
    lr: float = Field(default=0.001, gt=0.0)
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    memory_size: int = Field(default=500, ge=0)
    replay_size: int = Field(default=10, gt=0)

    @property
    def neural(self) -> bool:
        return True


class TreeOptions(StrategyConfig):
    grace_period: int = Field(default=200, gt=0)
    confidence: float = Field(default=1e-7, gt=0.0, lt=1.0)
    tie_threshold: float = Field(default=0.05, ge=0.0)


class HoeffdingTreeConfig(TreeOptions):
    kind: Literal["hoeffding_tree"]


class ForestConfig(TreeOptions):
    kind: Literal["forest"]
    n_trees: int = Field(default=10, gt=0)
    poisson_lambda: float = Field(default=6.0, ge=0.0)
    delta: float = Field(default=0.002, gt=0.0, lt=1.0)
    max_features: int | Literal["sqrt"] | None = None


class NaiveBayesConfig(StrategyConfig):
    kind: Literal["nb"]
    var_floor: float = Field(default=1e-6, gt=0.0)


class KnnConfig(StrategyConfig):
    kind: Literal["knn"]
    k: int = Field(default=5, gt=0)
    window: int = Field(default=500, gt=0)


AnyStrategy = Annotated[
    Union[NeuralConfig, HoeffdingTreeConfig, ForestConfig, NaiveBayesConfig, KnnConfig],
    Field(discriminator="kind"),
]


class EvaluationConfig(Settings):
    window: int = Field(default=1000, ge=1)
    batch_classical: int = Field(default=1, ge=1)
    batch_neural: int = Field(default=10, ge=1)
    boundaries: Literal["known", "detected"] = "known"
    detector: Literal["ddm", "adwin"] = "ddm"


class ExperimentConfig(Settings):
    scenarios: list[ScenarioConfig] = Field(min_length=1)
    strategies: list[AnyStrategy] = Field(min_length=1)
    seeds: list[int] = Field(min_length=1)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)
    output_dir: str = "results"
    master_seed: int = 0
    jobs: int | None = Field(default=None, ge=1)

    @model_validator(mode="after")
    def check_unique_labels(self) -> "ExperimentConfig":
        for what, labels in (
            ("strategy", [s.label for s in self.strategies]),
            ("scenario", [s.label for s in self.scenarios]),
        ):
            duplicates = sorted({label for label in labels if labels.count(label) > 1})
            if duplicates:
                raise ValueError(f"duplicate {what} names {duplicates}, set distinct `name`s")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        return self

    def effective_jobs(self, jobs: int | None = None) -> int:
        if jobs is not None:
            return jobs
        if self.jobs is not None:
            return self.jobs
        try:
            return max(1, int(os.environ.get(JOBS_ENV, "1")))
        except ValueError:
            logger.warning(f"Ignoring {JOBS_ENV}={os.environ[JOBS_ENV]!r}, not an integer")
            return 1


def _locate(text: str, loc: tuple[Any, ...]) -> tuple[str, int | None]:
    """Dotted key path and YAML line for a pydantic error location.

    Location parts that do not exist in the document (union tags, missing
    keys) are skipped except for the last one.
    """
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        node = None
    line = node.start_mark.line + 1 if node is not None else None
    parts: list[str] = []
    for position, part in enumerate(loc):
        last = position == len(loc) - 1
        if isinstance(node, yaml.MappingNode) and isinstance(part, str):
            match = next((pair for pair in node.value if pair[0].value == part), None)
            if match is None:
                if last:
                    parts.append(part)
                continue
            parts.append(part)
            line = match[0].start_mark.line + 1
            node = match[1]
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int):
            parts.append(str(part))
            if part < len(node.value):
                node = node.value[part]
                line = node.start_mark.line + 1
        elif last or not isinstance(part, str) or node is None:
            parts.append(str(part))
    return ".".join(parts), line


def parse_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as error:
        raise ConfigError(f"cannot read {path}: {error}") from error
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as error:
        mark = getattr(error, "problem_mark", None)
        raise ConfigError(
            f"invalid YAML: {error}", line=mark.line + 1 if mark is not None else None
        ) from error
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("the configuration must be a mapping", line=1)
    if overrides:
        dict_deep_update(raw, overrides)
    try:
        config = ExperimentConfig.model_validate(raw)
    except ValidationError as error:
        first = error.errors()[0]
        key, line = _locate(text, tuple(first["loc"]))
        raise ConfigError(first["msg"], key=key or None, line=line) from error
    logger.info(
        f"Loaded {path}: {len(config.scenarios)} scenarios, {len(config.strategies)} strategies, "
        f"{len(config.seeds)} seeds"
    )
    return config


def dump_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False)
