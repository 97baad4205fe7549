"""Drifting binary classification streams.

Digits are rendered on a seven-segment display, features x1..x7 follow the
standard segment order a..g:

     aaa
    f   b
     ggg
    e   c
     ddd

A scenario is an ordered list of concepts (each one with a held-out test
set) plus the training stream drawn from them under a drift schedule.
"""
from bisect import bisect_right
from typing import Callable, Literal, Sequence

import numpy as np
from pydantic import Field, field_validator, model_validator

from sclbench.exceptions import InvalidArgumentError
from sclbench.models import Record

DriftKind = Literal["virtual", "real"]
SpeedKind = Literal["abrupt", "gradual", "incremental", "recurring"]
GeometryKind = Literal["real", "zoom_in", "expansionary", "mixed"]

SEGMENTS: dict[int, tuple[int, ...]] = {
    0: (1, 1, 1, 1, 1, 1, 0),
    1: (0, 1, 1, 0, 0, 0, 0),
    2: (1, 1, 0, 1, 1, 0, 1),
    3: (1, 1, 1, 1, 0, 0, 1),
    4: (0, 1, 1, 0, 0, 1, 1),
    5: (1, 0, 1, 1, 0, 1, 1),
    6: (1, 0, 1, 1, 1, 1, 1),
    7: (1, 1, 1, 0, 0, 0, 0),
    8: (1, 1, 1, 1, 1, 1, 1),
    9: (1, 1, 1, 1, 0, 1, 1),
}
ODD_DIGITS = (1, 3, 5, 7, 9)
EVEN_DIGITS = (0, 2, 4, 6, 8)


class SegmentVector(Record):
    bits: tuple[int, int, int, int, int, int, int]

    @field_validator("bits")
    @classmethod
    def check_binary(cls, bits: tuple[int, ...]) -> tuple[int, ...]:
        if any(bit not in (0, 1) for bit in bits):
            raise ValueError(f"segment bits must be 0 or 1, got {bits}")
        return bits

    def as_array(self) -> np.ndarray:
        return np.asarray(self.bits, dtype=np.float64)

    def __str__(self) -> str:
        return "".join(str(bit) for bit in self.bits)


class LabeledExample(Record):
    features: tuple[float, ...]
    label: int = Field(ge=0)
    concept: int = Field(ge=0)


class TaskSpec(Record):
    name: str
    positives: tuple[int, ...]

    @field_validator("positives")
    @classmethod
    def check_positives(cls, positives: tuple[int, ...]) -> tuple[int, ...]:
        digits = tuple(sorted(set(positives)))
        if any(digit not in SEGMENTS for digit in digits):
            raise ValueError(f"positive digits must be in 0..9, got {positives}")
        if not digits or len(digits) == len(SEGMENTS):
            raise ValueError("the positive set can be neither empty nor all ten digits")
        return digits


TASKS: dict[str, TaskSpec] = {
    task.name: task
    for task in (
        TaskSpec(name="parity", positives=ODD_DIGITS),
        TaskSpec(name="greater_than_4", positives=(5, 6, 7, 8, 9)),
        TaskSpec(name="multiple_of_3", positives=(0, 3, 6, 9)),
        TaskSpec(name="prime_or_one", positives=(1, 2, 3, 5, 7)),
        TaskSpec(name="range_2_5", positives=(2, 3, 4, 5)),
    )
}
BUILTIN_TASK_ORDER = tuple(TASKS)


class DriftSpeed(Record):
    kind: SpeedKind = "abrupt"
    width: int = Field(default=0, ge=0)
    stages: int = Field(default=0, ge=0)
    cycle: tuple[int, ...] = ()

    @model_validator(mode="after")
    def check_kind_parameters(self) -> "DriftSpeed":
        if self.kind in ("gradual", "incremental") and self.width <= 0:
            raise ValueError(f"{self.kind} drift needs a width > 0")
        if self.kind == "incremental" and self.stages <= 0:
            raise ValueError("incremental drift needs at least one stage")
        if self.kind == "recurring":
            if not self.cycle:
                raise ValueError("recurring drift needs a non-empty cycle")
            if any(index < 0 for index in self.cycle):
                raise ValueError(f"cycle entries must be concept indices, got {self.cycle}")
        return self

    @classmethod
    def abrupt(cls) -> "DriftSpeed":
        return cls()

    @classmethod
    def gradual(cls, width: int) -> "DriftSpeed":
        return cls(kind="gradual", width=width)

    @classmethod
    def incremental(cls, stages: int, width: int) -> "DriftSpeed":
        return cls(kind="incremental", stages=stages, width=width)

    @classmethod
    def recurring(cls, cycle: Sequence[int]) -> "DriftSpeed":
        return cls(kind="recurring", cycle=tuple(cycle))


class DriftSchedule(Record):
    boundaries: tuple[int, ...] = ()
    speed: DriftSpeed = DriftSpeed()

    @field_validator("boundaries")
    @classmethod
    def check_increasing(cls, boundaries: tuple[int, ...]) -> tuple[int, ...]:
        if any(b <= 0 for b in boundaries):
            raise ValueError("boundaries must be positive step indices")
        if any(a >= b for a, b in zip(boundaries, boundaries[1:])):
            raise ValueError(f"boundaries must be strictly increasing, got {boundaries}")
        return boundaries

    @property
    def n_segments(self) -> int:
        return len(self.boundaries) + 1

    def segment_of(self, step: int) -> int:
        return bisect_right(self.boundaries, step)

    def segment_concept(self, segment: int) -> int:
        if self.speed.kind == "recurring":
            return self.speed.cycle[segment % len(self.speed.cycle)]
        return segment


class Concept(Record):
    index: int = Field(ge=0)
    name: str
    test: tuple[LabeledExample, ...]
    digits: tuple[int, ...] | None = None
    task: str | None = None

    @field_validator("test")
    @classmethod
    def check_test_set(cls, test: tuple[LabeledExample, ...]) -> tuple[LabeledExample, ...]:
        if not test:
            raise ValueError("every concept needs a non-empty test set")
        return test


class Scenario(Record):
    name: str
    concepts: tuple[Concept, ...]
    stream: tuple[LabeledExample, ...]
    schedule: DriftSchedule
    drift_kinds: tuple[DriftKind, ...]
    n_features: int = Field(gt=0)
    seed: int | None = None

    @model_validator(mode="after")
    def check_consistency(self) -> "Scenario":
        n_concepts = len(self.concepts)
        if not n_concepts:
            raise ValueError("a scenario needs at least one concept")
        if [c.index for c in self.concepts] != list(range(n_concepts)):
            raise ValueError("concept indices must be 0..N-1 in order")
        if len(self.drift_kinds) != len(self.schedule.boundaries):
            raise ValueError("one drift kind tag is expected per boundary")
        if self.schedule.boundaries and self.schedule.boundaries[-1] >= len(self.stream):
            raise ValueError("every boundary must fall inside the stream")
        segment_concepts = self.segment_concepts()
        if any(index >= n_concepts for index in segment_concepts):
            raise ValueError("the schedule references an unknown concept")
        examples = list(self.stream)
        for concept in self.concepts:
            examples.extend(concept.test)
        for example in examples:
            if len(example.features) != self.n_features:
                raise ValueError(
                    f"feature dimension {len(example.features)} != {self.n_features}"
                )
            if example.concept >= n_concepts:
                raise ValueError(f"example references unknown concept {example.concept}")
        self._check_label_maps(segment_concepts)
        return self

    def _check_label_maps(self, segment_concepts: list[int]) -> None:
        """For digit scenarios the drift tags must agree with the task label maps."""
        for boundary, kind in enumerate(self.drift_kinds):
            before = self.concepts[segment_concepts[boundary]]
            after = self.concepts[segment_concepts[boundary + 1]]
            if before.task is None or after.task is None:
                continue
            flips = label_flips(TASKS[before.task], TASKS[after.task])
            if kind == "virtual" and flips:
                raise ValueError(f"virtual boundary {boundary} flips digits {flips}")
            if kind == "real" and not flips:
                raise ValueError(f"real boundary {boundary} flips no digit")

    @property
    def n_segments(self) -> int:
        return self.schedule.n_segments

    def segment_concepts(self) -> list[int]:
        return [self.schedule.segment_concept(s) for s in range(self.n_segments)]

    def segment_bounds(self) -> list[tuple[int, int]]:
        """Half-open [start, end) stream positions of every segment."""
        edges = (0, *self.schedule.boundaries, len(self.stream))
        return list(zip(edges[:-1], edges[1:]))

    def segment_test_sets(self) -> list[tuple[LabeledExample, ...]]:
        return [self.concepts[index].test for index in self.segment_concepts()]

    def stream_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return as_arrays(self.stream, self.n_features)


def as_arrays(
    examples: Sequence[LabeledExample], n_features: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    features = np.array([e.features for e in examples], dtype=np.float64).reshape(-1, n_features)
    labels = np.array([e.label for e in examples], dtype=np.int64)
    concepts = np.array([e.concept for e in examples], dtype=np.int64)
    return features, labels, concepts


def digit_segments(digit: int) -> SegmentVector:
    try:
        return SegmentVector(bits=SEGMENTS[digit])
    except (KeyError, TypeError) as error:
        raise InvalidArgumentError(f"digit must be in 0..9, got {digit!r}") from error


def sample_example(
    digit: int, noise_p: float, rng: np.random.Generator, jitter: float = 0.0
) -> np.ndarray:
    """Draw the display of `digit` with every segment flipped independently
    with probability `noise_p`, plus optional gaussian `jitter`.
    """
    if not 0.0 <= noise_p < 0.5:
        raise InvalidArgumentError(f"noise_p must be in [0, 0.5), got {noise_p}")
    bits = digit_segments(digit).as_array()
    flips = rng.random(bits.shape[0]) < noise_p
    features = np.where(flips, 1.0 - bits, bits)
    if jitter > 0.0:
        features = features + rng.normal(0.0, jitter, size=features.shape[0])
    return features


def task_label(task: TaskSpec, digit: int) -> int:
    if digit not in SEGMENTS:
        raise InvalidArgumentError(f"digit must be in 0..9, got {digit!r}")
    return int(digit in task.positives)


def label_flips(first: TaskSpec, second: TaskSpec) -> list[int]:
    """Digits whose label differs between two tasks."""
    return [d for d in SEGMENTS if task_label(first, d) != task_label(second, d)]


def next_concept_index(schedule: DriftSchedule, step: int, rng: np.random.Generator) -> int:
    if step < 0:
        raise InvalidArgumentError(f"step must be >= 0, got {step}")
    segment = schedule.segment_of(step)
    current = schedule.segment_concept(segment)
    speed = schedule.speed
    if segment == 0 or speed.kind in ("abrupt", "recurring"):
        return current
    elapsed = step - schedule.boundaries[segment - 1]
    if elapsed >= speed.width:
        return current
    if speed.kind == "gradual":
        p_new = elapsed / speed.width
    else:
        stage = elapsed * speed.stages // speed.width + 1
        p_new = stage / (speed.stages + 1)
    if rng.random() < p_new:
        return current
    return schedule.segment_concept(segment - 1)


ExampleSampler = Callable[[int, np.random.Generator], LabeledExample]


def _draw_stream(
    sampler: ExampleSampler, schedule: DriftSchedule, length: int, rng: np.random.Generator
) -> tuple[LabeledExample, ...]:
    return tuple(
        sampler(next_concept_index(schedule, step, rng), rng) for step in range(length)
    )


def _schedule_for(n_concepts: int, examples_per_concept: int, speed: DriftSpeed) -> DriftSchedule:
    n_segments = len(speed.cycle) if speed.kind == "recurring" else n_concepts
    boundaries = tuple(examples_per_concept * s for s in range(1, n_segments))
    return DriftSchedule(boundaries=boundaries, speed=speed)


def _check_counts(examples_per_concept: int, test_per_concept: int) -> None:
    if examples_per_concept <= 0 or test_per_concept <= 0:
        raise InvalidArgumentError("example counts must be > 0")


def _build_digit_scenario(
    name: str,
    concept_digits: Sequence[tuple[int, ...]],
    concept_tasks: Sequence[TaskSpec],
    seed: int,
    rng: np.random.Generator,
    examples_per_concept: int,
    test_per_concept: int,
    noise_p: float,
    speed: DriftSpeed,
    jitter: float,
) -> Scenario:
    def sampler(concept: int, rng: np.random.Generator) -> LabeledExample:
        digits = concept_digits[concept]
        digit = digits[int(rng.integers(len(digits)))]
        features = sample_example(digit, noise_p, rng, jitter)
        return LabeledExample(
            features=tuple(features.tolist()),
            label=task_label(concept_tasks[concept], digit),
            concept=concept,
        )

    schedule = _schedule_for(len(concept_digits), examples_per_concept, speed)
    stream = _draw_stream(sampler, schedule, examples_per_concept * schedule.n_segments, rng)
    concepts = tuple(
        Concept(
            index=index,
            name=f"{concept_tasks[index].name}:{''.join(map(str, digits))}",
            test=tuple(sampler(index, rng) for _ in range(test_per_concept)),
            digits=tuple(digits),
            task=concept_tasks[index].name,
        )
        for index, digits in enumerate(concept_digits)
    )
    segment_concepts = [schedule.segment_concept(s) for s in range(schedule.n_segments)]
    drift_kinds = tuple(
        "real" if label_flips(concept_tasks[a], concept_tasks[b]) else "virtual"
        for a, b in zip(segment_concepts, segment_concepts[1:])
    )
    return Scenario(
        name=name,
        concepts=concepts,
        stream=stream,
        schedule=schedule,
        drift_kinds=drift_kinds,
        n_features=len(SEGMENTS[0]),
        seed=seed,
    )


def build_virtual_scenario(
    seed: int,
    examples_per_concept: int = 2000,
    test_per_concept: int = 500,
    noise_p: float = 0.05,
    speed: DriftSpeed | None = None,
    jitter: float = 0.0,
) -> Scenario:
    """Parity task throughout, each concept shows one odd and one even digit
    never seen before (expansionary virtual drift).
    """
    _check_counts(examples_per_concept, test_per_concept)
    rng = np.random.default_rng(seed)
    odds = rng.permutation(ODD_DIGITS)
    evens = rng.permutation(EVEN_DIGITS)
    pairs = [(int(odd), int(even)) for odd, even in zip(odds, evens)]
    return _build_digit_scenario(
        "virtual",
        pairs,
        [TASKS["parity"]] * len(pairs),
        seed,
        rng,
        examples_per_concept,
        test_per_concept,
        noise_p,
        speed or DriftSpeed.abrupt(),
        jitter,
    )


def build_real_scenario(
    seed: int,
    examples_per_concept: int = 2000,
    test_per_concept: int = 500,
    noise_p: float = 0.05,
    task_order: Sequence[str | TaskSpec] | None = None,
    speed: DriftSpeed | None = None,
    jitter: float = 0.0,
) -> Scenario:
    """All ten digits in every concept, the labeling task changes at each drift."""
    _check_counts(examples_per_concept, test_per_concept)
    names = [t.name if isinstance(t, TaskSpec) else t for t in task_order or BUILTIN_TASK_ORDER]
    if len(set(names)) != len(names):
        raise InvalidArgumentError(f"duplicate task in order {names}")
    if sorted(names) != sorted(BUILTIN_TASK_ORDER):
        raise InvalidArgumentError(
            f"task order must be a permutation of {list(BUILTIN_TASK_ORDER)}, got {names}"
        )
    rng = np.random.default_rng(seed)
    tasks = [TASKS[name] for name in names]
    return _build_digit_scenario(
        "real",
        [tuple(SEGMENTS)] * len(tasks),
        tasks,
        seed,
        rng,
        examples_per_concept,
        test_per_concept,
        noise_p,
        speed or DriftSpeed.abrupt(),
        jitter,
    )


def geometry_label(x0: float, x1: float, flipped: bool = False) -> int:
    above = x1 > 0.5 + 0.3 * np.sin(np.pi * x0)
    return int(above != flipped)


def build_geometry_scenario(
    kind: GeometryKind,
    seed: int,
    examples_per_concept: int = 2000,
    test_per_concept: int = 500,
    speed: DriftSpeed | None = None,
) -> Scenario:
    """Two concepts over a two-dimensional input space showing one drift of
    the given geometric kind. The first concept covers x0 in [0, 1], densely
    on its left half when the drift is a zoom-in.
    """
    _check_counts(examples_per_concept, test_per_concept)
    if kind not in ("real", "zoom_in", "expansionary", "mixed"):
        raise InvalidArgumentError(f"unknown geometry kind {kind!r}")

    def draw_x0(concept: int, rng: np.random.Generator) -> float:
        if concept == 0:
            if kind == "zoom_in":
                dense = rng.random() < 0.9
                return float(rng.uniform(0.0, 0.5) if dense else rng.uniform(0.5, 1.0))
            return float(rng.uniform(0.0, 1.0))
        low, high = {
            "real": (0.0, 1.0),
            "zoom_in": (0.5, 1.0),
            "expansionary": (1.0, 2.0),
            "mixed": (0.5, 2.0),
        }[kind]
        return float(rng.uniform(low, high))

    def sampler(concept: int, rng: np.random.Generator) -> LabeledExample:
        x0 = draw_x0(concept, rng)
        x1 = float(rng.uniform(0.0, 1.0))
        flipped = concept == 1 and (kind == "real" or (kind == "mixed" and x0 < 1.0))
        return LabeledExample(
            features=(x0, x1), label=geometry_label(x0, x1, flipped), concept=concept
        )

    rng = np.random.default_rng(seed)
    schedule = _schedule_for(2, examples_per_concept, speed or DriftSpeed.abrupt())
    stream = _draw_stream(sampler, schedule, examples_per_concept * schedule.n_segments, rng)
    concepts = tuple(
        Concept(
            index=index,
            name=name,
            test=tuple(sampler(index, rng) for _ in range(test_per_concept)),
        )
        for index, name in enumerate(("original", kind))
    )
    tag: DriftKind = "real" if kind in ("real", "mixed") else "virtual"
    segment_concepts = [schedule.segment_concept(s) for s in range(schedule.n_segments)]
    drift_kinds = tuple(
        tag if a != b else "virtual" for a, b in zip(segment_concepts, segment_concepts[1:])
    )
    return Scenario(
        name=f"geometry_{kind}",
        concepts=concepts,
        stream=stream,
        schedule=schedule,
        drift_kinds=drift_kinds,
        n_features=2,
        seed=seed,
    )
