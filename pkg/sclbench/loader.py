"""Precomputed feature streams stored as CSV.

Header `f0,...,f{d-1},label,concept,split`, one example per row, `split` is
either `train` or `test`. Train rows replay in file order, test rows are
grouped per concept.
"""
import logging
from collections import defaultdict
from itertools import groupby
from pathlib import Path
from typing import Callable, Literal

import pandas as pd
from pydantic import ValidationError

from sclbench.exceptions import ParseError, SchemaError
from sclbench.models import Record
from sclbench.streams import (
    Concept,
    DriftKind,
    DriftSchedule,
    DriftSpeed,
    LabeledExample,
    Scenario,
)

logger = logging.getLogger(__name__)

TRAILING_COLUMNS = ("label", "concept", "split")
SPLITS = ("train", "test")


class CsvSchema(Record):
    n_features: int | None = None
    drift_kind: Literal["virtual", "real", "inferred"] = "inferred"
    name: str | None = None


def _feature_columns(header: list[str], expected: int | None) -> int:
    if tuple(header[-3:]) != TRAILING_COLUMNS:
        raise SchemaError(f"header must end with {','.join(TRAILING_COLUMNS)}, got {header}")
    n_features = len(header) - len(TRAILING_COLUMNS)
    if n_features < 1 or header[:n_features] != [f"f{i}" for i in range(n_features)]:
        raise SchemaError(f"feature columns must be named f0..f{{d-1}}, got {header}")
    if expected is not None and n_features != expected:
        raise SchemaError(f"expected {expected} features, the file has {n_features}")
    return n_features


def _line(row: int) -> int:
    # the header is line 1
    return row + 2


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise ValueError(f"{value} < 0")
    return value


def _split(text: str) -> str:
    if text.strip() not in SPLITS:
        raise ValueError(text)
    return text.strip()


def _convert(frame: pd.DataFrame, column: str, convert: Callable[[str], object]) -> list:
    values = []
    for row, text in enumerate(frame[column]):
        try:
            values.append(convert(text))
        except ValueError as error:
            raise ParseError(f"invalid {column} `{text}`", _line(row)) from error
    return values


def _read_examples(path: Path, expected: int | None) -> tuple[list[LabeledExample], list[str]]:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, index_col=False)
    except pd.errors.EmptyDataError as error:
        raise SchemaError(f"{path} is empty") from error
    except pd.errors.ParserError as error:
        raise SchemaError(f"{path}: {error}") from error
    header = [str(column).strip() for column in frame.columns]
    n_features = _feature_columns(header, expected)
    frame.columns = header
    # short rows are padded with missing values
    incomplete = frame.isna().any(axis=1).to_numpy()
    if incomplete.any():
        row = int(incomplete.argmax())
        raise SchemaError(f"line {_line(row)}: expected {n_features} features and 3 more columns")

    features = zip(*(_convert(frame, column, float) for column in header[:n_features]))
    labels = _convert(frame, "label", _non_negative_int)
    concepts = _convert(frame, "concept", _non_negative_int)
    splits = _convert(frame, "split", _split)
    examples = [
        LabeledExample(features=x, label=label, concept=concept)
        for x, label, concept in zip(features, labels, concepts)
    ]
    return examples, splits


def _infer_drift_kind(before: list[LabeledExample], after: list[LabeledExample]) -> DriftKind:
    """Real if an input seen on both sides of the boundary changes its label."""
    labels_before: dict[tuple[float, ...], set[int]] = defaultdict(set)
    for example in before:
        labels_before[example.features].add(example.label)
    labels_after: dict[tuple[float, ...], set[int]] = defaultdict(set)
    for example in after:
        labels_after[example.features].add(example.label)
    for features, labels in labels_after.items():
        if features in labels_before and labels.isdisjoint(labels_before[features]):
            return "real"
    return "virtual"


def load_csv_scenario(path: str | Path, schema: CsvSchema | None = None) -> Scenario:
    schema = schema or CsvSchema()
    path = Path(path)
    examples, splits = _read_examples(path, schema.n_features)
    train = [example for example, split in zip(examples, splits) if split == "train"]
    tests: dict[int, list[LabeledExample]] = defaultdict(list)
    for example, split in zip(examples, splits):
        if split == "test":
            tests[example.concept].append(example)

    if not train:
        raise SchemaError(f"{path} has no train rows")
    concept_ids = {e.concept for e in train} | set(tests)
    n_concepts = max(concept_ids) + 1
    if concept_ids != set(range(n_concepts)):
        raise SchemaError(f"concept indices must be contiguous from 0, got {sorted(concept_ids)}")

    segments = [list(run) for _, run in groupby(train, key=lambda e: e.concept)]
    segment_concepts = [run[0].concept for run in segments]
    boundaries = []
    position = 0
    for run in segments[:-1]:
        position += len(run)
        boundaries.append(position)
    if segment_concepts == list(range(len(segment_concepts))):
        speed = DriftSpeed.abrupt()
    else:
        speed = DriftSpeed.recurring(segment_concepts)

    if schema.drift_kind == "inferred":
        drift_kinds = tuple(_infer_drift_kind(a, b) for a, b in zip(segments, segments[1:]))
    else:
        drift_kinds = (schema.drift_kind,) * len(boundaries)

    try:
        scenario = Scenario(
            name=schema.name or path.stem,
            concepts=tuple(
                Concept(index=index, name=f"concept_{index}", test=tuple(tests[index]))
                for index in range(n_concepts)
            ),
            stream=tuple(train),
            schedule=DriftSchedule(boundaries=tuple(boundaries), speed=speed),
            drift_kinds=drift_kinds,
            n_features=len(train[0].features),
        )
    except ValidationError as error:
        raise SchemaError(f"{path} does not describe a valid scenario: {error}") from error
    logger.info(
        f"Loaded {path}: {len(train)} train rows, {n_concepts} concepts, "
        f"{len(boundaries)} drifts."
    )
    return scenario


def dump_csv_scenario(scenario: Scenario, path: str | Path) -> Path:
    """Write `scenario` in the format read by `load_csv_scenario`."""
    columns = [f"f{i}" for i in range(scenario.n_features)] + list(TRAILING_COLUMNS)
    rows = [(*e.features, e.label, e.concept, "train") for e in scenario.stream]
    for concept in scenario.concepts:
        rows.extend((*e.features, e.label, e.concept, "test") for e in concept.test)
    path = Path(path)
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False, lineterminator="\n")
    return path
