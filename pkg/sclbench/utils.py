from typing import Any, MutableMapping

import yaml


def dict_deep_update(target: MutableMapping, *sources: MutableMapping) -> MutableMapping:
    """Merge `sources` into `target` in place, nested mappings are merged key
    by key and any other value from a later source wins.
    """
    for source in sources:
        for key, value in source.items():
            current = target.get(key)
            if isinstance(current, MutableMapping) and isinstance(value, MutableMapping):
                dict_deep_update(current, value)
            else:
                target[key] = value
    return target


def nest(keys: list[str], value: Any) -> dict:
    """`nest(["a", "b"], 1) == {"a": {"b": 1}}`"""
    for key in reversed(keys):
        value = {key: value}
    return value


def parse_overrides(assignments: list[str]) -> dict:
    """Convert `["evaluation.window=500", "jobs=4"]` into one nested dict,
    values are read as YAML scalars so numbers and booleans keep their type.
    """
    overrides: dict = {}
    for assignment in assignments:
        key, sep, raw_value = assignment.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"override `{assignment}` is not of the form key=value")
        value = yaml.safe_load(raw_value) if raw_value else None
        dict_deep_update(overrides, nest(key.strip().split("."), value))
    return overrides
