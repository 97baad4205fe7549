class SclBenchError(Exception):
    pass


class InvalidArgumentError(SclBenchError, ValueError):
    pass


class ParseError(SclBenchError):
    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(SclBenchError):
    pass


class UndefinedMetricError(SclBenchError):
    pass


class EmptyWindowError(SclBenchError):
    pass


class NumericError(SclBenchError, ArithmeticError):
    pass


class ConfigError(SclBenchError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None) -> None:
        self.key = key
        self.line = line
        location = []
        if key:
            location.append(f"key `{key}`")
        if line is not None:
            location.append(f"line {line}")
        if location:
            message = f"{', '.join(location)}: {message}"
        super().__init__(message)


class AggregationError(SclBenchError):
    pass
