from typing import Self

from pydantic import BaseModel, ConfigDict


class Record(BaseModel):
    """Represent the very basis of every immutable value of the benchmark
    (examples, schedules, scenarios, traces, matrices).
    """

    model_config = ConfigDict(
        extra="forbid",
        frozen=True,
        arbitrary_types_allowed=True,
    )

    def update(self, input_data: dict) -> Self:
        """Return a validated copy of the current instance with `input_data`
        applied on top of it, the instance itself is never modified.
        """
        return self.model_validate(self.model_dump() | input_data)


class Settings(BaseModel):
    """Basis of the user-facing configuration sections: strict about unknown
    keys so that a typo never silently falls back to a default.
    """

    model_config = ConfigDict(
        extra="forbid",
        validate_assignment=True,
        populate_by_name=True,
    )
