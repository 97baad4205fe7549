"""Drift detectors fed with a stream of per-example errors."""
import logging
import math
from abc import ABC, abstractmethod
from collections import deque
from typing import Literal, NamedTuple

from sclbench.exceptions import EmptyWindowError, InvalidArgumentError

logger = logging.getLogger(__name__)

DdmLevel = Literal["normal", "warning", "drift"]


class DriftDetector(ABC):
    @abstractmethod
    def update(self, value: float) -> bool:
        """Feed one observation, return True when a drift is signalled."""

    @abstractmethod
    def reset(self) -> None:
        ...


class Bucket(NamedTuple):
    total: float
    squares: float
    count: int


class Adwin(DriftDetector):
    """Adaptive window over values in [0, 1].

    The window is stored as an exponential histogram: row `i` holds buckets
    of 2**i observations, at most `max_buckets` per row, newest first. Row
    `i + 1` only ever holds observations older than those of row `i`.
    """

    def __init__(
        self, delta: float = 0.002, max_buckets: int = 5, min_side: int = 5, clock: int = 1
    ) -> None:
        if not 0.0 < delta < 1.0:
            raise InvalidArgumentError(f"delta must be in (0, 1), got {delta}")
        if max_buckets < 2 or min_side < 1 or clock < 1:
            raise InvalidArgumentError("max_buckets >= 2, min_side >= 1 and clock >= 1 expected")
        self.delta = delta
        self.max_buckets = max_buckets
        self.min_side = min_side
        self.clock = clock
        self.reset()

    def reset(self) -> None:
        self.rows: list[deque[Bucket]] = []
        self.width = 0
        self.total = 0.0
        self.squares = 0.0
        self.time = 0
        self.detections = 0

    def __len__(self) -> int:
        return self.width

    def update(self, value: float) -> bool:
        return self.insert(value)

    def insert(self, value: float) -> bool:
        value = float(value)
        if not 0.0 <= value <= 1.0:
            raise InvalidArgumentError(f"ADWIN observes values in [0, 1], got {value}")
        if not self.rows:
            self.rows.append(deque())
        self.rows[0].appendleft(Bucket(value, value * value, 1))
        self.width += 1
        self.total += value
        self.squares += value * value
        self._compress()
        self.time += 1
        if self.time % self.clock:
            return False
        return self._detect()

    def estimate(self) -> tuple[float, int]:
        if not self.width:
            raise EmptyWindowError("the ADWIN window is empty")
        return self.total / self.width, self.width

    @property
    def variance(self) -> float:
        mean = self.total / self.width
        return max(self.squares / self.width - mean * mean, 0.0)

    def _compress(self) -> None:
        row = 0
        while row < len(self.rows) and len(self.rows[row]) > self.max_buckets:
            older = self.rows[row].pop()
            old = self.rows[row].pop()
            if row + 1 == len(self.rows):
                self.rows.append(deque())
            merged = Bucket(
                old.total + older.total, old.squares + older.squares, old.count + older.count
            )
            self.rows[row + 1].appendleft(merged)
            row += 1

    def bound(self, n0: int, n1: int) -> float:
        """Threshold on the mean difference between sub-windows of sizes n0 and n1."""
        m = 1.0 / (1.0 / n0 + 1.0 / n1)
        log_term = math.log(2.0 * self.width / self.delta)
        return math.sqrt(2.0 / m * self.variance * log_term) + 2.0 / (3.0 * m) * log_term

    def _newest_significant_cut(self) -> tuple[int, int] | None:
        n1, s1 = 0, 0.0
        for r, row in enumerate(self.rows):
            for i, bucket in enumerate(row):
                n1 += bucket.count
                s1 += bucket.total
                n0 = self.width - n1
                if n0 < self.min_side:
                    return None
                if n1 < self.min_side:
                    continue
                if abs((self.total - s1) / n0 - s1 / n1) > self.bound(n0, n1):
                    return r, i
        return None

    def _drop_older_than(self, row: int, index: int) -> None:
        del self.rows[row + 1 :]
        while len(self.rows[row]) > index + 1:
            self.rows[row].pop()
        buckets = [bucket for kept in self.rows for bucket in kept]
        self.width = sum(b.count for b in buckets)
        self.total = sum(b.total for b in buckets)
        self.squares = sum(b.squares for b in buckets)

    def _detect(self) -> bool:
        changed = False
        while self.width >= 2 * self.min_side:
            cut = self._newest_significant_cut()
            if cut is None:
                break
            self._drop_older_than(*cut)
            changed = True
        if changed:
            self.detections += 1
            logger.debug(f"ADWIN shrank to {self.width} observations at t={self.time}")
        return changed


class Ddm(DriftDetector):
    """Drift detection method on a binary error stream."""

    def __init__(
        self, min_instances: int = 30, warning_level: float = 2.0, drift_level: float = 3.0
    ) -> None:
        if min_instances < 1 or not 0 < warning_level < drift_level:
            raise InvalidArgumentError("min_instances >= 1 and 0 < warning < drift expected")
        self.min_instances = min_instances
        self.warning_level = warning_level
        self.drift_level = drift_level
        self.reset()

    def reset(self) -> None:
        self.n = 0
        self.p = 0.0
        self.s = 0.0
        self.p_min = math.inf
        self.s_min = math.inf

    def update_level(self, error: int) -> DdmLevel:
        if error not in (0, 1):
            raise InvalidArgumentError(f"DDM observes 0/1 errors, got {error!r}")
        self.n += 1
        self.p += (error - self.p) / self.n
        self.s = math.sqrt(self.p * (1.0 - self.p) / self.n)
        if self.n < self.min_instances:
            return "normal"
        if self.p + self.s <= self.p_min + self.s_min:
            self.p_min, self.s_min = self.p, self.s
        if self.p + self.s > self.p_min + self.drift_level * self.s_min:
            logger.debug(f"DDM drift after {self.n} observations (p={self.p:.3f})")
            self.reset()
            return "drift"
        if self.p + self.s > self.p_min + self.warning_level * self.s_min:
            return "warning"
        return "normal"

    def update(self, value: float) -> bool:
        return self.update_level(int(value)) == "drift"
