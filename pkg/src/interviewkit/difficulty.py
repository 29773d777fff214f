"""Score accumulation, capability estimation, and difficulty selection.

All arithmetic here is exact rational: the difficulty branches compare
against thresholds with <=, and the canonical thresholds (one third and
two thirds of the medium gain) are not representable in binary floating
point, so floats would make boundary decisions flaky.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

from .errors import InvalidLevel, NoAnswers
from .records import DifficultyLevel, QaRecord

RationalLike = Union[Fraction, int, float, str]

# Violation identifiers returned by validate_config.
RULE_ORDERING = "ordering"
RULE_BALANCE = "balance"
RULE_THRESHOLD_LAW = "threshold-law"
RULE_IMPROVABILITY = "improvability"

RULE_DESCRIPTIONS = {
    RULE_ORDERING: "gains must be strictly increasing (easy < medium < hard)",
    RULE_BALANCE: "easy and hard gains must average to the medium gain",
    RULE_THRESHOLD_LAW: "thresholds must be one third and two thirds of the medium gain",
    RULE_IMPROVABILITY: "each gain must exceed the threshold to the next level",
}


def as_fraction(value: RationalLike) -> Fraction:
    """Convert to an exact Fraction.

    Floats go through their decimal string form, so a config value written
    as 1.5 means exactly 3/2 rather than the nearest binary float.
    Strings accept both "1.5" and "2/3".
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(str(value))
    return Fraction(value)


@dataclass(frozen=True)
class DifficultyConfig:
    """Score gains per level and the two promotion thresholds."""

    gains: tuple[Fraction, Fraction, Fraction]
    thresholds: tuple[Fraction, Fraction]

    @classmethod
    def create(
        cls,
        gains: Iterable[RationalLike],
        thresholds: Iterable[RationalLike],
    ) -> "DifficultyConfig":
        g = tuple(as_fraction(v) for v in gains)
        t = tuple(as_fraction(v) for v in thresholds)
        if len(g) != 3 or len(t) != 2:
            raise ValueError("need exactly 3 gains and 2 thresholds")
        return cls(gains=g, thresholds=t)  # type: ignore[arg-type]

    @classmethod
    def default(cls) -> "DifficultyConfig":
        return cls.create((1, "1.5", 2), ("0.5", 1))

    def gain_for(self, level: DifficultyLevel | None) -> Fraction:
        """Score gain for a correct answer; unlabeled questions earn the medium gain."""
        if level is None:
            return self.gains[DifficultyLevel.MEDIUM - 1]
        return self.gains[level - 1]

    def threshold_above(self, level: DifficultyLevel) -> Fraction:
        if level is DifficultyLevel.HARD:
            raise InvalidLevel("no threshold above the hardest level")
        return self.thresholds[level - 1]


def validate_config(config: DifficultyConfig) -> list[str]:
    """Check the four validity families; an empty list means valid.

    Uses exact comparisons only; there is no tolerance to tune.
    """
    c1, c2, c3 = config.gains
    t12, t23 = config.thresholds
    violations = []
    if not (Fraction(0) < c1 < c2 < c3):
        violations.append(RULE_ORDERING)
    if c1 + c3 != 2 * c2:
        violations.append(RULE_BALANCE)
    if t12 != c2 / 3 or t23 != 2 * c2 / 3:
        violations.append(RULE_THRESHOLD_LAW)
    if not (c1 > t12 and c2 > t23):
        violations.append(RULE_IMPROVABILITY)
    return violations


def gain(level: DifficultyLevel | None, config: DifficultyConfig) -> Fraction:
    return config.gain_for(level)


@dataclass(frozen=True)
class CapabilityState:
    """Per-level correct/incorrect answer counts for one scoring scope."""

    correct: tuple[int, int, int] = (0, 0, 0)
    wrong: tuple[int, int, int] = (0, 0, 0)

    @property
    def total(self) -> int:
        return sum(self.correct) + sum(self.wrong)

    def to_payload(self) -> dict[str, list[int]]:
        return {"correct": list(self.correct), "wrong": list(self.wrong)}

    @classmethod
    def from_payload(cls, payload: dict) -> "CapabilityState":
        return cls(correct=tuple(payload["correct"]), wrong=tuple(payload["wrong"]))


def fold(state: CapabilityState, record: QaRecord, config: DifficultyConfig) -> CapabilityState:
    """Fold one answered question into the state; returns a new state."""
    i = record.asked_difficulty - 1
    if record.correct:
        correct = list(state.correct)
        correct[i] += 1
        return CapabilityState(correct=tuple(correct), wrong=state.wrong)
    wrong = list(state.wrong)
    wrong[i] += 1
    return CapabilityState(correct=state.correct, wrong=tuple(wrong))


def fold_all(
    state: CapabilityState, records: Iterable[QaRecord], config: DifficultyConfig
) -> CapabilityState:
    for record in records:
        state = fold(state, record, config)
    return state


def average_score(state: CapabilityState, config: DifficultyConfig) -> Fraction:
    """Difficulty-weighted mean score over everything answered so far."""
    n = state.total
    if n == 0:
        raise NoAnswers("no answers folded yet")
    numerator = sum(
        (config.gains[i] * state.correct[i] for i in range(3)), start=Fraction(0)
    )
    return numerator / n


def decide_difficulty(avg_score: Fraction, config: DifficultyConfig) -> DifficultyLevel:
    """Piecewise difficulty selection; boundary values belong to the lower level."""
    t12, t23 = config.thresholds
    if avg_score <= t12:
        return DifficultyLevel.EASY
    if avg_score <= t23:
        return DifficultyLevel.MEDIUM
    return DifficultyLevel.HARD


def min_consecutive_correct(
    avg_score: Fraction,
    total: int,
    level: DifficultyLevel,
    config: DifficultyConfig,
) -> int | None:
    """Smallest run of correct answers at ``level`` that lifts the average
    strictly above the next threshold.

    Requires the current average to sit at or below that threshold. Returns
    None only for configs whose gain does not exceed the threshold, which
    valid configs rule out.
    """
    if level is DifficultyLevel.HARD:
        raise InvalidLevel("the hardest level has no next threshold")
    t = config.threshold_above(level)
    c = config.gain_for(level)
    a = as_fraction(avg_score)
    if a > t:
        raise ValueError("average already above the threshold")
    if c <= t:
        return None
    # (a*N + c*n) / (N + n) > t  <=>  n * (c - t) > (t - a) * N
    bound = (t - a) * total / (c - t)
    n = bound.numerator // bound.denominator + 1
    return max(n, 1)
