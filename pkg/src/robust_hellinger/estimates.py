"""Monte Carlo error summaries shared by the harness and the lower-bound experiment."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from scipy.stats import binomtest

CSV_COLUMNS = ("m", "type1", "type2", "max_error", "ci", "trials", "seed")


def wilson_halfwidth(errors: int, trials: int, confidence: float = 0.95) -> float:
    """Half the length of the Wilson score interval for ``errors / trials``."""
    if trials <= 0:
        return 0.0
    ci = binomtest(int(errors), int(trials)).proportion_ci(confidence, method="wilson")
    return (ci.high - ci.low) / 2


@dataclass(frozen=True)
class ErrorEstimate:
    """Empirical type-I / type-II error rates.

    ``type1`` is the error frequency on trials whose truth is H0, ``type2`` on
    trials whose truth is H1. ``ci_halfwidth`` belongs to whichever stream
    attains ``max_error``. ``mixed_error`` is filled in only when both
    hypotheses were interleaved in a single stream (the lower-bound experiment).
    """

    type1: float
    type2: float
    max_error: float
    ci_halfwidth: float
    trials: int
    seed: int
    type1_trials: int = 0
    type2_trials: int = 0
    excluded_trials: int = 0
    mixed_error: float | None = None

    def __post_init__(self) -> None:
        for name in ("type1", "type2", "max_error"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")
        if self.max_error != max(self.type1, self.type2):
            raise ValueError("max_error must equal max(type1, type2)")

    @property
    def mixed_standard_error(self) -> float:
        if self.mixed_error is None:
            raise ValueError("no mixed stream was recorded")
        n = self.type1_trials + self.type2_trials
        return math.sqrt(self.mixed_error * (1 - self.mixed_error) / n)

    def to_dict(self) -> dict:
        return asdict(self)


def summarize(
    errors_h0: int,
    trials_h0: int,
    errors_h1: int,
    trials_h1: int,
    seed: int,
    excluded: int = 0,
    mixed: bool = False,
) -> ErrorEstimate:
    type1 = errors_h0 / trials_h0 if trials_h0 else 0.0
    type2 = errors_h1 / trials_h1 if trials_h1 else 0.0
    if type1 >= type2:
        ci = wilson_halfwidth(errors_h0, trials_h0)
    else:
        ci = wilson_halfwidth(errors_h1, trials_h1)
    total = trials_h0 + trials_h1
    return ErrorEstimate(
        type1=type1,
        type2=type2,
        max_error=max(type1, type2),
        ci_halfwidth=ci,
        trials=total + excluded,
        seed=int(seed),
        type1_trials=trials_h0,
        type2_trials=trials_h1,
        excluded_trials=excluded,
        mixed_error=(errors_h0 + errors_h1) / total if mixed and total else None,
    )
