"""Seeded Monte Carlo estimation of test error rates.

A target distribution p is classified against the model pair with a slack
factor gamma: H0 when ``gamma * H2(p, p1) <= H2(p, p2)``, H1 when
``H2(p, p1) >= gamma * H2(p, p2)``, and "neither" otherwise. Targets of the
third kind carry no correct answer. Their trials are counted but excluded.

Every trial draws from its own generator, keyed by
``derive_seed(seed, target_index, trial_index)``, so results are identical
whether trials run serially or across threads.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .dist import BinnedDistribution, derive_seed, draw_indices, require_same_support, rng_from_seed
from .divergences import hellinger_sq
from .estimates import CSV_COLUMNS, ErrorEstimate, summarize
from .robust_tests import Family, TestSpec, make_test

SQRT2 = math.sqrt(2.0)
BARAUD_GAMMA = (SQRT2 + 1) / (SQRT2 - 1)
DEFAULT_DELTA = 1 / 3
THREADS_ENV = "ROBUST_HELLINGER_THREADS"


class Truth(str, Enum):
    H0 = "H0"
    H1 = "H1"
    NEITHER = "neither"


class NoDecidableTargetError(ValueError):
    """Every target is equidistant enough that neither hypothesis holds."""


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def classify_truth(
    p: BinnedDistribution, p1: BinnedDistribution, p2: BinnedDistribution, gamma: float
) -> Truth:
    if not gamma > 1:
        raise ValueError(f"gamma must exceed 1, got {gamma}")
    h1 = hellinger_sq(p, p1)
    h2 = hellinger_sq(p, p2)
    if gamma * h1 <= h2:
        return Truth.H0
    if h1 >= gamma * h2:
        return Truth.H1
    return Truth.NEITHER


@dataclass(frozen=True)
class ExperimentConfig:
    family: Family
    p1: BinnedDistribution
    p2: BinnedDistribution
    targets: tuple[BinnedDistribution, ...]
    m: int
    trials: int
    seed: int
    delta: float = DEFAULT_DELTA
    gamma: float = BARAUD_GAMMA
    threads: int = field(default_factory=default_threads)

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family(self.family))
        if isinstance(self.targets, BinnedDistribution):
            object.__setattr__(self, "targets", (self.targets,))
        object.__setattr__(self, "targets", tuple(self.targets))
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not 0 < self.delta < 0.5:
            raise ValueError(f"delta must lie in (0, 0.5), got {self.delta}")
        if not self.targets:
            raise ValueError("at least one target distribution is required")
        for t in self.targets:
            require_same_support(t, self.p1)

    def with_m(self, m: int, seed: int | None = None) -> "ExperimentConfig":
        return ExperimentConfig(
            self.family, self.p1, self.p2, self.targets, m, self.trials,
            self.seed if seed is None else seed, self.delta, self.gamma, self.threads,
        )


def _target_errors(test, target: BinnedDistribution, truth: Truth, cfg: ExperimentConfig, index: int) -> int:
    def block(trials: range) -> int:
        counts = np.empty((len(trials), target.size), dtype=np.int64)
        for k, t in enumerate(trials):
            rng = rng_from_seed(derive_seed(cfg.seed, index, t))
            counts[k] = np.bincount(draw_indices(target.masses, cfg.m, rng), minlength=target.size)
        _, declared_h0 = test.decide_counts(counts)
        wrong = ~declared_h0 if truth is Truth.H0 else declared_h0
        return int(wrong.sum())

    chunk = max(1, math.ceil(cfg.trials / cfg.threads))
    blocks = [range(s, min(cfg.trials, s + chunk)) for s in range(0, cfg.trials, chunk)]
    if cfg.threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return sum(pool.map(block, blocks))
    return sum(block(b) for b in blocks)


def estimate_error(config: ExperimentConfig) -> ErrorEstimate:
    """Worst-case type-I and type-II error frequencies over the configured targets."""
    test = make_test(TestSpec(config.family, config.p1, config.p2))
    worst = {Truth.H0: (0, 0), Truth.H1: (0, 0)}
    excluded = 0
    for index, target in enumerate(config.targets):
        truth = classify_truth(target, config.p1, config.p2, config.gamma)
        if truth is Truth.NEITHER:
            excluded += config.trials
            continue
        errors = _target_errors(test, target, truth, config, index)
        best_errors, best_trials = worst[truth]
        if best_trials == 0 or errors / config.trials > best_errors / best_trials:
            worst[truth] = (errors, config.trials)
    if worst[Truth.H0][1] == 0 and worst[Truth.H1][1] == 0:
        raise NoDecidableTargetError(
            f"no target satisfies H0 or H1 at gamma={config.gamma:g}; all {excluded} trials excluded"
        )
    e0, n0 = worst[Truth.H0]
    e1, n1 = worst[Truth.H1]
    return summarize(e0, n0, e1, n1, config.seed, excluded=excluded)


@dataclass(frozen=True)
class SweepRow:
    m: int
    estimate: ErrorEstimate

    def csv_row(self) -> list:
        e = self.estimate
        return [self.m, e.type1, e.type2, e.max_error, e.ci_halfwidth, e.trials, e.seed]


def sample_complexity_sweep(config: ExperimentConfig, m_grid: Sequence[int]) -> list[SweepRow]:
    """One error estimate per sample size; cell seeds are ``derive_seed(seed, m)``."""
    grid = list(m_grid)
    if not grid:
        raise ValueError("empty m grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"m grid must be strictly ascending, got {grid}")
    return [
        SweepRow(m, estimate_error(config.with_m(m, derive_seed(config.seed, m)))) for m in grid
    ]


def first_m_below(rows: Sequence[SweepRow], delta: float) -> int | None:
    """Smallest m in the sweep whose max error is below ``delta``."""
    for row in rows:
        if row.estimate.max_error < delta:
            return row.m
    return None


def sweep_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_row())
    return buf.getvalue()
