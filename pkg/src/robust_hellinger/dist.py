"""Finite and binned probability distributions.

Every distribution in this package is a vector of masses over a finite set of
atoms. Atoms are either abstract points or the equal-width bins of an interval
``[lo, hi)``. A piecewise-constant density taking value ``v`` on a bin of width
``w`` is stored as the mass ``v * w``, so every integral becomes a finite sum.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

NORMALIZATION_TOL = 1e-12
MAX_ALIGNED_BINS = 10_000_000
_MAX_DENOMINATOR = 1_000_000
_UINT64 = (1 << 64) - 1

POINTS = "points"
BINS = "bins"


class InvalidDistributionError(ValueError):
    """A mass vector violates non-negativity, normalization or the partition rules."""


class SupportMismatchError(ValueError):
    """Two distributions are not defined on the same atoms."""


@dataclass(frozen=True, eq=False)
class BinnedDistribution:
    """Immutable probability vector over points or equal-width interval bins.

    The constructor checks structure only (kind, finite masses, bin count,
    interval orientation). Probabilistic validity is reported by
    :func:`validate` so that it can describe what is wrong.
    """

    masses: np.ndarray
    kind: str = POINTS
    lo: float = 0.0
    hi: float = 1.0
    label: str = ""

    def __post_init__(self) -> None:
        if self.kind not in (POINTS, BINS):
            raise InvalidDistributionError(f"unknown support kind {self.kind!r}")
        masses = np.array(self.masses, dtype=np.float64).reshape(-1)
        if masses.size < 1:
            raise InvalidDistributionError("bin count must be at least 1")
        if not np.all(np.isfinite(masses)):
            raise InvalidDistributionError("masses must be finite numbers")
        if self.kind == BINS and not float(self.lo) < float(self.hi):
            raise InvalidDistributionError(f"empty interval [{self.lo}, {self.hi})")
        masses.setflags(write=False)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))

    # -- constructors -------------------------------------------------------

    @classmethod
    def points(cls, masses: Iterable[float], label: str = "") -> "BinnedDistribution":
        return cls(np.asarray(list(masses), dtype=np.float64), POINTS, 0.0, 1.0, label)

    @classmethod
    def bins(
        cls, masses: Iterable[float], lo: float, hi: float, label: str = ""
    ) -> "BinnedDistribution":
        return cls(np.asarray(list(masses), dtype=np.float64), BINS, lo, hi, label)

    @classmethod
    def from_density(
        cls, density: Sequence[float], lo: float, hi: float, label: str = ""
    ) -> "BinnedDistribution":
        """Piecewise-constant density values, one per equal-width bin of [lo, hi)."""
        density = np.asarray(density, dtype=np.float64)
        width = (float(hi) - float(lo)) / density.size
        return cls(density * width, BINS, lo, hi, label)

    @classmethod
    def uniform(cls, lo: float, hi: float, n_bins: int = 1, label: str = "") -> "BinnedDistribution":
        """Uniform law on [lo, hi) split into ``n_bins`` bins."""
        return cls(np.full(n_bins, 1.0 / n_bins), BINS, lo, hi, label or f"unif[{lo},{hi})")

    # -- accessors ----------------------------------------------------------

    @property
    def size(self) -> int:
        return int(self.masses.size)

    @property
    def width(self) -> float:
        """Bin width for interval bins (``nan`` for abstract points)."""
        if self.kind != BINS:
            return math.nan
        return (self.hi - self.lo) / self.size

    @property
    def density(self) -> np.ndarray:
        if self.kind != BINS:
            raise InvalidDistributionError("density is only defined for interval bins")
        return self.masses / self.width

    @property
    def support(self) -> np.ndarray:
        """Indices of atoms with positive mass."""
        return np.flatnonzero(self.masses > 0)

    def same_support(self, other: "BinnedDistribution") -> bool:
        if self.kind != other.kind or self.size != other.size:
            return False
        if self.kind == BINS:
            return self.lo == other.lo and self.hi == other.hi
        return True

    def relabel(self, label: str) -> "BinnedDistribution":
        return BinnedDistribution(self.masses, self.kind, self.lo, self.hi, label)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinnedDistribution):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.lo == other.lo
            and self.hi == other.hi
            and self.label == other.label
            and np.array_equal(self.masses, other.masses)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        where = f"[{self.lo}, {self.hi})" if self.kind == BINS else "points"
        return f"BinnedDistribution({self.label!r}, {where}, n={self.size})"


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Indices of the atoms hit by i.i.d. draws, plus provenance."""

    atom_indices: np.ndarray
    seed: int
    source_label: str = ""

    def __post_init__(self) -> None:
        idx = np.array(self.atom_indices, dtype=np.int64).reshape(-1)
        idx.setflags(write=False)
        object.__setattr__(self, "atom_indices", idx)

    def __len__(self) -> int:
        return int(self.atom_indices.size)

    def counts(self, n_atoms: int) -> np.ndarray:
        """Per-atom hit counts, checked against the support size."""
        idx = self.atom_indices
        if idx.size and (idx.min() < 0 or idx.max() >= n_atoms):
            raise SupportMismatchError(
                f"sample index out of range for a support of {n_atoms} atoms"
            )
        return np.bincount(idx, minlength=n_atoms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SampleBatch):
            return NotImplemented
        return (
            self.seed == other.seed
            and self.source_label == other.source_label
            and np.array_equal(self.atom_indices, other.atom_indices)
        )

    __hash__ = None  # type: ignore[assignment]


# -- validation -------------------------------------------------------------


def validate(d: BinnedDistribution) -> str | None:
    """Return ``None`` when ``d`` is a probability vector, else a description of the violation."""
    masses = d.masses
    negative = np.flatnonzero(masses < 0)
    if negative.size:
        i = int(negative[0])
        return f"negative mass at {i} ({masses[i]:.12g})"
    total = float(np.sum(masses))
    if abs(total - 1.0) > NORMALIZATION_TOL:
        return f"sum = {total:.12g}"
    return None


def require_valid(d: BinnedDistribution) -> BinnedDistribution:
    problem = validate(d)
    if problem is not None:
        name = f" {d.label!r}" if d.label else ""
        raise InvalidDistributionError(f"invalid distribution{name}: {problem}")
    return d


def require_same_support(d1: BinnedDistribution, d2: BinnedDistribution) -> None:
    if not d1.same_support(d2):
        raise SupportMismatchError(
            f"supports differ: {d1!r} vs {d2!r}; call align_supports first"
        )


# -- randomness --------------------------------------------------------------


def splitmix64(x: int) -> int:
    """One round of the SplitMix64 output function (Steele, Lea & Flood 2014)."""
    x = (x + 0x9E3779B97F4A7C15) & _UINT64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _UINT64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _UINT64
    return x ^ (x >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Mix a base seed with integer keys (trial index, grid cell, ...).

    Each key is folded in as ``splitmix64(state ^ key)``; the result depends
    only on the inputs, never on execution order.
    """
    state = splitmix64(int(seed) & _UINT64)
    for key in keys:
        state = splitmix64(state ^ (int(key) & _UINT64))
    return state


def entropy_seed() -> int:
    """Fresh 64-bit seed from OS entropy, for runs that did not fix one."""
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0])


def rng_from_seed(seed: int) -> np.random.Generator:
    """PCG64 generator keyed through numpy's SeedSequence."""
    if not 0 <= int(seed) <= _UINT64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(int(seed)))


def draw_indices(masses: np.ndarray, size, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF categorical draws; atoms with zero mass are never returned."""
    cdf = np.cumsum(masses)
    u = rng.random(size) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    # u can round up to cdf[-1]; fall back to the last atom carrying mass.
    last = int(np.flatnonzero(masses > 0)[-1])
    return np.minimum(idx, last)


def sample(d: BinnedDistribution, count: int, seed: int) -> SampleBatch:
    """Draw ``count`` i.i.d. atom indices from ``d``; bit-identical for equal arguments."""
    require_valid(d)
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    idx = draw_indices(d.masses, count, rng_from_seed(seed))
    return SampleBatch(idx, int(seed), d.label)


# -- combination -------------------------------------------------------------


def mixture(d1: BinnedDistribution, d2: BinnedDistribution, weight: float) -> BinnedDistribution:
    """Pointwise ``weight * d1 + (1 - weight) * d2`` on a shared support."""
    if not 0.0 <= weight <= 1.0:
        raise ValueError(f"weight must lie in [0, 1], got {weight}")
    require_same_support(d1, d2)
    masses = weight * d1.masses + (1.0 - weight) * d2.masses
    label = f"mix({d1.label},{d2.label},{weight:g})"
    return BinnedDistribution(masses, d1.kind, d1.lo, d1.hi, label)


def _as_fraction(x: float) -> Fraction:
    frac = Fraction(x).limit_denominator(_MAX_DENOMINATOR)
    # a few ulps: recovers decimal inputs such as 0.01, rejects irrational ones
    if abs(float(frac) - x) > 4 * sys.float_info.epsilon * max(1.0, abs(x)):
        raise SupportMismatchError(f"{x!r} is not a short rational; partitions are incommensurable")
    return frac


def _frac_gcd(a: Fraction, b: Fraction) -> Fraction:
    if a == 0:
        return abs(b)
    if b == 0:
        return abs(a)
    den = a.denominator * b.denominator
    return Fraction(
        math.gcd(a.numerator * b.denominator, b.numerator * a.denominator), den
    )


def align_supports(
    d1: BinnedDistribution, d2: BinnedDistribution
) -> tuple[BinnedDistribution, BinnedDistribution]:
    """Re-express two interval-bin distributions on their common refinement.

    The common grid spans the union of both intervals with a step dividing
    both bin widths and the offset between the two left edges. Each original
    bin's mass is split evenly over the fine bins it covers, and fine bins
    outside an interval get zero mass.
    """
    if d1.kind != BINS or d2.kind != BINS:
        if d1.same_support(d2):
            return d1, d2
        raise SupportMismatchError("only interval-bin distributions can be aligned")
    lo1, hi1, lo2, hi2 = (_as_fraction(v) for v in (d1.lo, d1.hi, d2.lo, d2.hi))
    w1 = (hi1 - lo1) / d1.size
    w2 = (hi2 - lo2) / d2.size
    step = _frac_gcd(_frac_gcd(w1, w2), lo2 - lo1)
    lo, hi = min(lo1, lo2), max(hi1, hi2)
    n_fine = (hi - lo) / step
    if n_fine.denominator != 1 or n_fine > MAX_ALIGNED_BINS:
        raise SupportMismatchError(
            f"incommensurable partitions: common grid would need {float(n_fine):.3g} bins"
        )

    def refine(d: BinnedDistribution, dlo: Fraction, w: Fraction) -> BinnedDistribution:
        ratio = int(w / step)
        offset = int((dlo - lo) / step)
        fine = np.zeros(int(n_fine))
        fine[offset : offset + d.size * ratio] = np.repeat(d.masses / ratio, ratio)
        return BinnedDistribution(fine, BINS, float(lo), float(hi), d.label)

    return refine(d1, lo1, w1), refine(d2, lo2, w2)


def point_mass(n_atoms: int, atom: int, label: str = "") -> BinnedDistribution:
    masses = np.zeros(n_atoms)
    masses[atom] = 1.0
    return BinnedDistribution(masses, POINTS, label=label or f"delta{atom}")


def bernoulli(p: float, label: str = "") -> BinnedDistribution:
    """Two-point law with mass ``p`` on atom 1."""
    return BinnedDistribution.points([1.0 - p, p], label or f"Bern({p:g})")


def random_distribution(
    rng: np.random.Generator, n_atoms: int, concentration: float = 1.0, label: str = ""
) -> BinnedDistribution:
    """Dirichlet draw, renormalized with fsum so it validates at 1e-12."""
    masses = rng.dirichlet(np.full(n_atoms, concentration))
    masses = masses / math.fsum(masses)
    return BinnedDistribution.points(masses, label)
