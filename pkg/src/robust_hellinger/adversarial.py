"""Hard instances behind the slack-factor lower bound.

The base pair p1/p2 on [0, 1] has density 1-b / 1+b on the two halves (p2 is
the mirror image). ``[0, 1]`` is cut into ``2 N`` equal bins; bins ``1..N``
form the left half and ``N+1..2N`` the right half. A member of the family D1
raises the density by ``a1`` on a set R1 of ``(b/a1) N`` left bins and lowers
it by ``a2`` on a set R2 of ``(b/a2) N`` right bins, so it still integrates to
one. Members of D2 are the mirror images: R2 lowers left bins by ``a2`` and R1
raises right bins by ``a1``.

Bin indices in R1 and R2 are 1-based, matching ``[N] = {1, ..., N}``.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .dist import (
    BinnedDistribution,
    SampleBatch,
    derive_seed,
    draw_indices,
    rng_from_seed,
)
from .divergences import hellinger_sq, sym_chi_sq
from .estimates import ErrorEstimate, summarize
from .robust_tests import Family, RobustTest, TestDecision, TestSpec, Verdict, make_test

SQRT2 = math.sqrt(2.0)
HELLINGER_RATIO_LIMIT = SQRT2 / (SQRT2 - 1)
CHI2_RATIO_LIMIT = 3.0
COLLISION_TARGET = 11 / 12
LIMIT_A1 = 1e6
MAX_ENUMERATION_BINS = 12
MAX_ENUMERATION_SAMPLES = 3


class Side(str, Enum):
    PERTURB_P1 = "perturb-p1"
    PERTURB_P2 = "perturb-p2"


class InstanceTooLargeError(ValueError):
    pass


def _fraction(x: float) -> Fraction:
    return Fraction(x).limit_denominator(1_000_000)


@dataclass(frozen=True)
class FamilyParams:
    """Shape parameters of the perturbed families.

    Range constraints are enforced here. Whether ``(b/a1) N`` and ``(b/a2) N``
    are integers is exposed through :attr:`is_integral`; anything that
    instantiates members (:func:`make_member`, sampling, enumeration) refuses
    non-integral sizes rather than rounding them.
    """

    b: float
    a1: float
    a2: float
    n_half: int

    def __post_init__(self) -> None:
        if not 0 < self.b <= 1:
            raise ValueError(f"b must lie in (0, 1], got {self.b}")
        if not self.a1 >= self.b:
            raise ValueError(f"a1 must be >= b, got a1={self.a1}, b={self.b}")
        if not self.b <= self.a2 <= 1 + self.b:
            raise ValueError(f"a2 must lie in [b, 1+b], got {self.a2}")
        if int(self.n_half) != self.n_half or self.n_half < 1:
            raise ValueError(f"n_half must be a positive integer, got {self.n_half}")
        object.__setattr__(self, "n_half", int(self.n_half))

    @property
    def r1_exact(self) -> Fraction:
        return _fraction(self.b) / _fraction(self.a1) * self.n_half

    @property
    def r2_exact(self) -> Fraction:
        return _fraction(self.b) / _fraction(self.a2) * self.n_half

    @property
    def is_integral(self) -> bool:
        return self.r1_exact.denominator == 1 and self.r2_exact.denominator == 1

    @property
    def r1_size(self) -> int:
        return self._size(self.r1_exact, "R1", self.a1)

    @property
    def r2_size(self) -> int:
        return self._size(self.r2_exact, "R2", self.a2)

    def _size(self, exact: Fraction, name: str, a: float) -> int:
        if exact.denominator != 1:
            raise ValueError(
                f"|{name}| = (b/a) N = {float(exact):g} is not an integer "
                f"(b={self.b}, a={a}, N={self.n_half})"
            )
        return int(exact)

    @property
    def n_bins(self) -> int:
        return 2 * self.n_half

    def refined(self) -> "FamilyParams":
        """Smallest multiple of ``n_half`` giving integral subset sizes (same distances)."""
        scale = math.lcm(self.r1_exact.denominator, self.r2_exact.denominator)
        return FamilyParams(self.b, self.a1, self.a2, self.n_half * scale)

    def to_dict(self) -> dict:
        return {"b": self.b, "a1": self.a1, "a2": self.a2, "n_half": self.n_half}


@dataclass(frozen=True)
class PerturbedMember:
    r1: np.ndarray
    r2: np.ndarray
    side: Side
    distribution: BinnedDistribution
    params: FamilyParams

    @property
    def added_mass(self) -> float:
        return self.params.a1 * len(self.r1) / self.params.n_bins

    @property
    def removed_mass(self) -> float:
        return self.params.a2 * len(self.r2) / self.params.n_bins


def base_pair(b: float, n_bins: int = 2) -> tuple[BinnedDistribution, BinnedDistribution]:
    """p1 (density 1-b then 1+b) and its mirror p2, on ``n_bins`` equal bins of [0, 1)."""
    if not 0 < b <= 1:
        raise ValueError(f"b must lie in (0, 1], got {b}")
    if n_bins < 2 or n_bins % 2:
        raise ValueError(f"n_bins must be a positive even number, got {n_bins}")
    half = n_bins // 2
    low, high = np.full(half, 1.0 - b), np.full(half, 1.0 + b)
    p1 = BinnedDistribution.from_density(np.concatenate([low, high]), 0.0, 1.0, "p1")
    p2 = BinnedDistribution.from_density(np.concatenate([high, low]), 0.0, 1.0, "p2")
    return p1, p2


def _member_density(params: FamilyParams, left_set, right_set, side: Side) -> np.ndarray:
    """Density on 2N bins; ``left_set`` / ``right_set`` are 0-based index arrays."""
    n, b = params.n_half, params.b
    density = np.empty(2 * n)
    if side is Side.PERTURB_P1:
        density[:n] = 1.0 - b
        density[n:] = 1.0 + b
        density[left_set] += params.a1
        density[n + np.asarray(right_set, dtype=np.int64)] -= params.a2
    else:
        density[:n] = 1.0 + b
        density[n:] = 1.0 - b
        density[left_set] -= params.a2
        density[n + np.asarray(right_set, dtype=np.int64)] += params.a1
    return density


def _check_subset(values: Iterable[int], size: int, n: int, name: str) -> np.ndarray:
    if isinstance(values, np.ndarray):
        arr = values.astype(np.int64).reshape(-1)
    else:
        arr = np.fromiter(values, dtype=np.int64)
    subset = np.unique(arr)
    if subset.size != arr.size:
        raise ValueError(f"{name} has repeated indices")
    if subset.size != size:
        raise ValueError(f"|{name}| must be {size}, got {subset.size}")
    if subset.size and (subset[0] < 1 or subset[-1] > n):
        raise ValueError(f"{name} indices must lie in 1..{n}")
    subset.setflags(write=False)
    return subset


def make_member(
    params: FamilyParams, r1: Iterable[int], r2: Iterable[int], side: Side | str
) -> PerturbedMember:
    """Instantiate ``p^{R1,R2}`` (perturb-p1) or its mirror (perturb-p2) as bin masses."""
    side = Side(side)
    n = params.n_half
    r1 = _check_subset(r1, params.r1_size, n, "R1")
    r2 = _check_subset(r2, params.r2_size, n, "R2")
    r1_idx = r1 - 1
    r2_idx = r2 - 1
    if side is Side.PERTURB_P1:
        density = _member_density(params, r1_idx, r2_idx, side)
    else:
        density = _member_density(params, r2_idx, r1_idx, side)
    label = f"{'D1' if side is Side.PERTURB_P1 else 'D2'}{{|R1|={r1.size},|R2|={r2.size}}}"
    dist = BinnedDistribution.from_density(density, 0.0, 1.0, label)
    return PerturbedMember(r1, r2, side, dist, params)


def iter_members(params: FamilyParams, side: Side | str) -> Iterator[PerturbedMember]:
    """Every member of the family, R1 outer and R2 inner, in lexicographic order."""
    n = params.n_half
    for r1 in itertools.combinations(range(1, n + 1), params.r1_size):
        for r2 in itertools.combinations(range(1, n + 1), params.r2_size):
            yield make_member(params, r1, r2, side)


# -- distance profile ----------------------------------------------------------


@dataclass(frozen=True)
class DistanceProfile:
    """Distances from any family member to the two base distributions."""

    hellinger_to_p1: float
    hellinger_to_p2: float
    chi2_to_p1: float
    chi2_to_p2: float
    max_discrepancy: float = 0.0

    @property
    def ratio(self) -> float:
        """Far-over-near Hellinger ratio (H^2 to p2 over H^2 to p1 for D1)."""
        near, far = sorted((self.hellinger_to_p1, self.hellinger_to_p2))
        return far / near

    @property
    def chi2_ratio(self) -> float:
        near, far = sorted((self.chi2_to_p1, self.chi2_to_p2))
        return far / near

    def to_dict(self) -> dict:
        return {
            "hellinger_to_p1": self.hellinger_to_p1,
            "hellinger_to_p2": self.hellinger_to_p2,
            "chi2_to_p1": self.chi2_to_p1,
            "chi2_to_p2": self.chi2_to_p2,
            "ratio": self.ratio,
            "chi2_ratio": self.chi2_ratio,
            "max_discrepancy": self.max_discrepancy,
        }


def _regions(params: FamilyParams, side: Side):
    """(width fraction, member density, p1 density, p2 density) for the four level sets."""
    b = params.b
    f1 = float(_fraction(b) / _fraction(params.a1))
    f2 = float(_fraction(b) / _fraction(params.a2))
    lo, hi = 1.0 - b, 1.0 + b
    if side is Side.PERTURB_P1:
        return [
            ((1 - f1) / 2, lo, lo, hi),
            (f1 / 2, lo + params.a1, lo, hi),
            ((1 - f2) / 2, hi, hi, lo),
            (f2 / 2, hi - params.a2, hi, lo),
        ]
    return [
        ((1 - f2) / 2, hi, lo, hi),
        (f2 / 2, hi - params.a2, lo, hi),
        ((1 - f1) / 2, lo, hi, lo),
        (f1 / 2, lo + params.a1, hi, lo),
    ]


def _h2_term(w: float, d: float, e: float) -> float:
    return 0.5 * w * (math.sqrt(d) - math.sqrt(e)) ** 2


def _chi2_term(w: float, d: float, e: float) -> float:
    return 0.0 if d + e == 0 else w * (d - e) ** 2 / (d + e)


def closed_form_profile(params: FamilyParams, side: Side | str = Side.PERTURB_P1) -> DistanceProfile:
    """Distances summed over the four constant-density regions of a member."""
    regions = _regions(params, Side(side))
    return DistanceProfile(
        hellinger_to_p1=math.fsum(_h2_term(w, d, d1) for w, d, d1, _ in regions),
        hellinger_to_p2=math.fsum(_h2_term(w, d, d2) for w, d, _, d2 in regions),
        chi2_to_p1=math.fsum(_chi2_term(w, d, d1) for w, d, d1, _ in regions),
        chi2_to_p2=math.fsum(_chi2_term(w, d, d2) for w, d, _, d2 in regions),
    )


def member_profile(member: PerturbedMember) -> DistanceProfile:
    p1, p2 = base_pair(member.params.b, member.params.n_bins)
    d = member.distribution
    return DistanceProfile(
        hellinger_to_p1=hellinger_sq(d, p1),
        hellinger_to_p2=hellinger_sq(d, p2),
        chi2_to_p1=sym_chi_sq(d, p1),
        chi2_to_p2=sym_chi_sq(d, p2),
    )


def family_distance_profile(
    params: FamilyParams, side: Side | str = Side.PERTURB_P1
) -> DistanceProfile:
    """Closed-form distance profile, cross-checked against one instantiated member.

    The member is built on :meth:`FamilyParams.refined` when the subset sizes
    are fractional at the requested ``n_half``; refining the grid does not
    change any distance. ``max_discrepancy`` records the largest disagreement.
    """
    side = Side(side)
    closed = closed_form_profile(params, side)
    grid = params if params.is_integral else params.refined()
    member = make_member(
        grid, range(1, grid.r1_size + 1), range(1, grid.r2_size + 1), side
    )
    direct = member_profile(member)
    gap = max(
        abs(closed.hellinger_to_p1 - direct.hellinger_to_p1),
        abs(closed.hellinger_to_p2 - direct.hellinger_to_p2),
        abs(closed.chi2_to_p1 - direct.chi2_to_p1),
        abs(closed.chi2_to_p2 - direct.chi2_to_p2),
    )
    return DistanceProfile(
        closed.hellinger_to_p1,
        closed.hellinger_to_p2,
        closed.chi2_to_p1,
        closed.chi2_to_p2,
        max_discrepancy=gap,
    )


# -- collision event and TV bookkeeping ---------------------------------------


def uniform_no_collision(n_bins: int, m: int) -> float:
    """P(m uniform draws over ``n_bins`` bins land in distinct bins)."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if m > n_bins:
        return 0.0
    return math.prod(1.0 - i / n_bins for i in range(1, m))


def collision_probability(params: FamilyParams, m: int) -> float:
    """P(E): every bin receives at most one of ``m`` samples, with uniform bin marginals.

    This is the product ``prod_{i<m} (1 - i / 2N)`` used for the TV bound.
    """
    return uniform_no_collision(params.n_bins, m)


def schedule_n_half(m: int, c: int) -> int:
    """``N_m = C (m - 1)^2`` (at least 1)."""
    return max(1, c * (m - 1) ** 2)


def minimal_collision_constant(
    ms: Sequence[int] = (10, 100, 1000), target: float = COLLISION_TARGET, c_max: int = 10_000
) -> int:
    """Smallest integer C with ``collision_probability >= target`` at ``N_m = C (m-1)^2`` for every m."""
    for c in range(1, c_max + 1):
        if all(uniform_no_collision(2 * schedule_n_half(m, c), m) >= target for m in ms):
            return c
    raise ValueError(f"no C <= {c_max} reaches P(E) >= {target}")


def member_collision_probability(params: FamilyParams, m: int, side: Side | str = Side.PERTURB_P1) -> float:
    """Exact P(E) when the m samples come from one member (hence from the mixture too).

    All members share the same multiset of bin masses, so this is also the
    probability of E under the mixture law. Computed as ``m! e_m(masses)``
    with the elementary symmetric polynomial grouped by level set.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    grid = params if params.is_integral else params.refined()
    n = grid.n_half
    groups = []
    for w, density, _, _ in _regions(grid, Side(side)):
        count = round(w * 2 * n)
        mass = density / (2 * n)
        if count and mass > 0:
            groups.append((count, mass))
    # log-coefficients of prod_g sum_k C(count_g, k) mass_g^k t^k, truncated at degree m
    log_poly = np.full(m + 1, -np.inf)
    log_poly[0] = 0.0
    ks = np.arange(m + 1)
    for count, mass in groups:
        valid = ks <= count
        coeff = np.full(m + 1, -np.inf)
        k = ks[valid]
        coeff[valid] = (
            gammaln(count + 1) - gammaln(k + 1) - gammaln(count - k + 1) + k * math.log(mass)
        )
        # convolution in log space: new[j] = logsumexp_i(old[i] + coeff[j - i])
        grid_ij = log_poly[:, None] + np.where(
            ks[None, :] - ks[:, None] >= 0,
            coeff[np.clip(ks[None, :] - ks[:, None], 0, m)],
            -np.inf,
        )
        log_poly = logsumexp(grid_ij, axis=0)
    log_value = log_poly[m] + gammaln(m + 1)
    return float(min(1.0, math.exp(log_value))) if np.isfinite(log_value) else 0.0


def conditioning_tv_bound(tv_conditional, mass_u_comp, mass_v_comp):
    """``TV(u, v) <= TV(u|E, v|E) + 2 u(E^c) + 2 v(E^c)``, capped at 1.

    Works on floats or :class:`fractions.Fraction` alike.
    """
    for name, value in (
        ("tv_conditional", tv_conditional),
        ("mass_u_comp", mass_u_comp),
        ("mass_v_comp", mass_v_comp),
    ):
        if not 0 <= value <= 1:
            raise ValueError(f"{name}={value} outside [0, 1]")
    return min(1, tv_conditional + 2 * mass_u_comp + 2 * mass_v_comp)


def lecam_floor(tv):
    """Minimum achievable max-error for telling two laws apart: ``(1 - TV) / 2``."""
    if not 0 <= tv <= 1:
        raise ValueError(f"tv={tv} outside [0, 1]")
    return (1 - tv) / 2


# -- exact enumeration ---------------------------------------------------------


def _check_enumerable(params: FamilyParams, m: int) -> None:
    if params.n_bins > MAX_ENUMERATION_BINS or m > MAX_ENUMERATION_SAMPLES or m < 1:
        raise InstanceTooLargeError(
            f"exact enumeration needs 2N <= {MAX_ENUMERATION_BINS} and 1 <= m <= "
            f"{MAX_ENUMERATION_SAMPLES}; got 2N={params.n_bins}, m={m}"
        )


def _member_matrix(params: FamilyParams, side: Side) -> np.ndarray:
    return np.stack([mem.distribution.masses for mem in iter_members(params, side)])


def mixture_marginal(params: FamilyParams, side: Side | str = Side.PERTURB_P1) -> BinnedDistribution:
    """Single-sample law of the mixture: the average of all members (exact enumeration)."""
    side = Side(side)
    n = params.n_half
    raised = np.zeros(2 * n, dtype=np.int64)
    lowered = np.zeros(2 * n, dtype=np.int64)
    count = 0
    for mem in iter_members(params, side):
        # member densities are (base +- a) on these bins; tally which ones move
        left, right = (mem.r1, mem.r2) if side is Side.PERTURB_P1 else (mem.r2, mem.r1)
        if side is Side.PERTURB_P1:
            raised[left - 1] += 1
            lowered[n + right - 1] += 1
        else:
            lowered[left - 1] += 1
            raised[n + right - 1] += 1
        count += 1
    b, a1, a2 = _fraction(params.b), _fraction(params.a1), _fraction(params.a2)
    base = [1 - b] * n + [1 + b] * n if side is Side.PERTURB_P1 else [1 + b] * n + [1 - b] * n
    # exact rational average, rounded once
    masses = [
        float((base[i] + (a1 * int(raised[i]) - a2 * int(lowered[i])) / count) / (2 * n))
        for i in range(2 * n)
    ]
    return BinnedDistribution(masses, "bins", 0.0, 1.0, f"E[{side.value}]")


def conditional_law(params: FamilyParams, m: int, side: Side | str) -> np.ndarray:
    """Law of the ordered m-tuple of bins given E, as a dense (2N,)*m array."""
    _check_enumerable(params, m)
    members = _member_matrix(params, Side(side))
    n_bins = params.n_bins
    law = np.zeros((n_bins,) * m)
    for row in members:
        tensor = row
        for _ in range(m - 1):
            tensor = np.multiply.outer(tensor, row)
        law += tensor
    law /= len(members)
    distinct = np.ones_like(law, dtype=bool)
    for i, j in itertools.combinations(range(m), 2):
        idx = np.indices(law.shape)
        distinct &= idx[i] != idx[j]
    law = np.where(distinct, law, 0.0)
    return law / law.sum()


def conditional_law_gap(
    params: FamilyParams, m: int, params_d2: FamilyParams | None = None
) -> float:
    """Largest pointwise difference between D1^m|E and D2^m|E."""
    d2 = params if params_d2 is None else params_d2
    if d2.n_half != params.n_half:
        raise ValueError("both families must live on the same grid")
    law1 = conditional_law(params, m, Side.PERTURB_P1)
    law2 = conditional_law(d2, m, Side.PERTURB_P2)
    return float(np.max(np.abs(law1 - law2)))


def conditional_equality_check(
    params: FamilyParams, m: int, params_d2: FamilyParams | None = None, tol: float = 1e-12
) -> bool:
    """True iff the two mixture laws agree on E to ``tol`` (brute-force enumeration).

    ``params_d2`` lets the D2 side use different shape parameters, which is how
    negative controls are built.
    """
    return conditional_law_gap(params, m, params_d2) <= tol


# -- Monte Carlo indistinguishability experiment -------------------------------

TestLike = Family | str | RobustTest | Callable[[SampleBatch], TestDecision]


def _resolve_test(test: TestLike, params: FamilyParams):
    if isinstance(test, RobustTest):
        return test
    if isinstance(test, (Family, str)):
        p1, p2 = base_pair(params.b, params.n_bins)
        return make_test(TestSpec(Family(test), p1, p2))
    if callable(test):
        return test
    raise TypeError(f"cannot use {test!r} as a test")


def _run_trials(params: FamilyParams, m: int, test, seed: int, trials: range):
    """Return (side_is_d2, error) arrays for a contiguous block of trial indices."""
    n = params.n_half
    r1, r2 = params.r1_size, params.r2_size
    sides = np.empty(len(trials), dtype=bool)
    errors = np.empty(len(trials), dtype=bool)
    for k, t in enumerate(trials):
        rng = rng_from_seed(derive_seed(seed, t))
        is_d2 = bool(rng.integers(2))
        set1 = rng.choice(n, size=r1, replace=False)
        set2 = rng.choice(n, size=r2, replace=False)
        if is_d2:
            density = _member_density(params, set2, set1, Side.PERTURB_P2)
        else:
            density = _member_density(params, set1, set2, Side.PERTURB_P1)
        idx = draw_indices(density / (2 * n), m, rng)
        if isinstance(test, RobustTest):
            counts = np.bincount(idx, minlength=2 * n)
            _, declared_h0 = test.decide_counts(counts)
            declared_h0 = bool(declared_h0)
        else:
            declared_h0 = test(SampleBatch(idx, derive_seed(seed, t))).verdict is Verdict.H0
        sides[k] = is_d2
        errors[k] = declared_h0 if is_d2 else not declared_h0
    return sides, errors


def _split(trials: int, threads: int) -> list[range]:
    chunk = max(1, math.ceil(trials / max(1, threads)))
    return [range(s, min(trials, s + chunk)) for s in range(0, trials, chunk)]


def indistinguishability_experiment(
    params: FamilyParams,
    m: int,
    test: TestLike,
    trials: int,
    seed: int,
    threads: int = 1,
) -> ErrorEstimate:
    """Play the two-mixture game: each round picks D1 or D2, a random member, and m samples.

    A round is an error when the test declares H1 on a D1 member or H0 on a
    D2 member. Round ``t`` is driven entirely by ``derive_seed(seed, t)``, so
    results do not depend on ``threads``.
    """
    if trials < 1:
        raise ValueError("no trials")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    resolved = _resolve_test(test, params)
    blocks = _split(trials, threads)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda blk: _run_trials(params, m, resolved, seed, blk), blocks))
    else:
        parts = [_run_trials(params, m, resolved, seed, blk) for blk in blocks]
    sides = np.concatenate([s for s, _ in parts])
    errors = np.concatenate([e for _, e in parts])
    d1, d2 = ~sides, sides
    return summarize(
        int(errors[d1].sum()),
        int(d1.sum()),
        int(errors[d2].sum()),
        int(d2.sum()),
        seed,
        mixed=True,
    )
