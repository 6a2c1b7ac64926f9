"""Pair-proximity statistics of binary power sums, in value space and parameter space.

Counts of word pairs whose sums lie within r*lam**(n+k) of each other, the
recursive inequality linking the full and first-letter-restricted counts,
solution intervals of |sum c_i lam**i| <= gamma over (1/2, 2/3), the
derivative-drop certificate for {-1,0,1} polynomials with constant term 1,
and the exceptional-parameter scan.

A binary64 lam is the exact rational M / 2**E, so proximity counts are
computed in integer arithmetic: the comparison |sum (w_i - k_i) lam**i| <=
r*lam**(n+k) scales to |A - B| <= floor(r*M**(n+k) / 2**(E*k)) with A, B the
integer-scaled word sums.  Counts are therefore exact, tie cases included.
"""
from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .expansion import Interval, Lambda, LevelTooLargeError, as_lambda

DEFAULT_PAIR_CAP = 16
HARD_PAIR_CAP = 20

PARAM_LO = 0.5
PARAM_HI = 2.0 / 3.0


class VerificationError(RuntimeError):
    """An asserted counting inequality failed on a concrete instance."""


class PreconditionError(ValueError):
    """Operation invoked outside its stated parameter range."""


@dataclass(frozen=True)
class SignedPoly:
    """p(lam) = sum_i c_i lam**i with c_i in {-1,0,1}, indexed from exponent 1."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(int(c) for c in self.coeffs))
        if any(c not in (-1, 0, 1) for c in self.coeffs):
            raise ValueError("coefficients must be in {-1, 0, 1}")

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    def __call__(self, lam: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = lam * (c + acc)
        return acc

    def derivative(self, lam: float) -> float:
        acc = 0.0
        for i in range(self.degree, 0, -1):
            acc = acc * lam + i * self.coeffs[i - 1]
        return acc


def as_signed_poly(diff) -> SignedPoly:
    if isinstance(diff, SignedPoly):
        return diff
    return SignedPoly(tuple(diff))


@dataclass
class ProximityCount:
    n: int
    k: int
    r: int
    tilde_count: int
    restricted_count: int

    def __post_init__(self):
        if not 0 <= self.restricted_count <= self.tilde_count <= 4**self.n:
            raise ValueError("counts out of range")
        if self.tilde_count < 2**self.n:
            raise ValueError("diagonal pairs missing from tilde count")


@dataclass
class ParamIntervalSet:
    intervals: List[Interval]

    def __post_init__(self):
        ivs = sorted(self.intervals, key=lambda iv: iv.lo)
        for a, b in zip(ivs, ivs[1:]):
            if b.lo <= a.hi:
                raise ValueError("parameter intervals must be pairwise disjoint")
        for iv in ivs:
            if iv.lo < PARAM_LO - 1e-15 or iv.hi > PARAM_HI + 1e-15:
                raise ValueError("parameter interval escapes (1/2, 2/3)")
        self.intervals = ivs

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)


@dataclass
class ProximityReport:
    n: int
    k: int
    r: int
    lhs: int
    rhs: int
    holds: bool
    restricted_by_level: List[int]


# --------------------------------------------------------------------------
# exact scaled-integer machinery


def _dyadic(lam: float) -> Tuple[int, int]:
    """lam as M / 2**E with E the exact binary exponent of the denominator."""
    num, den = float(lam).as_integer_ratio()
    e = den.bit_length() - 1
    assert den == 1 << e
    return num, e


def _scaled_level_values(m_num: int, e: int, n: int) -> List[int]:
    """Integer sums V(word) = sum_i w_i M**i 2**(E(n-i)); index bit i-1 is digit w_i."""
    vals = [0]
    for i in range(1, n + 1):
        term = m_num**i * (1 << (e * (n - i)))
        vals += [v + term for v in vals]
    return vals


def _window_count(sorted_a: Sequence[int], sorted_b: Sequence[int], width: int) -> int:
    """Ordered pairs (a, b) with |a - b| <= width, by a sliding window."""
    total = 0
    lo = hi = 0
    nb = len(sorted_b)
    for a in sorted_a:
        low_bound = a - width
        high_bound = a + width
        while lo < nb and sorted_b[lo] < low_bound:
            lo += 1
        if hi < lo:
            hi = lo
        while hi < nb and sorted_b[hi] <= high_bound:
            hi += 1
        total += hi - lo
    return total


class _LevelCache:
    """Sorted integer-scaled word sums for one lam, per level, with the
    first-digit split used by the restricted counts."""

    def __init__(self, lam: float, n_max: int):
        self.m_num, self.e = _dyadic(lam)
        self.n_max = n_max
        self.all_sorted = {}
        self.ones_sorted = {}
        self.zeros_sorted = {}
        for n in range(1, n_max + 1):
            vals = _scaled_level_values(self.m_num, self.e, n)
            ones = [v for idx, v in enumerate(vals) if idx & 1]
            zeros = [v for idx, v in enumerate(vals) if not idx & 1]
            self.all_sorted[n] = sorted(vals)
            self.ones_sorted[n] = sorted(ones)
            self.zeros_sorted[n] = sorted(zeros)

    def width(self, n: int, k: int, r: int) -> int:
        return (r * self.m_num ** (n + k)) >> (self.e * k)

    def tilde(self, n: int, k: int, r: int) -> int:
        s = self.all_sorted[n]
        return _window_count(s, s, self.width(n, k, r))

    def restricted(self, n: int, k: int, r: int) -> int:
        return 2 * _window_count(
            self.ones_sorted[n], self.zeros_sorted[n], self.width(n, k, r)
        )


def _check_pair_cap(n: int, n_cap: int) -> None:
    if n < 1:
        raise ValueError("level must be >= 1")
    if n > min(n_cap, HARD_PAIR_CAP):
        raise LevelTooLargeError(
            f"pair level {n} exceeds cap {min(n_cap, HARD_PAIR_CAP)}"
        )


def proximity_counts(lam, n: int, k: int, r: int, n_cap: int = DEFAULT_PAIR_CAP) -> ProximityCount:
    """Exact counts of ordered word pairs with |sum (w_i-k_i) lam**i| <= r lam**(n+k).

    tilde counts all pairs; restricted only those differing in the first digit.
    """
    lam = as_lambda(lam)
    _check_pair_cap(n, n_cap)
    if k < 0 or r < 1:
        raise ValueError("need k >= 0 and r >= 1")
    cache = _LevelCache(lam.value, n)
    return ProximityCount(
        n=n,
        k=k,
        r=r,
        tilde_count=cache.tilde(n, k, r),
        restricted_count=cache.restricted(n, k, r),
    )


def verify_proximity_inequality(
    lam, n: int, k: int, r: int, n_cap: int = DEFAULT_PAIR_CAP
) -> ProximityReport:
    """Exact check of tilde_n <= 2**n + sum_l 2**(n-l) restricted_l."""
    lam = as_lambda(lam)
    _check_pair_cap(n, n_cap)
    cache = _LevelCache(lam.value, n)
    lhs = cache.tilde(n, k, r)
    per_level = [cache.restricted(l, k, r) for l in range(1, n + 1)]
    rhs = 2**n + sum(2 ** (n - l) * p for l, p in enumerate(per_level, start=1))
    return ProximityReport(
        n=n, k=k, r=r, lhs=lhs, rhs=rhs, holds=lhs <= rhs, restricted_by_level=per_level
    )


def scan_proximity_inequality(
    lams: Iterable,
    n_max: int,
    k_max: int,
    r_values: Sequence[int],
    n_cap: int = DEFAULT_PAIR_CAP,
):
    """verify_proximity_inequality over a grid, reusing per-lam level caches.

    Yields ProximityReport rows in (lam, n, k, r) order together with the lam.
    """
    _check_pair_cap(n_max, n_cap)
    for lam in lams:
        lam = as_lambda(lam)
        cache = _LevelCache(lam.value, n_max)
        for k in range(k_max + 1):
            for r in r_values:
                per_level = [cache.restricted(l, k, r) for l in range(1, n_max + 1)]
                for n in range(1, n_max + 1):
                    lhs = cache.tilde(n, k, r)
                    rhs = 2**n + sum(
                        2 ** (n - l) * per_level[l - 1] for l in range(1, n + 1)
                    )
                    yield lam, ProximityReport(
                        n=n,
                        k=k,
                        r=r,
                        lhs=lhs,
                        rhs=rhs,
                        holds=lhs <= rhs,
                        restricted_by_level=per_level[:n],
                    )


# --------------------------------------------------------------------------
# generic float pair counting and the translation scan


def count_near_pairs(values_a: Sequence[float], values_b: Sequence[float], r: float) -> int:
    """Ordered pairs (x, y) with |x - y| <= r, by sort plus sliding window."""
    if r < 0:
        raise ValueError("r must be >= 0")
    a = sorted(float(v) for v in values_a)
    b = sorted(float(v) for v in values_b)
    total = 0
    lo = hi = 0
    nb = len(b)
    for x in a:
        while lo < nb and x - b[lo] > r:
            lo += 1
        if hi < lo:
            hi = lo
        while hi < nb and b[hi] - x <= r:
            hi += 1
        total += hi - lo
    return total


@dataclass
class TranslationScanResult:
    trials: int
    seed: int
    max_ratio: float
    below_two: bool
    argmax_instance: dict


def _random_value_set(rng) -> np.ndarray:
    n = int(rng.integers(2, 41))
    style = int(rng.integers(0, 4))
    if style == 0:
        vals = rng.uniform(0.0, 1.0, n)
    elif style == 1:
        vals = rng.normal(0.0, 1.0, n)
    elif style == 2:
        vals = rng.integers(0, 10, n).astype(float) + rng.uniform(-1e-3, 1e-3, n)
    else:
        centers = rng.uniform(0.0, 5.0, max(1, n // 5))
        vals = rng.choice(centers, n) + rng.uniform(-0.05, 0.05, n)
    return vals


def translation_ratio_scan(trials: int, seed: int) -> TranslationScanResult:
    """Max of N_r(phi, phi + t) / N_r(phi, phi) over random instances.

    Raises VerificationError if any ratio exceeds 4.  Whether the empirical
    max stays below 2 is reported but not asserted.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    max_ratio = 0.0
    argmax = {}
    for trial in range(trials):
        vals = _random_value_set(rng)
        spread = float(np.max(vals) - np.min(vals)) or 1.0
        t = float(rng.choice([0.0, rng.uniform(-2, 2), rng.uniform(-spread, spread)]))
        r = float(rng.choice([rng.uniform(0, 0.1), rng.uniform(0, spread)]))
        base = count_near_pairs(vals, vals, r)
        shifted = count_near_pairs(vals, vals + t, r)
        ratio = shifted / base  # base >= len(vals) > 0 from diagonal pairs
        if ratio > max_ratio:
            max_ratio = ratio
            argmax = {
                "trial": trial,
                "values": [float(v) for v in vals],
                "t": t,
                "r": r,
                "base": base,
                "shifted": shifted,
            }
        if ratio > 4.0:
            raise VerificationError(
                f"translation ratio {ratio} exceeds 4 on instance {argmax}"
            )
    return TranslationScanResult(
        trials=trials,
        seed=seed,
        max_ratio=max_ratio,
        below_two=max_ratio < 2.0,
        argmax_instance=argmax,
    )


# --------------------------------------------------------------------------
# parameter intervals and the derivative-drop certificate


def _poly_bounds_slope(poly: SignedPoly) -> float:
    # |p'| <= sum i |c_i| (2/3)**(i-1) on the domain
    return sum(
        i * abs(c) * PARAM_HI ** (i - 1) for i, c in enumerate(poly.coeffs, start=1)
    )


def _refine_boundary(poly: SignedPoly, gamma: float, inside: float, outside: float, tol: float) -> float:
    """Bisect |p| - gamma between an inside and an outside point."""
    for _ in range(200):
        if abs(outside - inside) <= tol:
            break
        mid = 0.5 * (inside + outside)
        if abs(poly(mid)) <= gamma:
            inside = mid
        else:
            outside = mid
    return inside


def param_interval(
    diff,
    gamma: float,
    grid_step: float = 1e-5,
    refine_tol: float = 1e-12,
) -> ParamIntervalSet:
    """Solution set of |p(lam)| <= gamma inside (1/2, 2/3).

    Inside points are located on a grid; near-miss segments (within the
    derivative bound of the threshold) are subdivided so that solution
    intervals wider than about gamma over the slope bound are not missed.
    Boundaries are refined by bisection to refine_tol.
    """
    poly = as_signed_poly(diff)
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    if all(c == 0 for c in poly.coeffs):
        return ParamIntervalSet([Interval(PARAM_LO, PARAM_HI)])
    if gamma == 0:
        gamma = 0.0  # zero-width target; only exact grid roots can be found

    slope = max(_poly_bounds_slope(poly), 1e-30)
    grid = np.arange(PARAM_LO, PARAM_HI + grid_step, grid_step)
    grid = grid[(grid >= PARAM_LO) & (grid <= PARAM_HI)]
    vals = np.array([poly(x) for x in grid])
    inside_mask = np.abs(vals) <= gamma

    inside_points = list(grid[inside_mask])

    # subdivide near-miss segments that the grid may have stepped over
    h_min = max(gamma / (8.0 * slope), 1e-13)
    near = np.abs(vals) <= gamma + slope * grid_step
    stack = []
    for i in range(len(grid) - 1):
        if (near[i] or near[i + 1]) and not (inside_mask[i] or inside_mask[i + 1]):
            stack.append((float(grid[i]), float(grid[i + 1])))
    while stack:
        a, b = stack.pop()
        h = b - a
        if h <= h_min:
            continue
        mid = 0.5 * (a + b)
        pm = poly(mid)
        if abs(pm) <= gamma:
            inside_points.append(mid)
            continue
        if abs(pm) <= gamma + slope * h:
            stack.append((a, mid))
            stack.append((mid, b))

    if not inside_points:
        return ParamIntervalSet([])

    inside_points.sort()
    # group seeds into candidate intervals, then refine each boundary
    intervals = []
    cur_lo = cur_hi = inside_points[0]
    groups = []
    for x in inside_points[1:]:
        if x - cur_hi <= max(grid_step, 4 * h_min) and abs(poly(0.5 * (cur_hi + x))) <= gamma:
            cur_hi = x
        else:
            groups.append((cur_lo, cur_hi))
            cur_lo = cur_hi = x
    groups.append((cur_lo, cur_hi))

    for lo_seed, hi_seed in groups:
        lo = PARAM_LO
        if lo_seed - grid_step > PARAM_LO:
            out = lo_seed - grid_step
            while abs(poly(out)) <= gamma and out - grid_step > PARAM_LO:
                out -= grid_step
            if abs(poly(out)) <= gamma:
                lo = PARAM_LO
            else:
                lo = _refine_boundary(poly, gamma, lo_seed, out, refine_tol)
        hi = PARAM_HI
        if hi_seed + grid_step < PARAM_HI:
            out = hi_seed + grid_step
            while abs(poly(out)) <= gamma and out + grid_step < PARAM_HI:
                out += grid_step
            if abs(poly(out)) <= gamma:
                hi = PARAM_HI
            else:
                hi = _refine_boundary(poly, gamma, hi_seed, out, refine_tol)
        lo = max(lo, PARAM_LO)
        hi = min(hi, PARAM_HI)
        if intervals and lo <= intervals[-1].hi + refine_tol:
            intervals[-1] = Interval(intervals[-1].lo, max(intervals[-1].hi, hi))
        else:
            intervals.append(Interval(lo, hi))
    return ParamIntervalSet(intervals)


DELTA_LADDER = tuple(0.5 * 0.8**j for j in range(60))


def estimate_delta(
    max_degree: int,
    grid_step: float,
    eps: float = 0.01,
    seed: int = 0,
    n_random: int = 100_000,
    exhaustive_limit: int = 12,
) -> float:
    """Empirical certificate delta for the derivative-drop implication.

    For every checked polynomial g(lam) = 1 + sum a_i lam**i with a_i in
    {-1,0,1} and every grid lam in (1/2, 2/3 - eps), the returned delta
    satisfies: g(lam) < delta implies g'(lam) < -delta.  Polynomials are
    enumerated exhaustively up to degree exhaustive_limit and sampled beyond;
    the value certifies the checked family only.
    """
    if max_degree < 0 or max_degree > 20:
        raise ValueError("max_degree must be in [0, 20]")
    hi = PARAM_HI - eps
    if hi <= PARAM_LO:
        raise ValueError("eps leaves an empty domain")
    grid = np.arange(PARAM_LO + grid_step, hi, grid_step)
    if grid.size == 0:
        grid = np.array([0.5 * (PARAM_LO + hi)])

    # the floor of max(g, -g') over everything checked bounds usable deltas
    floor = math.inf

    def scan_coeff_block(coeff_block: np.ndarray) -> float:
        if coeff_block.size == 0:
            return math.inf
        d = coeff_block.shape[1]
        powers = np.vstack([grid**i for i in range(1, d + 1)])
        dpowers = np.vstack([i * grid ** (i - 1) for i in range(1, d + 1)])
        g = 1.0 + coeff_block @ powers
        gprime = coeff_block @ dpowers
        return float(np.min(np.maximum(g, -gprime)))

    if max_degree == 0:
        floor = 1.0  # g == 1, g' == 0: max(1, 0) = 1
    else:
        d_ex = min(max_degree, exhaustive_limit)
        block = []
        for coeffs in itertools.product((-1.0, 0.0, 1.0), repeat=d_ex):
            block.append(coeffs)
            if len(block) == 4096:
                floor = min(floor, scan_coeff_block(np.array(block)))
                block = []
        if block:
            floor = min(floor, scan_coeff_block(np.array(block)))
        if max_degree > exhaustive_limit:
            rng = np.random.default_rng(seed)
            remaining = n_random
            while remaining > 0:
                take = min(remaining, 4096)
                coeffs = rng.integers(-1, 2, size=(take, max_degree)).astype(float)
                floor = min(floor, scan_coeff_block(coeffs))
                remaining -= take

    for delta in DELTA_LADDER:
        if delta < floor:
            return delta
    return 0.0


def verify_interval_diameter(diff, gamma: float, delta: float) -> bool:
    """True iff every solution interval of |p| <= gamma has diameter <= 4*gamma/delta.

    Requires gamma in (0, delta/2) and a leading coefficient of +-1.
    """
    poly = as_signed_poly(diff)
    if not poly.coeffs or poly.coeffs[0] not in (-1, 1):
        raise PreconditionError("leading coefficient must be +-1")
    if not 0 < gamma < delta / 2:
        raise PreconditionError(f"need gamma in (0, delta/2), got gamma={gamma}, delta={delta}")
    bound = 4.0 * gamma / delta
    solution = param_interval(poly, gamma)
    return all(iv.diameter <= bound * (1 + 1e-9) for iv in solution)


# --------------------------------------------------------------------------
# exceptional-parameter scan and the tail constant


def rational_grid(count: int) -> List[Fraction]:
    """count exact rationals evenly placed inside (1/2, 2/3)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    den = 6 * (count + 1)
    return [Fraction(3 * (count + 1) + j, den) for j in range(1, count + 1)]


@dataclass
class ExceptionalRow:
    lam: Fraction
    n: int
    k: int
    restricted: int
    threshold: float
    flagged: bool


def exceptional_scan(
    s: float,
    r: int,
    n_values: Sequence[int],
    k_max: int,
    grid,
    n_cap: int = DEFAULT_PAIR_CAP,
) -> List[ExceptionalRow]:
    """Flag grid ratios whose restricted count exceeds 4**n lam**(s(n+k)).

    grid may be an integer (evenly spaced exact rationals in (1/2, 2/3)) or an
    iterable of Fractions/floats.  Rows are emitted for every (lam, n, k).
    """
    if not 0 < s < 1:
        raise ValueError("s must be in (0, 1)")
    if isinstance(grid, int):
        grid = rational_grid(grid)
    rows = []
    for lam in grid:
        frac = lam if isinstance(lam, Fraction) else Fraction(float(lam)).limit_denominator(10**12)
        value = float(frac)
        n_top = max(n_values)
        _check_pair_cap(n_top, n_cap)
        cache = _LevelCache(value, n_top)
        for n in sorted(n_values):
            for k in range(k_max + 1):
                count = cache.restricted(n, k, r)
                threshold = 4.0**n * value ** (s * (n + k))
                rows.append(
                    ExceptionalRow(
                        lam=frac,
                        n=n,
                        k=k,
                        restricted=count,
                        threshold=threshold,
                        flagged=count > threshold,
                    )
                )
    return rows


def constant_of_r(lam, r: int, n0: int, n_cap: int = DEFAULT_PAIR_CAP) -> float:
    """C = 1 + sum_{l<=n0} 2**-l restricted_l(lam, 0, r)."""
    lam = as_lambda(lam)
    if n0 < 0:
        raise ValueError("n0 must be >= 0")
    if n0 == 0:
        return 1.0
    _check_pair_cap(n0, n_cap)
    cache = _LevelCache(lam.value, n0)
    return 1.0 + sum(cache.restricted(l, 0, r) / 2**l for l in range(1, n0 + 1))


@dataclass
class ConstantBoundReport:
    c: float
    s: float
    scan_clear: bool
    bound_holds: bool
    failures: List[tuple]


def check_constant_bound(
    lam, r: int, n0: int, s: float, n_max: int, k_max: int, n_cap: int = DEFAULT_PAIR_CAP
) -> ConstantBoundReport:
    """Companion check: tilde_n <= C 2**n + 4**n n lam**(s(n+k)) for n <= n_max.

    The bound is only claimed when the scan finds no exceptional witness
    (restricted_n > 4**n lam**(s(n+k))) for n0 < n <= n_max at the tested
    depths; scan_clear reports that.
    """
    lam = as_lambda(lam)
    _check_pair_cap(n_max, n_cap)
    c = constant_of_r(lam, r, n0, n_cap=n_cap)
    cache = _LevelCache(lam.value, n_max)
    scan_clear = True
    for n in range(n0 + 1, n_max + 1):
        for k in range(k_max + 1):
            if cache.restricted(n, k, r) > 4.0**n * lam.value ** (s * (n + k)):
                scan_clear = False
    failures = []
    for n in range(1, n_max + 1):
        for k in range(k_max + 1):
            tilde = cache.tilde(n, k, r)
            bound = c * 2**n + 4.0**n * n * lam.value ** (s * (n + k))
            if tilde > bound:
                failures.append((n, k, tilde, bound))
    return ConstantBoundReport(
        c=c,
        s=s,
        scan_clear=scan_clear,
        bound_holds=not failures,
        failures=failures,
    )
