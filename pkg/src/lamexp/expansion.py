"""Arithmetic of binary power sums x = sum_i w_i * lam**i for a ratio lam in (1/2, 1).

Evaluation of digit words, enumeration of the n-th level sum sets with
collision detection, growth-rate estimates of those sets, greedy search for
unit-sum witness words, and the affine collapse test that characterises
multinacci ratios.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

DEFAULT_LEVEL_CAP = 28
DEFAULT_MERGE_TOL = 1e-10

MULTINACCI_IDENTITY_TOL = 1e-12


class LevelTooLargeError(ValueError):
    """Requested level exceeds the enumeration cap (2**n values are materialised)."""


def _multinacci_defect(value: float, m: int) -> float:
    # lam^m + ... + lam - 1, evaluated by Horner from the highest power
    acc = 0.0
    for _ in range(m):
        acc = value * (1.0 + acc)
    return acc - 1.0


@dataclass(frozen=True)
class Lambda:
    """A contraction ratio in (1/2, 1), optionally tagged as the order-m multinacci root."""

    value: float
    multinacci_order: Optional[int] = None

    def __post_init__(self):
        if not 0.5 < self.value < 1.0:
            raise ValueError(f"lambda must lie in (1/2, 1), got {self.value!r}")
        m = self.multinacci_order
        if m is not None:
            if m < 2:
                raise ValueError("multinacci order must be >= 2")
            defect = _multinacci_defect(self.value, m)
            if abs(defect) >= MULTINACCI_IDENTITY_TOL:
                raise ValueError(
                    f"value {self.value!r} is not the order-{m} multinacci root "
                    f"(identity defect {defect:.3e})"
                )


def as_lambda(lam) -> Lambda:
    """Coerce a float or Lambda to Lambda."""
    if isinstance(lam, Lambda):
        return lam
    return Lambda(float(lam))


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"interval endpoints out of order: [{self.lo}, {self.hi}]")

    @property
    def diameter(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains_point(self, x: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= x <= self.hi + slack

    def contains(self, other: "Interval", slack: float = 0.0) -> bool:
        return self.lo - slack <= other.lo and other.hi <= self.hi + slack

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            return None
        return Interval(lo, hi)


def validate_word(word: Sequence[int]) -> tuple:
    bits = tuple(int(b) for b in word)
    if any(b not in (0, 1) for b in bits):
        raise ValueError(f"word must be over {{0,1}}, got {word!r}")
    return bits


@dataclass
class LevelSet:
    """Deduplicated, sorted n-th level sums.

    ``values`` holds one representative per merge cluster (the smallest member);
    consecutive representatives differ by more than ``merge_tol``.  ``raw_count``
    is the number of words (2**n), ``raw_distinct`` the number of values distinct
    under exact float equality.
    """

    n: int
    values: np.ndarray
    merge_tol: float
    raw_count: int
    raw_distinct: int

    @property
    def count(self) -> int:
        return int(self.values.size)


def lambda_interval(lam) -> Interval:
    """The closed interval [0, lam/(1-lam)] of all infinite-word sums."""
    v = as_lambda(lam).value
    return Interval(0.0, v / (1.0 - v))


def eval_word(lam, word: Sequence[int]) -> float:
    """sum_{i=1..n} w_i * lam**i, summed by Horner from the highest index."""
    v = as_lambda(lam).value
    acc = 0.0
    for b in reversed(validate_word(word)):
        acc = v * (b + acc)
    return acc


def g_map(lam, word: Sequence[int], x: float) -> float:
    """The affine map g_w(x) = sum w_i lam**i + lam**n x; g of the empty word is the identity."""
    v = as_lambda(lam).value
    bits = validate_word(word)
    return eval_word(v, bits) + v ** len(bits) * x


def lambda_digits(lam, x: float, n: int) -> tuple:
    """Greedy digit word of length n for x in [0, lam/(1-lam)]: take lam**i whenever it fits.

    The remainder after each step stays within the capacity of the tail, so x
    always lies in g_{w}(I) for the returned prefix w.
    """
    v = as_lambda(lam).value
    hi = v / (1.0 - v)
    if not 0.0 <= x <= hi * (1.0 + 1e-12):
        raise ValueError(f"x={x!r} outside [0, {hi!r}]")
    rem = float(x)
    pw = 1.0
    bits = []
    for _ in range(n):
        pw *= v
        if rem >= pw:
            bits.append(1)
            rem -= pw
        else:
            bits.append(0)
    return tuple(bits)


def _fill_level_buffer(v: float, n: int, out: np.ndarray) -> None:
    # After step j the first 2**j entries are the level-j sums (Horner order:
    # each step maps the set S to {v*s, v*(1+s)}), so the buffer passes through
    # every level on the way to level n.
    out[0] = 0.0
    size = 1
    for _ in range(n):
        out[size : 2 * size] = v * (1.0 + out[:size])
        out[:size] *= v
        size *= 2


def _merged_sorted(values: np.ndarray, merge_tol: float) -> np.ndarray:
    srt = np.sort(values)
    if srt.size == 0:
        return srt
    keep = np.empty(srt.size, dtype=bool)
    keep[0] = True
    np.greater(np.diff(srt), merge_tol, out=keep[1:])
    return srt[keep]


def enumerate_level(
    lam,
    n: int,
    merge_tol: float = DEFAULT_MERGE_TOL,
    n_cap: int = DEFAULT_LEVEL_CAP,
) -> LevelSet:
    """All distinct n-th level sums, with gap-<=merge_tol clusters merged.

    Raises LevelTooLargeError above the cap: the enumeration holds 2**n floats.
    """
    lam = as_lambda(lam)
    if n < 1:
        raise ValueError("level must be >= 1")
    if n > n_cap:
        raise LevelTooLargeError(f"level {n} exceeds cap {n_cap}")
    if merge_tol < 0:
        raise ValueError("merge_tol must be >= 0")
    buf = np.empty(2**n, dtype=np.float64)
    _fill_level_buffer(lam.value, n, buf)
    buf.sort()
    raw_distinct = int(np.count_nonzero(np.diff(buf) > 0.0)) + 1
    merged = _merged_sorted(buf, merge_tol)
    return LevelSet(
        n=n,
        values=merged,
        merge_tol=merge_tol,
        raw_count=2**n,
        raw_distinct=raw_distinct,
    )


def tau_estimate(
    lam,
    n_max: int,
    merge_tol: float = DEFAULT_MERGE_TOL,
    n_cap: int = DEFAULT_LEVEL_CAP,
) -> list:
    """Normalised log-counts (n, log2(#level-n)/n) for n = 1..n_max.

    Finite-depth data only; the sequence approaches the growth exponent from
    above but no convergence claim is attached to any single entry.
    """
    lam = as_lambda(lam)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if n_max > n_cap:
        raise LevelTooLargeError(f"n_max {n_max} exceeds cap {n_cap}")
    buf = np.empty(2**n_max, dtype=np.float64)
    buf[0] = 0.0
    size = 1
    out = []
    v = lam.value
    for level in range(1, n_max + 1):
        buf[size : 2 * size] = v * (1.0 + buf[:size])
        buf[:size] *= v
        size *= 2
        srt = np.sort(buf[:size])
        count = int(np.count_nonzero(np.diff(srt) > merge_tol)) + 1
        out.append((level, float(np.log2(count) / level)))
    return out


def gamma_witness(
    lam,
    n_max: int = 40,
    tol: float = 1e-10,
    exhaustive: bool = False,
    exhaustive_cap: int = 24,
) -> Optional[tuple]:
    """A word w with |sum w_i lam**i - 1| <= tol, or None.

    Greedy rule: w_i = 1 iff adding lam**i keeps the partial sum <= 1 (up to
    tol, so witnesses are not lost to rounding).  The exhaustive mode searches
    all words of length <= n_max by meet-in-the-middle; greedy may miss
    non-greedy witnesses, exhaustive may not.
    """
    v = as_lambda(lam).value
    partial = 0.0
    pw = 1.0
    bits = []
    for _ in range(n_max):
        pw *= v
        if partial + pw <= 1.0 + tol:
            partial += pw
            bits.append(1)
            if abs(partial - 1.0) <= tol:
                return tuple(bits)
        else:
            bits.append(0)
    if not exhaustive:
        return None
    if n_max > exhaustive_cap:
        raise LevelTooLargeError(
            f"exhaustive witness search capped at length {exhaustive_cap}"
        )
    half = n_max // 2
    lows = [(0.0, 0)]
    for i in range(1, half + 1):
        term = v**i
        lows += [(s + term, idx | (1 << (i - 1))) for s, idx in lows]
    highs = [(0.0, 0)]
    for i in range(half + 1, n_max + 1):
        term = v**i
        highs += [(s + term, idx | (1 << (i - 1))) for s, idx in highs]
    highs.sort()
    high_sums = [s for s, _ in highs]
    import bisect

    for s_low, idx_low in sorted(lows, key=lambda p: p[1]):
        lo_pos = bisect.bisect_left(high_sums, 1.0 - tol - s_low)
        hi_pos = bisect.bisect_right(high_sums, 1.0 + tol - s_low)
        if lo_pos < hi_pos:
            idx = idx_low | highs[lo_pos][1]
            length = idx.bit_length()
            return tuple((idx >> i) & 1 for i in range(length))
    return None


def _compose_affine(outer, inner):
    # (a, b) represents x -> a*x + b
    return (outer[0] * inner[0], outer[0] * inner[1] + outer[1])


def collapse_check(lam, m: int, tol: float = 1e-12) -> bool:
    """True iff S1 o S2^m and S2 o S1^m coincide as affine maps (within tol).

    S1: x -> lam*x and S2: x -> lam*(x+1).  Slopes agree automatically; the
    intercepts differ by lam*(lam**m + ... + lam - 1), so equality detects the
    order-m multinacci identity.
    """
    v = as_lambda(lam).value
    if m < 2:
        raise ValueError("m must be >= 2")
    s1 = (v, 0.0)
    s2 = (v, v)
    comp_a = s2
    for _ in range(m - 1):
        comp_a = _compose_affine(comp_a, s2)
    comp_a = _compose_affine(s1, comp_a)
    comp_b = s1
    for _ in range(m - 1):
        comp_b = _compose_affine(comp_b, s1)
    comp_b = _compose_affine(s2, comp_b)
    return abs(comp_a[0] - comp_b[0]) < tol and abs(comp_a[1] - comp_b[1]) < tol
