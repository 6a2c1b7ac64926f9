import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from lamexp.betashift import multinacci
from lamexp.expansion import Interval, LevelTooLargeError
from lamexp.proximity import (
    ParamIntervalSet,
    PreconditionError,
    SignedPoly,
    check_constant_bound,
    constant_of_r,
    count_near_pairs,
    estimate_delta,
    exceptional_scan,
    param_interval,
    proximity_counts,
    rational_grid,
    scan_proximity_inequality,
    translation_ratio_scan,
    verify_interval_diameter,
    verify_proximity_inequality,
)


def quadratic_pair_oracle(values_a, values_b, r):
    return sum(1 for x in values_a for y in values_b if abs(x - y) <= r)


def fraction_proximity_oracle(lam, n, k, r):
    """Exact 4**n double loop over word pairs using rational arithmetic."""
    f = Fraction(lam)
    threshold = r * f ** (n + k)
    sums = []
    for idx in range(2**n):
        sums.append(sum(((idx >> (i - 1)) & 1) * f**i for i in range(1, n + 1)))
    tilde = 0
    restricted = 0
    for a_idx, a in enumerate(sums):
        for b_idx, b in enumerate(sums):
            if abs(a - b) <= threshold:
                tilde += 1
                if (a_idx & 1) != (b_idx & 1):
                    restricted += 1
    return tilde, restricted


def test_count_near_pairs_trivial():
    assert count_near_pairs([1.0, 2.0], [1.0, 2.0], 1.0) == 4
    vals = [0.1, 0.5, 0.9, 1.7]
    assert count_near_pairs(vals, vals, 0.0) == len(vals)
    assert count_near_pairs([], [1.0], 2.0) == 0


def test_count_near_pairs_matches_quadratic_oracle():
    rng = np.random.default_rng(41)
    for _ in range(40):
        na, nb = rng.integers(1, 201, 2)
        a = rng.normal(0, 1, na)
        b = rng.normal(0, 1, nb)
        r = float(rng.uniform(0, 2))
        assert count_near_pairs(a, b, r) == quadratic_pair_oracle(a, b, r)


def test_count_near_pairs_symmetry_and_scaling():
    rng = np.random.default_rng(43)
    for _ in range(20):
        a = rng.uniform(0, 3, int(rng.integers(2, 60)))
        b = rng.uniform(0, 3, int(rng.integers(2, 60)))
        r = float(rng.choice([0.25, 0.5, 2.0, 4.0]))  # powers of two scale exactly
        assert count_near_pairs(a, b, r) == count_near_pairs(b, a, r)
        assert count_near_pairs(a, b, r) == count_near_pairs(a / r, b / r, 1.0)


def test_proximity_counts_level_one():
    for lam in (0.52, 0.61, 0.66):
        pc = proximity_counts(lam, 1, 0, 1)
        assert pc.tilde_count == 4
        assert pc.restricted_count == 2


def test_proximity_counts_match_fraction_oracle():
    cases = [
        (0.6, 2, 0, 1),
        (0.6, 4, 1, 1),
        (0.55, 5, 2, 2),
        (0.638, 6, 0, 1),
        (multinacci(2).value, 6, 1, 2),
        (0.52, 7, 3, 1),
    ]
    for lam, n, k, r in cases:
        pc = proximity_counts(lam, n, k, r)
        tilde, restricted = fraction_proximity_oracle(lam, n, k, r)
        assert pc.tilde_count == tilde, (lam, n, k, r)
        assert pc.restricted_count == restricted, (lam, n, k, r)


def test_proximity_counts_golden_collisions():
    lam = multinacci(2)
    pc = proximity_counts(lam, 3, 0, 1)
    # diagonal plus the exact 011/100 collision in both orders, at least
    assert pc.tilde_count >= 2**3 + 2


def test_proximity_counts_monotone_in_k_and_r():
    lam = 0.57
    base = proximity_counts(lam, 6, 2, 1)
    assert proximity_counts(lam, 6, 1, 1).tilde_count >= base.tilde_count
    assert proximity_counts(lam, 6, 2, 2).tilde_count >= base.tilde_count
    assert proximity_counts(lam, 6, 1, 1).restricted_count >= base.restricted_count


def test_proximity_counts_cap():
    with pytest.raises(LevelTooLargeError):
        proximity_counts(0.6, 17, 0, 1)


def test_proximity_inequality_level_one_equality():
    report = verify_proximity_inequality(0.6, 1, 0, 1)
    assert report.lhs == 4
    assert report.rhs == 4
    assert report.holds


def test_proximity_inequality_single_case():
    report = verify_proximity_inequality(0.55, 8, 3, 2)
    assert report.holds


def test_proximity_inequality_small_grid():
    lams = [float(f) for f in rational_grid(8)]
    for lam, report in scan_proximity_inequality(lams, n_max=7, k_max=2, r_values=(1, 2)):
        assert report.holds, (lam, report)
        # the first-difference decomposition makes the two sides equal
        assert report.lhs == report.rhs


def test_translation_trivial_cases():
    vals = [0.3, 1.1, 2.7]
    assert count_near_pairs(vals, vals, 0.5) == count_near_pairs(vals, [v + 0.0 for v in vals], 0.5)
    const = [1.0] * 7
    shifted = [1.25] * 7
    assert count_near_pairs(const, shifted, 0.5) == 49
    assert count_near_pairs(const, const, 0.5) == 49


def test_translation_ratio_scan():
    res = translation_ratio_scan(2000, seed=99)
    assert res.max_ratio <= 4.0
    assert res.argmax_instance
    # determinism
    again = translation_ratio_scan(2000, seed=99)
    assert again.max_ratio == res.max_ratio


def test_param_interval_simple():
    assert len(param_interval((1,), 0.3)) == 0

    sol = param_interval((1,), 0.55)
    assert len(sol) == 1
    iv = sol.intervals[0]
    assert iv.lo == pytest.approx(0.5, abs=1e-12)
    assert iv.hi == pytest.approx(0.55, abs=1e-9)


def test_param_interval_golden_root():
    # p = lam - lam^2 - lam^3 vanishes at the golden ratio
    sol = param_interval((1, -1, -1), 1e-6)
    assert len(sol) == 1
    iv = sol.intervals[0]
    golden = multinacci(2).value
    assert iv.lo < golden < iv.hi
    assert iv.diameter < 2e-6


def test_param_interval_degenerate():
    sol = param_interval((0, 0, 0), 0.5)
    assert len(sol) == 1
    assert sol.intervals[0].lo == 0.5
    assert sol.intervals[0].hi == pytest.approx(2 / 3, abs=1e-15)


def test_param_interval_stays_in_domain_and_disjoint():
    rng = np.random.default_rng(7)
    for _ in range(25):
        deg = int(rng.integers(1, 9))
        coeffs = tuple(int(c) for c in rng.integers(-1, 2, deg))
        gamma = float(rng.choice([1e-4, 1e-3, 1e-2, 0.2]))
        sol = param_interval(coeffs, gamma)
        prev_hi = None
        for iv in sol:
            assert 0.5 - 1e-12 <= iv.lo <= iv.hi <= 2 / 3 + 1e-12
            if prev_hi is not None:
                assert iv.lo > prev_hi
            prev_hi = iv.hi
            # endpoints are genuine boundary points of { |p| <= gamma }
            poly = SignedPoly(coeffs)
            for x in (iv.lo, iv.hi):
                assert abs(poly(x)) <= gamma + 1e-9 or x in (0.5, 2 / 3)


def test_estimate_delta_degree_zero():
    # g == 1: implication vacuous for any delta <= 1, so the top rung passes
    assert estimate_delta(0, 1e-3) == 0.5


def test_estimate_delta_small_family():
    delta = estimate_delta(6, 1e-3, eps=0.01)
    assert delta > 0
    # spot-check the implication on the certified family
    grid = np.arange(0.5 + 1e-3, 2 / 3 - 0.01, 1e-3)
    rng = np.random.default_rng(3)
    for _ in range(200):
        coeffs = tuple(int(c) for c in rng.integers(-1, 2, 6))
        poly = SignedPoly(coeffs)
        for lam in rng.choice(grid, 40):
            g = 1.0 + poly(lam)
            if g < delta:
                gp = sum(
                    i * c * lam ** (i - 1) for i, c in enumerate(coeffs, start=1)
                )
                assert gp < -delta


def test_verify_interval_diameter():
    delta = estimate_delta(6, 1e-3, eps=0.01)
    assert verify_interval_diameter((1, -1, -1), 1e-4, delta)
    # empty solution set is vacuously fine
    assert verify_interval_diameter((1,), 1e-4, delta)
    with pytest.raises(PreconditionError):
        verify_interval_diameter((0, 1), 1e-4, delta)
    with pytest.raises(PreconditionError):
        verify_interval_diameter((1,), 0.3, 0.1)


def test_verify_interval_diameter_random_diffs():
    delta = estimate_delta(8, 1e-3, eps=0.01)
    rng = np.random.default_rng(31)
    checked = 0
    while checked < 30:
        deg = int(rng.integers(1, 9))
        coeffs = [int(c) for c in rng.integers(-1, 2, deg)]
        coeffs[0] = int(rng.choice([-1, 1]))
        if verify_interval_diameter(tuple(coeffs), 1e-5, delta):
            checked += 1
        else:
            pytest.fail(f"diameter bound failed for {coeffs}")


def test_exceptional_scan_small_s_never_flags():
    rows = exceptional_scan(s=0.05, r=1, n_values=(2, 4, 6), k_max=2, grid=6)
    assert rows
    assert not any(row.flagged for row in rows)


def test_exceptional_scan_reports_rationals():
    rows = exceptional_scan(s=0.9, r=1, n_values=(8,), k_max=0, grid=4)
    for row in rows:
        assert isinstance(row.lam, Fraction)
        assert 0.5 < float(row.lam) < 2 / 3
        oracle_tilde, oracle_restricted = fraction_proximity_oracle(
            float(row.lam), row.n, row.k, 1
        )
        assert row.restricted == oracle_restricted
        assert row.flagged == (row.restricted > row.threshold)


def test_constant_of_r():
    assert constant_of_r(0.6, 1, 0) == 1.0
    for lam in (0.55, 0.61, 0.66):
        assert constant_of_r(lam, 1, 1) == pytest.approx(2.0, abs=0)


def test_constant_bound_check():
    report = check_constant_bound(0.55, r=2, n0=6, s=0.5, n_max=12, k_max=3)
    assert report.scan_clear
    assert report.bound_holds, report.failures
    assert report.c >= 1.0


def test_rational_grid():
    grid = rational_grid(50)
    assert len(grid) == 50
    assert all(Fraction(1, 2) < f < Fraction(2, 3) for f in grid)
    assert grid == sorted(grid)
