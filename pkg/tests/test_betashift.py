import math

import numpy as np
import pytest

from lamexp.betashift import (
    Beta,
    Sft,
    a_beta_membership,
    beta_map,
    beta_orbit,
    count_words,
    cylinder_stats,
    expansion_of_one,
    forbidden_word_adjacency,
    greedy_digits,
    is_sft,
    multinacci,
    parry_admissible,
    perron_eigenvalue,
)
from lamexp.expansion import enumerate_level

GOLDEN_BETA = (math.sqrt(5) + 1) / 2


def test_beta_validation():
    with pytest.raises(ValueError):
        Beta(1.0)
    with pytest.raises(ValueError):
        Beta(2.2)
    Beta(2.0)


def test_multinacci_roots():
    lam2 = multinacci(2)
    assert abs(lam2.value - (math.sqrt(5) - 1) / 2) < 1e-12
    assert lam2.multinacci_order == 2

    # independent oracle: real root of x^3 + x^2 + x - 1 via numpy
    roots = np.roots([1.0, 1.0, 1.0, -1.0])
    real = [r.real for r in roots if abs(r.imag) < 1e-12 and 0 < r.real < 1]
    assert len(real) == 1
    assert abs(multinacci(3).value - real[0]) < 1e-12

    assert abs(multinacci(30).value - 0.5) < 1e-6
    with pytest.raises(ValueError):
        multinacci(1)


def test_beta_map():
    assert beta_map(1.7, 0.0) == 0.0
    assert beta_map(1.5, 0.8) == pytest.approx(0.2, abs=1e-12)
    with pytest.raises(ValueError):
        beta_map(1.5, 1.0)
    # beta*(beta-1) = 1 at the golden base, so the orbit drops to 0
    orbit, _ = beta_orbit(GOLDEN_BETA, GOLDEN_BETA - 1, 1)
    assert orbit[1] == 0.0


def test_greedy_digits_base2():
    digits = greedy_digits(2.0, 0.6875, 8)
    assert digits == (1, 0, 1, 1, 0, 0, 0, 0)
    assert greedy_digits(1.9, 0.0, 5) == (0, 0, 0, 0, 0)


def test_greedy_reconstruction_bound():
    rng = np.random.default_rng(5)
    for _ in range(200):
        b = float(rng.uniform(1.05, 2.0))
        x = float(rng.uniform(0.0, 1.0))
        n = int(rng.integers(1, 41))
        digits = greedy_digits(b, x, n)
        acc = 0.0
        for d in reversed(digits):
            acc = (d + acc) / b
        assert 0.0 <= x - acc < b ** (-n) * (1 + 1e-9)


def test_expansion_of_one_golden():
    res = expansion_of_one(GOLDEN_BETA, 10)
    assert res.digits_of_1 == (1, 1, 0, 0, 0, 0, 0, 0, 0, 0)
    assert res.quasi_greedy == (1, 0, 1, 0, 1, 0, 1, 0, 1, 0)
    assert res.terminated and res.termination_index == 2


def test_expansion_of_one_multinacci_family():
    for m in range(2, 9):
        beta = 1.0 / multinacci(m).value
        res = expansion_of_one(beta, 2 * m)
        assert res.terminated and res.termination_index == m
        assert res.digits_of_1[:m] == (1,) * m


def test_expansion_of_one_base2_boundary():
    res = expansion_of_one(2.0, 6)
    assert res.boundary_convention
    assert res.digits_of_1 == (1, 0, 0, 0, 0, 0)
    assert res.quasi_greedy == (1, 1, 1, 1, 1, 1)


def test_parry_admissible():
    assert parry_admissible((0, 0, 0, 0), GOLDEN_BETA)
    # a factor 11 exceeds the quasi-greedy word 1010...
    assert not parry_admissible((0, 1, 1, 0), GOLDEN_BETA)
    quasi = expansion_of_one(GOLDEN_BETA, 8).quasi_greedy
    assert parry_admissible(quasi, GOLDEN_BETA)


def test_greedy_digit_windows_are_admissible():
    rng = np.random.default_rng(9)
    betas = [GOLDEN_BETA, 1.0 / multinacci(3).value] + [
        float(rng.uniform(1.2, 1.95)) for _ in range(4)
    ]
    for b in betas:
        for _ in range(5):
            x = float(rng.uniform(0.0, 1.0))
            digits = greedy_digits(b, x, 30)
            assert parry_admissible(digits, b), (b, x)


def test_is_sft():
    for m in range(2, 9):
        assert is_sft(1.0 / multinacci(m).value, n_max=50)
    rng = np.random.default_rng(17)
    for _ in range(10):
        b = float(rng.uniform(1.1, 1.99))
        assert not is_sft(b, n_max=1000, tol=1e-12)


def test_forbidden_word_adjacency_m2():
    sft = forbidden_word_adjacency(2)
    expected = np.array(
        [[1, 1, 0, 0], [0, 0, 1, 0], [1, 1, 0, 0], [0, 0, 1, 1]], dtype=np.uint8
    )
    np.testing.assert_array_equal(sft.adjacency, expected)
    np.testing.assert_array_equal(sft.adjacency.sum(axis=1), [2, 1, 2, 2])
    assert sft.forbidden == (0, 1, 1)
    assert sft.states()[1] == (0, 1)


def test_forbidden_word_adjacency_total_transitions():
    for m in range(2, 9):
        sft = forbidden_word_adjacency(m)
        assert int(sft.adjacency.sum()) == 2 ** (m + 1) - 1
        row_sums = sft.adjacency.sum(axis=1)
        assert set(int(r) for r in row_sums) <= {1, 2}


def test_perron_eigenvalue_golden():
    sft = forbidden_word_adjacency(2)
    res = perron_eigenvalue(sft)
    assert abs(res.mu - GOLDEN_BETA) < 1e-9
    # oracle: full spectrum via numpy
    eigs = np.linalg.eigvals(sft.adjacency.astype(float))
    assert abs(res.mu - max(e.real for e in eigs)) < 1e-9


def test_perron_matches_multinacci_reciprocal():
    for m in range(2, 9):
        res = perron_eigenvalue(forbidden_word_adjacency(m))
        assert abs(res.mu * multinacci(m).value - 1.0) < 1e-8, m


def test_perron_eigenvector_structure():
    # odd-position entries of the dominant eigenvector coincide
    for m in range(2, 7):
        res = perron_eigenvalue(forbidden_word_adjacency(m))
        odd = res.vector[0::2]
        assert np.max(np.abs(odd - odd[0])) < 1e-8
        assert np.min(res.vector) > 0.0


def test_count_words_small():
    sft = forbidden_word_adjacency(2)
    assert count_words(sft, 3) == 7
    assert count_words(sft, 4) == 12
    # brute-force filter oracle
    for n in range(1, 19):
        direct = sum(1 for x in range(2**n) if "011" not in format(x, f"0{n}b"))
        assert count_words(sft, n) == direct


def test_count_words_fibonacci_recurrence():
    sft = forbidden_word_adjacency(2)
    counts = {n: count_words(sft, n) for n in range(1, 21)}
    for n in range(3, 21):
        assert counts[n] == counts[n - 1] + counts[n - 2] + 1


def test_count_words_growth_ratio():
    for m in (2, 3):
        sft = forbidden_word_adjacency(m)
        mu = perron_eigenvalue(sft).mu
        ratio = count_words(sft, 51) / count_words(sft, 50)
        assert abs(ratio - mu) < 1e-6


def test_count_words_matches_level_sets():
    for m in (2, 3, 4):
        lam = multinacci(m)
        sft = forbidden_word_adjacency(m)
        for n in range(1, 15):
            assert enumerate_level(lam, n).count == count_words(sft, n)


def test_cylinder_stats():
    sft = forbidden_word_adjacency(2)
    beta = 1.0 / multinacci(2).value
    one = cylinder_stats(sft, beta, 1)
    assert one.count == 2
    assert one.min_len > 0

    for n in (5, 10):
        stats = cylinder_stats(sft, beta, n)
        assert stats.count == count_words(sft, n)

    # the length/scale ratios settle to state-dependent constants
    ratios = []
    for n in range(10, 21):
        stats = cylinder_stats(sft, beta, n)
        scale = beta ** (-n)
        ratios.append((stats.min_len / scale, stats.max_len / scale))
    mins, maxs = zip(*ratios)
    assert max(mins) / min(mins) < 1.0 + 1e-9
    assert max(maxs) / min(maxs) < 1.0 + 1e-9

    with pytest.raises(ValueError):
        cylinder_stats(sft, 1.7, 5)


def test_a_beta_membership():
    hits = a_beta_membership(1.8, 2.0, 0.0, 50)
    assert hits == list(range(1, 51))

    hits = a_beta_membership(GOLDEN_BETA, 1.0, GOLDEN_BETA - 1, 30)
    assert 1 in hits  # the orbit lands exactly on 0

    rng = np.random.default_rng(23)
    for _ in range(5):
        x = float(rng.uniform(0.05, 0.95))
        hits = a_beta_membership(1.9, 5.0, x, 2000)
        assert all(n < 25 for n in hits)
