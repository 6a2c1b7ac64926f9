"""Greedy base-beta digit dynamics and the forbidden-word subshifts they induce.

The map x -> {beta*x} on [0,1) with 1 < beta <= 2, greedy digit strings, the
lexicographic admissibility test against the quasi-greedy expansion of 1,
multinacci roots, the de-Bruijn-style transition matrix of the shift that
forbids 0 1^m, its dominant eigenvalue, word counts, and cylinder geometry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .expansion import Lambda

#: orbit points this close to an integer are snapped to it and flagged; the
#: floor digit is discontinuous there and bare floats cannot decide the side
SNAP_TOL = 1e-12


@dataclass(frozen=True)
class Beta:
    """An expansion base in (1, 2]."""

    value: float

    def __post_init__(self):
        if not 1.0 < self.value <= 2.0:
            raise ValueError(f"beta must lie in (1, 2], got {self.value!r}")


def as_beta(beta) -> Beta:
    if isinstance(beta, Beta):
        return beta
    return Beta(float(beta))


class PerronResult(NamedTuple):
    mu: float
    vector: np.ndarray


class CylinderStats(NamedTuple):
    min_len: float
    max_len: float
    count: int


@dataclass(eq=False)
class Sft:
    """Shift of finite type on length-m windows with the single forbidden word 0 1^m.

    States are ordered by the binary value of the window, most significant bit
    oldest.  State u steps to v = (u2..um d) unless the (m+1)-window (u1..um d)
    spells the forbidden word.
    """

    m: int
    adjacency: np.ndarray

    @property
    def forbidden(self) -> tuple:
        return (0,) + (1,) * self.m

    @property
    def n_states(self) -> int:
        return 2**self.m

    def states(self) -> list:
        m = self.m
        return [tuple((u >> (m - 1 - j)) & 1 for j in range(m)) for u in range(2**m)]


def multinacci(m: int, tol: float = 1e-15) -> Lambda:
    """The unique root in (1/2, 1) of lam**m + ... + lam = 1, by bisection."""
    if m < 2:
        raise ValueError("multinacci order must be >= 2")

    def defect(v: float) -> float:
        acc = 0.0
        for _ in range(m):
            acc = v * (1.0 + acc)
        return acc - 1.0

    lo, hi = 0.5, 1.0
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if defect(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    # settle on the nearest float whose defect is smallest in magnitude
    best = min(
        (root, np.nextafter(root, 0.0), np.nextafter(root, 1.0)),
        key=lambda v: abs(defect(v)),
    )
    return Lambda(best, multinacci_order=m)


def beta_map(beta, x: float) -> float:
    """The fractional part of beta*x, for x in [0, 1)."""
    b = as_beta(beta).value
    if not 0.0 <= x < 1.0:
        raise ValueError(f"x={x!r} outside [0, 1)")
    y = b * x
    return y - math.floor(y)


def _snapped_digit_step(b: float, x: float, snap_tol: float):
    """One greedy step with near-integer snapping.

    Returns (digit, remainder, snapped): digit = floor(b*x) except that b*x
    within snap_tol of an integer is treated as exactly that integer.
    """
    y = b * x
    nearest = round(y)
    if abs(y - nearest) <= snap_tol:
        return int(nearest), 0.0, True
    d = math.floor(y)
    return int(d), y - d, False


def greedy_digits(beta, x: float, n: int) -> tuple:
    """The first n greedy digits of x in base beta (all in {0,1} for x in [0,1))."""
    b = as_beta(beta).value
    if not 0.0 <= x < 1.0:
        raise ValueError(f"x={x!r} outside [0, 1)")
    digits = []
    cur = float(x)
    for _ in range(n):
        y = b * cur
        d = math.floor(y)
        digits.append(int(d))
        cur = y - d
    return tuple(digits)


@dataclass
class ExpansionOfOne:
    digits_of_1: tuple
    quasi_greedy: tuple
    terminated: bool
    termination_index: Optional[int]
    boundary_convention: bool  # beta == 2 hits the domain edge; digits clipped to {0,1}
    snapped: bool


def expansion_of_one(beta, n: int, snap_tol: float = SNAP_TOL) -> ExpansionOfOne:
    """Greedy digits of 1 and the quasi-greedy limit sequence, to length n.

    If the greedy expansion terminates at index p (remainder 0), the
    quasi-greedy sequence is (d1, ..., d_{p-1}, d_p - 1) repeated periodically;
    otherwise it equals the greedy digits as far as they are known.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    b = as_beta(beta).value
    true_digits = []
    cur = 1.0
    snapped = False
    terminated = False
    term_index = None
    for k in range(1, n + 1):
        d, cur, snap = _snapped_digit_step(b, cur, snap_tol)
        snapped = snapped or snap
        true_digits.append(d)
        if cur == 0.0:
            terminated = True
            term_index = k
            true_digits.extend([0] * (n - k))
            break
    if terminated:
        head = true_digits[: term_index - 1] + [true_digits[term_index - 1] - 1]
        quasi = tuple(head[i % term_index] for i in range(n))
    else:
        quasi = tuple(min(d, 1) for d in true_digits)
    clipped = tuple(min(d, 1) for d in true_digits)
    return ExpansionOfOne(
        digits_of_1=clipped,
        quasi_greedy=quasi,
        terminated=terminated,
        termination_index=term_index,
        boundary_convention=(b == 2.0),
        snapped=snapped,
    )


def parry_admissible(seq: Sequence[int], beta) -> bool:
    """True iff every shift of seq is lexicographically <= the quasi-greedy expansion of 1.

    Comparisons use the available finite window only, so a truncated tail that
    matches a quasi-greedy prefix passes.
    """
    digits = tuple(int(d) for d in seq)
    if any(d not in (0, 1) for d in digits):
        raise ValueError("sequence must be over {0,1}")
    if not digits:
        return True
    quasi = expansion_of_one(beta, len(digits)).quasi_greedy
    for k in range(len(digits)):
        window = len(digits) - k
        tail = digits[k : k + window]
        ref = quasi[:window]
        if tail > ref:
            return False
    return True


def is_sft(beta, n_max: int = 1000, tol: float = 1e-12, snap_tol: float = SNAP_TOL) -> bool:
    """True iff the greedy orbit of 1 falls into [0, tol) within n_max steps."""
    b = as_beta(beta).value
    cur = 1.0
    for _ in range(n_max):
        _, cur, _ = _snapped_digit_step(b, cur, snap_tol)
        if 0.0 <= cur < tol:
            return True
    return False


def forbidden_word_adjacency(m: int) -> Sft:
    """Transition matrix on length-m windows with the (m+1)-window 0 1^m removed."""
    if not 2 <= m <= 12:
        raise ValueError("m must be in [2, 12]")
    size = 2**m
    mask = size - 1
    forbidden_state = 2 ** (m - 1) - 1  # window 0 1^(m-1); appending 1 spells 0 1^m
    adj = np.zeros((size, size), dtype=np.uint8)
    for u in range(size):
        for d in (0, 1):
            if u == forbidden_state and d == 1:
                continue
            v = ((u << 1) & mask) | d
            adj[u, v] = 1
    return Sft(m=m, adjacency=adj)


def _power_iterate(matrix: np.ndarray, tol: float, max_iter: int):
    x = np.ones(matrix.shape[0])
    mu_prev = float("inf")
    for _ in range(max_iter):
        y = matrix @ x
        norm = np.max(np.abs(y))
        if norm == 0.0:
            return None
        x = y / norm
        mu = float(x @ (matrix @ x)) / float(x @ x)
        if abs(mu - mu_prev) < tol:
            return mu, x
        mu_prev = mu
    return None


def perron_eigenvalue(sft: Sft, tol: float = 1e-12, max_iter: int = 100_000) -> PerronResult:
    """Dominant eigenvalue and positive eigenvector via power iteration.

    Starts from the all-ones vector and stops when successive Rayleigh
    quotients differ by less than tol.  If the iteration stalls (periodicity),
    the shifted matrix A + I is used; as a last resort the iteration is
    restricted to the largest strongly connected component.
    """
    a = sft.adjacency.astype(np.float64)
    got = _power_iterate(a, tol, max_iter)
    if got is None:
        shifted = _power_iterate(a + np.eye(a.shape[0]), tol, max_iter)
        if shifted is not None:
            mu, x = shifted
            got = (mu - 1.0, x)
    if got is None:
        n_comp, labels = connected_components(csr_matrix(sft.adjacency), connection="strong")
        largest = np.argmax(np.bincount(labels))
        keep = np.flatnonzero(labels == largest)
        sub = a[np.ix_(keep, keep)]
        inner = _power_iterate(sub, tol, max_iter)
        if inner is None:
            raise RuntimeError("power iteration failed to converge")
        mu, xs = inner
        x = np.zeros(a.shape[0])
        x[keep] = xs
        got = (mu, x)
    mu, x = got
    x = x / np.max(np.abs(x))
    if np.min(x) < -1e-9:
        raise RuntimeError("dominant eigenvector is not nonnegative")
    return PerronResult(mu=mu, vector=np.abs(x))


def count_words(sft: Sft, n: int) -> int:
    """Number of admissible words of length n, by integer matrix-vector products."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n > 60:
        raise ValueError("word-count depth capped at 60")
    if n <= sft.m:
        return 2**n
    out_edges = [list(np.flatnonzero(sft.adjacency[u])) for u in range(sft.n_states)]
    counts = [1] * sft.n_states
    for _ in range(n - sft.m):
        nxt = [0] * sft.n_states
        for u, edges in enumerate(out_edges):
            cu = counts[u]
            if cu:
                for v in edges:
                    nxt[v] += cu
        counts = nxt
    return sum(counts)


def _max_tail_values(sft: Sft, b: float, sweeps: int = 400) -> np.ndarray:
    """sup over admissible continuations from each window of sum d_j b**-j."""
    size = sft.n_states
    succ = [[(d, v) for d, v in enumerate(((u << 1) & (size - 1)) | d for d in (0, 1)) if sft.adjacency[u, v]] for u in range(size)]
    t = np.zeros(size)
    inv = 1.0 / b
    for _ in range(sweeps):
        t = np.array([max(inv * (d + t[v]) for d, v in succ[u]) for u in range(size)])
    return t


def cylinder_stats(sft: Sft, beta, n: int) -> CylinderStats:
    """Extremal lengths of the depth-n cylinder images under w -> sum w_k beta**-k.

    A cylinder's image is an interval whose length is beta**-n times the
    maximal admissible tail value of its final window, so for n >= m the
    length ratio to beta**-n depends only on the final state.
    """
    b = as_beta(beta).value
    root = multinacci(sft.m).value
    if abs(b * root - 1.0) > 1e-9:
        raise ValueError(
            f"beta {b!r} does not match the order-{sft.m} multinacci reciprocal"
        )
    if not 1 <= n <= 30:
        raise ValueError("cylinder depth must be in [1, 30]")
    tails = _max_tail_values(sft, b)
    scale = b ** (-n)
    m = sft.m
    if n >= m:
        reach = np.ones(sft.n_states, dtype=bool)
        bool_adj = sft.adjacency.astype(bool)
        for _ in range(n - m):
            reach = bool_adj.T @ reach
        ratios = tails[reach]
    else:
        # short prefixes: extend to a full window (no forbidden factor fits yet)
        ratios = []
        for w in range(2**n):
            best = -math.inf
            for ext in range(2 ** (m - n)):
                val = 0.0
                for j in range(m - n):
                    bit = (ext >> (m - n - 1 - j)) & 1
                    val += bit * b ** (-(j + 1))
                state = ((w << (m - n)) | ext) & (2**m - 1)
                val += b ** (-(m - n)) * tails[state]
                best = max(best, val)
            ratios.append(best)
        ratios = np.array(ratios)
    return CylinderStats(
        min_len=float(np.min(ratios) * scale),
        max_len=float(np.max(ratios) * scale),
        count=count_words(sft, n),
    )


def beta_orbit(beta, x: float, depth: int, snap_tol: float = SNAP_TOL):
    """The orbit x, f(x), ..., f**depth(x) with near-integer snapping.

    Returns (values, reliable): steps where beta*x sat within snap_tol of an
    integer are snapped to it and the orbit is flagged unreliable, since the
    true orbit may have taken the other branch of the discontinuity.
    """
    b = as_beta(beta).value
    if not 0.0 <= x < 1.0:
        raise ValueError(f"x={x!r} outside [0, 1)")
    values = np.empty(depth + 1)
    values[0] = x
    cur = float(x)
    reliable = True
    for k in range(1, depth + 1):
        _, cur, snapped = _snapped_digit_step(b, cur, snap_tol)
        reliable = reliable and not snapped
        values[k] = cur
    return values, reliable


def a_beta_membership(beta, kappa: float, x: float, depth: int) -> list:
    """All n <= depth with f**n(x) <= beta**(-kappa*n); a finite-depth witness list."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if depth > 100_000:
        raise ValueError("orbit depth capped at 100000")
    b = as_beta(beta).value
    orbit, _ = beta_orbit(beta, x, depth)
    log_b = math.log(b)
    hits = []
    for n in range(1, depth + 1):
        threshold = math.exp(-kappa * n * log_b) if kappa * n * log_b < 745 else 0.0
        if orbit[n] <= threshold:
            hits.append(n)
    return hits
