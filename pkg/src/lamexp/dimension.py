"""Covering-based dimension estimates for the points well approximated by
finite binary power sums.

The n-th approximation layer and its merged interval cover, the closed-form
lower bound and the finite-depth covering upper bound, the economical cover
of b-fold covered regions, placement of a comparably-sized sum cylinder
inside an arbitrary target interval, and the finite-depth nested-interval
tree that witnesses the intersection construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .expansion import (
    Interval,
    Lambda,
    LevelTooLargeError,
    as_lambda,
    enumerate_level,
    eval_word,
    lambda_digits,
    lambda_interval,
)
from .proximity import count_near_pairs

TREE_MAX_DEPTH = 19  # keeps the total node count near 10**6


@dataclass(frozen=True)
class Similarity:
    """x -> slope*x + offset with slope != 0; negative slopes are reflections."""

    slope: float
    offset: float

    def __post_init__(self):
        if self.slope == 0.0:
            raise ValueError("similarity slope must be nonzero")

    def __call__(self, x: float) -> float:
        return self.slope * x + self.offset

    def inverse_point(self, y: float) -> float:
        return (y - self.offset) / self.slope

    def map_interval(self, iv: Interval) -> Interval:
        a = self(iv.lo)
        b = self(iv.hi)
        return Interval(min(a, b), max(a, b))

    def inverse_interval(self, iv: Interval) -> Interval:
        a = self.inverse_point(iv.lo)
        b = self.inverse_point(iv.hi)
        return Interval(min(a, b), max(a, b))


@dataclass
class Cover:
    intervals: List[Interval]
    scale: float

    @property
    def count(self) -> int:
        return len(self.intervals)

    def diameters(self) -> np.ndarray:
        return np.array([iv.diameter for iv in self.intervals])


@dataclass
class DimEstimate:
    n: int
    cover_count: int
    scale: float
    estimate: float
    upper: float
    lower: float

    def __post_init__(self):
        if self.lower > self.upper + 1e-12:
            raise ValueError("lower bound exceeds upper bound")


def w_cover(lam, alpha: float, n: int, merge_tol: float = 1e-10, n_cap: int = 28) -> Cover:
    """Merged cover of the n-th approximation layer by radius-2**(-alpha n) balls."""
    lam = as_lambda(lam)
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    level = enumerate_level(lam, n, merge_tol=merge_tol, n_cap=n_cap)
    radius = 2.0 ** (-alpha * n)
    centers = level.values
    gaps = np.diff(centers)
    breaks = np.flatnonzero(gaps > 2 * radius)
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [centers.size - 1]))
    intervals = [
        Interval(centers[s] - radius, centers[e] + radius) for s, e in zip(starts, ends)
    ]
    return Cover(intervals=intervals, scale=radius)


def lower_bound(lam, alpha: float) -> float:
    """Closed form -log(lam) / (alpha log 2)."""
    lam = as_lambda(lam)
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    return -math.log(lam.value) / (alpha * math.log(2.0))


def upper_bound(lam, alpha: float, n: int, merge_tol: float = 1e-10, n_cap: int = 28) -> float:
    """Finite-depth covering exponent (log2 #level-n / n) / alpha."""
    lam = as_lambda(lam)
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    level = enumerate_level(lam, n, merge_tol=merge_tol, n_cap=n_cap)
    return math.log2(level.count) / (n * alpha)


def cover_estimate(lam, alpha: float, n: int, merge_tol: float = 1e-10, n_cap: int = 28) -> DimEstimate:
    """Box-count style estimate log(count)/(-log scale) with its two bounds."""
    cover = w_cover(lam, alpha, n, merge_tol=merge_tol, n_cap=n_cap)
    estimate = math.log(cover.count) / (-math.log(cover.scale)) if cover.count > 1 else 0.0
    return DimEstimate(
        n=n,
        cover_count=cover.count,
        scale=cover.scale,
        estimate=estimate,
        upper=upper_bound(lam, alpha, n, merge_tol=merge_tol, n_cap=n_cap),
        lower=lower_bound(lam, alpha),
    )


# --------------------------------------------------------------------------
# economical covers of b-fold covered regions


def _multiplicity_segments(intervals: Sequence[Interval], b: int) -> List[Tuple[float, float]]:
    """Maximal closed segments where at least b of the closed intervals overlap."""
    events = []
    for iv in intervals:
        events.append((iv.lo, 0))  # opens sort before closes at the same point
        events.append((iv.hi, 1))
    events.sort()
    segments = []
    depth = 0
    start = None
    for pos, kind in events:
        if kind == 0:
            depth += 1
            if depth == b:
                start = pos
        else:
            if depth == b and start is not None:
                segments.append((start, pos))
                start = None
            depth -= 1
    return segments


def rams_cover(family, b: int, rho: float) -> Cover:
    """Cover of the points lying in at least b members of the family.

    Pieces never exceed 4 * sup(diameter).  The b-fold region is extracted by
    a sweep line; its components are split into equal pieces where too long
    and regrouped by a span-cost dynamic program, which keeps the rho-sum of
    the cover within the 4**rho / b budget of the family's rho-sum.
    """
    if isinstance(family, Cover):
        intervals = family.intervals
    else:
        intervals = list(family)
    if b < 1:
        raise ValueError("b must be >= 1")
    if rho <= 0:
        raise ValueError("rho must be positive")
    if not intervals:
        raise ValueError("family must be nonempty")
    sup_d = max(iv.diameter for iv in intervals)
    cap = 4.0 * sup_d
    segments = _multiplicity_segments(intervals, b)
    if not segments:
        return Cover(intervals=[], scale=cap)

    # atoms: region components, long ones pre-split into equal pieces <= cap
    atoms = []
    for lo, hi in segments:
        length = hi - lo
        if cap > 0 and length > cap:
            pieces = int(math.ceil(length / cap))
            cuts = np.linspace(lo, hi, pieces + 1)
            atoms.extend((float(a), float(z)) for a, z in zip(cuts[:-1], cuts[1:]))
        else:
            atoms.append((lo, hi))

    # group consecutive atoms while the spanned piece stays within the cap,
    # minimising sum(span**rho); merging only ever helps for rho <= 1
    n_atoms = len(atoms)
    best = [0.0] * (n_atoms + 1)
    choice = [0] * (n_atoms + 1)
    for i in range(1, n_atoms + 1):
        best[i] = math.inf
        hi_i = atoms[i - 1][1]
        j = i
        while j >= 1:
            span = hi_i - atoms[j - 1][0]
            if span > cap * (1 + 1e-12) and j < i:
                break
            cost = best[j - 1] + span**rho
            if cost < best[i]:
                best[i] = cost
                choice[i] = j
            j -= 1
    pieces = []
    i = n_atoms
    while i > 0:
        j = choice[i]
        pieces.append(Interval(atoms[j - 1][0], atoms[i - 1][1]))
        i = j - 1
    pieces.reverse()
    return Cover(intervals=pieces, scale=cap)


# --------------------------------------------------------------------------
# cylinder placement inside a target interval


class PreconditionViolation(ValueError):
    pass


@dataclass
class CylinderPlacement:
    n_shift: int
    word: tuple

    @property
    def theta(self) -> int:
        return len(self.word)


def cylinder_word_length(lam, diam_a: float, slope: float) -> int:
    """floor(log((1-lam) diam(A) / (4 |f'|)) / log lam)."""
    v = as_lambda(lam).value
    return int(math.floor(math.log((1.0 - v) * diam_a / (4.0 * abs(slope))) / math.log(v)))


def locate_cylinder(a: Interval, f: Similarity, lam) -> CylinderPlacement:
    """An integer shift n and word w with f(g_w(I) + n diam(I)) inside A.

    The placed interval keeps diameter at least (lam/4) diam(A); the word is
    the greedy digit prefix of the midpoint of the clipped preimage of A.
    """
    lam = as_lambda(lam)
    v = lam.value
    base = lambda_interval(v)
    d_base = base.diameter
    if a.diameter <= 0:
        raise PreconditionViolation("target interval must have nonempty interior")
    if not a.diameter < abs(f.slope) * d_base:
        raise PreconditionViolation(
            f"diam(A)={a.diameter} must be below |slope|*diam(I)={abs(f.slope) * d_base}"
        )
    pre = f.inverse_interval(a)
    n0 = int(math.floor(pre.lo / d_base))
    candidates = []
    for n in (n0 - 1, n0, n0 + 1):
        tile = Interval(n * d_base, (n + 1) * d_base)
        hit = pre.intersect(tile)
        candidates.append((hit.diameter if hit else -1.0, -n, n))
    candidates.sort(reverse=True)
    n_shift = candidates[0][2]
    shifted = Interval(pre.lo - n_shift * d_base, pre.hi - n_shift * d_base)
    z = shifted.intersect(base)
    if z is None:
        raise RuntimeError("clipped preimage is empty; shift selection failed")
    theta = cylinder_word_length(v, a.diameter, f.slope)
    word = lambda_digits(v, z.midpoint, theta)
    return CylinderPlacement(n_shift=n_shift, word=word)


def placed_interval(placement: CylinderPlacement, f: Similarity, lam) -> Interval:
    """The interval f(g_w(I) + n diam(I)) produced by a placement."""
    v = as_lambda(lam).value
    base = lambda_interval(v)
    lo = eval_word(v, placement.word) + placement.n_shift * base.diameter
    hi = lo + v ** len(placement.word) * base.diameter
    return f.map_interval(Interval(lo, hi))


# --------------------------------------------------------------------------
# the finite-depth nested intersection tree


@dataclass
class TreeLevel:
    n: int
    block_q: int  # the construction step that produced this level
    lo: np.ndarray
    hi: np.ndarray
    hat_lo: np.ndarray
    hat_hi: np.ndarray
    delta: float
    hat_delta: float
    is_block_end: bool
    word_sums: Optional[np.ndarray] = None  # g-composition base points at block ends


@dataclass
class NestedTree:
    lam: float
    alpha: float
    s: float
    sims: List[Similarity]
    levels: List[TreeLevel]
    gamma: List[int]
    gamma_hat: List[int]
    theta: List[int]
    m_steps: List[int]
    j_of_q: List[int]
    shifts: List[int]
    completed_q: int
    requested_depth: int
    schedule_feasible: bool
    infeasible_reason: str
    pair_correlation: List[tuple]
    s_estimate: Optional[float]


def _doubling_prefixed(sims: Sequence[Similarity]) -> List[Similarity]:
    sims = [s if isinstance(s, Similarity) else Similarity(*s) for s in sims]
    if not sims:
        raise ValueError("need at least one similarity")
    if abs(sims[0].slope) <= 1.0:
        # the construction needs an expanding first map; adjoin x -> 2x
        return [Similarity(2.0, 0.0)] + sims
    return sims


def build_intersection_tree(
    lam,
    alpha: float,
    s: float,
    sims: Sequence[Similarity],
    depth: int,
) -> NestedTree:
    """Finite-depth nested interval tree following the recursive schedule.

    Every node carries an outer interval and a hat interval with
    outer >= hat >= child-outer; block ends shrink the hats by an extra
    lam**m factor so that each hat sits inside the approximation layer of its
    own depth.  The schedule uses the minimal admissible integer choices; if
    the next block exceeds the requested depth the tree is returned partial.
    """
    lam = as_lambda(lam)
    v = lam.value
    if not 1 < alpha:
        raise ValueError("alpha must exceed 1")
    if not 0 < s <= 1.0 / alpha:
        raise ValueError("need 0 < s <= 1/alpha")
    if depth < 1 or depth > TREE_MAX_DEPTH:
        raise ValueError(f"depth must be in [1, {TREE_MAX_DEPTH}] (node-count guard)")
    sims = _doubling_prefixed(sims)
    base = lambda_interval(v)
    d_base = base.diameter

    levels = [
        TreeLevel(
            n=0,
            block_q=0,
            lo=np.array([base.lo]),
            hi=np.array([base.hi]),
            hat_lo=np.array([base.lo]),
            hat_hi=np.array([base.hi]),
            delta=d_base,
            hat_delta=d_base,
            is_block_end=True,
        )
    ]
    gamma = [0]
    gamma_hat = [0]
    theta = [0]
    m_steps = [0]
    j_of_q = [0]
    shifts: List[int] = []
    completed_q = 0
    feasible = True
    reason = ""

    big_gamma = 0  # cumulative depth of completed blocks
    log_v = math.log(v)

    q = 0
    while big_gamma < depth:
        f = sims[j_of_q[q]]
        level = levels[big_gamma]
        n_nodes = level.lo.size
        hats = [Interval(level.hat_lo[i], level.hat_hi[i]) for i in range(n_nodes)]
        try:
            placements = [locate_cylinder(h, f, lam) for h in hats]
        except PreconditionViolation as exc:
            feasible = False
            reason = f"cylinder placement failed at step {q}: {exc}"
            break
        theta_next = placements[0].theta
        if any(p.theta != theta_next for p in placements):
            raise RuntimeError("cylinder word length varies across equal-size nodes")

        j_next = (q + 1) % len(sims)
        lower_1 = q * gamma[q] * theta_next * (-math.log(level.delta)) if q >= 1 else 0.0
        lower_2 = math.log(abs(sims[j_next].slope)) / log_v
        gamma_next = max(int(math.floor(lower_1)) + 1, int(math.floor(lower_2)) + 1, 1)
        gamma_hat_next = gamma_next + theta_next
        # minimal integer with lam**(gh+m)/(1-lam) < 2**(-alpha gh) <= lam**(gh+m-1)/(1-lam)
        m_next = (
            int(
                math.floor(
                    (math.log(2.0**-alpha) / log_v - 1.0) * gamma_hat_next
                    + math.log(1.0 - v) / log_v
                )
            )
            + 1
        )

        gamma.append(gamma_next)
        gamma_hat.append(gamma_hat_next)
        theta.append(theta_next)
        m_steps.append(m_next)
        j_of_q.append(j_next)
        shifts.extend(p.n_shift for p in placements)

        target = big_gamma + gamma_next
        if target > depth:
            feasible = False
            reason = (
                f"step {q + 1} needs depth {target} (> requested {depth}); "
                f"tree truncated inside the block"
            )

        # per-node affine frames: child tau-interval -> f(g_w(.) + shift*diam)
        frame_scale = np.full(n_nodes, f.slope * v**theta_next)
        frame_off = np.array(
            [
                f.slope * (eval_word(v, p.word) + p.n_shift * d_base) + f.offset
                for p in placements
            ]
        )
        base_sums = np.array([eval_word(v, p.word) for p in placements])

        tau_sums = np.array([0.0])
        reach = min(gamma_next, depth - big_gamma)
        for l in range(1, reach + 1):
            tau_sums = np.repeat(tau_sums, 2)
            tau_sums[1::2] += v**l
            block_nodes = n_nodes * tau_sums.size
            width = v**l * d_base
            lo_ends = frame_off[:, None] + frame_scale[:, None] * tau_sums[None, :]
            hi_ends = lo_ends + frame_scale[:, None] * width
            lo = np.minimum(lo_ends, hi_ends).reshape(block_nodes)
            hi = np.maximum(lo_ends, hi_ends).reshape(block_nodes)
            delta_l = abs(f.slope) * v ** (theta_next + l + 1) / (1.0 - v)
            is_end = l == gamma_next
            if is_end:
                hat_width = v ** (l + m_next) * d_base
                hlo_ends = lo_ends
                hhi_ends = lo_ends + frame_scale[:, None] * hat_width
                hat_lo = np.minimum(hlo_ends, hhi_ends).reshape(block_nodes)
                hat_hi = np.maximum(hlo_ends, hhi_ends).reshape(block_nodes)
                hat_delta = abs(f.slope) * v ** (theta_next + l + m_next + 1) / (1.0 - v)
                # base point of the block word: g_{w(kappa) tau}(0)
                word_sums = (
                    base_sums[:, None] + v**theta_next * tau_sums[None, :]
                ).reshape(block_nodes)
            else:
                hat_lo, hat_hi, hat_delta = lo, hi, delta_l
                word_sums = None
            levels.append(
                TreeLevel(
                    n=big_gamma + l,
                    block_q=q + 1,
                    lo=lo,
                    hi=hi,
                    hat_lo=hat_lo,
                    hat_hi=hat_hi,
                    delta=delta_l,
                    hat_delta=hat_delta,
                    is_block_end=is_end,
                    word_sums=word_sums,
                )
            )
        if not feasible:
            break
        big_gamma = target
        completed_q = q + 1
        q += 1

    deepest = levels[-1]
    mids = 0.5 * (deepest.hat_lo + deepest.hat_hi)
    n_deep = deepest.n
    radii = [deepest.hat_delta * 2.0**j for j in range(1, 9)]
    correlation = []
    for r in radii:
        cnt = count_near_pairs(mids, mids, r)
        correlation.append((float(r), int(cnt), float(cnt) * 4.0**-n_deep))
    s_est = None
    if len(correlation) >= 2 and n_deep > 0:
        xs = np.log([row[0] for row in correlation])
        ys = np.log([row[2] for row in correlation])
        if np.ptp(xs) > 0:
            s_est = float(np.polyfit(xs, ys, 1)[0])

    return NestedTree(
        lam=v,
        alpha=alpha,
        s=s,
        sims=list(sims),
        levels=levels,
        gamma=gamma,
        gamma_hat=gamma_hat,
        theta=theta,
        m_steps=m_steps,
        j_of_q=j_of_q,
        shifts=shifts,
        completed_q=completed_q,
        requested_depth=depth,
        schedule_feasible=feasible,
        infeasible_reason=reason,
        pair_correlation=correlation,
        s_estimate=s_est,
    )


@dataclass
class TreeReport:
    nesting_ok: bool
    diameters_ok: bool
    sandwich_ok: bool
    sibling_hats_ok: bool
    good_approximant_ok: bool
    max_approx_deviation: float
    failures: List[str]

    @property
    def all_ok(self) -> bool:
        return (
            self.nesting_ok
            and self.diameters_ok
            and self.sandwich_ok
            and self.sibling_hats_ok
            and self.good_approximant_ok
        )


def verify_tree(tree: NestedTree, slack: float = 1e-9) -> TreeReport:
    """Check nesting, diameter laws, the m-step sandwich, sibling hat
    disjointness at block ends, and hat membership in the approximation layer."""
    failures = []
    v = tree.lam
    d_base = v / (1.0 - v)

    nesting_ok = True
    diameters_ok = True
    for idx in range(1, len(tree.levels)):
        child = tree.levels[idx]
        parent = tree.levels[idx - 1]
        parent_hat_lo = parent.hat_lo[np.arange(child.lo.size) // 2]
        parent_hat_hi = parent.hat_hi[np.arange(child.lo.size) // 2]
        if not (
            np.all(parent_hat_lo <= child.lo + slack)
            and np.all(child.hi <= parent_hat_hi + slack)
        ):
            nesting_ok = False
            failures.append(f"nesting broken at level {child.n}")
        if not (
            np.all(child.lo <= child.hat_lo + slack)
            and np.all(child.hat_hi <= child.hi + slack)
        ):
            nesting_ok = False
            failures.append(f"hat not inside outer at level {child.n}")
        widths = child.hi - child.lo
        hat_widths = child.hat_hi - child.hat_lo
        if np.max(np.abs(widths - child.delta)) > slack * max(1.0, child.delta):
            diameters_ok = False
            failures.append(f"outer diameters not uniform at level {child.n}")
        if np.max(np.abs(hat_widths - child.hat_delta)) > slack * max(1.0, child.hat_delta):
            diameters_ok = False
            failures.append(f"hat diameters not uniform at level {child.n}")
        if not child.hat_delta <= child.delta * (1 + slack):
            diameters_ok = False
            failures.append(f"hat exceeds outer diameter at level {child.n}")
        if not child.delta <= v ** (child.n + 1) / (1.0 - v) * (1 + slack):
            diameters_ok = False
            failures.append(f"outer diameter exceeds lam**(n+1)/(1-lam) at level {child.n}")

    sandwich_ok = True
    for q in range(1, tree.completed_q + 1):
        gh = tree.gamma_hat[q]
        m = tree.m_steps[q]
        left = v ** (gh + m) / (1.0 - v)
        mid = 2.0 ** (-tree.alpha * gh)
        right = v ** (gh + m - 1) / (1.0 - v)
        if not (left < mid <= right):
            sandwich_ok = False
            failures.append(f"m-step sandwich fails at step {q}: {left} < {mid} <= {right}")

    sibling_hats_ok = True
    for level in tree.levels:
        if not level.is_block_end or level.n == 0:
            continue
        overlap = np.minimum(level.hat_hi[0::2], level.hat_hi[1::2]) - np.maximum(
            level.hat_lo[0::2], level.hat_lo[1::2]
        )
        if np.any(overlap > slack):
            sibling_hats_ok = False
            failures.append(f"sibling hats overlap at level {level.n}")

    good_ok = True
    max_dev = 0.0
    # hat intervals at each completed block end must sit inside the
    # 2**(-alpha gamma_hat) approximation layer around their own word sum
    block_start = 0
    for q in range(1, tree.completed_q + 1):
        block_end_n = block_start + tree.gamma[q]
        level = tree.levels[block_end_n]
        f = tree.sims[tree.j_of_q[q - 1]]
        parents = tree.levels[block_start]
        n_parents = parents.lo.size
        per_parent = level.lo.size // n_parents
        shifts = np.repeat(_block_shifts(tree, q), per_parent)
        pre_lo = (np.minimum(level.hat_lo, level.hat_hi) - f.offset) / f.slope
        pre_hi = (np.maximum(level.hat_lo, level.hat_hi) - f.offset) / f.slope
        g_lo = np.minimum(pre_lo, pre_hi) - shifts * d_base
        g_hi = np.maximum(pre_lo, pre_hi) - shifts * d_base
        centers = level.word_sums
        radius = 2.0 ** (-tree.alpha * tree.gamma_hat[q])
        dev = np.maximum(np.abs(g_lo - centers), np.abs(g_hi - centers))
        max_dev = max(max_dev, float(np.max(dev)))
        if np.any(dev >= radius * (1 + slack)):
            good_ok = False
            failures.append(
                f"approximation-layer membership fails at step {q}: "
                f"max deviation {np.max(dev)} vs radius {radius}"
            )
        block_start = block_end_n

    return TreeReport(
        nesting_ok=nesting_ok,
        diameters_ok=diameters_ok,
        sandwich_ok=sandwich_ok,
        sibling_hats_ok=sibling_hats_ok,
        good_approximant_ok=good_ok,
        max_approx_deviation=max_dev,
        failures=failures,
    )


def _block_shifts(tree: NestedTree, q: int) -> np.ndarray:
    """The locate shifts used at construction step q (1-based)."""
    start = 0
    offset = 0
    for step in range(1, q):
        offset += tree.levels[start].lo.size
        start += tree.gamma[step]
    n_parents = tree.levels[start].lo.size
    return np.array(tree.shifts[offset : offset + n_parents])
