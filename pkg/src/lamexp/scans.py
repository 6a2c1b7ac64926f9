"""Seeded randomized verification drivers shared by the CLI and the test suite."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .betashift import multinacci
from .dimension import (
    Interval,
    Similarity,
    cylinder_word_length,
    lambda_interval,
    locate_cylinder,
    placed_interval,
    rams_cover,
)


@dataclass
class RamsScanResult:
    families: int
    seed: int
    rows: List[dict]
    failures: List[str]

    @property
    def ok(self) -> bool:
        return not self.failures


def random_interval_family(rng) -> List[Interval]:
    k = int(rng.integers(6, 40))
    centers = rng.uniform(0.0, 1.0, k)
    diams = rng.uniform(0.02, 0.12, k)
    return [Interval(c - d / 2, c + d / 2) for c, d in zip(centers, diams)]


def rams_random_scan(
    n_families: int,
    seed: int,
    bs: Sequence[int] = (2, 3, 5),
    rhos: Sequence[float] = (0.3, 0.7, 1.0),
    samples: int = 10_000,
) -> RamsScanResult:
    """Check the multiplicity-cover guarantees on seeded random families.

    Per family: the cover pieces stay within 4x the largest family diameter,
    the rho-sum stays within the 4**rho / b budget, and every sampled point of
    the b-fold region lands inside the cover.
    """
    rng = np.random.default_rng(seed)
    rows = []
    failures = []
    for i in range(n_families):
        family = random_interval_family(rng)
        b = int(bs[i % len(bs)])
        rho = float(rhos[(i // len(bs)) % len(rhos)])
        cover = rams_cover(family, b, rho)
        sup_d = max(iv.diameter for iv in family)
        sup_piece = max((iv.diameter for iv in cover.intervals), default=0.0)
        sup_ok = sup_piece <= 4.0 * sup_d * (1 + 1e-9)
        lhs = sum(iv.diameter**rho for iv in cover.intervals)
        rhs = 4.0**rho / b * sum(iv.diameter**rho for iv in family)
        sum_ok = lhs <= rhs * (1 + 1e-9)

        pts = rng.uniform(-0.1, 1.1, samples)
        lows = np.array([iv.lo for iv in family])
        highs = np.array([iv.hi for iv in family])
        counts = np.count_nonzero(
            (pts[None, :] >= lows[:, None]) & (pts[None, :] <= highs[:, None]), axis=0
        )
        needed = counts >= b
        covered = np.zeros(samples, dtype=bool)
        for iv in cover.intervals:
            covered |= (pts >= iv.lo - 1e-12) & (pts <= iv.hi + 1e-12)
        coverage_ok = bool(np.all(covered[needed]))

        ok = sup_ok and sum_ok and coverage_ok
        rows.append(
            {
                "family": i,
                "size": len(family),
                "b": b,
                "rho": rho,
                "pieces": cover.count,
                "sup_piece": sup_piece,
                "sup_family": sup_d,
                "rho_sum": lhs,
                "rho_budget": rhs,
                "coverage_ok": coverage_ok,
                "ok": ok,
            }
        )
        if not ok:
            failures.append(
                f"family {i} (b={b}, rho={rho}): sup_ok={sup_ok} "
                f"sum_ok={sum_ok} coverage_ok={coverage_ok}"
            )
    return RamsScanResult(families=n_families, seed=seed, rows=rows, failures=failures)


@dataclass
class CylinderScanResult:
    trials: int
    seed: int
    rows: List[dict]
    failures: List[str]

    @property
    def ok(self) -> bool:
        return not self.failures


def cylinder_random_scan(
    trials: int,
    seed: int,
    lams: Sequence[float] = None,
) -> CylinderScanResult:
    """Place cylinders in seeded random targets and check the placement contract:
    containment, the lam/4 diameter fraction, and the word-length formula."""
    if lams is None:
        lams = (0.55, multinacci(2).value, 0.65)
    rng = np.random.default_rng(seed)
    rows = []
    failures = []
    for lam in lams:
        d_base = lambda_interval(lam).diameter
        bad = 0
        for t in range(trials):
            slope = float(rng.uniform(0.4, 3.0)) * float(rng.choice([-1.0, 1.0]))
            offset = float(rng.uniform(-2.0, 2.0))
            f = Similarity(slope, offset)
            width = float(rng.uniform(0.002, 0.95)) * abs(slope) * d_base
            lo = float(rng.uniform(-5.0, 5.0))
            a = Interval(lo, lo + width)
            placement = locate_cylinder(a, f, lam)
            b = placed_interval(placement, f, lam)
            contained = a.contains(b, slack=1e-10)
            big_enough = b.diameter >= lam / 4 * a.diameter * (1 - 1e-12)
            theta_ok = placement.theta == cylinder_word_length(lam, a.diameter, slope)
            if not (contained and big_enough and theta_ok):
                bad += 1
                failures.append(
                    f"lam={lam} trial={t}: contained={contained} "
                    f"diameter_ok={big_enough} theta_ok={theta_ok} A={a} f={f}"
                )
        rows.append({"lambda": lam, "trials": trials, "violations": bad})
    return CylinderScanResult(trials=trials, seed=seed, rows=rows, failures=failures)
