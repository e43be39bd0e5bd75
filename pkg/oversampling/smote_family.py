"""
Module for the SMOTE family of oversamplers.

Every method builds synthetic minority rows as p + (m - p) * delta between a base
minority instance p and one of its k nearest minority neighbors m. Neighbor
searches run in min-max scaled space (training statistics) with the query
instance excluded; interpolation happens on the raw feature values.
"""
import logging
from enum import Enum

import numpy as np

from .distances import MinMaxSpace, k_nearest
from .errors import ResampleError
from .resampling import Method, ResampleResult, resolve_target, smote_provenance, unchanged

_logger = logging.getLogger(__name__)

# consecutive discarded Safe-Level draws allowed per row of the minority target
SAFE_LEVEL_GUARD = 1000


class Zone(Enum):
    NOISE = "noise"
    DANGER = "danger"
    SAFE = "safe"


def interpolate(base, neighbor, delta):
    """base + (neighbor - base) * delta, held inside the closed segment"""
    base = np.asarray(base, dtype=np.float64)
    neighbor = np.asarray(neighbor, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    if delta.ndim == 1 and base.ndim == 2:
        delta = delta[:, None]
    values = base + (neighbor - base) * delta
    return np.clip(values, np.minimum(base, neighbor), np.maximum(base, neighbor))


class _Neighborhood:
    """Scaled points plus the minority / whole-set neighbor tables of one dataset"""

    def __init__(self, ds, method):
        self.ds = ds
        self.method = method
        self.minority = ds.positive_indices
        self.points = MinMaxSpace.from_dataset(ds).transform(ds.features)

    def check(self, k):
        if len(self.minority) <= k:
            raise ResampleError(
                f"{self.method.label}: {len(self.minority)} minority instances cannot "
                f"supply {k} neighbors each")

    def minority_neighbors(self, k):
        """k nearest minority instances of every minority instance (minority positions)"""
        self.check(k)
        own = np.arange(len(self.minority))
        indices, _ = k_nearest(self.points[self.minority], self.points[self.minority], k,
                               exclude=own)
        return indices

    def majority_counts(self, m):
        """Majority instances among the m nearest neighbors in the whole set"""
        if self.ds.n_instances - 1 < m:
            raise ResampleError(
                f"{self.method.label}: {self.ds.n_instances} instances cannot supply "
                f"{m} neighbors each")
        indices, _ = k_nearest(self.points[self.minority], self.points, m,
                               exclude=self.minority)
        return np.sum(~self.ds.positive_mask[indices], axis=1)

    def build(self, base_positions, neighbor_positions, deltas, diagnostics):
        """Synthetic rows from minority positions; provenance keyed by row ids"""
        bases = self.minority[np.asarray(base_positions, dtype=np.int64)]
        neighbors = self.minority[np.asarray(neighbor_positions, dtype=np.int64)]
        deltas = np.asarray(deltas, dtype=np.float64)
        values = interpolate(self.ds.features[bases], self.ds.features[neighbors], deltas)
        provenance = smote_provenance(self.method, self.ds, bases, neighbors, deltas)
        diagnostics.setdefault("synthetic", len(provenance))
        diagnostics.setdefault("shortfall", 0)
        return ResampleResult(self.ds.with_synthetic(values), provenance, diagnostics)


def _draw(rng, neighbors, base_positions):
    picks = rng.integers(neighbors.shape[1], size=len(base_positions))
    deltas = rng.random(len(base_positions))
    return neighbors[base_positions, picks], deltas


def smote(ds, plan):
    goal, needed = resolve_target(ds, plan.target)
    if needed == 0:
        return unchanged(ds, "already at target; no synthetic instances")
    _logger.info("SMOTE: generating %d instances with k=%d", needed, plan.k_neighbors)
    return _smote_from(_Neighborhood(ds, Method.SMOTE), plan, needed,
                       {"target": goal, "needed": needed})


def _smote_from(hood, plan, needed, diagnostics, candidates=None):
    neighbors = hood.minority_neighbors(plan.k_neighbors)
    rng = np.random.default_rng(plan.seed)
    pool = np.arange(len(hood.minority)) if candidates is None else np.asarray(candidates)
    bases = pool[rng.integers(len(pool), size=needed)]
    picks, deltas = _draw(rng, neighbors, bases)
    return hood.build(bases, picks, deltas, diagnostics)


def classify_borderline(m_prime, m):
    """Zone of a minority instance with m_prime majority among its m neighbors"""
    if not 0 <= m_prime <= m:
        raise ResampleError(f"{m_prime} majority neighbors out of {m}")
    if m_prime == m:
        return Zone.NOISE
    if 2 * m_prime >= m:
        return Zone.DANGER
    return Zone.SAFE


def borderline_smote(ds, plan):
    goal, needed = resolve_target(ds, plan.target)
    if needed == 0:
        return unchanged(ds, "already at target; no synthetic instances")
    hood = _Neighborhood(ds, Method.BSMOTE)
    hood.check(plan.k_neighbors)
    m = plan.danger_neighbors
    counts = hood.majority_counts(m)
    zones = [classify_borderline(int(c), m) for c in counts]
    danger = np.array([i for i, zone in enumerate(zones) if zone is Zone.DANGER], dtype=np.int64)
    diagnostics = {
        "target": goal,
        "needed": needed,
        "m_neighbors": m,
        "noise": sum(zone is Zone.NOISE for zone in zones),
        "danger": len(danger),
        "safe": sum(zone is Zone.SAFE for zone in zones),
        "danger_rows": [int(ds.row_ids[hood.minority[i]]) for i in danger],
    }
    if len(danger) == 0:
        _logger.warning("B-SMOTE: DANGER set is empty, falling back to SMOTE")
        diagnostics["fallback"] = Method.SMOTE.value
        return _smote_from(hood, plan, needed, diagnostics)
    _logger.info("B-SMOTE: %d DANGER bases, generating %d instances", len(danger), needed)
    return _smote_from(hood, plan, needed, diagnostics, candidates=danger)


def allocate_adasyn(ratios, total):
    """
    Split `total` synthetic rows in proportion to the difficulty ratios.

    Rounds each share half-up, then settles the rounding residue one row at a
    time on the instances with the largest share (lowest position first on
    ties). Instances with a zero ratio never receive rows.
    """
    ratios = np.asarray(ratios, dtype=np.float64)
    if total < 0:
        raise ResampleError("cannot allocate a negative number of rows")
    if np.any(ratios < 0) or ratios.sum() <= 0:
        raise ResampleError("ADASYN ratios must be non-negative with a positive sum")
    share = ratios / ratios.sum()
    allocation = np.floor(share * total + 0.5).astype(np.int64)
    order = [int(i) for i in np.argsort(-share, kind="stable") if share[i] > 0]

    residue = total - int(allocation.sum())
    step = 0
    while residue > 0:
        allocation[order[step % len(order)]] += 1
        residue -= 1
        step += 1
    while residue < 0:
        for i in reversed(order):
            if residue == 0:
                break
            if allocation[i] > 0:
                allocation[i] -= 1
                residue += 1
    return allocation


def adasyn(ds, plan):
    goal, needed = resolve_target(ds, plan.target)
    if needed == 0:
        return unchanged(ds, "already at target; no synthetic instances")
    hood = _Neighborhood(ds, Method.ADASYN)
    hood.check(plan.k_neighbors)
    k = plan.k_neighbors
    ratios = hood.majority_counts(k) / k
    diagnostics = {"target": goal, "needed": needed, "ratios": [float(r) for r in ratios]}
    if ratios.sum() == 0:
        _logger.warning("ADASYN: no minority instance has a majority neighbor at k=%d, "
                        "falling back to SMOTE", k)
        diagnostics["fallback"] = Method.SMOTE.value
        return _smote_from(hood, plan, needed, diagnostics)

    allocation = allocate_adasyn(ratios, needed)
    diagnostics["allocation"] = [int(g) for g in allocation]
    _logger.info("ADASYN: %d of %d minority instances receive synthetic rows",
                 int(np.count_nonzero(allocation)), len(allocation))
    neighbors = hood.minority_neighbors(k)
    rng = np.random.default_rng(plan.seed)
    bases = np.repeat(np.arange(len(allocation)), allocation)
    picks, deltas = _draw(rng, neighbors, bases)
    return hood.build(bases, picks, deltas, diagnostics)


def safe_level_gap(sl_p, sl_n, rng):
    """
    Interpolation gap for one Safe-Level draw, or None when the draw is discarded.

    sl_p and sl_n count minority instances among the k neighbors of the base and
    of the chosen neighbor.
    """
    if sl_p == 0:
        # an unsafe base leaves no admissible gap
        return None
    if sl_n == 0:
        return 0.0
    ratio = sl_p / sl_n
    if ratio == 1:
        return float(rng.random())
    if ratio > 1:
        return float(rng.uniform(0.0, 1.0 / ratio))
    return float(rng.uniform(1.0 - ratio, 1.0))


def safe_level_smote(ds, plan):
    goal, needed = resolve_target(ds, plan.target)
    if needed == 0:
        return unchanged(ds, "already at target; no synthetic instances")
    hood = _Neighborhood(ds, Method.SLSMOTE)
    k = plan.k_neighbors
    neighbors = hood.minority_neighbors(k)
    safe_levels = k - hood.majority_counts(k)
    diagnostics = {"target": goal, "needed": needed,
                   "safe_levels": [int(s) for s in safe_levels]}
    guard = SAFE_LEVEL_GUARD * goal
    if not safe_levels.any():
        raise ResampleError(
            "SL-SMOTE: every minority instance has safe level 0; all draws would be discarded")

    rng = np.random.default_rng(plan.seed)
    bases, picks, deltas = [], [], []
    discarded, run = 0, 0
    while len(bases) < needed:
        base = int(rng.integers(len(hood.minority)))
        pick = int(neighbors[base, rng.integers(k)])
        gap = safe_level_gap(int(safe_levels[base]), int(safe_levels[pick]), rng)
        if gap is None:
            discarded += 1
            run += 1
            if run >= guard:
                raise ResampleError(
                    f"SL-SMOTE: {run} consecutive draws discarded with {len(bases)} of "
                    f"{needed} instances generated")
            continue
        run = 0
        bases.append(base)
        picks.append(pick)
        deltas.append(gap)
    diagnostics["discarded"] = discarded
    _logger.info("SL-SMOTE: generated %d instances, %d draws discarded", needed, discarded)
    return hood.build(bases, picks, deltas, diagnostics)
