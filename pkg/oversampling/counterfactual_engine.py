"""
Module for Counterfactual Augmentation (CFA).

Mines native counterfactual pairs cf(x, p) under a per-feature tolerance, finds
the nearest paired majority instance for every unpaired one, and transfers the
pair's difference-features onto it to produce a synthetic minority instance.
"""
import logging
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .dataset import as_positive_mask, feature_stats, require_binary
from .distances import MinMaxSpace, euclidean, pairwise_euclidean
from .errors import DimensionError, NoPairsError, ResampleError
from .resampling import (DEFAULT_MAX_DIFFS, DEFAULT_TOLERANCE_FACTOR, Method,
                         Provenance, ResampleResult, resolve_target, unchanged)

_logger = logging.getLogger(__name__)

__all__ = ["ToleranceTable", "CFPair", "CFSet", "SyntheticInstance", "PairedNeighborIndex",
           "features_match", "compute_cf_set", "euclidean", "nearest_paired",
           "synthesize", "cfa_oversample"]

# candidate (majority, minority, feature) cells compared per mining block
MINING_BLOCK_CELLS = 2_000_000
NEAREST_CHUNK = 1024


@dataclass(frozen=True, eq=False)
class ToleranceTable:
    """Per-feature match threshold tau_f = factor * sigma_f"""
    thresholds: np.ndarray
    factor: float = DEFAULT_TOLERANCE_FACTOR

    @classmethod
    def from_stats(cls, stats, factor=DEFAULT_TOLERANCE_FACTOR):
        if factor < 0:
            raise ResampleError("tolerance factor must be >= 0")
        thresholds = factor * np.asarray(stats.std, dtype=np.float64)
        thresholds.setflags(write=False)
        return cls(thresholds, float(factor))

    @classmethod
    def uniform(cls, value, n_features):
        return cls(np.full(n_features, float(value)), factor=float("nan"))

    @property
    def n_features(self):
        return self.thresholds.shape[0]


@dataclass(frozen=True)
class CFPair:
    """Native counterfactual: majority x and minority p with 1..max_diffs differences"""
    majority_index: int
    minority_index: int
    diff_features: frozenset
    match_features: frozenset

    def __post_init__(self):
        if self.diff_features & self.match_features:
            raise ResampleError("a feature cannot both match and differ")
        if not self.diff_features:
            raise ResampleError("a counterfactual pair needs at least one difference")


@dataclass(frozen=True)
class CFSet:
    pairs: tuple
    paired_majority: frozenset
    unpaired_majority: tuple

    def diagnostics(self):
        diff_counts = defaultdict(int)
        for pair in self.pairs:
            diff_counts[len(pair.diff_features)] += 1
        return {
            "pairs": len(self.pairs),
            "paired_majority": len(self.paired_majority),
            "unpaired_majority": len(self.unpaired_majority),
            "paired_minority": len({pair.minority_index for pair in self.pairs}),
            "pairs_by_diff_count": {str(k): diff_counts[k] for k in sorted(diff_counts)},
        }


@dataclass(frozen=True, eq=False)
class SyntheticInstance:
    """p': match-features from x', difference-features from p"""
    values: np.ndarray
    provenance: Provenance


def features_match(a, b, tol):
    """Set of feature ids where |a_f - b_f| exceeds the tolerance"""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.shape[-1] != tol.n_features:
        raise DimensionError(
            f"vectors {a.shape} and {b.shape} against {tol.n_features} thresholds")
    return frozenset(int(f) for f in np.flatnonzero(np.abs(a - b) > tol.thresholds))


def _mine_block(majority_rows, minority_rows, thresholds, max_diffs):
    differs = np.abs(majority_rows[:, None, :] - minority_rows[None, :, :]) > thresholds
    counts = differs.sum(axis=2)
    rows, cols = np.nonzero((counts >= 1) & (counts <= max_diffs))
    return [(int(i), int(j), tuple(int(f) for f in np.flatnonzero(differs[i, j])))
            for i, j in zip(rows, cols)]


def compute_cf_set(ds, tol, max_diffs=DEFAULT_MAX_DIFFS, n_jobs=1):
    """Exhaustive mining of every good native pair, in (majority, minority) order"""
    require_binary(ds)
    if tol.n_features != ds.n_features:
        raise DimensionError(f"{tol.n_features} thresholds for {ds.n_features} features")
    majority = ds.negative_indices
    minority = ds.positive_indices
    all_features = frozenset(range(ds.n_features))

    block = max(1, MINING_BLOCK_CELLS // max(1, len(minority) * ds.n_features))
    starts = range(0, len(majority), block)
    minority_rows = ds.features[minority]
    found = Parallel(n_jobs=n_jobs)(
        delayed(_mine_block)(ds.features[majority[s:s + block]], minority_rows,
                             tol.thresholds, max_diffs)
        for s in starts)

    pairs = []
    for start, block_pairs in zip(starts, found):
        for i, j, diffs in block_pairs:
            diff = frozenset(diffs)
            pairs.append(CFPair(int(majority[start + i]), int(minority[j]),
                                diff, all_features - diff))
    paired = frozenset(pair.majority_index for pair in pairs)
    unpaired = tuple(int(x) for x in majority if int(x) not in paired)
    _logger.debug("CF-Set: %d pairs, %d paired / %d unpaired majority",
                  len(pairs), len(paired), len(unpaired))
    return CFSet(tuple(pairs), paired, unpaired)


class PairedNeighborIndex:
    """Nearest paired majority lookup for many unpaired instances at once"""

    def __init__(self, cf, ds, space=None):
        if not cf.pairs:
            raise NoPairsError("the CF-Set is empty", cf.diagnostics())
        self.ds = ds
        self.points = ds.features if space is None else space.transform(ds.features)
        self.paired = np.array(sorted(cf.paired_majority), dtype=np.int64)
        self.pairs_by_majority = defaultdict(list)
        for pair in sorted(cf.pairs, key=lambda p: (p.majority_index, p.minority_index)):
            self.pairs_by_majority[pair.majority_index].append(pair)

    def nearest(self, x_prime):
        return self.nearest_many([x_prime])[0]

    def nearest_many(self, x_primes):
        x_primes = np.asarray(x_primes, dtype=np.int64)
        chosen = []
        for start in range(0, len(x_primes), NEAREST_CHUNK):
            chunk = x_primes[start:start + NEAREST_CHUNK]
            distances = pairwise_euclidean(self.points[chunk], self.points[self.paired])
            # argmin keeps the first minimum, i.e. the lowest majority index
            best = np.argmin(distances, axis=1)
            for x_prime, column in zip(chunk, best):
                chosen.append(self._closest_template(int(x_prime), int(self.paired[column])))
        return chosen

    def _closest_template(self, x_prime, majority_index):
        candidates = self.pairs_by_majority[majority_index]
        if len(candidates) == 1:
            return candidates[0]
        origin = self.points[x_prime]
        gaps = [euclidean(origin, self.points[pair.minority_index]) for pair in candidates]
        return candidates[int(np.argmin(gaps))]


def nearest_paired(x_prime, cf, ds, space=None):
    """Pair whose majority member is closest to x'; then closest minority; then lowest ids"""
    return PairedNeighborIndex(cf, ds, space).nearest(x_prime)


def synthesize(x_prime, pair, ds):
    values = ds.features[x_prime].copy()
    diff = sorted(pair.diff_features)
    values[diff] = ds.features[pair.minority_index, diff]
    ids = ds.row_ids
    provenance = Provenance(Method.CFA, base=int(ids[x_prime]),
                            neighbor=int(ids[pair.minority_index]),
                            paired=int(ids[pair.majority_index]))
    return SyntheticInstance(values, provenance)


def cfa_oversample(ds, tol_factor=DEFAULT_TOLERANCE_FACTOR, max_diffs=DEFAULT_MAX_DIFFS,
                   target=None, seed=0, verify=None, n_jobs=1):
    """
    One candidate p' per unpaired majority instance, in ascending index order.

    Candidates rejected by `verify` (a trained model whose predict() returns a
    POSITIVE mask) are dropped first; a seeded subsample then trims any surplus
    over the target. A deficit is reported as shortfall, never filled.
    """
    goal, needed = resolve_target(ds, target)
    if needed == 0:
        _logger.info("CFA: minority already at target %d, nothing to generate", goal)
        return unchanged(ds, "already at target; no synthetic instances")

    stats = feature_stats(ds)
    tol = ToleranceTable.from_stats(stats, tol_factor)
    cf = compute_cf_set(ds, tol, max_diffs, n_jobs=n_jobs)
    diagnostics = {"tolerance_factor": tol.factor, "max_diffs": max_diffs, **cf.diagnostics()}
    if not cf.pairs:
        raise NoPairsError(
            f"no native counterfactuals with 1..{max_diffs} differences at tolerance "
            f"{tol_factor}", diagnostics)

    index = PairedNeighborIndex(cf, ds, MinMaxSpace(stats))
    templates = index.nearest_many(cf.unpaired_majority)
    candidates = [synthesize(x_prime, pair, ds)
                  for x_prime, pair in zip(cf.unpaired_majority, templates)]
    diagnostics["candidates"] = len(candidates)

    if verify is not None and candidates:
        accepted = as_positive_mask(verify.predict(np.array([c.values for c in candidates])))
        diagnostics["rejected_by_verification"] = int(np.sum(~accepted))
        candidates = [c for c, ok in zip(candidates, accepted) if ok]

    if len(candidates) > needed:
        rng = np.random.default_rng(seed)
        keep = np.sort(rng.choice(len(candidates), size=needed, replace=False))
        diagnostics["trimmed"] = len(candidates) - needed
        candidates = [candidates[i] for i in keep]

    shortfall = needed - len(candidates)
    diagnostics.update({
        "target": goal,
        "needed": needed,
        "synthetic": len(candidates),
        "shortfall": shortfall,
        "duplicates": _duplicate_count([c.values for c in candidates]),
    })
    if shortfall:
        _logger.warning("CFA: %d synthetic instances short of target %d", shortfall, goal)

    if not candidates:
        return ResampleResult(ds, (), diagnostics)
    augmented = ds.with_synthetic(np.array([c.values for c in candidates]))
    return ResampleResult(augmented, tuple(c.provenance for c in candidates), diagnostics)


def _duplicate_count(rows):
    if len(rows) < 2:
        return 0
    unique = np.unique(np.array(rows), axis=0)
    return len(rows) - unique.shape[0]
