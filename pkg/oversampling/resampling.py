"""Module for the configuration and result types shared by every oversampler"""
from dataclasses import dataclass, field, asdict
from enum import Enum

import numpy as np

from .dataset import require_binary
from .errors import ConfigError, ResampleError

DEFAULT_K_NEIGHBORS = 5
DEFAULT_TOLERANCE_FACTOR = 0.1
DEFAULT_MAX_DIFFS = 2
# candidate neighborhood sizes searched inside each training fold
K_NEIGHBOR_GRID = (3, 5, 7, 9, 20)


class Method(Enum):
    BASELINE = "baseline"
    SMOTE = "smote"
    BSMOTE = "bsmote"
    ADASYN = "adasyn"
    SLSMOTE = "slsmote"
    CFA = "cfa"

    @property
    def label(self):
        return METHOD_LABELS[self]

    @classmethod
    def parse(cls, text):
        key = str(text).strip().lower().replace("-", "").replace("_", "")
        for method in cls:
            if key in (method.value, method.label.lower().replace("-", "")):
                return method
        raise ConfigError(f"unknown resampling method {text!r}")


METHOD_LABELS = {
    Method.BASELINE: "Baseline",
    Method.SMOTE: "SMOTE",
    Method.BSMOTE: "B-SMOTE",
    Method.ADASYN: "ADASYN",
    Method.SLSMOTE: "SL-SMOTE",
    Method.CFA: "CFA",
}

# column order of the results tables
METHOD_ORDER = tuple(METHOD_LABELS)
SMOTE_FAMILY = frozenset({Method.SMOTE, Method.BSMOTE, Method.ADASYN, Method.SLSMOTE})


@dataclass(frozen=True)
class ResamplePlan:
    """What to run: method, neighborhood sizes, target and seed"""
    method: Method
    k_neighbors: int = DEFAULT_K_NEIGHBORS
    m_neighbors: int = None
    target: int = None  # None means class parity
    seed: int = 0
    tol_factor: float = DEFAULT_TOLERANCE_FACTOR
    max_diffs: int = DEFAULT_MAX_DIFFS
    verify: bool = False
    k_grid: tuple = ()  # non-empty: k_neighbors is chosen per training fold

    def __post_init__(self):
        if not isinstance(self.method, Method):
            object.__setattr__(self, "method", Method.parse(self.method))
        if self.k_neighbors < 1:
            raise ConfigError("k_neighbors must be >= 1")
        object.__setattr__(self, "k_grid", tuple(self.k_grid))
        if self.k_grid and self.method not in SMOTE_FAMILY:
            raise ConfigError(f"a k_neighbors grid only applies to the SMOTE family, "
                              f"not {self.method.label}")
        if any(isinstance(k, bool) or not isinstance(k, int) or k < 1 for k in self.k_grid):
            raise ConfigError(f"k_neighbors grid values must be integers >= 1, got {self.k_grid}")
        if self.m_neighbors is not None and self.m_neighbors < 1:
            raise ConfigError("m_neighbors must be >= 1")
        if self.target is not None and self.target < 0:
            raise ConfigError("target count must be >= 0")
        if self.tol_factor < 0:
            raise ConfigError("tolerance factor must be >= 0")
        if self.max_diffs < 1:
            raise ConfigError("max_diffs must be >= 1")

    @property
    def danger_neighbors(self):
        return self.m_neighbors if self.m_neighbors is not None else self.k_neighbors

    def to_dict(self):
        values = asdict(self)
        values["method"] = self.method.value
        return values


@dataclass(frozen=True)
class Provenance:
    """Which real rows produced one synthetic row (row ids, not positions)"""
    method: Method
    base: int
    neighbor: int
    paired: int = None
    delta: float = None

    def source_rows(self):
        rows = [self.base, self.neighbor]
        if self.paired is not None:
            rows.append(self.paired)
        return rows

    def to_text(self):
        if self.method is Method.CFA:
            return f"cfa:x'={self.base};x={self.paired};p={self.neighbor}"
        return f"{self.method.value}:p={self.base};n={self.neighbor};d={self.delta:.6f}"

    def to_dict(self):
        values = {"method": self.method.value, "base": self.base, "neighbor": self.neighbor}
        if self.paired is not None:
            values["paired"] = self.paired
        if self.delta is not None:
            values["delta"] = self.delta
        return values


@dataclass(frozen=True, eq=False)
class ResampleResult:
    """Augmented dataset (original rows first) plus per-synthetic provenance"""
    dataset: object
    provenance: tuple
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_synthetic(self):
        return len(self.provenance)

    @property
    def n_original(self):
        return self.dataset.n_instances - self.n_synthetic

    @property
    def synthetic_features(self):
        return self.dataset.features[self.n_original:]

    def provenance_column(self):
        return [""] * self.n_original + [p.to_text() for p in self.provenance]


def resolve_target(ds, target):
    """(target minority count, number of synthetic rows needed)"""
    require_binary(ds)
    n_minority = len(ds.positive_indices)
    n_majority = len(ds.negative_indices)
    goal = n_majority if target is None else int(target)
    if goal < n_minority:
        raise ResampleError(
            f"target {goal} is below the current minority count {n_minority}")
    return goal, goal - n_minority


def unchanged(ds, note):
    return ResampleResult(ds, (), {"synthetic": 0, "note": note})


def smote_provenance(method, ds, base_positions, neighbor_positions, deltas):
    ids = ds.row_ids
    return tuple(Provenance(method, int(ids[b]), int(ids[n]), delta=float(d))
                 for b, n, d in zip(base_positions, neighbor_positions, np.asarray(deltas)))
