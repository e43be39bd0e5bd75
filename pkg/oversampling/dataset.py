"""
Module for loading, validating, binarizing, summarizing and folding datasets.
Owns the per-feature statistics used by tolerance matching and distances.
"""
import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import DatasetError

_logger = logging.getLogger(__name__)

POSITIVE = "positive"
NEGATIVE = "negative"
DEFAULT_LABEL_NAME = "class"
SYNTHETIC_ROW_ID = -1


def as_positive_mask(labels):
    """Boolean mask of POSITIVE entries for label strings or booleans"""
    labels = np.asarray(labels)
    if labels.dtype == bool:
        return labels
    return labels == POSITIVE


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix plus per-row labels; immutable once built"""
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple
    class_names: tuple
    row_ids: np.ndarray = None
    label_name: str = DEFAULT_LABEL_NAME

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64)
        labels = np.array(self.labels, dtype=object).astype(str)
        if features.ndim != 2:
            raise DatasetError("features must be a 2-D matrix")
        if features.shape[1] < 1:
            raise DatasetError("a dataset needs at least one feature column")
        if features.shape[0] != labels.shape[0]:
            raise DatasetError(
                f"{features.shape[0]} feature rows but {labels.shape[0]} labels")
        if len(self.feature_names) != features.shape[1]:
            raise DatasetError(
                f"{len(self.feature_names)} feature names for {features.shape[1]} columns")
        if self.row_ids is None:
            row_ids = np.arange(features.shape[0], dtype=np.int64)
        else:
            row_ids = np.array(self.row_ids, dtype=np.int64)
            if row_ids.shape != labels.shape:
                raise DatasetError("row_ids must have one entry per row")
        for array in (features, labels, row_ids):
            array.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "row_ids", row_ids)
        object.__setattr__(self, "feature_names", tuple(str(n) for n in self.feature_names))
        object.__setattr__(self, "class_names", tuple(str(c) for c in self.class_names))

    @property
    def n_instances(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    @property
    def is_binary(self):
        return set(np.unique(self.labels)) <= {POSITIVE, NEGATIVE}

    @property
    def positive_mask(self):
        return self.labels == POSITIVE

    @property
    def positive_indices(self):
        return np.flatnonzero(self.labels == POSITIVE)

    @property
    def negative_indices(self):
        return np.flatnonzero(self.labels == NEGATIVE)

    def class_counts(self):
        values, counts = np.unique(self.labels, return_counts=True)
        return {str(v): int(c) for v, c in zip(values, counts)}

    def subset(self, indices):
        """Rows at the given positions, row ids preserved"""
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[indices], self.labels[indices],
                       self.feature_names, self.class_names,
                       row_ids=self.row_ids[indices], label_name=self.label_name)

    def with_synthetic(self, synthetic_features):
        """Original rows first, then the synthetic rows labeled POSITIVE"""
        synthetic_features = np.asarray(synthetic_features, dtype=np.float64)
        if synthetic_features.size == 0:
            return self
        synthetic_features = synthetic_features.reshape(-1, self.n_features)
        n_new = synthetic_features.shape[0]
        return Dataset(np.vstack([self.features, synthetic_features]),
                       np.concatenate([self.labels, np.full(n_new, POSITIVE)]),
                       self.feature_names, self.class_names,
                       row_ids=np.concatenate([self.row_ids,
                                               np.full(n_new, SYNTHETIC_ROW_ID)]),
                       label_name=self.label_name)

    def fingerprint(self):
        """Content hash used to key cached benchmark cells"""
        digest = hashlib.sha256()
        digest.update(self.features.tobytes())
        digest.update("\x1f".join(self.labels.tolist()).encode("utf-8"))
        digest.update(self.row_ids.tobytes())
        return digest.hexdigest()


@dataclass(frozen=True, eq=False)
class FeatureStats:
    """Population statistics per feature"""
    mean: np.ndarray
    std: np.ndarray
    minimum: np.ndarray
    maximum: np.ndarray

    @property
    def value_range(self):
        return self.maximum - self.minimum


@dataclass(frozen=True)
class DatasetSummary:
    n_features: int
    n_instances: int
    n_minority: int
    n_majority: int

    @property
    def imbalance_ratio(self):
        return self.n_majority / self.n_minority

    def describe(self):
        return (f"instances={self.n_instances} features={self.n_features} "
                f"minority={self.n_minority} majority={self.n_majority} "
                f"IR={self.imbalance_ratio:.2f}")


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    k: int
    folds: np.ndarray

    def split(self, fold):
        """(train positions, test positions) for one fold"""
        if not 0 <= fold < self.k:
            raise DatasetError(f"fold {fold} outside [0, {self.k})")
        return np.flatnonzero(self.folds != fold), np.flatnonzero(self.folds == fold)

    def fold_sizes(self):
        return np.bincount(self.folds, minlength=self.k)


@dataclass(frozen=True)
class Binarization:
    """One-versus-rest or one-versus-one conversion; groups allowed on each side"""
    scheme: str
    positive: tuple
    negative: tuple = field(default=())

    def __post_init__(self):
        if self.scheme not in ("ovr", "ovo"):
            raise DatasetError(f"unknown binarization scheme {self.scheme!r}")
        object.__setattr__(self, "positive", tuple(str(c) for c in self.positive))
        object.__setattr__(self, "negative", tuple(str(c) for c in self.negative))
        if not self.positive:
            raise DatasetError("binarization needs at least one positive class")
        if self.scheme == "ovo" and not self.negative:
            raise DatasetError("one-versus-one needs at least one negative class")
        if set(self.positive) & set(self.negative):
            raise DatasetError("a class cannot be both positive and negative")

    @classmethod
    def ovr(cls, *positive):
        return cls("ovr", positive)

    @classmethod
    def ovo(cls, positive, negative):
        positive = (positive,) if isinstance(positive, str) else positive
        negative = (negative,) if isinstance(negative, str) else negative
        return cls("ovo", positive, negative)

    def describe(self):
        rest = "R" if self.scheme == "ovr" else "-".join(self.negative)
        return f"{'-'.join(self.positive)}-vs-{rest}"

    def to_dict(self):
        return {"scheme": self.scheme, "positive": list(self.positive),
                "negative": list(self.negative)}


def dataset_from_frame(frame, label_column=None, source="<frame>", header=True):
    """Build a Dataset from a frame of text cells, reporting the first bad cell"""
    if frame.shape[0] == 0:
        raise DatasetError(f"{source}: dataset has no rows")
    if frame.shape[1] < 2:
        raise DatasetError(f"{source}: need at least one feature column and a label column")
    columns = [str(c) for c in frame.columns]
    frame.columns = columns
    if label_column is None:
        label_name = columns[-1]
    elif str(label_column) in columns:
        label_name = str(label_column)
    elif str(label_column).lstrip("-").isdigit():
        try:
            label_name = columns[int(label_column)]
        except IndexError:
            raise DatasetError(f"{source}: label column index {label_column} out of range")
    else:
        raise DatasetError(f"{source}: label column {label_column!r} not found")

    first_line = 2 if header else 1
    ragged = frame.isna().any(axis=1).to_numpy()
    if ragged.any():
        row = int(np.flatnonzero(ragged)[0])
        raise DatasetError(f"{source}: ragged row at line {row + first_line}")

    feature_names = [c for c in columns if c != label_name]
    matrix = np.empty((frame.shape[0], len(feature_names)), dtype=np.float64)
    for j, name in enumerate(feature_names):
        cells = frame[name].astype(str).str.strip().to_numpy()
        try:
            values = cells.astype(np.float64)
        except ValueError:
            values = None
        if values is None or not np.isfinite(values).all():
            for i, cell in enumerate(cells):
                try:
                    ok = cell != "" and np.isfinite(float(cell))
                except ValueError:
                    ok = False
                if not ok:
                    kind = "missing value" if cell == "" else f"non-numeric cell {cell!r}"
                    raise DatasetError(
                        f"{source}: {kind} at line {i + first_line}, column {name!r}")
        matrix[:, j] = values

    labels = frame[label_name].astype(str).str.strip().to_numpy()
    if (labels == "").any():
        row = int(np.flatnonzero(labels == "")[0])
        raise DatasetError(f"{source}: missing label at line {row + first_line}")
    class_names = tuple(pd.unique(labels))
    return Dataset(matrix, labels, feature_names, class_names, label_name=label_name)


def load_csv(path, label_column=None, header=True):
    """Read a comma-separated file; label column defaults to the last column"""
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"dataset file not found: {path}")
    try:
        frame = pd.read_csv(path, header=0 if header else None, dtype=str,
                            keep_default_na=False, skip_blank_lines=True,
                            encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise DatasetError(f"{path}: dataset is empty")
    except pd.errors.ParserError as e:
        raise DatasetError(f"{path}: ragged rows ({e})")
    except UnicodeDecodeError as e:
        raise DatasetError(f"{path}: not UTF-8 text ({e})")
    if not header:
        frame.columns = [f"x{i}" for i in range(frame.shape[1] - 1)] + [DEFAULT_LABEL_NAME]
    dataset = dataset_from_frame(frame, label_column, source=str(path), header=header)
    _logger.debug("Loaded %s: %d rows, %d features", path, dataset.n_instances, dataset.n_features)
    return dataset


def dataset_to_csv_text(ds, provenance=None):
    """CSV text with floats written in shortest round-trip form"""
    columns = {}
    for j, name in enumerate(ds.feature_names):
        columns[name] = [repr(float(v)) for v in ds.features[:, j]]
    columns[ds.label_name] = ds.labels.tolist()
    if provenance is not None:
        if len(provenance) != ds.n_instances:
            raise DatasetError("provenance column needs one entry per row")
        columns["provenance"] = list(provenance)
    return pd.DataFrame(columns).to_csv(index=False, lineterminator="\n")


def binarize(ds, mode):
    """Relabel to POSITIVE/NEGATIVE; OVO drops rows outside the two groups"""
    present = set(ds.labels.tolist())
    for name in mode.positive + mode.negative:
        if name not in present:
            raise DatasetError(f"unknown class {name!r}; classes are {sorted(present)}")

    is_positive = np.isin(ds.labels, mode.positive)
    if mode.scheme == "ovo":
        keep = is_positive | np.isin(ds.labels, mode.negative)
    else:
        keep = np.ones(ds.n_instances, dtype=bool)

    n_positive = int(np.sum(is_positive & keep))
    n_negative = int(np.sum(~is_positive & keep))
    if n_positive == 0 or n_negative == 0:
        raise DatasetError(f"binarization {mode.describe()} leaves an empty class")
    if n_positive > n_negative:
        raise DatasetError(
            f"positive side of {mode.describe()} has {n_positive} rows against "
            f"{n_negative}; the positive class must be the minority")

    labels = np.where(is_positive, POSITIVE, NEGATIVE)[keep]
    return Dataset(ds.features[keep], labels, ds.feature_names, ds.class_names,
                   row_ids=ds.row_ids[keep], label_name=ds.label_name)


def require_binary(ds):
    if not ds.is_binary:
        raise DatasetError("dataset must be binarized first")
    if len(ds.positive_indices) == 0 or len(ds.negative_indices) == 0:
        raise DatasetError("binarized dataset needs both classes")


def stats_for_matrix(matrix):
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[0] < 1:
        raise DatasetError("feature statistics need at least one instance")
    minimum = matrix.min(axis=0)
    maximum = matrix.max(axis=0)
    constant = minimum == maximum
    # summation error can push the mean of a constant column off its value
    mean = np.clip(matrix.mean(axis=0), minimum, maximum)
    std = np.where(constant, 0.0, matrix.std(axis=0, ddof=0))
    return FeatureStats(mean, std, minimum, maximum)


def feature_stats(ds):
    return stats_for_matrix(ds.features)


def summarize(ds):
    require_binary(ds)
    n_minority = len(ds.positive_indices)
    return DatasetSummary(ds.n_features, ds.n_instances, n_minority,
                          ds.n_instances - n_minority)


def stratified_kfold(ds, k, seed):
    """Seeded stratified folds; per-class fold sizes differ by at most one"""
    if k < 2:
        raise DatasetError("k-fold needs k >= 2")
    rng = np.random.default_rng(seed)
    folds = np.empty(ds.n_instances, dtype=np.int64)
    offset = 0
    for label in sorted(set(ds.labels.tolist())):
        members = np.flatnonzero(ds.labels == label)
        if len(members) < k:
            raise DatasetError(
                f"class {label!r} has {len(members)} instances, fewer than k={k}")
        members = rng.permutation(members)
        folds[members] = (np.arange(len(members)) + offset) % k
        offset = (offset + len(members)) % k
    return FoldAssignment(k, folds)


def scale_matrix(matrix, stats):
    """(v - min) / (max - min); constant features map to 0, no clipping"""
    matrix = np.asarray(matrix, dtype=np.float64)
    span = stats.value_range
    safe_span = np.where(span > 0, span, 1.0)
    scaled = (matrix - stats.minimum) / safe_span
    return np.where(span > 0, scaled, 0.0)


def min_max_scale(ds, stats):
    return Dataset(scale_matrix(ds.features, stats), ds.labels, ds.feature_names,
                   ds.class_names, row_ids=ds.row_ids, label_name=ds.label_name)
