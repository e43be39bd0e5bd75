"""
Module for the classifiers used to score oversampled training sets: k-NN,
L2-regularized logistic regression and a random forest of CART trees, plus
exhaustive cross-validated grid search and a JSON form of trained models.
"""
import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from joblib import Parallel, delayed
from scipy.special import expit

from .dataset import NEGATIVE, POSITIVE, stats_for_matrix, stratified_kfold, FeatureStats
from .distances import MinMaxSpace, k_nearest
from .errors import ConfigError, DimensionError, OversamplingError, TrainingError
from .evaluation import metric_from_scores, METRIC_NAMES

_logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
DECISION_THRESHOLD = 0.5
MAX_STEP_HALVINGS = 50


class ClassifierKind(Enum):
    KNN = "knn"
    LOGREG = "logreg"
    RFOREST = "rforest"

    @classmethod
    def parse(cls, text):
        key = str(text).strip().lower().replace("-", "").replace("_", "")
        aliases = {"knn": cls.KNN, "logreg": cls.LOGREG, "lr": cls.LOGREG,
                   "logisticregression": cls.LOGREG, "rforest": cls.RFOREST,
                   "rf": cls.RFOREST, "randomforest": cls.RFOREST}
        if key not in aliases:
            raise ConfigError(f"unknown classifier kind {text!r}")
        return aliases[key]


DEFAULT_PARAMS = {
    ClassifierKind.KNN: {"n_neighbors": 5, "tie": POSITIVE},
    ClassifierKind.LOGREG: {"C": 1.0, "max_iter": 1000, "learning_rate": 1.0, "tol": 1e-8},
    ClassifierKind.RFOREST: {"n_tree": 100, "max_depth": 10, "min_samples_split": 2},
}

# hyperparameter grids searched per classifier
STANDARD_GRIDS = {
    ClassifierKind.KNN: {"n_neighbors": [3, 5, 7, 10, 20, 30, 50]},
    ClassifierKind.LOGREG: {"max_iter": [1000, 200],
                            "C": [0.001, 0.01, 0.1, 1, 10, 100, 1000]},
    ClassifierKind.RFOREST: {"n_tree": [50, 100, 200, 400, 600],
                             "max_depth": [4, 6, 10, 20, 30, 50, 80, 100]},
}


@dataclass(frozen=True)
class ClassifierSpec:
    """Classifier kind with its full hyperparameter set and training seed"""
    kind: ClassifierKind
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        kind = self.kind if isinstance(self.kind, ClassifierKind) else ClassifierKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        defaults = DEFAULT_PARAMS[kind]
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown {kind.value} hyperparameters {sorted(unknown)}")
        params = {**defaults, **self.params}
        object.__setattr__(self, "params", params)
        self._validate(params)

    def _validate(self, params):
        if self.kind is ClassifierKind.KNN:
            if int(params["n_neighbors"]) < 1:
                raise ConfigError("KNN n_neighbors must be >= 1")
            if params["tie"] not in (POSITIVE, NEGATIVE):
                raise ConfigError(f"KNN tie rule must be {POSITIVE!r} or {NEGATIVE!r}")
        elif self.kind is ClassifierKind.LOGREG:
            if int(params["max_iter"]) < 1:
                raise ConfigError("LOGREG max_iter must be >= 1")
            if float(params["C"]) <= 0:
                raise ConfigError("LOGREG C must be > 0")
            if float(params["learning_rate"]) <= 0:
                raise ConfigError("LOGREG learning_rate must be > 0")
        else:
            if int(params["n_tree"]) < 1:
                raise ConfigError("RFOREST n_tree must be >= 1")
            if int(params["max_depth"]) < 1:
                raise ConfigError("RFOREST max_depth must be >= 1")
            if int(params["min_samples_split"]) < 2:
                raise ConfigError("RFOREST min_samples_split must be >= 2")

    def with_seed(self, seed):
        return ClassifierSpec(self.kind, dict(self.params), int(seed))

    def describe(self):
        settings = ",".join(f"{name}={self.params[name]}" for name in sorted(self.params))
        return f"{self.kind.value}({settings})"

    def to_dict(self):
        return {"kind": self.kind.value, "params": dict(self.params), "seed": self.seed}


def expand_grid(kind, grid="standard", seed=0):
    """Cartesian product of a parameter -> values map, in key order"""
    kind = kind if isinstance(kind, ClassifierKind) else ClassifierKind.parse(kind)
    if grid == "standard":
        grid = STANDARD_GRIDS[kind]
    if not isinstance(grid, dict) or not grid:
        raise ConfigError(f"grid for {kind.value} must be 'standard' or a non-empty object")
    names = list(grid)
    for name in names:
        if not isinstance(grid[name], list) or not grid[name]:
            raise ConfigError(f"grid values for {name!r} must be a non-empty list")
    return [ClassifierSpec(kind, dict(zip(names, values)), seed)
            for values in itertools.product(*(grid[name] for name in names))]


class TrainedModel:
    """Immutable trained state; score() gives the POSITIVE-class score in [0, 1]"""
    kind = None

    def __init__(self, spec, stats):
        self.spec = spec
        self.stats = stats
        self.space = MinMaxSpace(stats)

    @property
    def n_features(self):
        return self.stats.minimum.shape[0]

    def _check(self, matrix):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        if matrix.shape[1] != self.n_features:
            raise DimensionError(
                f"model trained on {self.n_features} features, got {matrix.shape[1]}")
        return matrix

    def score(self, matrix):
        raise NotImplementedError

    def predict(self, matrix):
        return np.where(self.score(matrix) >= DECISION_THRESHOLD, POSITIVE, NEGATIVE)

    def state(self):
        raise NotImplementedError


class KNNModel(TrainedModel):
    kind = ClassifierKind.KNN

    def __init__(self, spec, stats, points, positive):
        super().__init__(spec, stats)
        self.points = points
        self.positive = positive
        self.k = int(spec.params["n_neighbors"])

    def score(self, matrix):
        matrix = self._check(matrix)
        indices, _ = k_nearest(self.space.transform(matrix), self.points, self.k)
        return self.positive[indices].mean(axis=1)

    def predict(self, matrix):
        scores = self.score(matrix)
        if self.spec.params["tie"] == POSITIVE:
            return np.where(scores >= DECISION_THRESHOLD, POSITIVE, NEGATIVE)
        return np.where(scores > DECISION_THRESHOLD, POSITIVE, NEGATIVE)

    def state(self):
        return {"points": self.points.tolist(), "positive": self.positive.astype(int).tolist()}


class LogisticModel(TrainedModel):
    kind = ClassifierKind.LOGREG

    def __init__(self, spec, stats, weights, bias, iterations=0, converged=False):
        super().__init__(spec, stats)
        self.weights = weights
        self.bias = float(bias)
        self.iterations = iterations
        self.converged = converged

    def score(self, matrix):
        matrix = self.space.transform(self._check(matrix))
        return expit(matrix @ self.weights + self.bias)

    def state(self):
        return {"weights": self.weights.tolist(), "bias": self.bias,
                "iterations": self.iterations, "converged": self.converged}


class ForestModel(TrainedModel):
    kind = ClassifierKind.RFOREST

    def __init__(self, spec, stats, trees):
        super().__init__(spec, stats)
        self.trees = trees

    def score(self, matrix):
        matrix = self._check(matrix)
        votes = np.zeros(matrix.shape[0])
        for tree in self.trees:
            votes += tree.vote(matrix)
        return votes / len(self.trees)

    def state(self):
        return {"trees": [tree.to_dict() for tree in self.trees]}


def logistic_loss(weights, bias, matrix, y, C):
    """Mean log-loss plus ||w||^2 / (2 C n)"""
    n = matrix.shape[0]
    z = matrix @ weights + bias
    data_term = np.mean(np.logaddexp(0.0, z) - y * z)
    return float(data_term + weights @ weights / (2.0 * C * n))


def logistic_gradient(weights, bias, matrix, y, C):
    n = matrix.shape[0]
    residual = expit(matrix @ weights + bias) - y
    return matrix.T @ residual / n + weights / (C * n), float(np.mean(residual))


def _fit_logistic(spec, matrix, y):
    C = float(spec.params["C"])
    rate = float(spec.params["learning_rate"])
    tol = float(spec.params["tol"])
    weights = np.zeros(matrix.shape[1])
    bias = 0.0
    loss = logistic_loss(weights, bias, matrix, y, C)
    iterations, converged = 0, False
    for iterations in range(1, int(spec.params["max_iter"]) + 1):
        grad_w, grad_b = logistic_gradient(weights, bias, matrix, y, C)
        if np.sqrt(grad_w @ grad_w + grad_b ** 2) <= tol:
            converged = True
            break
        for _ in range(MAX_STEP_HALVINGS):
            next_w = weights - rate * grad_w
            next_b = bias - rate * grad_b
            next_loss = logistic_loss(next_w, next_b, matrix, y, C)
            if next_loss <= loss:
                break
            rate /= 2.0
        else:
            converged = True
            break
        improvement = loss - next_loss
        weights, bias, loss = next_w, next_b, next_loss
        if improvement <= tol * max(1.0, abs(loss)):
            converged = True
            break
    if not converged:
        _logger.debug("LOGREG stopped at max_iter=%d with loss %.6g", iterations, loss)
    return weights, bias, iterations, converged


class Tree:
    """CART tree as flat node arrays; leaves have feature -1 and a 0/1 vote"""

    def __init__(self, feature, threshold, left, right, vote):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.vote_at = np.asarray(vote, dtype=np.float64)

    def vote(self, matrix):
        nodes = np.zeros(matrix.shape[0], dtype=np.int64)
        active = self.feature[nodes] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            at = nodes[rows]
            go_left = matrix[rows, self.feature[at]] <= self.threshold[at]
            nodes[rows] = np.where(go_left, self.left[at], self.right[at])
            active = self.feature[nodes] >= 0
        return self.vote_at[nodes]

    def to_dict(self):
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "vote": self.vote_at.astype(int).tolist()}


def _best_split(matrix, y, features):
    n = len(y)
    total_pos = y.sum()
    n_left = np.arange(1, n)
    n_right = n - n_left
    best = (np.inf, -1, 0.0)
    for f in features:
        order = np.argsort(matrix[:, f], kind="stable")
        values = matrix[order, f]
        valid = values[1:] > values[:-1]
        if not valid.any():
            continue
        pos_left = np.cumsum(y[order])[:-1]
        pos_right = total_pos - pos_left
        gini_left = 1.0 - (pos_left / n_left) ** 2 - ((n_left - pos_left) / n_left) ** 2
        gini_right = 1.0 - (pos_right / n_right) ** 2 - ((n_right - pos_right) / n_right) ** 2
        weighted = np.where(valid, (n_left * gini_left + n_right * gini_right) / n, np.inf)
        i = int(np.argmin(weighted))
        if weighted[i] < best[0]:
            threshold = values[i] + (values[i + 1] - values[i]) / 2.0
            if threshold >= values[i + 1]:
                threshold = values[i]
            best = (weighted[i], int(f), float(threshold))
    return best


def _grow_tree(matrix, y, max_depth, min_samples_split, seed):
    """One tree on a bootstrap sample, sqrt(n_features) candidates per split"""
    rng = np.random.default_rng(seed)
    n, d = matrix.shape
    sample = rng.integers(n, size=n)
    matrix, y = matrix[sample], y[sample]
    n_candidates = max(1, int(np.sqrt(d)))

    feature, threshold, left, right, vote = [], [], [], [], []

    def new_node(rows):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        vote.append(1.0 if 2 * y[rows].sum() >= len(rows) else 0.0)
        return len(feature) - 1

    stack = [(new_node(np.arange(n)), np.arange(n), 0)]
    while stack:
        node, rows, depth = stack.pop()
        positives = y[rows].sum()
        if depth >= max_depth or len(rows) < min_samples_split or positives in (0, len(rows)):
            continue
        # keep drawing features past the candidate count until one can split
        split = (np.inf, -1, 0.0)
        drawn = rng.permutation(d)
        for start in range(0, d, n_candidates):
            split = _best_split(matrix[rows], y[rows], drawn[start:start + n_candidates])
            if split[1] >= 0:
                break
        if split[1] < 0:
            continue
        _, f, t = split
        goes_left = matrix[rows, f] <= t
        left_rows, right_rows = rows[goes_left], rows[~goes_left]
        feature[node], threshold[node] = f, t
        left[node] = new_node(left_rows)
        right[node] = new_node(right_rows)
        stack.append((right[node], right_rows, depth + 1))
        stack.append((left[node], left_rows, depth + 1))
    return Tree(feature, threshold, left, right, vote)


def train(spec, ds, n_jobs=1):
    """Fit `spec` on a binarized dataset; deterministic for a fixed seed"""
    if not ds.is_binary:
        raise TrainingError(f"{spec.describe()}: dataset must be binarized first")
    positive = ds.positive_mask
    if ds.n_instances == 0 or positive.all() or not positive.any():
        raise TrainingError(f"{spec.describe()}: training data has a single class")
    stats = stats_for_matrix(ds.features)

    if spec.kind is ClassifierKind.KNN:
        k = int(spec.params["n_neighbors"])
        if k > ds.n_instances:
            raise TrainingError(f"{spec.describe()}: only {ds.n_instances} training rows")
        points = MinMaxSpace(stats).transform(ds.features)
        return KNNModel(spec, stats, points, positive.astype(np.float64))

    if spec.kind is ClassifierKind.LOGREG:
        scaled = MinMaxSpace(stats).transform(ds.features)
        weights, bias, iterations, converged = _fit_logistic(spec, scaled, positive.astype(np.float64))
        _logger.debug("LOGREG %s: %d iterations, converged=%s", spec.describe(), iterations, converged)
        return LogisticModel(spec, stats, weights, bias, iterations, converged)

    seeds = np.random.SeedSequence(spec.seed).spawn(int(spec.params["n_tree"]))
    trees = Parallel(n_jobs=n_jobs)(
        delayed(_grow_tree)(ds.features, positive.astype(np.float64),
                            int(spec.params["max_depth"]),
                            int(spec.params["min_samples_split"]), seed)
        for seed in seeds)
    return ForestModel(spec, stats, trees)


def score(model, x):
    """POSITIVE-class score of one vector, or of every row of a matrix"""
    x = np.asarray(x, dtype=np.float64)
    scores = model.score(x)
    return float(scores[0]) if x.ndim == 1 else scores


def predict(model, x):
    x = np.asarray(x, dtype=np.float64)
    labels = model.predict(x)
    return str(labels[0]) if x.ndim == 1 else labels


def model_to_json(model):
    stats = model.stats
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "spec": model.spec.to_dict(),
        "stats": {"mean": stats.mean.tolist(), "std": stats.std.tolist(),
                  "minimum": stats.minimum.tolist(), "maximum": stats.maximum.tolist()},
        "state": model.state(),
    }


def model_from_json(doc):
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ConfigError(f"unsupported model format version {doc.get('format_version')!r}")
    spec_doc = doc["spec"]
    spec = ClassifierSpec(spec_doc["kind"], spec_doc["params"], spec_doc["seed"])
    stats = FeatureStats(*(np.asarray(doc["stats"][name], dtype=np.float64)
                           for name in ("mean", "std", "minimum", "maximum")))
    state = doc["state"]
    if spec.kind is ClassifierKind.KNN:
        return KNNModel(spec, stats, np.asarray(state["points"], dtype=np.float64),
                        np.asarray(state["positive"], dtype=np.float64))
    if spec.kind is ClassifierKind.LOGREG:
        return LogisticModel(spec, stats, np.asarray(state["weights"], dtype=np.float64),
                             state["bias"], state["iterations"], state["converged"])
    trees = [Tree(t["feature"], t["threshold"], t["left"], t["right"], t["vote"])
             for t in state["trees"]]
    return ForestModel(spec, stats, trees)


@dataclass(frozen=True)
class GridSearchReport:
    metric: str
    configs: tuple
    mean_scores: tuple
    best: ClassifierSpec
    fits: int

    @property
    def best_score(self):
        return max(self.mean_scores)

    def to_dict(self):
        return {
            "metric": self.metric,
            "fits": self.fits,
            "best": self.best.to_dict(),
            "evaluated": [{"spec": spec.to_dict(), "mean": value}
                          for spec, value in zip(self.configs, self.mean_scores)],
        }


def _cross_validate(spec, ds, folds, metric):
    values = []
    for fold in range(folds.k):
        train_rows, test_rows = folds.split(fold)
        test = ds.subset(test_rows)
        try:
            model = train(spec, ds.subset(train_rows))
        except OversamplingError as e:
            raise TrainingError(f"grid config {spec.describe()} failed on fold {fold}: {e}") from e
        values.append(metric_from_scores(metric, test.labels, model.score(test.features)))
    return float(np.mean(values))


def grid_search(grid, ds, k_folds, metric="roc_auc", seed=0, n_jobs=1):
    """Stratified k-fold CV of every config on `ds`; first maximum wins ties"""
    if not grid:
        raise ConfigError("grid search needs at least one config")
    if metric not in METRIC_NAMES:
        raise ConfigError(f"unknown metric {metric!r}; expected one of {sorted(METRIC_NAMES)}")
    folds = stratified_kfold(ds, k_folds, seed)
    means = Parallel(n_jobs=n_jobs)(
        delayed(_cross_validate)(spec, ds, folds, metric) for spec in grid)
    best_at = int(np.argmax(means))
    _logger.info("Grid search over %d configs: best %s with %s=%.4f",
                 len(grid), grid[best_at].describe(), metric, means[best_at])
    return GridSearchReport(metric, tuple(grid), tuple(float(m) for m in means),
                            grid[best_at], len(grid) * folds.k)
