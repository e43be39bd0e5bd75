"""
Module for the cross-validated benchmark: every (dataset, method, fold) cell
resamples the training folds only, tunes and trains each classifier on the
result, and scores the untouched test fold. The report is a pure function of
the stored per-fold predictions.
"""
import hashlib
import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from .cell_cache import cell_key
from .classifiers import ClassifierKind, ClassifierSpec, grid_search, train
from .dataset import POSITIVE, SYNTHETIC_ROW_ID, stratified_kfold, summarize
from .errors import ConfigError, OversamplingError, ResampleError
from .evaluation import evaluate_predictions, metric_from_scores, roc
from .resamplers import resample
from .resampling import METHOD_ORDER, Method, ResamplePlan

_logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
WINNER_METRICS = ("roc_auc", "precision", "recall", "f1")
SUMMARY_METRICS = ("roc_auc", "balanced_accuracy", "f1", "precision", "recall")


def derive_seed(base_seed, *coordinates):
    """Stable 63-bit seed from the base seed and a cell's coordinates"""
    text = "|".join(str(part) for part in (base_seed,) + coordinates)
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big") >> 1


@dataclass(frozen=True, eq=False)
class BenchmarkDataset:
    """A binarized dataset with the id used in tables and seeds"""
    id: str
    dataset: object
    description: str = ""


@dataclass(frozen=True)
class ClassifierGrid:
    """Named list of candidate configs; more than one triggers a grid search"""
    name: str
    specs: tuple

    def __post_init__(self):
        if not self.specs:
            raise ConfigError(f"classifier {self.name!r} has an empty grid")

    def to_dict(self):
        return {"name": self.name, "configs": [spec.to_dict() for spec in self.specs]}


@dataclass(frozen=True)
class BenchmarkSettings:
    seed: int
    k_folds: int = 5
    grid_folds: int = 3
    metric: str = "roc_auc"
    verify: ClassifierSpec = field(
        default_factory=lambda: ClassifierSpec(ClassifierKind.KNN, {"n_neighbors": 5}))
    # scores each candidate k when a SMOTE-family plan carries a k_neighbors grid
    selector: ClassifierSpec = field(
        default_factory=lambda: ClassifierSpec(ClassifierKind.KNN, {"n_neighbors": 5}))

    def to_dict(self):
        return {"seed": self.seed, "k_folds": self.k_folds, "grid_folds": self.grid_folds,
                "metric": self.metric, "verify": self.verify.to_dict(),
                "selector": self.selector.to_dict()}


def audit_leakage(result, test):
    """
    Count ways a resampled training set could carry test-fold information:
    real rows whose id is in the test fold, synthetic provenance pointing at a
    test row, and synthetic rows equal to a test row no real training row equals.
    """
    test_ids = set(int(i) for i in test.row_ids)
    augmented = result.dataset
    real_ids = augmented.row_ids[augmented.row_ids != SYNTHETIC_ROW_ID]
    row_overlap = sum(int(i) in test_ids for i in real_ids)
    provenance_refs = sum(any(row in test_ids for row in p.source_rows())
                          for p in result.provenance)

    test_rows = {tuple(row) for row in test.features.tolist()}
    real_rows = {tuple(row) for row in augmented.features[:result.n_original].tolist()}
    copies = sum(1 for row in result.synthetic_features.tolist()
                 if tuple(row) in test_rows and tuple(row) not in real_rows)
    return {"row_overlap": row_overlap, "provenance_refs": provenance_refs,
            "synthetic_equals_test": copies}


def _scalar_diagnostics(diagnostics):
    return {k: v for k, v in diagnostics.items()
            if isinstance(v, (bool, int, float, str)) and not isinstance(v, np.generic)}


def _fit_and_score(augmented, test, grid, settings, seed):
    search = None
    if len(grid.specs) > 1:
        report = grid_search(list(grid.specs), augmented, settings.grid_folds,
                             settings.metric, seed)
        best = report.best
        search = {"fits": report.fits, "best_score": report.best_score,
                  "configs": len(report.configs)}
    else:
        best = grid.specs[0]
    model = train(best.with_seed(seed), augmented)
    scores = model.score(test.features)
    return {
        "params": dict(best.params),
        "grid": search,
        "predictions": {
            "row_ids": [int(i) for i in test.row_ids],
            "actual": [int(label == POSITIVE) for label in test.labels],
            "scores": [float(s) for s in scores],
        },
    }


def select_k_neighbors(training, plan, selector, k_folds, metric, seed):
    """
    Pick k_neighbors from plan.k_grid using the training fold alone: each
    inner split is resampled with the candidate k and the selector model is
    scored on the held-out part. The first k with the best mean wins; a k
    that cannot run on some split is left out.
    """
    inner = stratified_kfold(training, k_folds, seed)
    scores = {}
    for k in plan.k_grid:
        candidate = replace(plan, k_neighbors=k, k_grid=())
        values = []
        try:
            for fold in range(inner.k):
                train_rows, test_rows = inner.split(fold)
                held_out = training.subset(test_rows)
                model = train(selector, resample(training.subset(train_rows), candidate).dataset)
                values.append(metric_from_scores(metric, held_out.labels,
                                                 model.score(held_out.features)))
        except OversamplingError as e:
            _logger.info("%s with k=%d left out of the search: %s", plan.method.label, k, e)
            scores[str(k)] = None
            continue
        mean = float(np.mean(values))
        scores[str(k)] = mean if np.isfinite(mean) else None
    usable = [k for k in plan.k_grid if scores[str(k)] is not None]
    if not usable:
        raise ResampleError(f"no k_neighbors in {list(plan.k_grid)} could be evaluated")
    best = max(usable, key=lambda k: scores[str(k)])
    _logger.debug("%s: k_neighbors=%d selected, %s", plan.method.label, best, scores)
    return best, scores


def _run_fold(bench, plan, fold_rows, fold, classifiers, settings):
    """All classifier cells of one (dataset, method, fold); errors stay in the cell"""
    ds = bench.dataset
    train_rows, test_rows = fold_rows
    training = ds.subset(train_rows)
    test = ds.subset(test_rows)
    method = plan.method.value
    try:
        verify_model = None
        if plan.method is Method.CFA and plan.verify:
            verify_model = train(settings.verify.with_seed(
                derive_seed(settings.seed, bench.id, method, "verify", fold)), training)
        fold_plan = replace(plan, seed=derive_seed(settings.seed, bench.id, method,
                                                   "resample", fold))
        k_search = None
        if plan.k_grid:
            best_k, k_search = select_k_neighbors(
                training, fold_plan, settings.selector.with_seed(
                    derive_seed(settings.seed, bench.id, method, "selector", fold)),
                settings.grid_folds, settings.metric,
                derive_seed(settings.seed, bench.id, method, "k_search", fold))
            fold_plan = replace(fold_plan, k_neighbors=best_k, k_grid=())
        result = resample(training, fold_plan, verify_model)
    except Exception as e:
        _logger.warning("%s / %s fold %d: resampling failed: %s", bench.id,
                        plan.method.label, fold, e)
        error = f"{type(e).__name__}: {e}"
        return {grid.name: {"status": "failed", "error": error} for grid in classifiers}

    leakage = audit_leakage(result, test)
    resample_info = {"n_train": training.n_instances, "n_synthetic": result.n_synthetic,
                     **_scalar_diagnostics(result.diagnostics)}
    if k_search is not None:
        resample_info.update({"k_neighbors": fold_plan.k_neighbors, "k_search": k_search})
    cells = {}
    for grid in classifiers:
        seed = derive_seed(settings.seed, bench.id, method, grid.name, fold)
        try:
            cell = _fit_and_score(result.dataset, test, grid, settings, seed)
            cell["status"] = "ok"
        except Exception as e:
            _logger.warning("%s / %s / %s fold %d failed: %s", bench.id,
                            plan.method.label, grid.name, fold, e)
            cell = {"status": "failed", "error": f"{type(e).__name__}: {e}"}
        cell["leakage"] = leakage
        cell["resample"] = resample_info
        cells[grid.name] = cell
    return cells


def _with_baseline(methods):
    methods = list(methods)
    if not any(plan.method is Method.BASELINE for plan in methods):
        methods.insert(0, ResamplePlan(Method.BASELINE))
    labels = [plan.method.label for plan in methods]
    if len(set(labels)) != len(labels):
        raise ConfigError(f"each method may appear once, got {labels}")
    return sorted(methods, key=lambda plan: METHOD_ORDER.index(plan.method))


def run_benchmark(datasets, methods, classifiers, settings, n_jobs=1, cache=None):
    """
    Run every (dataset, method, classifier, fold) cell and build the report.
    Baseline is always included. `cache` (a CellCache) skips finished cells.
    """
    methods = _with_baseline(methods)
    names = [grid.name for grid in classifiers]
    if len(set(names)) != len(names):
        raise ConfigError(f"classifier names must be unique, got {names}")
    ids = [bench.id for bench in datasets]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"dataset ids must be unique, got {ids}")

    tasks, results = [], {}
    for bench in datasets:
        folds = stratified_kfold(bench.dataset, settings.k_folds,
                                 derive_seed(settings.seed, bench.id, "folds"))
        fingerprint = bench.dataset.fingerprint()
        for plan in methods:
            for fold in range(settings.k_folds):
                key = cell_key({
                    "schema": REPORT_SCHEMA_VERSION,
                    "dataset": fingerprint,
                    "dataset_id": bench.id,
                    "plan": replace(plan, seed=0).to_dict(),
                    "fold": fold,
                    "settings": settings.to_dict(),
                    "classifiers": [grid.to_dict() for grid in classifiers],
                })
                cached = cache.get(key) if cache is not None else None
                if cached is not None:
                    results[(bench.id, plan.method, fold)] = cached
                else:
                    tasks.append((key, bench, plan, folds.split(fold), fold))

    _logger.info("Benchmark: %d cells cached, %d to run on %d jobs",
                 len(results), len(tasks), n_jobs)
    # each finished task is cached at once, so an interrupted sweep resumes
    computed = Parallel(n_jobs=n_jobs, return_as="generator")(
        delayed(_run_fold)(bench, plan, rows, fold, classifiers, settings)
        for _, bench, plan, rows, fold in tasks)
    for (key, bench, plan, _, fold), cells in zip(tasks, computed):
        results[(bench.id, plan.method, fold)] = cells
        if cache is not None:
            cache.put(key, cells)

    cells = []
    for bench in datasets:
        for plan in methods:
            for grid in classifiers:
                for fold in range(settings.k_folds):
                    cell = dict(results[(bench.id, plan.method, fold)][grid.name])
                    cell.update({"dataset": bench.id, "method": plan.method.label,
                                 "classifier": grid.name, "fold": fold})
                    cells.append(cell)

    meta = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "settings": settings.to_dict(),
        "datasets": [{"id": bench.id, "description": bench.description,
                      "summary": summarize(bench.dataset).describe()} for bench in datasets],
        "methods": [plan.to_dict() for plan in methods],
        "classifiers": [grid.to_dict() for grid in classifiers],
    }
    return build_report(meta, cells)


@dataclass(frozen=True)
class BenchmarkReport:
    meta: dict
    cells: list
    aggregates: list
    winners: dict
    winner_counts: dict
    leakage_violations: int

    @property
    def method_labels(self):
        return [Method.parse(plan["method"]).label for plan in self.meta["methods"]]

    @property
    def dataset_ids(self):
        return [d["id"] for d in self.meta["datasets"]]

    @property
    def classifier_names(self):
        return [grid["name"] for grid in self.meta["classifiers"]]

    @property
    def failed_cells(self):
        return sum(cell["status"] != "ok" for cell in self.cells)

    def aggregate(self, dataset, method, classifier):
        for entry in self.aggregates:
            if (entry["dataset"], entry["method"], entry["classifier"]) == (dataset, method, classifier):
                return entry
        return None

    def to_dict(self):
        return {"meta": self.meta, "cells": self.cells, "aggregates": self.aggregates,
                "winners": self.winners, "winner_counts": self.winner_counts,
                "leakage_violations": self.leakage_violations}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        if doc.get("meta", {}).get("schema_version") != REPORT_SCHEMA_VERSION:
            raise ConfigError("report was written by an incompatible version")
        return build_report(doc["meta"], doc["cells"])


def _fold_metrics(cell):
    predictions = cell["predictions"]
    actual = np.array(predictions["actual"], dtype=bool)
    scores = np.array(predictions["scores"], dtype=np.float64)
    metric_set = evaluate_predictions(actual, scores)
    curve, _ = roc(actual, scores)
    return metric_set, curve


def _aggregate(group):
    ok = [cell for cell in group if cell["status"] == "ok"]
    first = group[0]
    entry = {"dataset": first["dataset"], "method": first["method"],
             "classifier": first["classifier"], "n_folds": len(ok),
             "failed_folds": [cell["fold"] for cell in group if cell["status"] != "ok"],
             "errors": sorted({cell["error"] for cell in group if cell["status"] != "ok"})}
    if not ok:
        return entry
    folds, curves = [], []
    for cell in ok:
        metric_set, curve = _fold_metrics(cell)
        folds.append(metric_set.to_dict())
        curves.append({"fold": cell["fold"], "fpr": curve.fpr.tolist(), "tpr": curve.tpr.tolist()})
    entry["folds"] = folds
    entry["roc"] = curves
    for name in SUMMARY_METRICS:
        values = np.array([fold[name] for fold in folds], dtype=np.float64)
        # population std over folds
        entry[name] = {"mean": float(values.mean()), "std": float(values.std(ddof=0))}
    return entry


def build_report(meta, cells):
    """Aggregates, winners and winner counts from per-fold cells"""
    methods = [Method.parse(plan["method"]).label for plan in meta["methods"]]
    classifiers = [grid["name"] for grid in meta["classifiers"]]
    datasets = [d["id"] for d in meta["datasets"]]

    groups = {}
    for cell in cells:
        groups.setdefault((cell["dataset"], cell["method"], cell["classifier"]), []).append(cell)
    aggregates = [_aggregate(sorted(groups[(d, m, c)], key=lambda cell: cell["fold"]))
                  for d in datasets for m in methods for c in classifiers if (d, m, c) in groups]
    by_key = {(a["dataset"], a["method"], a["classifier"]): a for a in aggregates}

    winners, counts = {}, {}
    for c in classifiers:
        winners[c], counts[c] = {}, {}
        for metric in WINNER_METRICS:
            winners[c][metric] = {}
            counts[c][metric] = {m: 0 for m in methods}
            for d in datasets:
                best = None
                for m in methods:
                    entry = by_key.get((d, m, c))
                    if entry is None or metric not in entry:
                        continue
                    # strict > keeps the first method in column order on ties
                    if best is None or entry[metric]["mean"] > best[1]:
                        best = (m, entry[metric]["mean"])
                if best is not None:
                    winners[c][metric][d] = best[0]
                    counts[c][metric][best[0]] += 1

    leakage = sum(sum(cell.get("leakage", {}).values()) for cell in cells)
    if leakage:
        _logger.warning("Leakage audit found %d violations", leakage)
    return BenchmarkReport(meta, cells, aggregates, winners, counts, leakage)
