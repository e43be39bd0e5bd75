"""
Module for the JSON run configuration shared by the resample and benchmark commands.

Precedence for every setting: command-line flag, then the config file, then
the OVERSAMPLING_* environment variables (read from .env), then the default.
The seed is never taken from the environment or the clock.
"""
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

from dotenv import load_dotenv

from .benchmark import BenchmarkDataset, BenchmarkSettings, ClassifierGrid
from .binarization_parser import binarization_for_dataset, binarization_from_config
from .classifiers import ClassifierKind, ClassifierSpec, expand_grid
from .dataset import binarize, load_csv
from .dataset_fetcher import load_variant, resolve_variant, source_path
from .errors import ConfigError
from .evaluation import METRIC_NAMES
from .resampling import DEFAULT_K_NEIGHBORS, K_NEIGHBOR_GRID, Method, ResamplePlan

load_dotenv()

_logger = logging.getLogger(__name__)

DEFAULT_OUT_DIR = "results"
TOP_LEVEL_KEYS = {"seed", "k_folds", "out_dir", "jobs", "grid_folds", "metric", "datasets",
                  "methods", "classifiers", "verify_classifier"}
DATASET_KEYS = {"id", "path", "variant", "label_column", "header", "binarization"}
METHOD_KEYS = {"method", "k_neighbors", "m_neighbors", "target", "tolerance", "max_diffs",
               "verify"}
CLASSIFIER_KEYS = {"kind", "grid", "params"}


def _check_keys(section, value, allowed):
    if not isinstance(value, dict):
        raise ConfigError(f"{section} must be an object")
    unknown = set(value) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {section}: {sorted(unknown)}")


def _int(section, value, minimum):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{section} must be an integer >= {minimum}, got {value!r}")
    return value


@dataclass(frozen=True)
class DatasetEntry:
    id: str
    path: Path = None
    variant: str = None
    label_column: object = None
    header: bool = True
    # text or object form as written; resolved against the loaded classes
    binarization: object = None

    def load(self, data_dir=None):
        """Binarized dataset for this entry"""
        if self.variant is not None:
            variant = resolve_variant(self.variant)
            return BenchmarkDataset(self.id, load_variant(variant, data_dir), variant.name)
        ds = load_csv(self.path, self.label_column, header=self.header)
        if self.binarization is None:
            if not ds.is_binary:
                raise ConfigError(f"dataset {self.id!r} needs a binarization")
            return BenchmarkDataset(self.id, ds, str(self.path))
        mode = binarization_for_dataset(self.binarization, ds.class_names)
        return BenchmarkDataset(self.id, binarize(ds, mode), f"{self.path} {mode.describe()}")


@dataclass(frozen=True)
class RunConfig:
    seed: int
    datasets: tuple
    methods: tuple
    classifiers: tuple = ()
    k_folds: int = 5
    grid_folds: int = 3
    metric: str = "roc_auc"
    jobs: int = 1
    out_dir: Path = Path(DEFAULT_OUT_DIR)
    verify_classifier: ClassifierSpec = field(
        default_factory=lambda: ClassifierSpec(ClassifierKind.KNN, {"n_neighbors": 5}))

    def settings(self):
        return BenchmarkSettings(self.seed, self.k_folds, self.grid_folds, self.metric,
                                 self.verify_classifier)

    def load_datasets(self, data_dir=None):
        return [entry.load(data_dir) for entry in self.datasets]


def _parse_dataset(doc, base_dir, index):
    section = f"datasets[{index}]"
    _check_keys(section, doc, DATASET_KEYS)
    if ("path" in doc) == ("variant" in doc):
        raise ConfigError(f"{section} needs exactly one of 'path' or 'variant'")
    binarization = doc.get("binarization")
    if binarization is not None:
        binarization_from_config(binarization)
    if "variant" in doc:
        if binarization is not None:
            raise ConfigError(f"{section}: a registered variant carries its own binarization")
        variant = resolve_variant(doc["variant"])
        if not source_path(variant.source).is_file():
            raise ConfigError(f"{section}: {source_path(variant.source)} not found; "
                              f"run the fetch command for {variant.id} first")
        return DatasetEntry(str(doc.get("id", variant.id)), variant=variant.id)
    path = Path(doc["path"])
    if not path.is_absolute():
        path = base_dir / path
    if not path.is_file():
        raise ConfigError(f"{section}: dataset file not found: {path}")
    header = doc.get("header", True)
    if not isinstance(header, bool):
        raise ConfigError(f"{section}: header must be true or false")
    return DatasetEntry(str(doc.get("id", path.stem)), path=path,
                        label_column=doc.get("label_column"), header=header,
                        binarization=binarization)


def _k_neighbors(section, value):
    """(fixed k, grid): a count, "standard" or a list of counts to search"""
    if value == "standard":
        return DEFAULT_K_NEIGHBORS, K_NEIGHBOR_GRID
    if isinstance(value, list):
        if not value:
            raise ConfigError(f"{section}: k_neighbors grid is empty")
        grid = tuple(_int(f"{section}.k_neighbors", k, 1) for k in value)
        return DEFAULT_K_NEIGHBORS, grid
    return _int(f"{section}.k_neighbors", value, 1), ()


def _parse_method(doc, index, overrides):
    section = f"methods[{index}]"
    if isinstance(doc, str):
        doc = {"method": doc}
    _check_keys(section, doc, METHOD_KEYS)
    if "method" not in doc:
        raise ConfigError(f"{section} needs a 'method'")
    target = doc.get("target", "parity")
    if target == "parity":
        target = None
    elif isinstance(target, bool) or not isinstance(target, int):
        raise ConfigError(f"{section}: target must be 'parity' or a count")
    k_neighbors, k_grid = _k_neighbors(section, doc.get("k_neighbors", DEFAULT_K_NEIGHBORS))
    values = {
        "k_neighbors": k_neighbors,
        "k_grid": k_grid,
        "m_neighbors": doc.get("m_neighbors"),
        "tol_factor": doc.get("tolerance", 0.1),
        "max_diffs": doc.get("max_diffs", 2),
        "verify": doc.get("verify", False),
    }
    method = Method.parse(doc["method"])
    if method is Method.CFA:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return ResamplePlan(method, target=target, **values)


def _parse_classifier(name, doc, seed):
    section = f"classifiers.{name}"
    _check_keys(section, doc, CLASSIFIER_KEYS)
    if "kind" not in doc:
        raise ConfigError(f"{section} needs a 'kind'")
    if "grid" in doc and "params" in doc:
        raise ConfigError(f"{section}: give either 'grid' or 'params', not both")
    if "grid" in doc:
        specs = expand_grid(doc["kind"], doc["grid"], seed)
    else:
        specs = [ClassifierSpec(doc["kind"], dict(doc.get("params", {})), seed)]
    return ClassifierGrid(name, tuple(specs))


def parse_run_config(doc, base_dir=Path("."), seed=None, jobs=None, out_dir=None,
                     tolerance=None, max_diffs=None, verify=None):
    """Validate a config document; flags given here win over the document"""
    _check_keys("config", doc, TOP_LEVEL_KEYS)
    seed = seed if seed is not None else doc.get("seed")
    if seed is None:
        raise ConfigError("a seed is required (config 'seed' or --seed)")
    seed = _int("seed", seed, 0)

    env_jobs = os.getenv("OVERSAMPLING_JOBS")
    if jobs is None:
        jobs = doc.get("jobs", int(env_jobs) if env_jobs and env_jobs.isdigit() else 1)
    jobs = _int("jobs", jobs, 1)
    out_dir = Path(out_dir or doc.get("out_dir") or os.getenv("OVERSAMPLING_OUT_DIR")
                   or DEFAULT_OUT_DIR)

    metric = doc.get("metric", "roc_auc")
    if metric not in METRIC_NAMES:
        raise ConfigError(f"metric must be one of {list(METRIC_NAMES)}, got {metric!r}")

    datasets = doc.get("datasets")
    if not isinstance(datasets, list) or not datasets:
        raise ConfigError("config needs a non-empty 'datasets' list")
    entries = tuple(_parse_dataset(d, base_dir, i) for i, d in enumerate(datasets))
    if len({entry.id for entry in entries}) != len(entries):
        raise ConfigError("dataset ids must be unique")

    methods = doc.get("methods", [])
    if not isinstance(methods, list):
        raise ConfigError("'methods' must be a list")
    overrides = {"tol_factor": tolerance, "max_diffs": max_diffs, "verify": verify or None}
    plans = tuple(_parse_method(m, i, overrides) for i, m in enumerate(methods))

    classifiers = doc.get("classifiers", {})
    if not isinstance(classifiers, dict):
        raise ConfigError("'classifiers' must be an object of name -> classifier")
    grids = tuple(_parse_classifier(name, c, seed) for name, c in classifiers.items())

    verify_doc = doc.get("verify_classifier", {"kind": "knn", "params": {"n_neighbors": 5}})
    _check_keys("verify_classifier", verify_doc, {"kind", "params"})
    verify_spec = ClassifierSpec(verify_doc.get("kind", "knn"), dict(verify_doc.get("params", {})))

    config = RunConfig(seed=seed, datasets=entries, methods=plans, classifiers=grids,
                       k_folds=_int("k_folds", doc.get("k_folds", 5), 2),
                       grid_folds=_int("grid_folds", doc.get("grid_folds", 3), 2),
                       metric=metric, jobs=jobs, out_dir=out_dir,
                       verify_classifier=verify_spec)
    _logger.debug("Run config: seed=%d, %d datasets, %d methods, %d classifiers",
                  seed, len(entries), len(plans), len(grids))
    return config


def load_run_config(path, **overrides):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except ValueError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})") from e
    return parse_run_config(doc, base_dir=path.parent, **overrides)
