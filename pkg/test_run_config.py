"""
Tests for parsing and validating the JSON run configuration
"""
import json
from pathlib import Path

import pytest

from oversampling.classifiers import ClassifierKind
from oversampling.dataset import NEGATIVE, POSITIVE
from oversampling.errors import ConfigError
from oversampling.resampling import Method
from oversampling.run_config import load_run_config, parse_run_config

CSV = "a,b,label\n1,2,maj\n2,3,maj\n3,4,maj\n4,5,min\n5,6,maj\n6,7,min\n"


@pytest.fixture
def base(tmp_path, monkeypatch):
    monkeypatch.delenv("OVERSAMPLING_JOBS", raising=False)
    monkeypatch.delenv("OVERSAMPLING_OUT_DIR", raising=False)
    (tmp_path / "toy.csv").write_text(CSV, encoding="utf-8")
    return tmp_path


def document(**extra):
    doc = {
        "seed": 5,
        "datasets": [{"path": "toy.csv", "binarization": "min-vs-R"}],
        "methods": ["smote", {"method": "cfa", "tolerance": 0.2, "target": "parity"}],
        "classifiers": {"knn": {"kind": "knn", "grid": "standard"},
                        "lr": {"kind": "logreg", "params": {"C": 10.0}}},
    }
    doc.update(extra)
    return doc


def test_parse_full_document(base):
    config = parse_run_config(document(), base_dir=base)
    assert config.seed == 5
    assert config.k_folds == 5 and config.grid_folds == 3
    assert config.metric == "roc_auc"
    assert config.jobs == 1
    assert config.out_dir == Path("results")
    assert [plan.method for plan in config.methods] == [Method.SMOTE, Method.CFA]
    assert config.methods[1].tol_factor == 0.2
    assert config.methods[1].target is None
    knn, lr = config.classifiers
    assert len(knn.specs) == 7
    assert lr.specs[0].kind is ClassifierKind.LOGREG
    assert lr.specs[0].params["C"] == 10.0
    assert config.verify_classifier.params["n_neighbors"] == 5


def test_dataset_entry_loads_and_binarizes(base):
    config = parse_run_config(document(), base_dir=base)
    (bench,) = config.load_datasets()
    assert bench.id == "toy"
    assert bench.dataset.class_counts() == {NEGATIVE: 4, POSITIVE: 2}
    assert "min-vs-R" in bench.description


def test_flags_win_over_document_and_environment(base, monkeypatch):
    monkeypatch.setenv("OVERSAMPLING_JOBS", "3")
    monkeypatch.setenv("OVERSAMPLING_OUT_DIR", str(base / "env_out"))
    config = parse_run_config(document(), base_dir=base)
    assert config.jobs == 3
    assert config.out_dir == base / "env_out"
    config = parse_run_config(document(jobs=2, out_dir="doc_out"), base_dir=base)
    assert (config.jobs, config.out_dir) == (2, Path("doc_out"))
    config = parse_run_config(document(jobs=2), base_dir=base, seed=9, jobs=4, out_dir="flag_out",
                              tolerance=0.5, max_diffs=3, verify=True)
    assert (config.seed, config.jobs, config.out_dir) == (9, 4, Path("flag_out"))
    smote, cfa = config.methods
    assert (cfa.tol_factor, cfa.max_diffs, cfa.verify) == (0.5, 3, True)
    # CFA-only flags leave the SMOTE plan alone
    assert (smote.tol_factor, smote.max_diffs, smote.verify) == (0.1, 2, False)


def test_explicit_target_count(base):
    doc = document(methods=[{"method": "adasyn", "target": 4, "k_neighbors": 1}])
    plan = parse_run_config(doc, base_dir=base).methods[0]
    assert (plan.method, plan.target, plan.k_neighbors) == (Method.ADASYN, 4, 1)


@pytest.mark.parametrize("changes", [
    {"seed": None},
    {"seed": -1},
    {"k_folds": 1},
    {"metric": "accuracy"},
    {"datasets": []},
    {"datasets": [{"path": "missing.csv"}]},
    {"datasets": [{"path": "toy.csv"}, {"path": "toy.csv"}]},
    {"datasets": [{"path": "toy.csv", "variant": "D1"}]},
    {"methods": [{"method": "cfa", "target": "half"}]},
    {"methods": ["svm-smote"]},
    {"classifiers": {"x": {"kind": "knn", "grid": "standard", "params": {}}}},
    {"classifiers": {"x": {"kind": "knn", "params": {"depth": 2}}}},
    {"colour": "blue"},
])
def test_invalid_documents(base, changes):
    doc = document(**changes)
    if doc.get("seed") is None:
        del doc["seed"]
    with pytest.raises(ConfigError):
        parse_run_config(doc, base_dir=base)


def test_seed_from_flag_only(base):
    doc = document()
    del doc["seed"]
    assert parse_run_config(doc, base_dir=base, seed=11).seed == 11


def test_variant_needs_fetched_file(base, monkeypatch):
    monkeypatch.setenv("OVERSAMPLING_DATA_DIR", str(base / "empty"))
    with pytest.raises(ConfigError, match="fetch"):
        parse_run_config(document(datasets=[{"variant": "D10"}]), base_dir=base)


def test_load_run_config_resolves_paths_next_to_the_file(base):
    path = base / "run.json"
    path.write_text(json.dumps(document()), encoding="utf-8")
    config = load_run_config(path, seed=1)
    assert config.datasets[0].path == base / "toy.csv"
    assert config.seed == 1


def test_load_run_config_errors(base):
    with pytest.raises(ConfigError, match="not found"):
        load_run_config(base / "absent.json")
    broken = base / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_run_config(broken)


def test_dataset_prefixed_binarization_resolves_on_load(base):
    doc = document(datasets=[{"path": "toy.csv", "binarization": "Toy-min-vs-R"}])
    (bench,) = parse_run_config(doc, base_dir=base).load_datasets()
    assert bench.dataset.class_counts() == {NEGATIVE: 4, POSITIVE: 2}
    assert bench.description.endswith("min-vs-R")


def test_k_neighbors_grid_forms(base):
    doc = document(methods=[{"method": "smote", "k_neighbors": "standard"},
                            {"method": "bsmote", "k_neighbors": [3, 9]},
                            {"method": "adasyn", "k_neighbors": 7}])
    smote, bsmote, adasyn = parse_run_config(doc, base_dir=base).methods
    assert smote.k_grid == (3, 5, 7, 9, 20)
    assert bsmote.k_grid == (3, 9)
    assert (adasyn.k_neighbors, adasyn.k_grid) == (7, ())


@pytest.mark.parametrize("k_neighbors, method", [
    ([], "smote"),
    ([3, 0], "smote"),
    ("many", "smote"),
    ("standard", "cfa"),
])
def test_invalid_k_neighbors(base, k_neighbors, method):
    doc = document(methods=[{"method": method, "k_neighbors": k_neighbors}])
    with pytest.raises(ConfigError):
        parse_run_config(doc, base_dir=base)
