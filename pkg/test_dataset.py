"""
Tests for loading, binarizing, summarizing and folding datasets
"""
import numpy as np
import pytest

from oversampling.dataset import (NEGATIVE, POSITIVE, SYNTHETIC_ROW_ID, Binarization, Dataset,
                                  binarize, dataset_to_csv_text, feature_stats, load_csv,
                                  min_max_scale, stratified_kfold, summarize)
from oversampling.dataset_fetcher import load_variant, source_path
from oversampling.errors import DatasetError


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def multiclass():
    features = np.arange(20, dtype=float).reshape(10, 2)
    labels = ["a"] * 5 + ["b"] * 3 + ["c"] * 2
    return Dataset(features, labels, ("f1", "f2"), ("a", "b", "c"))


def test_load_csv_uses_last_column_as_label(tmp_path):
    """Test the default label column and feature parsing"""
    path = write(tmp_path, "x,y,class\n1,2,a\n3.5,4,b\n")
    ds = load_csv(path)
    assert ds.n_instances == 2
    assert ds.feature_names == ("x", "y")
    assert ds.labels.tolist() == ["a", "b"]
    assert ds.features[1, 0] == 3.5


def test_load_csv_named_label_column(tmp_path):
    """Test picking the label column by name"""
    path = write(tmp_path, "class,x,y\na,1,2\nb,3,4\n")
    ds = load_csv(path, label_column="class")
    assert ds.feature_names == ("x", "y")
    assert ds.labels.tolist() == ["a", "b"]


def test_load_csv_without_header(tmp_path):
    path = write(tmp_path, "1,2,a\n3,4,b\n")
    ds = load_csv(path, header=False)
    assert ds.n_instances == 2
    assert ds.n_features == 2


def test_load_csv_reports_non_numeric_cell(tmp_path):
    """Test that the first bad cell is named with its line and column"""
    path = write(tmp_path, "x,y,class\n1,2,a\n3,abc,b\n")
    with pytest.raises(DatasetError) as error:
        load_csv(path)
    assert "line 3" in str(error.value)
    assert "'y'" in str(error.value)


def test_load_csv_reports_missing_value(tmp_path):
    path = write(tmp_path, "x,y,class\n1,,a\n3,4,b\n")
    with pytest.raises(DatasetError, match="missing value at line 2"):
        load_csv(path)


def test_load_csv_rejects_ragged_rows(tmp_path):
    path = write(tmp_path, "x,y,class\n1,2,a\n3,4,b,9\n")
    with pytest.raises(DatasetError):
        load_csv(path)


def test_load_csv_rejects_missing_file(tmp_path):
    with pytest.raises(DatasetError, match="not found"):
        load_csv(tmp_path / "absent.csv")


def test_load_csv_rejects_unknown_label_column(tmp_path):
    path = write(tmp_path, "x,y,class\n1,2,a\n")
    with pytest.raises(DatasetError, match="label column"):
        load_csv(path, label_column="target")


def test_binarize_one_versus_rest():
    """Test OVR keeps every row and relabels the rest as NEGATIVE"""
    ds = binarize(multiclass(), Binarization.ovr("c"))
    assert ds.n_instances == 10
    assert ds.class_counts() == {NEGATIVE: 8, POSITIVE: 2}
    assert ds.is_binary


def test_binarize_one_versus_one_drops_other_classes():
    ds = binarize(multiclass(), Binarization.ovo("b", "a"))
    assert ds.n_instances == 8
    assert ds.class_counts() == {NEGATIVE: 5, POSITIVE: 3}
    # row ids keep pointing at the loaded file
    assert sorted(ds.row_ids.tolist()) == list(range(8))


def test_binarize_with_class_groups():
    ds = binarize(multiclass(), Binarization.ovo(("b", "c"), ("a",)))
    assert ds.class_counts() == {NEGATIVE: 5, POSITIVE: 5}


def test_binarize_rejects_majority_positive_and_unknown_class():
    with pytest.raises(DatasetError, match="minority"):
        binarize(multiclass(), Binarization.ovo("a", "c"))
    with pytest.raises(DatasetError, match="unknown class"):
        binarize(multiclass(), Binarization.ovr("z"))


def test_binarization_describe():
    assert Binarization.ovr("3").describe() == "3-vs-R"
    assert Binarization.ovo(("3", "9"), "5").describe() == "3-9-vs-5"


def test_summary_and_imbalance_ratio():
    summary = summarize(binarize(multiclass(), Binarization.ovr("c")))
    assert (summary.n_minority, summary.n_majority) == (2, 8)
    assert summary.imbalance_ratio == 4.0
    assert "minority=2 majority=8 IR=4.00" in summary.describe()


def test_summarize_requires_binary_dataset():
    with pytest.raises(DatasetError):
        summarize(multiclass())


def test_feature_stats_and_constant_column():
    """Test population statistics and zero spread on a constant feature"""
    ds = Dataset([[1.0, 7.0], [3.0, 7.0], [5.0, 7.0]], ["a", "b", "b"], ("f1", "f2"), ("a", "b"))
    stats = feature_stats(ds)
    assert stats.mean.tolist() == [3.0, 7.0]
    assert stats.std[0] == pytest.approx(np.sqrt(8.0 / 3.0))
    assert stats.std[1] == 0.0
    scaled = min_max_scale(ds, stats)
    assert scaled.features[:, 0].tolist() == [0.0, 0.5, 1.0]
    assert scaled.features[:, 1].tolist() == [0.0, 0.0, 0.0]


def test_stratified_kfold_balances_each_class():
    """Test that per-class fold sizes differ by at most one"""
    labels = [NEGATIVE] * 23 + [POSITIVE] * 7
    ds = Dataset(np.random.default_rng(0).random((30, 3)), labels, ("a", "b", "c"), ())
    folds = stratified_kfold(ds, 5, seed=11)
    assert folds.fold_sizes().sum() == 30
    for label in (NEGATIVE, POSITIVE):
        members = ds.labels == label
        per_fold = np.bincount(folds.folds[members], minlength=5)
        assert per_fold.max() - per_fold.min() <= 1
    for fold in range(5):
        train_rows, test_rows = folds.split(fold)
        assert set(train_rows).isdisjoint(test_rows)
        assert len(train_rows) + len(test_rows) == 30
    assert np.array_equal(folds.folds, stratified_kfold(ds, 5, seed=11).folds)


def test_stratified_kfold_needs_k_members_per_class():
    ds = Dataset(np.zeros((6, 1)), [NEGATIVE] * 4 + [POSITIVE] * 2, ("a",), ())
    with pytest.raises(DatasetError, match="fewer than k"):
        stratified_kfold(ds, 3, seed=0)


def test_with_synthetic_appends_positive_rows():
    ds = binarize(multiclass(), Binarization.ovr("c"))
    augmented = ds.with_synthetic([[100.0, 200.0]])
    assert augmented.n_instances == 11
    assert augmented.labels[-1] == POSITIVE
    assert augmented.row_ids[-1] == SYNTHETIC_ROW_ID
    assert np.array_equal(augmented.features[:10], ds.features)


def test_csv_text_round_trips_floats(tmp_path):
    ds = Dataset([[0.1, 1e-17], [2.0 / 3.0, 5.0]], ["a", "b"], ("x", "y"), ("a", "b"))
    path = write(tmp_path, dataset_to_csv_text(ds))
    assert np.array_equal(load_csv(path).features, ds.features)


def test_pima_counts():
    """Test the public Pima file: 768 rows, 268 minority, 500 majority"""
    if not source_path("pima").is_file():
        pytest.skip("Pima file not fetched")
    summary = summarize(load_variant("D1"))
    assert (summary.n_instances, summary.n_minority, summary.n_majority) == (768, 268, 500)
    assert f"{summary.imbalance_ratio:.2f}" == "1.87"


def test_glass_three_versus_rest_counts():
    if not source_path("glass").is_file():
        pytest.skip("Glass file not fetched")
    summary = summarize(load_variant("D10"))
    assert (summary.n_minority, summary.n_majority) == (17, 197)


def test_feature_stats_ignore_row_order():
    rng = np.random.default_rng(5)
    ds = Dataset(rng.normal(size=(50, 4)) * [1.0, 10.0, 1e-3, 1e6], ["a"] * 30 + ["b"] * 20,
                 ("f1", "f2", "f3", "f4"), ("a", "b"))
    stats = feature_stats(ds)
    for _ in range(5):
        shuffled = feature_stats(ds.subset(rng.permutation(ds.n_instances)))
        assert np.array_equal(shuffled.minimum, stats.minimum)
        assert np.array_equal(shuffled.maximum, stats.maximum)
        assert np.allclose(shuffled.mean, stats.mean, rtol=1e-12, atol=0.0)
        assert np.allclose(shuffled.std, stats.std, rtol=1e-12, atol=0.0)
