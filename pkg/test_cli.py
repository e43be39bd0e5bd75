"""
Tests for the command-line front end: output lines, files and exit codes
"""
import json

import numpy as np
import pytest

from oversampling.cli import build_parser, main

TOY = """f1,f2,f3,f4,label
0,0,0,0,maj
0,0,5,5,maj
10,10,10,10,maj
20,20,20,20,maj
30,30,30,30,maj
40,40,40,40,maj
0,0,0,9,min
50,50,50,50,min
"""


def blob_csv(path, n_majority=30, n_minority=8, seed=0):
    rng = np.random.default_rng(seed)
    rows = ["x,y,z,label"]
    for label, count, centre in (("maj", n_majority, 0.0), ("min", n_minority, 2.0)):
        for values in rng.normal(centre, 1.0, size=(count, 3)):
            rows.append(",".join(repr(float(v)) for v in values) + f",{label}")
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return path


def write_config(directory, **extra):
    doc = {"seed": 3, "out_dir": "out",
           "datasets": [{"id": "toy", "path": "toy.csv", "binarization": "min-vs-R"}],
           "methods": ["smote"]}
    doc.update(extra)
    path = directory / "run.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


@pytest.fixture
def workspace(tmp_path, monkeypatch):
    monkeypatch.delenv("OVERSAMPLING_OUT_DIR", raising=False)
    monkeypatch.delenv("OVERSAMPLING_JOBS", raising=False)
    (tmp_path / "toy.csv").write_text(TOY, encoding="utf-8")
    blob_csv(tmp_path / "blobs.csv")
    return tmp_path


def test_inspect_prints_pair_diagnostics(workspace, capsys):
    """Test the toy set: two pairs, four unpaired majority rows"""
    code = main(["inspect", str(workspace / "toy.csv"), "--binarization", "min-vs-R"])
    out = capsys.readouterr().out.splitlines()
    assert code == 0
    assert "minority=2 majority=6 IR=3.00" in out[0]
    assert out[1].startswith("pairs=2 unpaired=4 paired=2 paired_minority=1")
    assert out[2] == "pairs by difference count: 1=1 2=1"


def test_inspect_validation_failures(workspace, capsys):
    single = workspace / "single.csv"
    single.write_text("a,label\n1,x\n2,x\n", encoding="utf-8")
    assert main(["inspect", str(single), "--binarization", "x-vs-R"]) == 2
    assert main(["inspect", str(workspace / "toy.csv")]) == 2
    assert main(["inspect", "no-such-variant"]) == 2
    assert "Error:" in capsys.readouterr().err


def test_resample_writes_csv_and_diagnostics(workspace, capsys):
    config = write_config(workspace, datasets=[{"id": "blobs", "path": "blobs.csv",
                                                "binarization": "min-vs-R"}],
                          methods=[{"method": "smote", "k_neighbors": 3}])
    assert main(["resample", "--config", str(config)]) == 0
    assert "blobs SMOTE: minority 8 -> 30" in capsys.readouterr().out
    csv_text = (workspace / "out" / "blobs_smote.csv").read_text(encoding="utf-8")
    lines = csv_text.splitlines()
    assert lines[0] == "x,y,z,label,provenance"
    assert len(lines) == 1 + 60
    assert lines[-1].split(",")[-1].startswith("smote:p=")
    diagnostics = json.loads((workspace / "out" / "blobs_smote.diagnostics.json").read_text())
    assert diagnostics["n_synthetic"] == 22
    assert diagnostics["class_counts"] == {"negative": 30, "positive": 30}


def test_resample_is_byte_identical_for_a_seed(workspace):
    config = write_config(workspace, datasets=[{"id": "blobs", "path": "blobs.csv",
                                                "binarization": "min-vs-R"}],
                          methods=[{"method": "smote", "k_neighbors": 3}])
    output = workspace / "out" / "blobs_smote.csv"
    assert main(["resample", "--config", str(config)]) == 0
    first = output.read_bytes()
    assert main(["resample", "--config", str(config)]) == 0
    assert output.read_bytes() == first
    assert main(["resample", "--config", str(config), "--seed", "4"]) == 0
    assert output.read_bytes() != first


def test_resample_cfa_on_toy_set(workspace):
    config = write_config(workspace, methods=["cfa"])
    assert main(["resample", "--config", str(config)]) == 0
    lines = (workspace / "out" / "toy_cfa.csv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1 + 12
    assert lines[-1] == "40.0,40.0,0.0,9.0,positive,cfa:x'=5;x=1;p=6"


def test_resample_cfa_balanced_input_is_unchanged(workspace):
    (workspace / "even.csv").write_text("a,b,label\n0,0,maj\n1,1,maj\n0,1,min\n1,0,min\n",
                                        encoding="utf-8")
    config = write_config(workspace, datasets=[{"id": "even", "path": "even.csv",
                                                "binarization": "min-vs-R"}], methods=["cfa"])
    assert main(["resample", "--config", str(config)]) == 0
    lines = (workspace / "out" / "even_cfa.csv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1 + 4
    diagnostics = json.loads((workspace / "out" / "even_cfa.diagnostics.json").read_text())
    assert diagnostics["n_synthetic"] == 0
    assert "note" in diagnostics["diagnostics"]


def test_resample_exit_codes(workspace):
    config = write_config(workspace, datasets=[{"id": "blobs", "path": "blobs.csv",
                                                "binarization": "min-vs-R"}], methods=["cfa"])
    # continuous rows never agree on two of three features at zero tolerance
    assert main(["resample", "--config", str(config), "--max-diffs", "1",
                 "--tolerance", "0"]) == 3
    two_methods = write_config(workspace, methods=["cfa", "smote"])
    assert main(["resample", "--config", str(two_methods)]) == 2
    assert main(["resample", "--config", str(workspace / "missing.json")]) == 2


def test_benchmark_and_report(workspace, capsys):
    config = write_config(workspace, datasets=[{"id": "blobs", "path": "blobs.csv",
                                                "binarization": "min-vs-R"}],
                          methods=[{"method": "smote", "k_neighbors": 3}], k_folds=3,
                          classifiers={"knn": {"kind": "knn", "params": {"n_neighbors": 3}}})
    assert main(["benchmark", "--config", str(config)]) == 0
    out = capsys.readouterr().out
    assert "knn roc_auc winners: Baseline=" in out
    assert "cells=6 failed=0 cached=0 leakage_violations=0" in out
    report = workspace / "out" / "report.json"
    first = report.read_bytes()
    assert (workspace / "out" / "tables" / "knn_recall.csv").is_file()

    assert main(["benchmark", "--config", str(config)]) == 0
    assert "cached=6" in capsys.readouterr().out
    assert report.read_bytes() == first

    assert main(["report", "--out", str(workspace / "out")]) == 0
    assert report.read_bytes() == first
    assert main(["report", "--out", str(workspace / "nowhere")]) == 2


def test_benchmark_exits_nonzero_when_every_cell_fails(workspace):
    config = write_config(workspace, datasets=[{"id": "blobs", "path": "blobs.csv",
                                                "binarization": "min-vs-R"}],
                          methods=[], k_folds=3,
                          classifiers={"knn": {"kind": "knn", "params": {"n_neighbors": 500}}})
    assert main(["benchmark", "--config", str(config)]) == 3


def test_help_lists_every_flag(capsys):
    for command in ("inspect", "resample", "benchmark", "report", "fetch"):
        with pytest.raises(SystemExit) as done:
            main([command, "--help"])
        assert done.value.code == 0
    out = capsys.readouterr().out
    for flag in ("--config", "--seed", "--jobs", "--out", "--tolerance", "--max-diffs",
                 "--verify", "--fresh", "--binarization", "--data-dir", "--log-level"):
        assert flag in out


def test_unknown_flags_are_errors(workspace):
    config = write_config(workspace)
    with pytest.raises(SystemExit) as done:
        main(["resample", "--config", str(config), "--colour", "blue"])
    assert done.value.code == 2
    assert build_parser().parse_args(["report"]).command == "report"


def test_inspect_accepts_a_dataset_prefixed_binarization(workspace, capsys):
    glass = workspace / "glass_toy.csv"
    glass.write_text("a,b,class\n1,1,1\n2,2,1\n3,3,1\n4,4,3\n", encoding="utf-8")
    assert main(["inspect", str(glass), "--binarization", "Glass-3-vs-R"]) == 0
    assert "minority=1 majority=3" in capsys.readouterr().out


def test_resample_refuses_a_k_neighbors_grid(workspace):
    config = write_config(workspace, methods=[{"method": "smote", "k_neighbors": [3, 5]}])
    assert main(["resample", "--config", str(config)]) == 2


def test_fetch_resolves_variants_to_their_source_once(tmp_path, capsys):
    (tmp_path / "glass.csv").write_text("a,label\n1,3\n", encoding="utf-8")
    assert main(["fetch", "D10", "glass", "--data-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == f"glass: {tmp_path / 'glass.csv'}"
    assert [line for line in out if line.startswith("glass:")] == out[:1]
    assert any(line.strip().startswith("D10 ") for line in out)
