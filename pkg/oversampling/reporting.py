"""Module for rendering a BenchmarkReport into JSON, CSV tables and ROC point files"""
import logging
import re

import numpy as np
import pandas as pd

from .benchmark import SUMMARY_METRICS, WINNER_METRICS
from .evaluation import roc

_logger = logging.getLogger(__name__)

REPORT_FILE = "report.json"
TOTAL_ROW = "Total"


def safe_name(text):
    """File-name friendly form of an id or label"""
    return re.sub(r"[^A-Za-z0-9._-]+", "_", str(text)).strip("_") or "unnamed"


def metric_table(report, classifier, metric):
    """Datasets x methods of mean±std, plus a Total row of winner counts"""
    methods = report.method_labels
    rows = {}
    for dataset in report.dataset_ids:
        row = {}
        for method in methods:
            entry = report.aggregate(dataset, method, classifier)
            if entry is None or metric not in entry:
                row[method] = "failed"
            else:
                row[method] = f"{entry[metric]['mean']:.4f}±{entry[metric]['std']:.4f}"
        rows[dataset] = row
    if metric in WINNER_METRICS:
        counts = report.winner_counts[classifier][metric]
        rows[TOTAL_ROW] = {method: str(counts[method]) for method in methods}
    frame = pd.DataFrame.from_dict(rows, orient="index", columns=methods)
    frame.index.name = "dataset"
    return frame


def roc_frame(cell):
    predictions = cell["predictions"]
    curve, _ = roc(np.array(predictions["actual"], dtype=bool),
                   np.array(predictions["scores"], dtype=np.float64))
    return pd.DataFrame({"fpr": curve.fpr, "tpr": curve.tpr, "threshold": curve.thresholds})


def write_report(report, writer):
    """Queue every artifact of a report on the writer; returns relative paths"""
    written = []

    def emit(relative, text):
        writer.write(relative, text)
        written.append(relative)

    emit(REPORT_FILE, report.to_json())
    for classifier in report.classifier_names:
        for metric in SUMMARY_METRICS:
            table = metric_table(report, classifier, metric)
            emit(f"tables/{safe_name(classifier)}_{metric}.csv",
                 table.to_csv(lineterminator="\n"))
    for cell in report.cells:
        if cell["status"] != "ok":
            continue
        relative = (f"roc/{safe_name(cell['dataset'])}/{safe_name(cell['classifier'])}/"
                    f"{safe_name(cell['method'])}_fold{cell['fold']}.csv")
        emit(relative, roc_frame(cell).to_csv(index=False, lineterminator="\n"))
    _logger.info("Queued %d report artifacts", len(written))
    return written


def winner_summary_lines(report):
    lines = []
    for classifier in report.classifier_names:
        for metric in WINNER_METRICS:
            counts = report.winner_counts[classifier][metric]
            summary = " ".join(f"{method}={counts[method]}" for method in report.method_labels)
            lines.append(f"{classifier} {metric} winners: {summary}")
    return lines
