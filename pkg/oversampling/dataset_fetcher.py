"""
Module for downloading the public benchmark datasets and the registry of the
binarized variants built from them.
"""
import io
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import pandas as pd
import requests
from dotenv import load_dotenv

from .artifact_writer import write_atomic
from .binarization_parser import parse_binarization
from .dataset import DEFAULT_LABEL_NAME, binarize, load_csv, summarize
from .errors import ConfigError, DatasetError, DownloadError

load_dotenv()

_logger = logging.getLogger(__name__)

DEFAULT_DATA_DIR = "data"
REQUEST_TIMEOUT = 60
UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"


@dataclass(frozen=True)
class Source:
    """Where a raw file lives and how to turn it into a labeled CSV"""
    name: str
    title: str
    url: str
    separator: str = ","
    columns: tuple = None  # None: the file has its own header row
    label: str = DEFAULT_LABEL_NAME
    drop: tuple = ()

    @property
    def file_name(self):
        return f"{self.name}.csv"


SOURCES = {source.name: source for source in (
    Source("pima", "Pima",
           "https://raw.githubusercontent.com/jbrownlee/Datasets/master/pima-indians-diabetes.data.csv",
           columns=("pregnancies", "glucose", "blood_pressure", "skin_thickness", "insulin",
                    "bmi", "pedigree", "age", "class")),
    Source("glass", "Glass", f"{UCI}/glass/glass.data",
           columns=("id", "RI", "Na", "Mg", "Al", "Si", "K", "Ca", "Ba", "Fe", "class"),
           drop=("id",)),
    Source("yeast", "Yeast", f"{UCI}/yeast/yeast.data", separator=r"\s+",
           columns=("name", "mcg", "gvh", "alm", "mit", "erl", "pox", "vac", "nuc", "class"),
           drop=("name",)),
    Source("ecoli", "Ecoli", f"{UCI}/ecoli/ecoli.data", separator=r"\s+",
           columns=("name", "mcg", "gvh", "lip", "chg", "aac", "alm1", "alm2", "class"),
           drop=("name",)),
    Source("winequality-red", "WineQuality-Red", f"{UCI}/wine-quality/winequality-red.csv",
           separator=";", label="quality"),
    Source("winequality-white", "WineQuality-White", f"{UCI}/wine-quality/winequality-white.csv",
           separator=";", label="quality"),
)}


@dataclass(frozen=True)
class Variant:
    """A registered binarized dataset with its expected class counts"""
    id: str
    source: str
    binarization: str
    n_minority: int
    n_majority: int

    @property
    def name(self):
        return f"{SOURCES[self.source].title}-{self.binarization}"


VARIANTS = {variant.id: variant for variant in (
    Variant("D1", "pima", "1-vs-R", 268, 500),
    Variant("D5", "yeast", "ME3-vs-R", 163, 1321),
    Variant("D6", "ecoli", "imU-vs-R", 35, 301),
    Variant("D10", "glass", "3-vs-R", 17, 197),
    Variant("D11", "winequality-red", "4-vs-5", 53, 681),
    Variant("D12", "yeast", "VAC-vs-NUC", 30, 429),
    Variant("D13", "ecoli", "om-vs-R", 20, 316),
    Variant("D17", "yeast", "ME2-vs-R", 51, 1433),
    Variant("D18", "winequality-red", "8-vs-6", 18, 638),
    Variant("D20", "yeast", "EXC-vs-R", 35, 1449),
    Variant("D21", "winequality-white", "3-vs-7", 20, 880),
    Variant("D22", "winequality-white", "3-9-vs-5", 25, 1457),
)}


def data_dir():
    return Path(os.getenv("OVERSAMPLING_DATA_DIR") or DEFAULT_DATA_DIR)


def source_path(name, directory=None):
    if name not in SOURCES:
        raise ConfigError(f"unknown dataset source {name!r}; known: {sorted(SOURCES)}")
    directory = Path(directory) if directory is not None else data_dir()
    return directory / SOURCES[name].file_name


def resolve_variant(text):
    """Look a variant up by id ("D10") or by name ("Glass-3-vs-R")"""
    key = str(text).strip()
    for variant in VARIANTS.values():
        if key.upper() == variant.id or key.lower() == variant.name.lower():
            return variant
    raise ConfigError(f"unknown dataset variant {text!r}; known: {sorted(VARIANTS)}")


def normalize(source, text):
    """Raw downloaded text to package CSV text: header row, label column 'class'"""
    try:
        frame = pd.read_csv(io.StringIO(text), sep=source.separator, dtype=str,
                            header=None if source.columns else 0,
                            names=list(source.columns) if source.columns else None,
                            engine="python", keep_default_na=False, skip_blank_lines=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DatasetError(f"{source.name}: cannot parse the downloaded file ({e})") from e
    if source.label not in frame.columns:
        raise DatasetError(f"{source.name}: label column {source.label!r} missing")
    frame = frame.drop(columns=list(source.drop))
    frame = frame.rename(columns={source.label: DEFAULT_LABEL_NAME})
    labels = frame.pop(DEFAULT_LABEL_NAME)
    frame[DEFAULT_LABEL_NAME] = labels
    frame.columns = [column.strip().replace(" ", "_") for column in frame.columns]
    return frame.to_csv(index=False, lineterminator="\n")


class DatasetFetcher:
    def __init__(self, directory=None, session=None):
        """Downloads into `directory` (OVERSAMPLING_DATA_DIR by default)"""
        self.directory = Path(directory) if directory is not None else data_dir()
        self.session = session if session is not None else requests.Session()

    def path_for(self, name):
        return source_path(name, self.directory)

    def fetch(self, name, force=False):
        """Download and normalize one source; an existing file is kept unless forced"""
        path = self.path_for(name)
        if path.is_file() and not force:
            _logger.info("%s already present at %s", name, path)
            return path
        source = SOURCES[name]
        _logger.info("Fetching %s from %s", name, source.url)
        try:
            response = self.session.get(source.url, timeout=REQUEST_TIMEOUT)
        except requests.RequestException as e:
            raise DownloadError(f"{name}: download failed: {e}") from e
        if response.status_code != 200:
            raise DownloadError(f"{name}: download failed with HTTP {response.status_code}")
        write_atomic(path, normalize(source, response.text))
        _logger.info("Saved %s to %s", name, path)
        return path


def load_variant(variant, directory=None):
    """Binarized dataset of a registered variant from the local data directory"""
    variant = variant if isinstance(variant, Variant) else resolve_variant(variant)
    path = source_path(variant.source, directory)
    if not path.is_file():
        raise DatasetError(f"{path} not found; run the fetch command for {variant.id} first")
    ds = binarize(load_csv(path), parse_binarization(variant.binarization))
    summary = summarize(ds)
    if (summary.n_minority, summary.n_majority) != (variant.n_minority, variant.n_majority):
        _logger.warning("%s: expected %d/%d minority/majority, found %d/%d", variant.id,
                        variant.n_minority, variant.n_majority,
                        summary.n_minority, summary.n_majority)
    return ds
