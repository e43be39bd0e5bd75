"""
Tests for the text form of binarization specs
"""
import pytest

from oversampling.binarization_parser import (binarization_for_dataset, binarization_from_config,
                                              parse_binarization, parse_variant_name, tokenize)
from oversampling.errors import ConfigError


def test_tokenize():
    assert tokenize(" 0-3_5 vs 7 ") == ["0", "3", "5", "vs", "7"]


@pytest.mark.parametrize("text, scheme, positive, negative", [
    ("3-vs-R", "ovr", ("3",), ()),
    ("ME3-vs-rest", "ovr", ("ME3",), ()),
    ("4-vs-5", "ovo", ("4",), ("5",)),
    ("0-3-5-9-vs-7-8", "ovo", ("0", "3", "5", "9"), ("7", "8")),
    ("VAC versus NUC", "ovo", ("VAC",), ("NUC",)),
])
def test_parse_binarization(text, scheme, positive, negative):
    """Test that the first group is always the positive side"""
    mode = parse_binarization(text)
    assert (mode.scheme, mode.positive, mode.negative) == (scheme, positive, negative)


def test_describe_round_trips_through_the_parser():
    for text in ("3-vs-R", "4-vs-5", "3-9-vs-5"):
        assert parse_binarization(text).describe() == text


@pytest.mark.parametrize("text", ["3-R", "vs-R", "3-vs", "3-vs-4-vs-5"])
def test_parse_binarization_rejects_malformed_text(text):
    with pytest.raises(ConfigError):
        parse_binarization(text)


def test_parse_variant_name_with_numeric_classes():
    name, mode = parse_variant_name("WineQuality-White-3-9-vs-5")
    assert name == "WineQuality-White"
    assert mode.positive == ("3", "9")
    assert mode.negative == ("5",)


def test_parse_variant_name_with_vocabulary():
    name, mode = parse_variant_name("Ecoli-imU-vs-R", known_classes=["cp", "im", "imU", "om"])
    assert name == "Ecoli"
    assert mode.scheme == "ovr"
    assert mode.positive == ("imU",)


def test_parse_variant_name_needs_a_positive_class():
    with pytest.raises(ConfigError):
        parse_variant_name("Glass-vs-R")


def test_binarization_from_config_object():
    mode = binarization_from_config({"scheme": "ovo", "positive": 3, "negative": [7, 8]})
    assert mode.positive == ("3",)
    assert mode.negative == ("7", "8")
    assert binarization_from_config("3-vs-R") == mode.ovr("3")


def test_binarization_from_config_rejects_bad_objects():
    with pytest.raises(ConfigError):
        binarization_from_config({"scheme": "ovo", "positive": "3"})
    with pytest.raises(ConfigError):
        binarization_from_config({"positive": "3", "extra": 1})
    with pytest.raises(ConfigError):
        binarization_from_config(3)


def test_binarization_for_dataset_drops_a_dataset_prefix():
    mode = binarization_for_dataset("Glass-3-vs-R", ["1", "2", "3"])
    assert (mode.scheme, mode.positive) == ("ovr", ("3",))
    mode = binarization_for_dataset("WineQuality-Red-4-vs-5", ["4", "5", "6"])
    assert (mode.positive, mode.negative) == (("4",), ("5",))


def test_binarization_for_dataset_prefers_the_plain_reading():
    """Test that a class named like a prefix is never stripped"""
    assert binarization_for_dataset("min-vs-R", ["maj", "min"]).positive == ("min",)
    assert binarization_for_dataset("a-b-vs-c", ["a", "b", "c"]).positive == ("a", "b")
    # unknown classes are left for binarize to report
    assert binarization_for_dataset("Glass-7-vs-R", ["1", "3"]).positive == ("Glass", "7")
    object_form = {"scheme": "ovr", "positive": "3"}
    assert binarization_for_dataset(object_form, ["3"]).positive == ("3",)
