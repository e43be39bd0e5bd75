"""
Module for parsing binarization specs written as text.
Turns names like "3-vs-R", "0-3-5-9-vs-7-8" or "Glass-3-vs-R" into a Binarization.
"""
import logging
import re

from .dataset import Binarization
from .errors import ConfigError

_logger = logging.getLogger(__name__)

# Words that separate the positive side from the negative side
SEPARATORS = {"vs", "v", "versus", "against"}

# Words meaning "every other class" (one-versus-rest)
REST_WORDS = {"r", "rest", "all", "others", "other"}


def tokenize(text):
    """Split on dashes, underscores and whitespace; keep class labels intact"""
    return [token for token in re.split(r"[-_\s]+", text.strip()) if token]


def _split_sides(tokens):
    separator_at = [i for i, token in enumerate(tokens) if token.lower() in SEPARATORS]
    if len(separator_at) != 1:
        raise ConfigError(f"expected exactly one 'vs' in {'-'.join(tokens)!r}")
    i = separator_at[0]
    return tokens[:i], tokens[i + 1:]


def parse_binarization(text):
    """Parse "<classes>-vs-<classes|R>"; the first group is POSITIVE"""
    _logger.debug("Parsing binarization text %r", text)
    left, right = _split_sides(tokenize(text))
    if not left:
        raise ConfigError(f"no positive class in {text!r}")
    if not right:
        raise ConfigError(f"no negative side in {text!r}")

    if len(right) == 1 and right[0].lower() in REST_WORDS:
        mode = Binarization.ovr(*left)
    else:
        mode = Binarization.ovo(tuple(left), tuple(right))
    _logger.debug("Parsed %r as %s %s", text, mode.scheme, mode.to_dict())
    return mode


def parse_variant_name(text, known_classes=None):
    """
    Parse a named dataset variant such as "Glass-3-vs-R" or "WineQuality-Red-4-vs-5".

    Returns (dataset name, Binarization). Class tokens on the positive side are the
    longest run at the end of the left part that are all known classes; without a
    vocabulary, the trailing numeric tokens are taken as classes.
    """
    left, right = _split_sides(tokenize(text))
    if known_classes is not None:
        known = {str(c) for c in known_classes}
        is_class = lambda token: token in known
    else:
        is_class = lambda token: bool(re.fullmatch(r"-?\d+(\.\d+)?", token))

    split_at = len(left)
    while split_at > 0 and is_class(left[split_at - 1]):
        split_at -= 1
    name_tokens, class_tokens = left[:split_at], left[split_at:]
    if not class_tokens:
        raise ConfigError(f"no positive class found in variant {text!r}")

    mode = parse_binarization("-".join(class_tokens) + "-vs-" + "-".join(right))
    return "-".join(name_tokens), mode


def binarization_for_dataset(value, class_names):
    """
    Binarization for a loaded dataset. Text whose plain reading names classes
    the dataset lacks is read again as "<dataset name>-<classes>-vs-...".
    """
    mode = binarization_from_config(value)
    known = {str(c) for c in class_names}
    if not isinstance(value, str) or set(mode.positive + mode.negative) <= known:
        return mode
    try:
        name, prefixed = parse_variant_name(value, known)
    except ConfigError:
        return mode
    if not name or not set(prefixed.positive + prefixed.negative) <= known:
        return mode
    _logger.debug("Read %r as dataset %r, binarization %s", value, name, prefixed.describe())
    return prefixed


def binarization_from_config(value):
    """Accept the text form or a {scheme, positive, negative} object"""
    if isinstance(value, str):
        return parse_binarization(value)
    if isinstance(value, dict):
        unknown = set(value) - {"scheme", "positive", "negative"}
        if unknown:
            raise ConfigError(f"unknown binarization keys {sorted(unknown)}")
        positive = value.get("positive")
        negative = value.get("negative", [])
        if isinstance(positive, (str, int)):
            positive = [positive]
        if isinstance(negative, (str, int)):
            negative = [negative]
        try:
            return Binarization(value.get("scheme", "ovr"), tuple(positive or ()), tuple(negative))
        except Exception as e:
            raise ConfigError(f"invalid binarization {value}: {e}")
    raise ConfigError(f"binarization must be text or an object, got {value!r}")
