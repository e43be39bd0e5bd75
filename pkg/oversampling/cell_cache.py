"""Module for the on-disk cache of finished benchmark cells (resumable sweeps)"""
import hashlib
import json
import logging

from .artifact_writer import resolve_inside

_logger = logging.getLogger(__name__)

CACHE_DIR = "cells"


def cell_key(payload):
    """Content hash of everything a cell result depends on"""
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class CellCache:
    """Cell results as cells/<key>.json under the run's output directory"""

    def __init__(self, writer, enabled=True):
        self.writer = writer
        self.enabled = enabled
        self.hits = 0

    def _relative(self, key):
        return f"{CACHE_DIR}/{key}.json"

    def get(self, key):
        if not self.enabled:
            return None
        path = resolve_inside(self.writer.out_dir, self._relative(key))
        if not path.is_file():
            return None
        try:
            value = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            _logger.warning("Ignoring unreadable cached cell %s: %s", path.name, e)
            return None
        if value.get("key") != key:
            _logger.warning("Ignoring cached cell %s with a mismatched key", path.name)
            return None
        self.hits += 1
        _logger.info("Cache hit for cell %s", key[:12])
        return value["result"]

    def put(self, key, result):
        # written even when reads are disabled, so a fresh run can be resumed
        text = json.dumps({"key": key, "result": result}, sort_keys=True)
        self.writer.write(self._relative(key), text)
