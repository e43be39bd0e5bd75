"""Module for writing run artifacts from one background thread, atomically"""
import logging
import os
import queue
import threading
from pathlib import Path

from .errors import ArtifactError

_logger = logging.getLogger(__name__)

TEMP_PREFIX = ".ovs_tmp_"


def resolve_inside(out_dir, relative):
    """Absolute path of `relative` under `out_dir`; refuses paths that escape it"""
    root = Path(out_dir).resolve()
    target = (root / relative).resolve()
    if target != root and root not in target.parents:
        raise ArtifactError(f"refusing to write {relative!r} outside {root}")
    return target


def write_atomic(path, text):
    """Write to a temp file in the same directory, then rename over the target"""
    path = Path(path)
    temp = path.with_name(f"{TEMP_PREFIX}{path.name}.{os.getpid()}.{threading.get_ident()}")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(temp, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(temp, path)
    except OSError as e:
        try:
            if temp.exists():
                temp.unlink()
        except OSError:
            pass
        raise ArtifactError(f"could not write {path}: {e}") from e


class ArtifactWriter:
    """
    Queue of (relative path, text) jobs drained by a single daemon thread, so
    files from concurrent benchmark cells never interleave. Errors raised on
    the worker surface on the next flush() or close().
    """

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.write_queue = queue.Queue()
        self.errors = []
        self.written = []
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ArtifactError(f"cannot create output directory {self.out_dir}: {e}") from e
        self._cleanup_temp_files()
        self.writer_thread = threading.Thread(target=self._writer_worker, daemon=True)
        self.writer_thread.start()
        _logger.debug("Artifact writer started for %s", self.out_dir)

    def _cleanup_temp_files(self):
        """Remove temp files left behind by an interrupted run"""
        for leftover in self.out_dir.rglob(f"{TEMP_PREFIX}*"):
            try:
                leftover.unlink()
                _logger.info("Removed leftover file: %s", leftover)
            except OSError as e:
                _logger.warning("Could not remove leftover file %s: %s", leftover, e)

    def _writer_worker(self):
        while True:
            job = self.write_queue.get()
            try:
                if job is None:
                    break
                path, text = job
                write_atomic(path, text)
                self.written.append(path)
                _logger.debug("Wrote %s", path)
            except Exception as e:
                _logger.error("Artifact writer error: %s", e)
                self.errors.append(e)
            finally:
                self.write_queue.task_done()

    def write(self, relative, text):
        """Queue `text` for `relative` under the output directory; returns the path"""
        if not self.writer_thread.is_alive():
            raise ArtifactError("artifact writer is closed")
        path = resolve_inside(self.out_dir, relative)
        self.write_queue.put((path, text))
        return path

    def flush(self):
        self.write_queue.join()
        if self.errors:
            error = self.errors[0]
            self.errors = []
            raise error if isinstance(error, ArtifactError) else ArtifactError(str(error))

    def close(self):
        if self.writer_thread.is_alive():
            self.write_queue.put(None)
            self.writer_thread.join()
        self.flush()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, traceback):
        if exc_type is None:
            self.close()
        else:
            # keep the original exception; drop writer errors behind it
            self.write_queue.put(None)
            self.writer_thread.join()
