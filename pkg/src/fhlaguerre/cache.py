"""Content-addressed on-disk cache for JSON payloads.

Entries live at ``<root>/<key[:2]>/<key>.json`` and are written to a temporary
file in the same directory before being renamed into place, so concurrent
writers of the same key never expose a partial file.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

from . import __version__

ENV_VAR = "FHLAGUERRE_CACHE_DIR"


def default_cache_dir():
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "fhlaguerre"


def canonical(obj):
    """Canonical JSON text used both for hashing and for stored payloads."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def make_key(kind, config):
    blob = canonical({"kind": kind, "config": config, "version": __version__})
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class Cache:
    """Minimal JSON cache; ``root=None`` disables it."""

    def __init__(self, root=None):
        self.root = Path(root) if root is not None else None

    @property
    def enabled(self):
        return self.root is not None

    def _path(self, key):
        return self.root / key[:2] / f"{key}.json"

    def get(self, key):
        if not self.enabled:
            return None
        path = self._path(key)
        try:
            text = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            return None
        entry = json.loads(text)
        if entry.get("version") != __version__:
            return None
        return entry["payload"]

    def put(self, key, payload):
        if not self.enabled:
            return
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        text = canonical({"key": key, "version": __version__, "payload": payload})
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def get_or_compute(self, kind, config, compute):
        """Return the cached payload for (kind, config) or compute, store and return it.

        The payload always passes through a JSON round trip so cached and fresh
        results are indistinguishable downstream.
        """
        key = make_key(kind, config)
        hit = self.get(key)
        if hit is not None:
            return hit, True
        payload = json.loads(canonical(compute()))
        self.put(key, payload)
        return payload, False
