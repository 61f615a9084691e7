"""Small shared helpers: seed derivation and atomic file writes."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any


def derive_seed(root_seed: int, *labels: str) -> int:
    """Derive a per-stage seed deterministically from one top-level seed.

    The same (root_seed, labels) always yields the same value, and distinct
    labels yield statistically independent streams.
    """
    h = hashlib.sha256()
    h.update(str(int(root_seed)).encode())
    for label in labels:
        h.update(b"\x00")
        h.update(label.encode())
    return int.from_bytes(h.digest()[:8], "little")


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    """Write ``data`` to ``path`` via a temp file + rename in the same dir."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def json_dumps(obj: Any) -> str:
    """Stable JSON encoding used for machine-readable summaries."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)
