"""JSONL corpus records and streaming I/O.

One record per line. Known fields are typed; any other keys ride along in
``extra`` and are written back on passthrough so upstream annotations
survive the pipeline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import DataError

_KNOWN_KEYS = ("id", "region", "language", "text", "image_ref", "reward", "source")


@dataclass
class CorpusRecord:
    """One training example with region, language, and an optional reward."""

    id: str
    region: str
    language: str
    text: str
    image_ref: str | None = None
    reward: float | None = None
    source: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise DataError("corpus record has empty id")
        if self.reward is not None:
            self.reward = float(self.reward)
            if not math.isfinite(self.reward):
                raise DataError(f"record {self.id!r} has non-finite reward {self.reward!r}")

    def to_json_dict(self) -> dict:
        payload = {
            "id": self.id,
            "region": self.region,
            "language": self.language,
            "text": self.text,
            "source": self.source,
        }
        if self.image_ref is not None:
            payload["image_ref"] = self.image_ref
        if self.reward is not None:
            payload["reward"] = self.reward
        payload.update(self.extra)
        return payload

    @classmethod
    def from_json_dict(cls, payload: dict) -> "CorpusRecord":
        extra = {k: v for k, v in payload.items() if k not in _KNOWN_KEYS}
        try:
            return cls(
                id=str(payload["id"]),
                region=str(payload.get("region", "")),
                language=str(payload.get("language", "")),
                text=str(payload.get("text", "")),
                image_ref=payload.get("image_ref"),
                reward=payload.get("reward"),
                source=str(payload.get("source", "")),
                extra=extra,
            )
        except KeyError as exc:
            raise DataError(f"corpus record missing required key {exc}") from exc


def read_jsonl(path: str | Path) -> Iterator[CorpusRecord]:
    """Stream records one line at a time; ids must be unique within the file."""
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            record = CorpusRecord.from_json_dict(payload)
            if record.id in seen:
                raise DataError(f"{path}:{lineno}: duplicate record id {record.id!r}")
            seen.add(record.id)
            yield record


def write_jsonl(records: Iterable[CorpusRecord], path: str | Path) -> int:
    """Write records; returns the count. Output is UTF-8, one object per line."""
    count = 0
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json_dict(), ensure_ascii=False) + "\n")
            count += 1
    tmp.replace(path)
    return count


def append_jsonl(record: CorpusRecord, fh: IO[str]) -> None:
    fh.write(json.dumps(record.to_json_dict(), ensure_ascii=False) + "\n")
