"""Deterministic assembly of the fine-tuning mix from source pools.

Each named pool contributes either a fraction of itself (float in [0, 1],
count rounded to nearest) or an absolute record count (int). Sampling is
without replacement by default and keyed off one seed, so reruns are
byte-identical.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .corpus import CorpusRecord
from .errors import ConfigError, InsufficientPool
from .util import derive_seed


@dataclass
class MixManifest:
    seed: int
    with_replacement: bool
    per_source: dict[str, dict] = field(default_factory=dict)
    per_language: dict[str, int] = field(default_factory=dict)
    duplicate_ids_dropped: int = 0
    total: int = 0

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "with_replacement": self.with_replacement,
            "per_source": self.per_source,
            "per_language": dict(sorted(self.per_language.items())),
            "duplicate_ids_dropped": self.duplicate_ids_dropped,
            "total": self.total,
        }


def _target_count(proportion: float | int, pool_size: int, source: str) -> int:
    if isinstance(proportion, bool):
        raise ConfigError(f"proportion for {source!r} must be a number")
    if isinstance(proportion, int):
        if proportion < 0:
            raise ConfigError(f"count for {source!r} must be >= 0, got {proportion}")
        return proportion
    if not 0.0 <= proportion <= 1.0:
        raise ConfigError(
            f"fractional proportion for {source!r} must lie in [0, 1], got {proportion!r}"
        )
    return round(proportion * pool_size)


def build_sft_mix(
    pools: Mapping[str, Sequence[CorpusRecord]],
    proportions: Mapping[str, float | int],
    seed: int,
    with_replacement: bool = False,
) -> tuple[list[CorpusRecord], MixManifest]:
    """Sample every pool and concatenate, dropping cross-pool id collisions.

    ``pools`` maps a source name (e.g. "filtered", "translation") to its
    records; ``proportions`` maps the same names to a fraction or a count.
    Requests beyond the pool size raise :class:`InsufficientPool` unless
    ``with_replacement`` is set. Per-pool selection preserves input order.
    """
    unknown = sorted(set(proportions) - set(pools))
    if unknown:
        raise ConfigError(f"proportions name unknown pools: {unknown}")

    manifest = MixManifest(seed=seed, with_replacement=with_replacement)
    mixed: list[CorpusRecord] = []
    seen_ids: set[str] = set()
    for source in pools:
        pool = list(pools[source])
        proportion = proportions.get(source, 0)
        count = _target_count(proportion, len(pool), source)
        if count > len(pool) and not with_replacement:
            raise InsufficientPool(
                f"pool {source!r} has {len(pool)} records, {count} requested "
                "(pass with_replacement to oversample)"
            )
        rng = random.Random(derive_seed(seed, "mix", source))
        if with_replacement:
            indices = sorted(rng.choices(range(len(pool)), k=count)) if pool else []
        else:
            indices = sorted(rng.sample(range(len(pool)), count))
        taken = 0
        for idx in indices:
            record = pool[idx]
            if record.id in seen_ids:
                if not with_replacement:
                    manifest.duplicate_ids_dropped += 1
                    continue
            seen_ids.add(record.id)
            mixed.append(record)
            manifest.per_language[record.language] = (
                manifest.per_language.get(record.language, 0) + 1
            )
            taken += 1
        manifest.per_source[source] = {
            "pool": len(pool),
            "requested": count,
            "selected": taken,
        }
    manifest.total = len(mixed)
    return mixed, manifest
