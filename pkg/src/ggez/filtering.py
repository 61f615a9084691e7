"""Regional quality filtering: region membership plus a reward threshold.

A record survives when its region resolves to the target region AND its
reward clears the threshold (inclusive: the case-study keeps scores "at or
above" the cut, so a reward exactly at tau is kept).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .corpus import CorpusRecord
from .errors import ConfigError, MissingReward, ScoringError
from .regions import RegionPartition
from .workers import ScorerFn, bounded_map


@dataclass
class FilterConfig:
    """Target region, reward threshold, and an optional scorer handle."""

    target_region: str
    tau: float
    scorer: ScorerFn | None = None

    def __post_init__(self):
        if not math.isfinite(self.tau):
            raise ConfigError(f"tau must be finite, got {self.tau!r}")


def regional_filter(record: CorpusRecord, partition: RegionPartition, region: str) -> bool:
    """True iff the record's region tag resolves to ``region``.

    Unresolvable tags raise rather than returning False: a typo'd country
    code must not silently drop data.
    """
    return partition.resolve(record.region) == region


def score_rewards(
    records: Iterable[CorpusRecord],
    scorer: ScorerFn,
    rescore: bool = False,
    max_failure_rate: float = 0.0,
    jobs: int = 1,
) -> tuple[list[CorpusRecord], list[tuple[str, str]]]:
    """Populate ``reward`` on every record via the scorer.

    Records that already carry a reward are left alone unless ``rescore``.
    Per-record failures (scorer exceptions, NaN outputs) are collected; the
    batch raises :class:`ScoringError` only when the failure rate exceeds
    ``max_failure_rate``. Returns (scored records, failures) where failed
    records are excluded from the scored list.
    """
    items = list(records)
    todo = [r for r in items if rescore or r.reward is None]
    outcomes = dict(
        zip(
            (id(r) for r in todo),
            bounded_map(
                lambda rec: float(scorer(rec.id, rec.text, rec.image_ref)), todo, jobs
            ),
        )
    )

    scored: list[CorpusRecord] = []
    failures: list[tuple[str, str]] = []
    for record in items:
        if id(record) not in outcomes:
            scored.append(record)
            continue
        ok, value = outcomes[id(record)]
        if ok and math.isfinite(value):
            record.reward = value
            scored.append(record)
        elif ok:
            failures.append((record.id, f"scorer returned non-finite reward {value!r}"))
        else:
            failures.append((record.id, str(value)))

    if todo and len(failures) / len(todo) > max_failure_rate:
        raise ScoringError(
            f"{len(failures)} of {len(todo)} records failed scoring "
            f"(cap {max_failure_rate:.0%})",
            failures,
        )
    return scored, failures


@dataclass
class FilterSummary:
    """Streaming tally of why records were kept or dropped."""

    total: int = 0
    kept: int = 0
    rejected_region: int = 0
    rejected_reward: int = 0
    rejection_reasons: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "kept": self.kept,
            "rejected_region": self.rejected_region,
            "rejected_reward": self.rejected_reward,
            "rejection_reasons": dict(self.rejection_reasons),
        }


def iter_filtered(
    records: Iterable[CorpusRecord],
    cfg: FilterConfig,
    partition: RegionPartition,
    summary: FilterSummary | None = None,
) -> Iterator[CorpusRecord]:
    """Stream the records passing both predicates, preserving input order."""
    summary = summary if summary is not None else FilterSummary()
    for record in records:
        summary.total += 1
        if record.reward is None:
            raise MissingReward(
                f"record {record.id!r} has no reward; score the corpus first"
            )
        if not regional_filter(record, partition, cfg.target_region):
            summary.rejected_region += 1
            reason = f"region!={cfg.target_region}"
            summary.rejection_reasons[reason] = summary.rejection_reasons.get(reason, 0) + 1
            continue
        if record.reward < cfg.tau:
            summary.rejected_reward += 1
            reason = f"reward<{cfg.tau:g}"
            summary.rejection_reasons[reason] = summary.rejection_reasons.get(reason, 0) + 1
            continue
        summary.kept += 1
        yield record


def build_filtered_set(
    records: Iterable[CorpusRecord],
    cfg: FilterConfig,
    partition: RegionPartition,
) -> tuple[list[CorpusRecord], FilterSummary]:
    """Materialize the filtered subset plus its summary."""
    summary = FilterSummary()
    kept = list(iter_filtered(records, cfg, partition, summary))
    return kept, summary
