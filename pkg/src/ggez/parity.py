"""Global-regional parity (GRP) scoring and candidate selection.

The scalar objective is a weighted sum of a global quality aggregate and a
regional quality aggregate::

    grp = alpha * q_global + (1 - alpha) * q_regional

``alpha`` weights the GLOBAL term. It can be fixed directly or derived from a
globalization-index table (0-100 scale) as ``index / 100``, using the index's
person-to-person interaction component as the anchor for how strongly a
region's users lean on global context.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence, TypeVar

from .errors import (
    ConfigError,
    EmptyCandidates,
    EmptyQuality,
    InvalidQuality,
    MissingIndex,
)

Scope = str  # "global" | "regional" | a per-region tag
CandidateId = TypeVar("CandidateId")


@dataclass(frozen=True)
class GrpConfig:
    """Weight on the global quality term plus report rounding."""

    alpha: float = 0.43
    rounding: int = 1

    def __post_init__(self):
        if not math.isfinite(self.alpha) or not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if self.rounding < 0:
            raise ConfigError(f"rounding must be >= 0, got {self.rounding!r}")

    def round(self, value: float) -> float:
        return round(value, self.rounding)


@dataclass(frozen=True)
class QualitySet:
    """Named metric values sharing one scope and one score scale."""

    scope: Scope
    metrics: tuple[tuple[str, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "metrics", tuple(self.metrics))
        seen = set()
        for metric_id, value in self.metrics:
            if metric_id in seen:
                raise InvalidQuality(f"duplicate metric id {metric_id!r} in quality set")
            seen.add(metric_id)
            if not math.isfinite(value):
                raise InvalidQuality(f"metric {metric_id!r} has non-finite value {value!r}")

    @classmethod
    def from_mapping(cls, scope: Scope, values: dict[str, float]) -> "QualitySet":
        return cls(scope=scope, metrics=tuple(values.items()))


def aggregate_quality(metrics: QualitySet) -> float:
    """Unweighted macro-average of a quality set's metric values."""
    if not metrics.metrics:
        raise EmptyQuality(f"quality set for scope {metrics.scope!r} has no metrics")
    values = [v for _, v in metrics.metrics]
    return math.fsum(values) / len(values)


def compute_grp(q_global: float, q_regional: float, cfg: GrpConfig) -> float:
    """Weighted combination of the two quality aggregates.

    The result is clamped to the [min, max] envelope of the inputs so the
    parity guarantee holds bit-for-bit even when the two rounded products
    land a ulp outside it.
    """
    if not math.isfinite(q_global) or not math.isfinite(q_regional):
        raise InvalidQuality(
            f"quality inputs must be finite, got ({q_global!r}, {q_regional!r})"
        )
    raw = cfg.alpha * q_global + (1.0 - cfg.alpha) * q_regional
    lo, hi = min(q_global, q_regional), max(q_global, q_regional)
    return min(max(raw, lo), hi)


class GlobalizationTable:
    """Region-by-year grid of globalization-index values (0-100 scale)."""

    def __init__(self, rows: dict[str, dict[int, float]]):
        for region, by_year in rows.items():
            for year, value in by_year.items():
                if not 1000 <= int(year) <= 9999:
                    raise ConfigError(
                        f"year {year!r} for region {region!r} is not a 4-digit year"
                    )
                if not math.isfinite(value) or not 0.0 <= value <= 100.0:
                    raise ConfigError(
                        f"index value {value!r} for {region!r}/{year} is outside [0, 100]"
                    )
        self.rows = {r: dict(by_year) for r, by_year in rows.items()}

    def regions(self) -> list[str]:
        return list(self.rows)

    def value(self, region: str, year: int) -> float:
        by_year = self.rows.get(region)
        if by_year is None or year not in by_year:
            raise MissingIndex(f"no globalization index for region {region!r}, year {year}")
        return by_year[year]

    @classmethod
    def from_csv(cls, path: str | Path) -> "GlobalizationTable":
        """Parse the CSV layout ``region,1993,...,2023`` (one row per region)."""
        with open(path, newline="", encoding="utf-8") as fh:
            return cls._parse(csv.reader(fh), str(path))

    @classmethod
    def bundled(cls) -> "GlobalizationTable":
        """The globalization-index table shipped with the package."""
        text = resources.files("ggez.data").joinpath("kof_gi.csv").read_text("utf-8")
        return cls._parse(csv.reader(text.splitlines()), "<bundled kof_gi.csv>")

    @classmethod
    def _parse(cls, reader: Iterable[list[str]], source: str) -> "GlobalizationTable":
        rows_iter = iter(reader)
        try:
            header = next(rows_iter)
        except StopIteration:
            raise ConfigError(f"{source}: empty globalization CSV") from None
        if not header or header[0].strip().lower() != "region":
            raise ConfigError(f"{source}: first header column must be 'region'")
        try:
            years = [int(c) for c in header[1:]]
        except ValueError as exc:
            raise ConfigError(f"{source}: non-integer year in header: {exc}") from exc
        rows: dict[str, dict[int, float]] = {}
        for lineno, row in enumerate(rows_iter, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            label = row[0].strip()
            if label in rows:
                raise ConfigError(f"{source}: duplicate region row {label!r}")
            if len(row) - 1 != len(years):
                raise ConfigError(
                    f"{source}: line {lineno} has {len(row) - 1} values "
                    f"for {len(years)} years"
                )
            try:
                rows[label] = {y: float(v) for y, v in zip(years, row[1:])}
            except ValueError as exc:
                raise ConfigError(f"{source}: line {lineno}: {exc}") from exc
        return cls(rows)


def derive_alpha(table: GlobalizationTable, region: str, year: int) -> float:
    """Globalization factor for a region-year: index value divided by 100.

    Returns the unrounded value; report formatting rounds separately so both
    the precise and the conventional two-decimal forms stay available.
    """
    return table.value(region, year) / 100.0


def best_parity_select(
    candidates: Sequence[tuple[CandidateId, float, float]],
    cfg: GrpConfig,
) -> tuple[CandidateId, float]:
    """Pick the candidate with the highest GRP; ties keep the earliest entry.

    Each candidate is ``(id, q_global, q_regional)``. Returns ``(id, grp)``.
    """
    if not candidates:
        raise EmptyCandidates("no candidates to select from")
    best_id, best_grp = None, -math.inf
    for cand_id, q_global, q_regional in candidates:
        grp = compute_grp(q_global, q_regional, cfg)
        if grp > best_grp:
            best_id, best_grp = cand_id, grp
    assert best_id is not None
    return best_id, best_grp
