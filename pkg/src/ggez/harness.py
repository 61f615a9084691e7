"""Evaluation aggregation: benchmark breakdowns, human-score protocols.

Three protocols live here besides the breakdown tables:

* min-max normalization of per-category human scores, averaged per item;
* pairwise preference agreement between human orderings and a reward
  model's scores (sampled ordered pairs, strict inequality);
* within-item average rank where the best score receives the highest rank
  number and ties share the mean of their positions.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from scipy.stats import rankdata

from .errors import (
    DataError,
    EmptyScores,
    IncompleteItem,
    IncompleteModel,
    InvalidQuality,
    NoOrderedPairs,
)
from .parity import GrpConfig, QualitySet, aggregate_quality, compute_grp
from .regions import RegionPartition

GLOBAL_SCOPE = "global"
REGIONAL_SCOPE = "regional"


@dataclass(frozen=True)
class MetricRow:
    """One benchmark cell: model x benchmark at some scope."""

    model: str
    benchmark: str
    scope: str
    value: float
    beta: float | None = None

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise InvalidQuality(
                f"metric {self.benchmark!r} for {self.model!r} is non-finite"
            )


@dataclass(frozen=True)
class HumanItemScores:
    """Per-model Likert scores for one evaluated item."""

    item_id: str
    scores: Mapping[str, float]
    language: str | None = None


@dataclass(frozen=True)
class AgreementReport:
    reward_model: str
    pair_count: int
    agreeing: int
    rate: float
    seed: int
    distinct_pairs: bool

    def to_dict(self) -> dict:
        return {
            "reward_model": self.reward_model,
            "pair_count": self.pair_count,
            "agreeing": self.agreeing,
            "rate": self.rate,
            "seed": self.seed,
            "distinct_pairs": self.distinct_pairs,
        }


def minmax_normalize(categories: Mapping[str, Sequence[float]]) -> list[float]:
    """Normalize each category to [0, 1], then average categories per item.

    A category with zero range carries no ordering information and maps to a
    neutral 0.5 everywhere. All categories must score the same items.
    """
    if not categories:
        raise EmptyScores("no score categories given")
    lengths = {len(values) for values in categories.values()}
    if lengths == {0}:
        raise EmptyScores("score categories are empty")
    if len(lengths) != 1:
        raise DataError(f"categories disagree on item count: {sorted(lengths)}")
    (n_items,) = lengths

    normalized: list[list[float]] = []
    for name, values in categories.items():
        values = [float(v) for v in values]
        if any(not math.isfinite(v) for v in values):
            raise DataError(f"category {name!r} contains non-finite scores")
        lo, hi = min(values), max(values)
        if hi == lo:
            normalized.append([0.5] * n_items)
        else:
            normalized.append([(v - lo) / (hi - lo) for v in values])
    return [
        math.fsum(col[i] for col in normalized) / len(normalized) for i in range(n_items)
    ]


def pairwise_agreement(
    human: Sequence[float],
    rm: Sequence[float],
    n_pairs: int,
    seed: int,
    reward_model: str = "rm",
    distinct_pairs: bool = False,
) -> AgreementReport:
    """Rate at which the reward model preserves strict human orderings.

    Qualifying pairs are all ordered (a, b) with human[a] > human[b];
    sampling is uniform with replacement unless ``distinct_pairs``. A pair
    agrees only when rm[a] > rm[b] strictly; rm ties count against.
    """
    if len(human) != len(rm):
        raise DataError(f"{len(human)} human scores vs {len(rm)} reward scores")
    if n_pairs < 1:
        raise DataError(f"n_pairs must be >= 1, got {n_pairs}")
    qualifying = [
        (a, b)
        for a in range(len(human))
        for b in range(len(human))
        if human[a] > human[b]
    ]
    if not qualifying:
        raise NoOrderedPairs("no pair of items has strictly ordered human scores")

    rng = random.Random(seed)
    if distinct_pairs:
        if n_pairs > len(qualifying):
            raise DataError(
                f"{n_pairs} distinct pairs requested, only {len(qualifying)} exist"
            )
        sampled = rng.sample(qualifying, n_pairs)
    else:
        sampled = rng.choices(qualifying, k=n_pairs)

    agreeing = sum(1 for a, b in sampled if rm[a] > rm[b])
    return AgreementReport(
        reward_model=reward_model,
        pair_count=n_pairs,
        agreeing=agreeing,
        rate=agreeing / n_pairs,
        seed=seed,
        distinct_pairs=distinct_pairs,
    )


def average_rank(items: Sequence[HumanItemScores], models: Sequence[str] | None = None) -> dict[str, float]:
    """Per-model mean of within-item ranks; the best score ranks highest.

    With k models the top scorer of an item receives rank k; ties share the
    mean of the positions they straddle, so each item's ranks always sum to
    k(k+1)/2.
    """
    if not items:
        raise EmptyScores("no items to rank")
    if models is None:
        models = list(items[0].scores)
    totals = {m: 0.0 for m in models}
    for item in items:
        missing = [m for m in models if m not in item.scores]
        if missing:
            raise IncompleteItem(f"item {item.item_id!r} lacks scores for {missing}")
        ranks = rankdata([float(item.scores[m]) for m in models], method="average")
        for model, rank in zip(models, ranks):
            totals[model] += float(rank)
    return {m: totals[m] / len(items) for m in models}


@dataclass(frozen=True)
class BreakdownEntry:
    model: str
    q_global: float
    q_regional: float
    grp: float
    beta: float | None = None


@dataclass(frozen=True)
class BreakdownReport:
    entries: tuple[BreakdownEntry, ...]
    alpha: float
    rounding: int

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "models": [
                {
                    "model": e.model,
                    "q_global": e.q_global,
                    "q_regional": e.q_regional,
                    "grp": e.grp,
                    "grp_rounded": round(e.grp, self.rounding),
                    **({"beta": e.beta} if e.beta is not None else {}),
                }
                for e in self.entries
            ],
        }

    def to_text(self) -> str:
        r = self.rounding
        width = max(len(e.model) for e in self.entries) + 2
        lines = [
            f"alpha = {self.alpha}",
            f"{'model':<{width}}{'GRP':>10}{'Global':>10}{'Regional':>10}",
        ]
        for e in self.entries:
            lines.append(
                f"{e.model:<{width}}{round(e.grp, r):>10}"
                f"{round(e.q_global, r):>10}{round(e.q_regional, r):>10}"
            )
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = ["model,q_global,q_regional,grp,beta"]
        for e in self.entries:
            beta = "" if e.beta is None else repr(e.beta)
            lines.append(f"{e.model},{e.q_global},{e.q_regional},{e.grp},{beta}")
        return "\n".join(lines) + "\n"

    def plot_csv(self) -> str:
        """GRP against merge weight, for the models that carry one."""
        lines = ["beta,grp"]
        for e in sorted(
            (e for e in self.entries if e.beta is not None), key=lambda e: e.beta
        ):
            lines.append(f"{e.beta},{e.grp}")
        return "\n".join(lines) + "\n"


def build_breakdown(
    rows: Iterable[MetricRow],
    cfg: GrpConfig,
    partition: RegionPartition | None = None,
) -> BreakdownReport:
    """Aggregate metric rows into per-model Global/Regional averages + GRP.

    Rows scoped ``global`` and ``regional`` feed the two averages; any other
    scope tag is a per-region breakdown cell, validated against the
    partition when one is supplied but excluded from the averages (the
    published per-country cells are informational, not aggregate inputs).
    Models are ordered by GRP descending.
    """
    per_model: dict[str, dict[str, list[tuple[str, float]]]] = {}
    betas: dict[str, float] = {}
    for row in rows:
        scope = row.scope.lower()
        if scope not in (GLOBAL_SCOPE, REGIONAL_SCOPE):
            if partition is not None:
                partition.resolve(row.scope)
            continue
        bucket = per_model.setdefault(row.model, {GLOBAL_SCOPE: [], REGIONAL_SCOPE: []})
        bucket[scope].append((row.benchmark, row.value))
        if row.beta is not None:
            betas[row.model] = row.beta

    if not per_model:
        raise IncompleteModel("no global/regional metric rows found")
    entries = []
    for model, buckets in per_model.items():
        for scope in (GLOBAL_SCOPE, REGIONAL_SCOPE):
            if not buckets[scope]:
                raise IncompleteModel(f"model {model!r} has no {scope}-scope rows")
        q_global = aggregate_quality(QualitySet(GLOBAL_SCOPE, tuple(buckets[GLOBAL_SCOPE])))
        q_regional = aggregate_quality(
            QualitySet(REGIONAL_SCOPE, tuple(buckets[REGIONAL_SCOPE]))
        )
        entries.append(
            BreakdownEntry(
                model=model,
                q_global=q_global,
                q_regional=q_regional,
                grp=compute_grp(q_global, q_regional, cfg),
                beta=betas.get(model),
            )
        )
    entries.sort(key=lambda e: e.grp, reverse=True)
    return BreakdownReport(entries=tuple(entries), alpha=cfg.alpha, rounding=cfg.rounding)


def read_metric_rows(path: str | Path) -> list[MetricRow]:
    """Load ``model,benchmark,scope,value[,beta]`` rows from CSV or JSONL."""
    path = Path(path)
    rows: list[MetricRow] = []
    if path.suffix.lower() in (".jsonl", ".ndjson"):
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    payload = json.loads(line)
                    rows.append(
                        MetricRow(
                            model=str(payload["model"]),
                            benchmark=str(payload["benchmark"]),
                            scope=str(payload["scope"]),
                            value=float(payload["value"]),
                            beta=(
                                float(payload["beta"])
                                if payload.get("beta") is not None
                                else None
                            ),
                        )
                    )
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise DataError(f"{path}:{lineno}: bad metric row: {exc}") from exc
        return rows
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"model", "benchmark", "scope", "value"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DataError(f"{path}: metric CSV needs columns {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                beta_cell = (row.get("beta") or "").strip()
                rows.append(
                    MetricRow(
                        model=row["model"],
                        benchmark=row["benchmark"],
                        scope=row["scope"],
                        value=float(row["value"]),
                        beta=float(beta_cell) if beta_cell else None,
                    )
                )
            except (TypeError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: bad metric row: {exc}") from exc
    return rows


def read_human_scores(path: str | Path) -> list[HumanItemScores]:
    """Load human-eval items from JSONL: {"item", "scores": {model: score}, "language"?}."""
    items: list[HumanItemScores] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
                items.append(
                    HumanItemScores(
                        item_id=str(payload["item"]),
                        scores={str(k): float(v) for k, v in payload["scores"].items()},
                        language=payload.get("language"),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError, AttributeError) as exc:
                raise DataError(f"{path}:{lineno}: bad human-score row: {exc}") from exc
    return items
