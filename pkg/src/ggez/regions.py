"""Region model: a global domain partitioned into disjoint regions.

A partition names the global domain, a set of regions (each a label plus the
country codes it covers), and the single target region of interest. The
remaining regions are derived as ``others``. Country codes are uppercased on
ingestion; region labels are matched exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ConfigError, UnknownRegion

# The case-study region: Southeast Asia, 11 countries (ISO 3166-1 alpha-2).
SEA_COUNTRIES = (
    "SG", "ID", "MY", "BN", "TH", "PH", "VN", "MM", "KH", "LA", "TL",
)


@dataclass(frozen=True)
class RegionPartition:
    """Disjoint regions under one global domain, with a designated target."""

    global_name: str
    regions: dict[str, frozenset[str]]
    target: str
    others: frozenset[str] = field(init=False)

    def __post_init__(self):
        problems: list[str] = []
        if self.target not in self.regions:
            problems.append(f"target region {self.target!r} is not in the partition")
        normalized: dict[str, frozenset[str]] = {}
        seen: dict[str, str] = {}
        for label, codes in self.regions.items():
            up = frozenset(c.upper() for c in codes)
            normalized[label] = up
            for code in up:
                if code in seen:
                    problems.append(
                        f"country code {code!r} appears in both "
                        f"{seen[code]!r} and {label!r}"
                    )
                seen[code] = label
        if problems:
            raise ConfigError("invalid region partition", problems)
        object.__setattr__(self, "regions", normalized)
        object.__setattr__(
            self, "others", frozenset(self.regions) - {self.target}
        )
        object.__setattr__(self, "_code_to_region", seen)

    def resolve(self, tag: str) -> str:
        """Resolve a record tag (region label or country code) to a region.

        Raises :class:`UnknownRegion` rather than guessing: silent
        misclassification loses data downstream.
        """
        if tag in self.regions:
            return tag
        code = tag.upper()
        region = self._code_to_region.get(code)
        if region is None:
            raise UnknownRegion(
                f"region tag {tag!r} is neither a region label nor a known country code"
            )
        return region

    def countries(self, region: str) -> frozenset[str]:
        if region not in self.regions:
            raise UnknownRegion(f"no region named {region!r} in the partition")
        return self.regions[region]

    @classmethod
    def from_mapping(
        cls,
        regions: Mapping[str, Iterable[str]],
        target: str,
        global_name: str = "Global",
    ) -> "RegionPartition":
        return cls(
            global_name=global_name,
            regions={label: frozenset(codes) for label, codes in regions.items()},
            target=target,
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "RegionPartition":
        """Load a partition file: {"global_name", "target", "regions": {label: [codes]}}."""
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read partition file {path}: {exc}") from exc
        missing = [k for k in ("target", "regions") if k not in payload]
        if missing:
            raise ConfigError(
                f"partition file {path} is missing keys",
                [f"missing key {k!r}" for k in missing],
            )
        return cls.from_mapping(
            payload["regions"],
            payload["target"],
            payload.get("global_name", "Global"),
        )


def sea_partition() -> RegionPartition:
    """The bundled default: a single SEA target region under "Global"."""
    return RegionPartition.from_mapping({"SEA": SEA_COUNTRIES}, target="SEA")
