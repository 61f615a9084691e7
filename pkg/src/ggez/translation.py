"""Translation-augmentation planning and resumable batch execution.

A plan enumerates (record, target language, translator) jobs up front so the
batch is auditable before any model runs. Execution appends one output
record per completed job and journals the job id; re-running after an
interruption replays the journal and finishes only the remaining jobs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from .corpus import CorpusRecord, append_jsonl
from .errors import DataError, MissingTranslator, TranslationError
from .workers import TranslatorFn, bounded_map


def job_id(record_id: str, target_lang: str) -> str:
    return f"{record_id}#{target_lang}"


@dataclass(frozen=True)
class TranslationJob:
    record_id: str
    target_lang: str
    translator_id: str

    @property
    def id(self) -> str:
        return job_id(self.record_id, self.target_lang)


@dataclass(frozen=True)
class TranslationPlan:
    source_language: str
    target_languages: tuple[str, ...]
    assignments: dict[str, str]
    record_ids: tuple[str, ...]
    jobs: tuple[TranslationJob, ...] = field(init=False)

    def __post_init__(self):
        if len(set(self.target_languages)) != len(self.target_languages):
            raise DataError(f"duplicate target languages in {self.target_languages}")
        missing = [l for l in self.target_languages if l not in self.assignments]
        if missing:
            raise MissingTranslator(
                f"no translator assigned for target language(s): {', '.join(missing)}"
            )
        jobs = tuple(
            TranslationJob(rid, lang, self.assignments[lang])
            for rid in self.record_ids
            for lang in self.target_languages
        )
        object.__setattr__(self, "jobs", jobs)

    def __len__(self) -> int:
        return len(self.jobs)


def plan_translations(
    records: Iterable[CorpusRecord],
    targets: Sequence[str],
    assignments: Mapping[str, str],
    source_language: str = "eng",
) -> TranslationPlan:
    """Deterministic job list: every record crossed with every target."""
    if not targets:
        raise DataError("translation targets must be non-empty")
    return TranslationPlan(
        source_language=source_language,
        target_languages=tuple(targets),
        assignments=dict(assignments),
        record_ids=tuple(r.id for r in records),
    )


def read_journal(path: str | Path) -> set[str]:
    """Completed job ids from a journal file (JSONL, one id per line)."""
    done: set[str] = set()
    path = Path(path)
    if not path.exists():
        return done
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: corrupt journal line {line!r}: {exc}") from exc
            done.add(entry["job_id"] if isinstance(entry, dict) else str(entry))
    return done


@dataclass
class TranslationSummary:
    planned: int = 0
    completed_before: int = 0
    translated: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "planned": self.planned,
            "completed_before": self.completed_before,
            "translated": self.translated,
            "failed": len(self.failures),
            "failures": [{"job_id": j, "reason": r} for j, r in self.failures],
        }


def _translated_record(source: CorpusRecord, lang: str, text: str) -> CorpusRecord:
    return CorpusRecord(
        id=job_id(source.id, lang),
        region=source.region,
        language=lang,
        text=text,
        image_ref=source.image_ref,
        reward=None,
        source=source.source,
        extra={**source.extra, "source_id": source.id},
    )


def execute_translations(
    plan: TranslationPlan,
    records: Iterable[CorpusRecord],
    translators: Mapping[str, TranslatorFn],
    out_fh: IO[str],
    journal_path: str | Path,
    max_failure_rate: float = 0.0,
    jobs: int = 1,
    limit: int | None = None,
) -> TranslationSummary:
    """Run (the remainder of) a plan, appending outputs and journal entries.

    ``out_fh`` must be opened in append mode when resuming. ``limit`` caps how
    many jobs this invocation runs, which is also how tests exercise the
    resume path. The journal line for a job is written only after its output
    record, so a completed journal entry always has its record on disk.
    """
    by_id = {r.id: r for r in records}
    missing = [j.record_id for j in plan.jobs if j.record_id not in by_id]
    if missing:
        raise DataError(f"plan references unknown record ids: {sorted(set(missing))[:5]}")
    for translator_id in set(plan.assignments.values()):
        if translator_id not in translators:
            raise MissingTranslator(f"no handle provided for translator {translator_id!r}")

    summary = TranslationSummary(planned=len(plan.jobs))
    done = read_journal(journal_path)
    pending = [j for j in plan.jobs if j.id not in done]
    summary.completed_before = len(plan.jobs) - len(pending)
    if limit is not None:
        pending = pending[:limit]

    def run_job(job: TranslationJob) -> str:
        translate = translators[job.translator_id]
        return str(translate(job.id, by_id[job.record_id].text, job.target_lang))

    outcomes = bounded_map(run_job, pending, jobs)

    with open(journal_path, "a", encoding="utf-8") as journal:
        for job, (ok, value) in zip(pending, outcomes):
            if not ok:
                summary.failures.append((job.id, str(value)))
                continue
            append_jsonl(
                _translated_record(by_id[job.record_id], job.target_lang, value), out_fh
            )
            out_fh.flush()
            journal.write(json.dumps({"job_id": job.id}) + "\n")
            journal.flush()
            summary.translated += 1

    if pending and len(summary.failures) / len(pending) > max_failure_rate:
        raise TranslationError(
            f"{len(summary.failures)} of {len(pending)} jobs failed "
            f"(cap {max_failure_rate:.0%})",
            summary.failures,
        )
    return summary


def translate_corpus(
    records: Sequence[CorpusRecord],
    targets: Sequence[str],
    assignments: Mapping[str, str],
    translators: Mapping[str, TranslatorFn],
    out_path: str | Path,
    journal_path: str | Path,
    max_failure_rate: float = 0.0,
    jobs: int = 1,
    limit: int | None = None,
) -> TranslationSummary:
    """Plan + execute against files, appending so reruns resume."""
    plan = plan_translations(records, targets, assignments)
    with open(out_path, "a", encoding="utf-8") as out_fh:
        return execute_translations(
            plan,
            records,
            translators,
            out_fh,
            journal_path,
            max_failure_rate=max_failure_rate,
            jobs=jobs,
            limit=limit,
        )
