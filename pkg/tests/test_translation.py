import json

import pytest

from ggez.errors import DataError, MissingTranslator, TranslationError
from ggez.translation import (
    execute_translations,
    plan_translations,
    read_journal,
    translate_corpus,
)
from ggez.workers import SubprocessTranslator

from conftest import make_record


def identity_translator(job_id, text, lang):
    return text


def upper_translator(job_id, text, lang):
    return text.upper()


class TestPlanTranslations:
    def test_cardinality_two_by_two(self):
        records = [make_record(1), make_record(2)]
        plan = plan_translations(records, ["ind", "tha"], {"ind": "g", "tha": "g"})
        assert len(plan) == 4
        assert [j.id for j in plan.jobs] == [
            "rec00001#ind", "rec00001#tha", "rec00002#ind", "rec00002#tha",
        ]

    def test_per_language_routing(self):
        # Mirror the case study's split: one model family for the
        # higher-resource targets, another for the rest.
        gemma_langs = ["ind", "vie", "zsm", "fil", "zho"]
        gemini_langs = ["tha", "mya", "lao", "khm", "tam"]
        assignments = {l: "gemma-27b" for l in gemma_langs}
        assignments |= {l: "gemini-flash" for l in gemini_langs}
        plan = plan_translations(
            [make_record(1)], gemma_langs + gemini_langs, assignments
        )
        routed = {j.target_lang: j.translator_id for j in plan.jobs}
        for lang in gemma_langs:
            assert routed[lang] == "gemma-27b"
        for lang in gemini_langs:
            assert routed[lang] == "gemini-flash"

    def test_empty_record_set_gives_empty_plan(self):
        plan = plan_translations([], ["tha"], {"tha": "g"})
        assert len(plan) == 0

    def test_missing_translator_rejected(self):
        with pytest.raises(MissingTranslator, match="lao"):
            plan_translations([make_record(1)], ["tha", "lao"], {"tha": "g"})

    def test_empty_targets_rejected(self):
        with pytest.raises(DataError):
            plan_translations([make_record(1)], [], {})

    def test_duplicate_targets_rejected(self):
        with pytest.raises(DataError):
            plan_translations([make_record(1)], ["tha", "tha"], {"tha": "g"})


class TestExecuteTranslations:
    def run(self, tmp_path, records, targets, translator, limit=None, name="out"):
        out = tmp_path / f"{name}.jsonl"
        journal = tmp_path / f"{name}.journal"
        assignments = {lang: "stub" for lang in targets}
        summary = translate_corpus(
            records, targets, assignments, {"stub": translator},
            out, journal, limit=limit,
        )
        lines = [json.loads(l) for l in out.read_text().splitlines()] if out.exists() else []
        return summary, lines, out, journal

    def test_identity_stub_relabels_language(self, tmp_path):
        records = [make_record(1, language="eng", text="hello world")]
        summary, lines, _, _ = self.run(tmp_path, records, ["tha"], identity_translator)
        assert summary.translated == 1
        (row,) = lines
        assert row["id"] == "rec00001#tha"
        assert row["language"] == "tha"
        assert row["text"] == "hello world"
        assert row["source_id"] == "rec00001"

    def test_uppercase_stub(self, tmp_path):
        records = [make_record(1, text="abc")]
        _, lines, _, _ = self.run(tmp_path, records, ["tha"], upper_translator)
        assert lines[0]["text"] == "ABC"
        assert lines[0]["language"] == "tha"

    def test_output_count_is_records_times_targets(self, tmp_path):
        records = [make_record(i) for i in range(7)]
        summary, lines, _, _ = self.run(
            tmp_path, records, ["ind", "tha", "vie"], identity_translator
        )
        assert summary.translated == len(lines) == 7 * 3

    def test_resume_after_interruption_matches_full_run(self, tmp_path):
        records = [make_record(i, text=f"text {i}") for i in range(10)]
        targets = ["ind", "tha"]

        # Uninterrupted reference run.
        _, full_lines, full_out, _ = self.run(
            tmp_path, records, targets, upper_translator, name="full"
        )

        # Interrupted at 50%, then resumed.
        out = tmp_path / "resumed.jsonl"
        journal = tmp_path / "resumed.journal"
        assignments = {lang: "stub" for lang in targets}
        first = translate_corpus(
            records, targets, assignments, {"stub": upper_translator},
            out, journal, limit=10,
        )
        assert first.translated == 10
        assert len(read_journal(journal)) == 10

        second = translate_corpus(
            records, targets, assignments, {"stub": upper_translator},
            out, journal,
        )
        assert second.completed_before == 10
        assert second.translated == 10

        resumed_lines = [json.loads(l) for l in out.read_text().splitlines()]
        assert resumed_lines == full_lines
        assert out.read_bytes() == full_out.read_bytes()

    def test_resume_is_noop_when_complete(self, tmp_path):
        records = [make_record(i) for i in range(3)]
        out = tmp_path / "done.jsonl"
        journal = tmp_path / "done.journal"
        translate_corpus(records, ["tha"], {"tha": "s"}, {"s": identity_translator},
                         out, journal)
        before = out.read_bytes()
        again = translate_corpus(records, ["tha"], {"tha": "s"}, {"s": identity_translator},
                                 out, journal)
        assert again.translated == 0
        assert again.completed_before == 3
        assert out.read_bytes() == before

    def test_failure_above_cap_raises(self, tmp_path):
        from ggez.errors import ExternalToolError

        def flaky(job_id, text, lang):
            if "3" in job_id:
                raise ExternalToolError("boom")
            return text

        records = [make_record(i) for i in range(6)]
        with pytest.raises(TranslationError):
            self.run(tmp_path, records, ["tha"], flaky)

    def test_failure_below_cap_collected(self, tmp_path):
        from ggez.errors import ExternalToolError

        def flaky(job_id, text, lang):
            if "3" in job_id:
                raise ExternalToolError("boom")
            return text

        records = [make_record(i) for i in range(6)]
        out = tmp_path / "capped.jsonl"
        summary = translate_corpus(
            records, ["tha"], {"tha": "s"}, {"s": flaky},
            out, tmp_path / "capped.journal", max_failure_rate=0.5,
        )
        assert summary.translated == 5
        assert [j for j, _ in summary.failures] == ["rec00003#tha"]

    def test_failed_jobs_not_journaled_and_retried(self, tmp_path):
        from ggez.errors import ExternalToolError

        attempts = {"n": 0}

        def fail_once(job_id, text, lang):
            if job_id == "rec00002#tha" and attempts["n"] == 0:
                attempts["n"] += 1
                raise ExternalToolError("transient")
            return text

        records = [make_record(1), make_record(2), make_record(3)]
        out = tmp_path / "retry.jsonl"
        journal = tmp_path / "retry.journal"
        assignments = {"tha": "s"}
        with pytest.raises(TranslationError):
            translate_corpus(records, ["tha"], assignments, {"s": fail_once},
                             out, journal)
        assert read_journal(journal) == {"rec00001#tha", "rec00003#tha"}

        summary = translate_corpus(records, ["tha"], assignments, {"s": fail_once},
                                   out, journal)
        assert summary.translated == 1
        ids = [json.loads(l)["id"] for l in out.read_text().splitlines()]
        assert sorted(ids) == ["rec00001#tha", "rec00002#tha", "rec00003#tha"]

    def test_missing_handle_rejected(self, tmp_path):
        records = [make_record(1)]
        plan = plan_translations(records, ["tha"], {"tha": "ghost"})
        with open(tmp_path / "o.jsonl", "a", encoding="utf-8") as fh:
            with pytest.raises(MissingTranslator):
                execute_translations(plan, records, {}, fh, tmp_path / "j.journal")

    def test_subprocess_translator(self, tmp_path, translator_cmd):
        records = [make_record(1, text="hello"), make_record(2, text="sawasdee")]
        with SubprocessTranslator(translator_cmd("tagged")) as stub:
            _, lines, _, _ = self.run(tmp_path, records, ["tha", "ind"], stub)
        texts = {row["id"]: row["text"] for row in lines}
        assert texts["rec00001#tha"] == "tha:hello"
        assert texts["rec00002#ind"] == "ind:sawasdee"
