"""Curate a fine-tuning mix: regional filter, reward threshold, translation.

The pipeline is: score every record with a reward model, keep in-region
records at or above the threshold, fan the keepers out to per-language
translators, then sample the final mix. Scorers and translators are
external workers in production; here they are in-process stubs.
"""

import tempfile
from pathlib import Path

from ggez import (
    CorpusRecord,
    FilterConfig,
    RegionPartition,
    build_filtered_set,
    build_sft_mix,
    plan_translations,
    read_jsonl,
    score_rewards,
    translate_corpus,
)

workdir = Path(tempfile.mkdtemp(prefix="ggez-demo-"))

partition = RegionPartition.from_mapping(
    {
        "SEA": ["SG", "ID", "MY", "BN", "TH", "PH", "VN", "MM", "KH", "LA", "TL"],
        "EA": ["JP", "KR", "CN"],
    },
    target="SEA",
)

corpus = [
    CorpusRecord("c1", "ID", "eng", "A rich description of a night market.", source="crawl"),
    CorpusRecord("c2", "TH", "eng", "Short.", source="crawl"),
    CorpusRecord("c3", "JP", "eng", "Great content, wrong region for this run.", source="crawl"),
    CorpusRecord("c4", "VN", "eng", "Another detailed, culturally grounded caption.", source="crawl"),
    CorpusRecord("c5", "SEA", "eng", "Tagged at region level rather than country.", source="curated"),
]

# Stub reward model: favors longer text. Real runs attach a worker process.
scored, failures = score_rewards(corpus, lambda _id, text, _img: float(len(text)) / 10)
print("rewards:", {r.id: round(r.reward, 1) for r in scored})

cfg = FilterConfig(target_region="SEA", tau=3.0)
kept, summary = build_filtered_set(scored, cfg, partition)
print(f"kept {summary.kept}/{summary.total}: {[r.id for r in kept]}")
print(f"  rejected by region: {summary.rejected_region}, by reward: {summary.rejected_reward}")

# Translation plan: every kept record crossed with every target language,
# each language routed to its assigned translator.
targets = ["tha", "ind"]
assignments = {"tha": "demo-mt", "ind": "demo-mt"}
plan = plan_translations(kept, targets, assignments)
print(f"\nplanned {len(plan)} translation jobs "
      f"({len(kept)} records x {len(targets)} languages)")

out = workdir / "translated.jsonl"
summary = translate_corpus(
    kept, targets, assignments,
    {"demo-mt": lambda job_id, text, lang: f"[{lang}] {text}"},
    out, workdir / "translated.journal",
)
print(f"translated {summary.translated} records -> {out}")

mixed, manifest = build_sft_mix(
    {"filtered": kept, "translation": list(read_jsonl(out))},
    {"filtered": 1.0, "translation": 0.5},
    seed=7,
)
print(f"\nfinal mix: {manifest.total} records")
print("per source:", manifest.per_source)
print("per language:", manifest.per_language)
