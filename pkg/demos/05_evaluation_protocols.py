"""Evaluation-side protocols: normalization, agreement, ranks, breakdowns.

Shows the three human-score protocols (min-max normalization with
cross-category averaging, pairwise preference agreement for reward models,
within-item average rank) and the benchmark breakdown report.
"""

import random

from ggez import (
    GrpConfig,
    HumanItemScores,
    MetricRow,
    average_rank,
    build_breakdown,
    minmax_normalize,
    pairwise_agreement,
)

rng = random.Random(2024)

# --- min-max normalization across annotation categories ---------------------
# Two categories on different scales; each is normalized to [0, 1] and the
# per-item mean becomes the single human score. A constant category carries
# no signal and maps to a neutral 0.5.
categories = {
    "correctness": [1, 2, 3, 2, 1],
    "naturalness": [2.0, 2.0, 2.0, 2.0, 2.0],
}
human = minmax_normalize(categories)
print("per-item human scores:", [round(h, 2) for h in human])

# --- pairwise preference agreement -------------------------------------------
# Sample ordered pairs the annotators ranked strictly; count how often the
# reward model preserves the ordering (ties count against it).
items = 60
human_scores = [rng.random() for _ in range(items)]
faithful = [h + rng.gauss(0, 0.05) for h in human_scores]   # tracks humans
noisy = [rng.random() for _ in range(items)]                # ignores humans

for name, rm in [("faithful-rm", faithful), ("random-rm", noisy)]:
    report = pairwise_agreement(human_scores, rm, n_pairs=500, seed=7, reward_model=name)
    print(f"{name:<12} agreement over {report.pair_count} pairs: {report.rate:.3f}")

# --- average rank (higher is better) -----------------------------------------
# Within each item the best-scored model gets the highest rank number; ties
# share the mean of their positions. Reported per model, averaged over items.
models = ["base", "merged", "fine-tuned"]
likert_items = [
    HumanItemScores(f"q{i}", {m: float(rng.randint(1, 3)) for m in models})
    for i in range(40)
]
ranks = average_rank(likert_items, models)
print("\naverage ranks:", {m: round(v, 2) for m, v in ranks.items()})
total = sum(ranks.values())
print(f"rank mass per item: {total:.2f} (always k(k+1)/2 = 6.00 for 3 models)")

# --- benchmark breakdown -------------------------------------------------------
rows = [
    MetricRow("base",   "wide-bench",   "global",   63.5),
    MetricRow("base",   "region-bench", "regional", 56.3),
    MetricRow("merged", "wide-bench",   "global",   64.4, beta=0.10),
    MetricRow("merged", "region-bench", "regional", 63.8, beta=0.10),
]
report = build_breakdown(rows, GrpConfig(alpha=0.43, rounding=1))
print("\n" + report.to_text())
print("plot data (GRP vs beta):")
print(report.plot_csv())
