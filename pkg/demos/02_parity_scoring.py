"""Score candidate models on global-regional parity and pick a winner.

GRP is a weighted sum: alpha * Q_global + (1 - alpha) * Q_regional, where
each Q is the plain average of that scope's benchmark scores. The candidate
with the highest GRP wins; ties keep the earliest entry.
"""

from ggez import GrpConfig, QualitySet, aggregate_quality, best_parity_select, compute_grp

cfg = GrpConfig(alpha=0.43, rounding=1)

# A base model and several merged variants (global avg, regional avg pairs
# from a benchmark run; the 10% / 50% etc. label the merge weight used).
candidates = [
    ("base",        63.5, 56.3),
    ("merged 5%",   64.3, 63.7),
    ("merged 10%",  64.4, 63.8),
    ("merged 50%",  56.7, 57.8),
    ("merged 70%",  56.3, 56.0),
    ("fine-tuned",  42.1, 42.2),
]

print(f"alpha = {cfg.alpha} (weight on GLOBAL quality)")
print(f"{'candidate':<12} {'global':>8} {'regional':>9} {'GRP':>7}")
for name, q_global, q_regional in candidates:
    grp = compute_grp(q_global, q_regional, cfg)
    print(f"{name:<12} {q_global:>8.1f} {q_regional:>9.1f} {cfg.round(grp):>7}")

winner, grp = best_parity_select(candidates, cfg)
print(f"\nbest parity: {winner} (GRP {cfg.round(grp)})")

# Quality aggregates come from named metric sets; scales must match within
# a scope, and the aggregate is the unweighted mean.
regional = QualitySet.from_mapping(
    "regional", {"region-vqa": 61.7, "cuisine": 60.2, "culture-vqa": 69.5}
)
print(f"\nexample regional aggregate: {aggregate_quality(regional):.1f}")

# Moving alpha shifts the winner when candidates trade global capability
# against regional capability.
trade_off = [
    ("global-leaning",   80.0, 40.0),
    ("balanced",         62.0, 61.0),
    ("regional-leaning", 40.0, 80.0),
]
print()
for alpha in (0.0, 0.43, 0.65, 1.0):
    w, _ = best_parity_select(trade_off, GrpConfig(alpha))
    print(f"alpha={alpha:<5} -> {w}")
