"""Merge a regional fine-tune back into its base checkpoint, then sweep.

Checkpoints are single-file tensor containers (the common safetensors
layout), so fine-tunes exported by standard tooling load directly. Merging
is per-element linear interpolation; a beta sweep scores each grid point
and picks the best-parity weight.
"""

import tempfile
from pathlib import Path

import numpy as np

from ggez import (
    Checkpoint,
    GrpConfig,
    LookupEvaluator,
    build_merge_report,
    load_checkpoint,
    merge_linear,
    save_checkpoint,
    sweep_beta,
)

rng = np.random.default_rng(42)
workdir = Path(tempfile.mkdtemp(prefix="ggez-demo-"))

# A tiny "model": two trainable tensors plus a frozen submodule that the
# fine-tune never touched (byte-identical in both checkpoints).
frozen = rng.standard_normal(4).astype(np.float32)
base = Checkpoint.from_arrays(
    {
        "encoder.weight": rng.standard_normal((4, 4)).astype(np.float32),
        "head.bias": rng.standard_normal(4).astype(np.float16),
        "vae.kernel": frozen,
    },
    metadata={"model": "demo-base"},
)
tuned = Checkpoint.from_arrays(
    {
        "encoder.weight": rng.standard_normal((4, 4)).astype(np.float32),
        "head.bias": rng.standard_normal(4).astype(np.float16),
        "vae.kernel": frozen.copy(),
    },
    metadata={"model": "demo-regional"},
)

base_path = workdir / "base.safetensors"
tuned_path = workdir / "regional.safetensors"
save_checkpoint(base, base_path)
save_checkpoint(tuned, tuned_path)
print(f"wrote {base_path.name} and {tuned_path.name} under {workdir}")

for beta in (0.0, 0.25, 0.5, 1.0):
    merged = merge_linear(base, tuned, beta)
    report = build_merge_report(base, merged)
    print(
        f"beta={beta:<5} tensors={report.tensor_count} "
        f"max|delta vs base|={report.max_abs_delta:.4f}"
    )

merged = merge_linear(base, tuned, 0.25, global_label="base", regional_label="regional")
assert merged["vae.kernel"].data == frozen.tobytes()  # frozen stays frozen
out_path = workdir / "merged_25.safetensors"
save_checkpoint(merged, out_path)
print(f"\nmerged checkpoint metadata: {load_checkpoint(out_path).metadata}")

# Sweep: with precomputed metrics per beta (from prior evaluation runs)
# no model inference is needed to pick beta*.
metrics_by_beta = {
    0.05: (64.3, 63.7),
    0.10: (64.4, 63.8),
    0.50: (56.7, 57.8),
    0.70: (56.3, 56.0),
    1.00: (42.1, 42.2),
}
cfg = GrpConfig(alpha=0.43, rounding=1)
result = sweep_beta(None, None, list(metrics_by_beta), LookupEvaluator(metrics_by_beta), cfg)
print("\nbeta sweep:")
print(f"{'beta':>6} {'global':>8} {'regional':>9} {'GRP':>7}")
for row in result.rows:
    print(f"{row.beta:>6} {row.q_global:>8.1f} {row.q_regional:>9.1f} {cfg.round(row.grp):>7}")
print(f"beta* = {result.beta_star} with GRP {cfg.round(result.grp_star)}")
