"""Linear checkpoint interpolation and grid sweeps over the merge weight.

``merged = beta * regional + (1 - beta) * global`` per tensor element.
Accumulation precision per source dtype:

* f16 / bf16: float32 arithmetic, rounded once to the source dtype, so the
  result is exactly the half-precision rounding of the f32 reference
  (within half a ULP even under cancellation);
* f32: float64 arithmetic, rounded once back, which matches a plain Python
  scalar loop bit-for-bit and makes the beta endpoints byte-exact;
* f64: float64 arithmetic.

Tensors whose bytes are identical in both inputs are copied through
untouched (frozen submodules stay frozen, self-merge is an identity for
every dtype); integer tensors are taken verbatim from the global checkpoint.
"""

from __future__ import annotations

import json
import math
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import numpy as np

from .checkpoint import (
    FLOAT_DTYPES,
    Checkpoint,
    TensorRecord,
    load_checkpoint,
    numpy_dtype,
    save_checkpoint,
)
from .errors import (
    ConfigError,
    EvaluatorError,
    IncompatibleCheckpoints,
    InvalidBeta,
    InvalidGrid,
)
from .parity import GrpConfig, best_parity_select, compute_grp


@dataclass(frozen=True)
class MergeReport:
    """Diagnostics for one merge: sizes, dtype mix, and drift from global."""

    beta: float
    tensor_count: int
    dtype_counts: dict[str, int]
    max_abs_delta: float
    integer_copied: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "tensor_count": self.tensor_count,
            "dtype_counts": dict(self.dtype_counts),
            "max_abs_delta": self.max_abs_delta,
            "integer_copied": list(self.integer_copied),
        }


def _check_compatible(global_ckpt: Checkpoint, regional_ckpt: Checkpoint) -> None:
    g_names, r_names = set(global_ckpt.tensors), set(regional_ckpt.tensors)
    if g_names != r_names:
        only_g = sorted(g_names - r_names)
        only_r = sorted(r_names - g_names)
        raise IncompatibleCheckpoints(
            f"tensor name sets differ; only in global: {only_g}, only in regional: {only_r}"
        )
    for name in global_ckpt.tensors:
        g, r = global_ckpt[name], regional_ckpt[name]
        if g.shape != r.shape:
            raise IncompatibleCheckpoints(
                f"tensor {name!r}: shape {g.shape} vs {r.shape}"
            )
        if g.dtype != r.dtype:
            raise IncompatibleCheckpoints(
                f"tensor {name!r}: dtype {g.dtype} vs {r.dtype}"
            )


def merge_linear(
    global_ckpt: Checkpoint,
    regional_ckpt: Checkpoint,
    beta: float,
    global_label: str = "global",
    regional_label: str = "regional",
) -> Checkpoint:
    """Interpolate every tensor; output order follows the global checkpoint."""
    if not (isinstance(beta, (int, float)) and math.isfinite(beta) and 0.0 <= beta <= 1.0):
        raise InvalidBeta(f"beta must lie in [0, 1], got {beta!r}")
    _check_compatible(global_ckpt, regional_ckpt)

    w_regional = float(beta)
    w_global = 1.0 - w_regional
    integer_copied: list[str] = []
    merged = Checkpoint(
        metadata={
            **global_ckpt.metadata,
            "merge.beta": repr(float(beta)),
            "merge.global": global_label,
            "merge.regional": regional_label,
        }
    )
    for name in global_ckpt.tensors:
        g, r = global_ckpt[name], regional_ckpt[name]
        if g.data == r.data:
            merged.add(g)
            continue
        if g.dtype not in FLOAT_DTYPES:
            integer_copied.append(name)
            merged.add(g)
            continue
        acc = np.float32 if g.dtype in ("F16", "BF16") else np.float64
        g_acc = g.to_numpy().astype(acc)
        r_acc = r.to_numpy().astype(acc)
        interp = acc(w_regional) * r_acc + acc(w_global) * g_acc
        out = interp.astype(numpy_dtype(g.dtype))
        merged.add(TensorRecord(name=name, dtype=g.dtype, shape=g.shape, data=out.tobytes()))
    if integer_copied:
        merged.metadata["merge.integer_copied"] = ",".join(integer_copied)
    return merged


def build_merge_report(global_ckpt: Checkpoint, merged: Checkpoint) -> MergeReport:
    """Summarize a merged checkpoint against its global source."""
    dtype_counts: dict[str, int] = {}
    max_delta = 0.0
    for name, record in merged.tensors.items():
        dtype_counts[record.dtype] = dtype_counts.get(record.dtype, 0) + 1
        if record.dtype in FLOAT_DTYPES and name in global_ckpt.tensors:
            delta = np.abs(
                record.to_numpy().astype(np.float64)
                - global_ckpt[name].to_numpy().astype(np.float64)
            )
            if delta.size:
                max_delta = max(max_delta, float(delta.max()))
    integer_copied = tuple(
        n for n in merged.metadata.get("merge.integer_copied", "").split(",") if n
    )
    return MergeReport(
        beta=float(merged.metadata.get("merge.beta", "nan")),
        tensor_count=len(merged),
        dtype_counts=dtype_counts,
        max_abs_delta=max_delta,
        integer_copied=integer_copied,
    )


class Evaluator(Protocol):
    """Yields (q_global, q_regional) for a grid point."""

    needs_checkpoint: bool

    def evaluate(self, beta: float, checkpoint_path: Path | None) -> tuple[float, float]:
        ...


class LookupEvaluator:
    """Precomputed metrics keyed by beta; lets sweeps run without any GPU."""

    needs_checkpoint = False

    def __init__(self, table: Mapping[float, tuple[float, float]]):
        self._table = [(float(b), float(qg), float(qr)) for b, (qg, qr) in table.items()]

    @classmethod
    def from_csv(cls, path: str | Path) -> "LookupEvaluator":
        """CSV with a ``beta,q_global,q_regional`` header row."""
        import csv

        table: dict[float, tuple[float, float]] = {}
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            required = {"beta", "q_global", "q_regional"}
            if reader.fieldnames is None or not required.issubset(reader.fieldnames):
                raise InvalidGrid(
                    f"{path}: sweep metrics CSV needs columns {sorted(required)}"
                )
            for row in reader:
                table[float(row["beta"])] = (
                    float(row["q_global"]),
                    float(row["q_regional"]),
                )
        return cls(table)

    def evaluate(self, beta: float, checkpoint_path: Path | None = None) -> tuple[float, float]:
        for b, qg, qr in self._table:
            if math.isclose(b, beta, rel_tol=0.0, abs_tol=1e-9):
                return qg, qr
        raise EvaluatorError(beta, "no precomputed metrics for this beta")


class CommandEvaluator:
    """Runs an external command with the merged checkpoint path appended.

    The command must print ``{"q_global": <real>, "q_regional": <real>}`` to
    stdout and exit zero.
    """

    needs_checkpoint = True

    def __init__(self, argv: Sequence[str], timeout: float | None = None):
        if not argv:
            raise ConfigError("evaluator command must be non-empty")
        self.argv = list(argv)
        self.timeout = timeout

    def evaluate(self, beta: float, checkpoint_path: Path | None) -> tuple[float, float]:
        if checkpoint_path is None:
            raise EvaluatorError(beta, "command evaluator needs a merged checkpoint path")
        try:
            proc = subprocess.run(
                [*self.argv, str(checkpoint_path)],
                capture_output=True,
                text=True,
                timeout=self.timeout,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise EvaluatorError(beta, str(exc)) from exc
        if proc.returncode != 0:
            raise EvaluatorError(
                beta, f"exit code {proc.returncode}: {proc.stderr.strip()[:500]}"
            )
        try:
            payload = json.loads(proc.stdout)
            qg, qr = float(payload["q_global"]), float(payload["q_regional"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise EvaluatorError(beta, f"bad evaluator output: {exc}") from exc
        if not (math.isfinite(qg) and math.isfinite(qr)):
            raise EvaluatorError(beta, f"non-finite metrics ({qg!r}, {qr!r})")
        return qg, qr


@dataclass(frozen=True)
class SweepRow:
    beta: float
    q_global: float
    q_regional: float
    grp: float


@dataclass(frozen=True)
class SweepResult:
    beta_star: float
    grp_star: float
    rows: tuple[SweepRow, ...]

    def to_dict(self, cfg: GrpConfig | None = None) -> dict:
        payload = {
            "beta_star": self.beta_star,
            "grp_star": self.grp_star,
            "rows": [
                {
                    "beta": r.beta,
                    "q_global": r.q_global,
                    "q_regional": r.q_regional,
                    "grp": r.grp,
                }
                for r in self.rows
            ],
        }
        if cfg is not None:
            payload["grp_star_rounded"] = cfg.round(self.grp_star)
        return payload

    def to_csv(self) -> str:
        lines = ["beta,q_global,q_regional,grp"]
        lines += [f"{r.beta},{r.q_global},{r.q_regional},{r.grp}" for r in self.rows]
        return "\n".join(lines) + "\n"


def validate_grid(grid: Sequence[float]) -> list[float]:
    if not grid:
        raise InvalidGrid("beta grid is empty")
    values = [float(b) for b in grid]
    problems = [
        f"beta {b!r} outside [0, 1]"
        for b in values
        if not (math.isfinite(b) and 0.0 <= b <= 1.0)
    ]
    seen: set[float] = set()
    for b in values:
        if b in seen:
            problems.append(f"duplicate beta {b!r}")
        seen.add(b)
    if problems:
        raise InvalidGrid("; ".join(problems))
    return values


def sweep_beta(
    global_ckpt: Checkpoint | None,
    regional_ckpt: Checkpoint | None,
    grid: Sequence[float],
    evaluator: Evaluator,
    cfg: GrpConfig,
    workdir: str | Path | None = None,
) -> SweepResult:
    """Evaluate every grid point and select the best-parity beta.

    With a :class:`LookupEvaluator` no checkpoints are touched; with a
    :class:`CommandEvaluator` each grid point is merged, saved under
    ``workdir`` (a temp dir by default), and handed to the command.
    """
    values = validate_grid(grid)
    cleanup = None
    if evaluator.needs_checkpoint:
        if global_ckpt is None or regional_ckpt is None:
            raise ConfigError("command-mode sweeps need both source checkpoints")
        if workdir is None:
            cleanup = tempfile.TemporaryDirectory(prefix="ggez-sweep-")
            workdir = cleanup.name
        workdir = Path(workdir)
        workdir.mkdir(parents=True, exist_ok=True)

    rows: list[SweepRow] = []
    try:
        for i, beta in enumerate(values):
            if evaluator.needs_checkpoint:
                merged = merge_linear(global_ckpt, regional_ckpt, beta)
                path = Path(workdir) / f"merged_{i:03d}_beta_{beta:g}.safetensors"
                save_checkpoint(merged, path)
                q_global, q_regional = evaluator.evaluate(beta, path)
            else:
                q_global, q_regional = evaluator.evaluate(beta, None)
            rows.append(
                SweepRow(beta, q_global, q_regional, compute_grp(q_global, q_regional, cfg))
            )
    finally:
        if cleanup is not None:
            cleanup.cleanup()

    beta_star, grp_star = best_parity_select(
        [(r.beta, r.q_global, r.q_regional) for r in rows], cfg
    )
    return SweepResult(beta_star=beta_star, grp_star=grp_star, rows=tuple(rows))


def merge_files(
    global_path: str | Path,
    regional_path: str | Path,
    beta: float,
    out_path: str | Path,
) -> MergeReport:
    """File-level convenience: load, merge, save, report."""
    global_ckpt = load_checkpoint(global_path)
    regional_ckpt = load_checkpoint(regional_path)
    merged = merge_linear(
        global_ckpt,
        regional_ckpt,
        beta,
        global_label=str(global_path),
        regional_label=str(regional_path),
    )
    save_checkpoint(merged, out_path)
    return build_merge_report(global_ckpt, merged)
