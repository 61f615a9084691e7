"""``ggez`` command line: the pipeline as reproducible subcommands.

Every subcommand prints one machine-readable JSON summary to stdout (sorted
keys, no timestamps, so reruns are byte-identical) and writes any human
report or data artifact to files, atomically. Exit codes: 0 success,
2 configuration error, 3 data error, 4 external-tool failure.
"""

from __future__ import annotations

import functools
import math
import os
import sys
from pathlib import Path

import click

from . import __version__
from .corpus import read_jsonl, write_jsonl
from .errors import (
    ConfigError,
    DataError,
    ExternalToolError,
    GgezError,
    IoError,
)
from .filtering import FilterConfig, FilterSummary, iter_filtered, score_rewards
from .harness import (
    average_rank,
    build_breakdown,
    minmax_normalize,
    pairwise_agreement,
    read_human_scores,
    read_metric_rows,
)
from .merge import (
    CommandEvaluator,
    LookupEvaluator,
    merge_files,
    sweep_beta,
)
from .mixing import build_sft_mix
from .parity import GlobalizationTable, GrpConfig, compute_grp, derive_alpha
from .regions import RegionPartition, sea_partition
from .translation import translate_corpus
from .util import atomic_write_text, json_dumps
from .workers import Multiplexed, SubprocessScorer, SubprocessTranslator

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_EXTERNAL = 4


def _load_config_file(path: str) -> dict[str, str]:
    """Parse a ``key = value`` config file; '#' starts a comment."""
    values: dict[str, str] = {}
    problems: list[str] = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            continue
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    if problems:
        raise ConfigError(f"invalid config file {path}", problems)
    return values


class Settings:
    """Effective configuration: config-file values overridden by flags."""

    def __init__(self, config_path: str | None):
        self.values = _load_config_file(config_path) if config_path else {}

    def get(self, key: str, flag_value, cast=str, default=None):
        if flag_value is not None:
            return flag_value
        if key in self.values:
            try:
                return cast(self.values[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from exc
        return default

    def alpha(self, flag_value: float | None, default: float = 0.43) -> float:
        """Resolve the global weight: flag, fixed config value, or a
        (kof, region, year) config triple derived from the index table."""
        if flag_value is not None:
            return flag_value
        if "alpha" in self.values:
            return self.get("alpha", None, float)
        if "region" in self.values and "year" in self.values:
            kof = self.values.get("kof")
            table = (
                GlobalizationTable.from_csv(kof) if kof else GlobalizationTable.bundled()
            )
            return derive_alpha(
                table, self.values["region"], self.get("year", None, int)
            )
        return default


def _fail(code: int, category: str, exc: GgezError) -> None:
    payload = {"error": {"category": category, "message": str(exc)}}
    problems = getattr(exc, "problems", None)
    if problems and problems != [str(exc)]:
        payload["error"]["problems"] = problems
    failures = getattr(exc, "failures", None)
    if failures:
        payload["error"]["failures"] = [list(f) for f in failures[:20]]
    click.echo(json_dumps(payload), err=True)
    sys.exit(code)


def command_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            _fail(EXIT_CONFIG, "config", exc)
        except ExternalToolError as exc:
            _fail(EXIT_EXTERNAL, "external-tool", exc)
        except (DataError, IoError) as exc:
            _fail(EXIT_DATA, "data", exc)

    return wrapper


def _require_files(pairs: list[tuple[str, str | None]]) -> None:
    problems = [
        f"{label}: file not found: {path}"
        for label, path in pairs
        if path is not None and not Path(path).is_file()
    ]
    if problems:
        raise ConfigError("missing input file(s)", problems)


def _emit(payload: dict) -> None:
    click.echo(json_dumps(payload))


def _load_partition(path: str | None) -> RegionPartition:
    if path is None:
        return sea_partition()
    return RegionPartition.from_json(path)


def _parse_grid(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad grid value: {exc}") from exc


def _jobs_option(settings: Settings, jobs: int | None) -> int:
    env = os.environ.get("GGEZ_JOBS")
    if jobs is None and env is not None:
        try:
            jobs = int(env)
        except ValueError as exc:
            raise ConfigError(f"GGEZ_JOBS must be an integer, got {env!r}") from exc
    value = settings.get("jobs", jobs, int, 1)
    if value < 1:
        raise ConfigError(f"jobs must be >= 1, got {value}")
    return value


@click.group()
@click.version_option(__version__, prog_name="ggez")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Key=value config file; flags override its values.")
@click.pass_context
@command_errors
def main(ctx: click.Context, config_path: str | None) -> None:
    """Regional adaptation toolkit: filter, merge, sweep, and score."""
    if config_path is not None and not Path(config_path).is_file():
        raise ConfigError(f"config file not found: {config_path}")
    ctx.obj = Settings(config_path)


@main.command("alpha")
@click.option("--kof", "kof_path", type=click.Path(), default=None,
              help="Globalization-index CSV (defaults to the bundled table).")
@click.option("--region", default=None, help="Region label, e.g. SEA.")
@click.option("--year", type=int, default=None)
@click.option("--round", "rounding", type=int, default=2, show_default=True,
              help="Decimals for the conventional rounded form.")
@click.option("--dry-run", is_flag=True)
@click.pass_obj
@command_errors
def cmd_alpha(settings: Settings, kof_path, region, year, rounding, dry_run) -> None:
    """Derive the globalization factor for a region-year."""
    kof_path = settings.get("kof", kof_path)
    region = settings.get("region", region)
    year = settings.get("year", year, int)
    problems = []
    if region is None:
        problems.append("--region is required")
    if year is None:
        problems.append("--year is required")
    if kof_path is not None and not Path(kof_path).is_file():
        problems.append(f"kof CSV not found: {kof_path}")
    if problems:
        raise ConfigError("invalid alpha configuration", problems)
    if dry_run:
        _emit({"command": "alpha", "dry_run": True, "ok": True})
        return
    table = GlobalizationTable.from_csv(kof_path) if kof_path else GlobalizationTable.bundled()
    alpha = derive_alpha(table, region, year)
    _emit(
        {
            "alpha": round(alpha, 6),
            "alpha_rounded": round(alpha, rounding),
            "region": region,
            "year": year,
            "source": kof_path or "bundled",
        }
    )


@main.command("grp")
@click.option("--q-global", type=float, required=True)
@click.option("--q-regional", type=float, required=True)
@click.option("--alpha", type=float, default=None)
@click.option("--round", "rounding", type=int, default=None)
@click.option("--dry-run", is_flag=True)
@click.pass_obj
@command_errors
def cmd_grp(settings: Settings, q_global, q_regional, alpha, rounding, dry_run) -> None:
    """Score one (global, regional) quality pair."""
    cfg = GrpConfig(
        alpha=settings.alpha(alpha),
        rounding=settings.get("round", rounding, int, 1),
    )
    if dry_run:
        _emit({"command": "grp", "dry_run": True, "ok": True, "alpha": cfg.alpha})
        return
    grp = compute_grp(q_global, q_regional, cfg)
    _emit(
        {
            "alpha": cfg.alpha,
            "q_global": q_global,
            "q_regional": q_regional,
            "grp": grp,
            "grp_rounded": cfg.round(grp),
        }
    )


@main.command("merge")
@click.option("--global", "global_path", type=click.Path(), required=True,
              help="Global (base) checkpoint.")
@click.option("--regional", "regional_path", type=click.Path(), required=True,
              help="Regionally fine-tuned checkpoint.")
@click.option("--beta", type=float, required=True, help="Weight on the regional model.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--dry-run", is_flag=True)
@command_errors
def cmd_merge(global_path, regional_path, beta, out_path, dry_run) -> None:
    """Linearly interpolate two checkpoints."""
    _require_files([("--global", global_path), ("--regional", regional_path)])
    if not (math.isfinite(beta) and 0.0 <= beta <= 1.0):
        raise ConfigError(f"--beta must lie in [0, 1], got {beta!r}")
    if dry_run:
        _emit({"command": "merge", "dry_run": True, "ok": True})
        return
    report = merge_files(global_path, regional_path, beta, out_path)
    _emit({"out": str(out_path), **report.to_dict()})


@main.command("sweep")
@click.option("--metrics", "metrics_path", type=click.Path(), default=None,
              help="Lookup mode: CSV of beta,q_global,q_regional.")
@click.option("--global", "global_path", type=click.Path(), default=None)
@click.option("--regional", "regional_path", type=click.Path(), default=None)
@click.option("--evaluator", "evaluator_cmd", default=None,
              help="Command mode: evaluator invoked with the merged checkpoint path.")
@click.option("--grid", required=True, help="Comma-separated beta values in [0, 1].")
@click.option("--alpha", type=float, default=None)
@click.option("--round", "rounding", type=int, default=None)
@click.option("--workdir", type=click.Path(), default=None,
              help="Keep merged grid checkpoints here (command mode).")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Write the sweep table as CSV.")
@click.option("--dry-run", is_flag=True)
@click.pass_obj
@command_errors
def cmd_sweep(settings: Settings, metrics_path, global_path, regional_path,
              evaluator_cmd, grid, alpha, rounding, workdir, out_path, dry_run) -> None:
    """Sweep the merge weight and select the best-parity point."""
    cfg = GrpConfig(
        alpha=settings.alpha(alpha),
        rounding=settings.get("round", rounding, int, 1),
    )
    grid_values = _parse_grid(grid)
    problems = []
    lookup = metrics_path is not None
    if lookup and evaluator_cmd:
        problems.append("--metrics and --evaluator are mutually exclusive")
    if not lookup:
        if not evaluator_cmd:
            problems.append("either --metrics (lookup) or --evaluator (command) is required")
        if not global_path or not regional_path:
            problems.append("command mode needs --global and --regional checkpoints")
    if problems:
        raise ConfigError("invalid sweep configuration", problems)
    _require_files(
        [("--metrics", metrics_path), ("--global", global_path), ("--regional", regional_path)]
    )
    if dry_run:
        _emit({"command": "sweep", "dry_run": True, "ok": True, "grid": grid_values})
        return

    if lookup:
        evaluator = LookupEvaluator.from_csv(metrics_path)
        global_ckpt = regional_ckpt = None
    else:
        import shlex

        from .checkpoint import load_checkpoint

        evaluator = CommandEvaluator(shlex.split(evaluator_cmd))
        global_ckpt = load_checkpoint(global_path)
        regional_ckpt = load_checkpoint(regional_path)

    result = sweep_beta(global_ckpt, regional_ckpt, grid_values, evaluator, cfg, workdir)
    if out_path:
        atomic_write_text(out_path, result.to_csv())
    _emit(result.to_dict(cfg))


@main.command("filter")
@click.option("--in", "in_path", type=click.Path(), required=True, help="Input corpus JSONL.")
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--partition", "partition_path", type=click.Path(), default=None,
              help="Region partition JSON (defaults to the bundled SEA partition).")
@click.option("--region", default=None, help="Target region (defaults to the partition target).")
@click.option("--tau", type=float, default=None, help="Keep records with reward >= tau.")
@click.option("--scorer", "scorer_cmd", default=None,
              help="Scorer worker command (line-protocol); scores unscored records first.")
@click.option("--rescore", is_flag=True, help="Re-score records that already carry a reward.")
@click.option("--max-failure-rate", type=float, default=0.0, show_default=True)
@click.option("--jobs", type=int, default=None, help="Worker parallelism (env GGEZ_JOBS).")
@click.option("--dry-run", is_flag=True)
@click.pass_obj
@command_errors
def cmd_filter(settings: Settings, in_path, out_path, partition_path, region, tau,
               scorer_cmd, rescore, max_failure_rate, jobs, dry_run) -> None:
    """Keep in-region records whose reward clears the threshold."""
    partition_path = settings.get("partition", partition_path)
    tau = settings.get("tau", tau, float)
    jobs = _jobs_option(settings, jobs)
    problems = []
    if tau is None:
        problems.append("--tau is required")
    elif not math.isfinite(tau):
        problems.append(f"--tau must be finite, got {tau!r}")
    if not Path(in_path).is_file():
        problems.append(f"input corpus not found: {in_path}")
    if partition_path is not None and not Path(partition_path).is_file():
        problems.append(f"partition file not found: {partition_path}")
    if problems:
        raise ConfigError("invalid filter configuration", problems)
    partition = _load_partition(partition_path)
    region = region or partition.target
    cfg = FilterConfig(target_region=region, tau=tau)
    if dry_run:
        _emit({"command": "filter", "dry_run": True, "ok": True, "region": region, "tau": tau})
        return

    records = read_jsonl(in_path)
    scoring_failures: list[tuple[str, str]] = []
    if scorer_cmd:
        scorer = (
            Multiplexed([SubprocessScorer(scorer_cmd) for _ in range(jobs)])
            if jobs > 1
            else SubprocessScorer(scorer_cmd)
        )
        try:
            scored, scoring_failures = score_rewards(
                records, scorer, rescore=rescore,
                max_failure_rate=max_failure_rate, jobs=jobs,
            )
        finally:
            scorer.close()
        records = iter(scored)

    summary = FilterSummary()
    count = write_jsonl(iter_filtered(records, cfg, partition, summary), out_path)
    _emit(
        {
            "out": str(out_path),
            "written": count,
            "region": region,
            "tau": tau,
            "summary": summary.to_dict(),
            "scoring_failures": [list(f) for f in scoring_failures],
        }
    )


@main.command("translate")
@click.option("--in", "in_path", type=click.Path(), required=True, help="Source records JSONL.")
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="Translated records JSONL (appended on resume).")
@click.option("--targets", required=True, help="Comma-separated target language codes.")
@click.option("--translator", "translator_specs", multiple=True,
              help="LANG=COMMAND assignment; repeatable.")
@click.option("--default-translator", default=None,
              help="Command for every target without an explicit assignment.")
@click.option("--journal", "journal_path", type=click.Path(), default=None,
              help="Completed-job journal (default: OUT.journal).")
@click.option("--source-lang", default="eng", show_default=True)
@click.option("--max-failure-rate", type=float, default=0.0, show_default=True)
@click.option("--jobs", type=int, default=None)
@click.option("--limit", type=int, default=None, help="Run at most N jobs this invocation.")
@click.option("--dry-run", is_flag=True)
@click.pass_obj
@command_errors
def cmd_translate(settings: Settings, in_path, out_path, targets, translator_specs,
                  default_translator, journal_path, source_lang, max_failure_rate,
                  jobs, limit, dry_run) -> None:
    """Fan records out to per-language translators; resumable via journal."""
    jobs = _jobs_option(settings, jobs)
    target_langs = [t.strip() for t in targets.split(",") if t.strip()]
    problems = []
    if not target_langs:
        problems.append("--targets must name at least one language")
    if not Path(in_path).is_file():
        problems.append(f"input corpus not found: {in_path}")
    commands: dict[str, str] = {}
    for spec in translator_specs:
        lang, sep, command = spec.partition("=")
        if not sep or not lang.strip() or not command.strip():
            problems.append(f"bad --translator spec {spec!r}, expected LANG=COMMAND")
            continue
        commands[lang.strip()] = command.strip()
    for lang in target_langs:
        if lang not in commands:
            if default_translator:
                commands[lang] = default_translator
            else:
                problems.append(f"no translator assigned for {lang!r}")
    if problems:
        raise ConfigError("invalid translate configuration", problems)
    journal_path = journal_path or f"{out_path}.journal"
    if dry_run:
        _emit(
            {
                "command": "translate",
                "dry_run": True,
                "ok": True,
                "targets": target_langs,
                "journal": str(journal_path),
            }
        )
        return

    assignments = {lang: f"cmd:{commands[lang]}" for lang in target_langs}
    translators = {}
    try:
        for lang in target_langs:
            key = assignments[lang]
            if key not in translators:
                command = commands[lang]
                translators[key] = (
                    Multiplexed([SubprocessTranslator(command) for _ in range(jobs)])
                    if jobs > 1
                    else SubprocessTranslator(command)
                )
        records = list(read_jsonl(in_path))
        summary = translate_corpus(
            records, target_langs, assignments, translators, out_path, journal_path,
            max_failure_rate=max_failure_rate, jobs=jobs, limit=limit,
        )
    finally:
        for handle in translators.values():
            handle.close()
    _emit({"out": str(out_path), "journal": str(journal_path), **summary.to_dict()})


@main.command("mix")
@click.option("--filtered", "filtered_path", type=click.Path(), required=True)
@click.option("--translated", "translated_path", type=click.Path(), default=None)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--proportions", default="1.0,1.0", show_default=True,
              help="Per-pool fraction (<=1) or absolute count: FILTERED,TRANSLATED.")
@click.option("--seed", type=int, default=None)
@click.option("--with-replacement", is_flag=True)
@click.option("--dry-run", is_flag=True)
@click.pass_obj
@command_errors
def cmd_mix(settings: Settings, filtered_path, translated_path, out_path,
            proportions, seed, with_replacement, dry_run) -> None:
    """Sample the fine-tuning mix from the filtered and translated pools."""
    seed = settings.get("seed", seed, int, 0)
    _require_files([("--filtered", filtered_path), ("--translated", translated_path)])

    def parse_proportion(token: str) -> float | int:
        token = token.strip()
        try:
            return float(token) if "." in token else int(token)
        except ValueError as exc:
            raise ConfigError(f"bad proportion {token!r}: {exc}") from exc

    tokens = [t for t in proportions.split(",") if t.strip()]
    expected = 2 if translated_path else 1
    if len(tokens) != expected:
        raise ConfigError(
            f"--proportions needs {expected} value(s) for the given pools, got {len(tokens)}"
        )
    if dry_run:
        _emit({"command": "mix", "dry_run": True, "ok": True, "seed": seed})
        return

    pools = {"filtered": list(read_jsonl(filtered_path))}
    props: dict[str, float | int] = {"filtered": parse_proportion(tokens[0])}
    if translated_path:
        pools["translation"] = list(read_jsonl(translated_path))
        props["translation"] = parse_proportion(tokens[1])
    mixed, manifest = build_sft_mix(pools, props, seed, with_replacement)
    count = write_jsonl(mixed, out_path)
    _emit({"out": str(out_path), "written": count, **manifest.to_dict()})


@main.command("agree")
@click.option("--scores", "scores_path", type=click.Path(), required=True,
              help='JSONL: {"item", "human" | "categories": {...}, "rm"}.')
@click.option("--pairs", "n_pairs", type=int, default=500, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--rm-id", default="rm", show_default=True)
@click.option("--distinct-pairs", is_flag=True,
              help="Sample without replacement instead of with replacement.")
@click.option("--dry-run", is_flag=True)
@click.pass_obj
@command_errors
def cmd_agree(settings: Settings, scores_path, n_pairs, seed, rm_id, distinct_pairs,
              dry_run) -> None:
    """Pairwise human-preference agreement rate for a reward model."""
    seed = settings.get("seed", seed, int, 0)
    if n_pairs < 1:
        raise ConfigError(f"--pairs must be >= 1, got {n_pairs}")
    _require_files([("--scores", scores_path)])
    if dry_run:
        _emit({"command": "agree", "dry_run": True, "ok": True, "seed": seed})
        return
    import json as _json

    human_direct: list[float] = []
    categories: dict[str, list[float]] = {}
    rm: list[float] = []
    with open(scores_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                payload = _json.loads(line)
                rm.append(float(payload["rm"]))
                if "human" in payload:
                    human_direct.append(float(payload["human"]))
                else:
                    for name, value in payload["categories"].items():
                        categories.setdefault(str(name), []).append(float(value))
            except (KeyError, TypeError, ValueError, _json.JSONDecodeError) as exc:
                raise DataError(f"{scores_path}:{lineno}: bad score row: {exc}") from exc
    if human_direct and categories:
        raise DataError("mix of 'human' and 'categories' rows; use one convention")
    human = human_direct if human_direct else minmax_normalize(categories)
    report = pairwise_agreement(
        human, rm, n_pairs, seed, reward_model=rm_id, distinct_pairs=distinct_pairs
    )
    _emit(report.to_dict())


@main.command("rank")
@click.option("--scores", "scores_path", type=click.Path(), required=True,
              help='JSONL: {"item", "scores": {model: value}, "language"?}.')
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Also write a human-readable table.")
@click.option("--dry-run", is_flag=True)
@command_errors
def cmd_rank(scores_path, out_path, dry_run) -> None:
    """Average within-item rank per model (higher is better)."""
    _require_files([("--scores", scores_path)])
    if dry_run:
        _emit({"command": "rank", "dry_run": True, "ok": True})
        return
    items = read_human_scores(scores_path)
    means = average_rank(items)
    ordered = dict(sorted(means.items(), key=lambda kv: kv[1], reverse=True))
    if out_path:
        width = max(len(m) for m in ordered) + 2
        lines = [f"{'model':<{width}}{'mean rank':>10}"]
        lines += [f"{m:<{width}}{v:>10.3f}" for m, v in ordered.items()]
        atomic_write_text(out_path, "\n".join(lines) + "\n")
    _emit({"items": len(items), "mean_rank": ordered})


@main.command("report")
@click.option("--metrics", "metrics_path", type=click.Path(), required=True,
              help="CSV/JSONL of model,benchmark,scope,value[,beta] rows.")
@click.option("--partition", "partition_path", type=click.Path(), default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--round", "rounding", type=int, default=None)
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="Human-readable table file.")
@click.option("--csv", "csv_path", type=click.Path(), default=None,
              help="Breakdown as CSV.")
@click.option("--plot-csv", "plot_path", type=click.Path(), default=None,
              help="GRP-vs-beta plot data (models carrying a beta).")
@click.option("--dry-run", is_flag=True)
@click.pass_obj
@command_errors
def cmd_report(settings: Settings, metrics_path, partition_path, alpha, rounding,
               out_path, csv_path, plot_path, dry_run) -> None:
    """Global/Regional averages and GRP per model, sorted by GRP."""
    cfg = GrpConfig(
        alpha=settings.alpha(alpha),
        rounding=settings.get("round", rounding, int, 1),
    )
    partition_path = settings.get("partition", partition_path)
    _require_files([("--metrics", metrics_path), ("--partition", partition_path)])
    if dry_run:
        _emit({"command": "report", "dry_run": True, "ok": True, "alpha": cfg.alpha})
        return
    partition = RegionPartition.from_json(partition_path) if partition_path else None
    rows = read_metric_rows(metrics_path)
    report = build_breakdown(rows, cfg, partition)
    if out_path:
        atomic_write_text(out_path, report.to_text())
    if csv_path:
        atomic_write_text(csv_path, report.to_csv())
    if plot_path:
        atomic_write_text(plot_path, report.plot_csv())
    _emit(report.to_dict())


if __name__ == "__main__":
    main()
