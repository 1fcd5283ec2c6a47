"""
Command-Line Front End
corpus build, guard run, bench compare, eval passk and calibrate
"""

import argparse
import asyncio
import json
import logging
import re
import sys
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from app.cli.manifest import finish_manifest, start_manifest
from app.config.run_config import RunConfig, load_run_config
from app.corpus.builder import build_corpus, load_corpus_inputs
from app.corpus.verifier import ProgramVerifier
from app.evaluator.base import build_evaluator
from app.evaluator.calibration import fragment_accuracy_report
from app.generator.base import build_generator
from app.guard.engine import GuardEngine, run_batch
from app.guard.trace import write_trace
from app.metrics.cost import cost_report, format_cost_table, format_table
from app.metrics.errors import classify_error, error_histogram, relative_reduction, semantic_error_rate
from app.metrics.fpr import fpr_rows, fpr_summary, write_fpr_csv
from app.metrics.passk import mean_pass_at_k, task_pass_at_k
from app.schemas.models import (
    FragmentSample,
    GenerationTask,
    GenerationTrace,
    GuardResult,
    Outcome,
    Policy,
    ResultRecord,
    RollbackOracle,
    Submission,
    TaskResult,
    TaskSample,
    VerifierOutcome,
)
from app.utils.exceptions import ConfigurationError, LineGuardError, MetricsError
from app.utils.helpers import derive_seed, ensure_dir_exists, read_json, read_jsonl, write_json, write_jsonl

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARTIAL = 3

_UNSAFE_CHARS = re.compile(r"[^A-Za-z0-9_.-]")


def safe_name(text: str) -> str:
    return _UNSAFE_CHARS.sub("_", text)


def load_tasks(path: Optional[str]) -> List[GenerationTask]:
    """Read a tasks JSONL file; scenario and table paths resolve against its directory"""
    if not path:
        raise ConfigurationError("no tasks file configured (set 'tasks' or pass --tasks)")
    tasks_path = Path(path)
    if not tasks_path.is_file():
        raise ConfigurationError(f"tasks file not found: {path}")
    try:
        tasks = [GenerationTask.model_validate(record) for record in read_jsonl(str(tasks_path))]
    except (ValueError, ValidationError) as e:
        raise ConfigurationError(f"invalid tasks file {path}: {e}")

    base = tasks_path.parent
    for task in tasks:
        for field in ("scenario", "evaluator_table"):
            value = getattr(task, field)
            if value and not Path(value).is_absolute():
                setattr(task, field, str(base / value))
    if len({task.task_id for task in tasks}) != len(tasks):
        raise ConfigurationError(f"duplicate task ids in {path}")
    return sorted(tasks, key=lambda task: task.task_id)


def code_lines(code: str) -> List[str]:
    lines = code.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines or [""]


class SessionRunner:
    """Runs guarded sessions for one method over a task set and verifies the programs"""

    def __init__(self, config: RunConfig, tasks: Sequence[GenerationTask]):
        self.config = config
        self.tasks = list(tasks)
        # building the verifier checks the runner command exists
        self.verifier = ProgramVerifier(config.runner) if any(task.tests for task in tasks) else None

    async def _run_sample(
        self,
        task: GenerationTask,
        policy: Policy,
        sample_index: int,
        seed: int,
    ) -> Tuple[GuardResult, Optional[VerifierOutcome]]:
        guard_config = self.config.guard.model_copy(
            update={"policy": policy, "seed": derive_seed(seed, task.task_id, sample_index)}
        )
        try:
            generator = build_generator(self.config.generator, scenario_path=task.scenario)
            evaluator = None
            if policy != Policy.UNGUIDED:
                evaluator = build_evaluator(self.config.evaluator, table_path=task.evaluator_table)
        except LineGuardError as e:
            logger.error(f"[GUARD] {task.task_id}: {e.message}")
            return GuardResult(code="", trace=GenerationTrace(), outcome=Outcome.FAILED, error=e.message), None

        try:
            result = await GuardEngine(generator, evaluator, guard_config).run(task.question)
        finally:
            await generator.close()
            if evaluator is not None:
                await evaluator.close()

        verified = None
        if task.tests and result.outcome != Outcome.FAILED:
            program = Submission(problem_id=task.task_id, user_id=policy.value, source_lines=code_lines(result.code))
            verified = await self.verifier.verify(program, task.tests)
        return result, verified

    async def run_method(
        self,
        policy: Policy,
        seed: int,
        samples_per_task: int = 1,
        out_dir: Optional[str] = None,
    ) -> Tuple[List[ResultRecord], List[TaskResult], int]:
        """
        Run every task/sample for one policy

        Args:
            policy: Backtracking policy
            seed: Run seed; each sample derives its own
            samples_per_task: Samples n per task
            out_dir: Method directory receiving code/ and traces/; None writes nothing

        Returns:
            (result records, task results in task order, failed sessions)
        """
        items = [(task, index) for task in self.tasks for index in range(samples_per_task)]

        async def _worker(item):
            task, index = item
            return await self._run_sample(task, policy, index, seed)

        finished = await run_batch(items, _worker, jobs=self.config.jobs, key=lambda item: (item[0].task_id, item[1]))

        records: List[ResultRecord] = []
        samples: Dict[str, List[TaskSample]] = defaultdict(list)
        failures = 0
        for (task, index), (result, verified) in finished:
            if result.outcome == Outcome.FAILED:
                failures += 1
            if out_dir:
                stem = safe_name(task.task_id) if samples_per_task == 1 else f"{safe_name(task.task_id)}__s{index}"
                code_path = Path(out_dir) / "code" / f"{stem}{self.config.runner.source_suffix}"
                ensure_dir_exists(str(code_path.parent))
                with open(code_path, "w", encoding="utf-8", newline="\n") as f:
                    f.write(result.code)
                write_trace(str(Path(out_dir) / "traces" / f"{stem}.jsonl"), result.trace)

            records.append(ResultRecord(
                task_id=task.task_id,
                method=policy.value,
                sample_index=index,
                status=verified.status if verified else None,
                error_class=classify_error(verified) if verified else None,
                tokens=result.trace.totals.tokens,
                wall_ms=result.trace.totals.wall_ms,
                outcome=result.outcome,
            ))
            samples[task.task_id].append(TaskSample(code=result.code, verifier=verified, trace=result.trace))

        task_results = [TaskResult(task_id=task.task_id, samples=samples[task.task_id]) for task in self.tasks]
        return records, task_results, failures


def _input_paths(config: RunConfig, config_path: str, tasks: Sequence[GenerationTask] = ()) -> List[Optional[str]]:
    paths = [config_path, config.tasks, config.generator.path, config.evaluator.path, config.bench.oracle]
    for task in tasks:
        paths.extend([task.scenario, task.evaluator_table])
    return paths


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_corpus_build(config_path: str, overrides: Optional[Dict] = None) -> int:
    """Build the fragment corpus; 3 when per-item failures were recorded"""
    config = load_run_config(config_path, overrides)
    records, tests, questions, answers = load_corpus_inputs(config.corpus)
    corpus = config.corpus
    manifest = start_manifest(
        "corpus build",
        config.canonical_json(),
        [config_path, corpus.submissions, corpus.tests, corpus.questions, corpus.answers],
    )

    corpus_dir = Path(config.out_dir) / "corpus"
    summary = asyncio.run(build_corpus(
        records, tests, corpus, config.runner, str(corpus_dir),
        questions=questions, answers=answers, jobs=config.jobs,
    ))

    counts = summary["counts"]
    print(format_table(["stage", "count"], sorted(counts.items())), end="")
    finish_manifest(manifest, config.out_dir, {"counts": counts})
    return EXIT_PARTIAL if summary["failures"] else EXIT_OK


def cmd_guard_run(config_path: str, overrides: Optional[Dict] = None) -> int:
    """One guarded session per task with the configured policy"""
    config = load_run_config(config_path, overrides)
    tasks = load_tasks(config.tasks)
    policy = config.guard.policy
    manifest = start_manifest("guard run", config.canonical_json(), _input_paths(config, config_path, tasks))

    logger.info("=" * 60)
    logger.info(f"[GUARD] Running {len(tasks)} tasks with policy {policy.value}")

    runner = SessionRunner(config, tasks)
    method_dir = Path(config.out_dir) / policy.value
    records, _, failures = asyncio.run(runner.run_method(policy, config.guard.seed, out_dir=str(method_dir)))
    write_jsonl(str(method_dir / "results.jsonl"), [record.to_record() for record in records])

    rows = [[r.task_id, r.outcome.value, r.status.value if r.status else None, r.tokens, r.wall_ms] for r in records]
    print(format_table(["task_id", "outcome", "status", "tokens", "wall_ms"], rows), end="")

    finish_manifest(manifest, config.out_dir, {"tasks": len(tasks), "failed_sessions": failures})
    logger.info("=" * 60)
    return EXIT_PARTIAL if failures else EXIT_OK


def _load_oracle(path: str) -> RollbackOracle:
    try:
        return RollbackOracle.model_validate({"judgments": read_json(path)})
    except (OSError, ValueError, ValidationError) as e:
        raise ConfigurationError(f"invalid rollback oracle {path}: {e}")


def cmd_bench_compare(config_path: str, overrides: Optional[Dict] = None) -> int:
    """All configured policies on the same tasks and seeds; cost, error and FPR report"""
    config = load_run_config(config_path, overrides)
    tasks = load_tasks(config.tasks)
    bench = config.bench
    policies = list(dict.fromkeys(bench.policies))
    if bench.baseline is not None and bench.baseline not in {p.value for p in policies}:
        raise ConfigurationError(f"baseline {bench.baseline} is not one of the compared policies")
    oracle = _load_oracle(bench.oracle) if bench.oracle else None
    manifest = start_manifest("bench compare", config.canonical_json(), _input_paths(config, config_path, tasks))

    logger.info("=" * 60)
    logger.info(f"[BENCH] {len(policies)} policies x {len(tasks)} tasks, {bench.repeats} repeats")

    runner = SessionRunner(config, tasks)
    out = Path(config.out_dir)
    all_records: List[ResultRecord] = []
    results: Dict[str, List[TaskResult]] = {}
    repeat_pass: Dict[str, List[float]] = {}
    failures = 0

    for policy in policies:
        method = policy.value
        repeat_pass[method] = []
        for repeat in range(bench.repeats):
            seed = config.guard.seed if repeat == 0 else derive_seed(config.guard.seed, "repeat", repeat)
            records, task_results, failed = asyncio.run(runner.run_method(
                policy, seed, bench.samples_per_task,
                out_dir=str(out / method) if repeat == 0 else None,
            ))
            repeat_pass[method].append(float(np.mean([task_pass_at_k(t, 1) for t in task_results])))
            if repeat == 0:
                failures += failed
                all_records.extend(records)
                results[method] = task_results
                write_jsonl(str(out / method / "results.jsonl"), [r.to_record() for r in records])
        logger.info(f"[BENCH] {method}: pass@1 {repeat_pass[method][0]:.4f}")

    report = cost_report(results)
    histograms = {method: error_histogram(results[method]) for method in sorted(results)}
    semantic_rates = {method: semantic_error_rate(results[method]) for method in sorted(results)}
    report_json: Dict = {
        "methods": [row.model_dump() for row in report.methods],
        "error_histogram": histograms,
        "semantic_error_rate": semantic_rates,
        "pass_at_1_repeats": {
            method: {
                "values": values,
                "mean": float(np.mean(values)),
                "std": float(np.std(values)),
            }
            for method, values in sorted(repeat_pass.items())
        },
    }
    if bench.baseline is not None:
        report_json["baseline"] = bench.baseline
        report_json["semantic_error_reduction"] = {
            method: relative_reduction(rate, semantic_rates[bench.baseline])
            for method, rate in semantic_rates.items() if method != bench.baseline
        }

    if oracle is not None:
        rows: List[Dict] = []
        try:
            for method in sorted(results):
                traces = {task.task_id: task.samples[0].trace for task in results[method] if task.samples[0].trace}
                rows.extend(fpr_rows(traces, oracle, method))
            write_fpr_csv(str(out / "fpr.csv"), rows)
            report_json["rollback_fpr"] = {
                method: fpr_summary([row for row in rows if row["method"] == method]) for method in sorted(results)
            }
        except MetricsError as e:
            logger.error(f"[BENCH] Rollback FPR skipped: {e.message}")
            report_json["rollback_fpr_error"] = e.to_dict()
            failures += 1

    all_records.sort(key=lambda r: (r.method, r.task_id, r.sample_index))
    write_jsonl(str(out / "results.jsonl"), [record.to_record() for record in all_records])

    text = format_cost_table(report) + "\n" + format_table(
        ["method", "syntax", "runtime", "semantic", "semantic_rate"],
        [[m, h["syntax"], h["runtime"], h["semantic"], semantic_rates[m]] for m, h in histograms.items()],
    )
    write_json(str(out / "report.json"), report_json)
    with open(out / "report.txt", "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    print(text, end="")

    finish_manifest(manifest, config.out_dir, {"methods": sorted(results), "failed_sessions": failures})
    logger.info("=" * 60)
    return EXIT_PARTIAL if failures else EXIT_OK


def load_results(path: str) -> Dict[str, List[TaskResult]]:
    """Group a results JSONL file into task results per method"""
    if not Path(path).is_file():
        raise ConfigurationError(f"results file not found: {path}")
    try:
        records = [ResultRecord.model_validate(row) for row in read_jsonl(path)]
    except (ValueError, ValidationError) as e:
        raise ConfigurationError(f"invalid results file {path}: {e}")
    if not records:
        raise ConfigurationError(f"results file {path} is empty")

    grouped: Dict[str, Dict[str, List[ResultRecord]]] = defaultdict(lambda: defaultdict(list))
    for record in records:
        grouped[record.method][record.task_id].append(record)

    results: Dict[str, List[TaskResult]] = {}
    for method, tasks in grouped.items():
        results[method] = []
        for task_id in sorted(tasks):
            rows = sorted(tasks[task_id], key=lambda r: r.sample_index)
            results[method].append(TaskResult(task_id=task_id, samples=[
                TaskSample(
                    verifier=VerifierOutcome(status=row.status) if row.status else None,
                    tokens=row.tokens,
                    wall_ms=row.wall_ms,
                )
                for row in rows
            ]))
    return results


def cmd_eval_passk(results_path: str, k: int = 1, out_dir: Optional[str] = None) -> int:
    """Per-task and mean pass@k of a results file"""
    canonical = json.dumps({"command": "eval passk", "k": k}, sort_keys=True, separators=(",", ":"))
    manifest = start_manifest("eval passk", canonical, [results_path])
    results = load_results(results_path)

    rows = []
    means: Dict[str, float] = {}
    for method in sorted(results):
        per_task, mean = mean_pass_at_k(results[method], k)
        means[method] = mean
        rows.extend([[method, task_id, f"{value:.6g}"] for task_id, value in per_task.items()])
        rows.append([method, "mean", f"{mean:.6g}"])
    print(format_table(["method", "task_id", f"pass@{k}"], rows), end="")

    finish_manifest(manifest, out_dir or str(Path(results_path).parent), {"k": k, "mean": means})
    return EXIT_OK


def cmd_calibrate(config_path: str, corpus_path: Optional[str], overrides: Optional[Dict] = None) -> int:
    """Fragment-level accuracy, FPR, FNR and BCE of the configured evaluator"""
    config = load_run_config(config_path, overrides)
    if not corpus_path or not Path(corpus_path).is_file():
        raise ConfigurationError(f"calibration corpus not found: {corpus_path}")
    try:
        corpus = [FragmentSample.model_validate(row) for row in read_jsonl(corpus_path)]
    except (ValueError, ValidationError) as e:
        raise ConfigurationError(f"invalid calibration corpus {corpus_path}: {e}")

    manifest = start_manifest("calibrate", config.canonical_json(), [config_path, corpus_path, config.evaluator.path])
    evaluator = build_evaluator(config.evaluator)

    async def _calibrate():
        try:
            return await fragment_accuracy_report(evaluator, corpus, config.calibration.threshold)
        finally:
            await evaluator.close()

    report = asyncio.run(_calibrate())
    rows = [
        ["accuracy", report.accuracy],
        ["false_positive_rate", report.false_positive_rate],
        ["false_negative_rate", report.false_negative_rate],
        ["bce", report.bce],
        ["scored", report.scored],
        ["errors", report.errors],
    ]
    print(format_table(["metric", "value"], rows), end="")
    write_json(str(Path(config.out_dir) / "calibration.json"), report.model_dump())

    finish_manifest(manifest, config.out_dir, {"scored": report.scored, "errors": report.errors})
    return EXIT_PARTIAL if report.errors else EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _common_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="Run config JSON")
    parent.add_argument("--policy", choices=[p.value for p in Policy], help="Override guard.policy")
    parent.add_argument("--seed", type=int, help="Override the run seed")
    parent.add_argument("--jobs", type=int, help="Concurrent sessions")
    parent.add_argument("--out-dir", dest="out_dir", help="Output directory")
    parent.add_argument("--tasks", help="Tasks JSONL")
    return parent


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="lineguard", description="Line-level semantic guard for code generation")
    commands = parser.add_subparsers(dest="command", required=True)

    corpus = commands.add_parser("corpus", help="Corpus tools").add_subparsers(dest="action", required=True)
    corpus.add_parser("build", parents=[common], help="Build the fragment corpus")

    guard = commands.add_parser("guard", help="Guarded generation").add_subparsers(dest="action", required=True)
    guard.add_parser("run", parents=[common], help="Run one guarded session per task")

    bench = commands.add_parser("bench", help="Policy comparison").add_subparsers(dest="action", required=True)
    bench.add_parser("compare", parents=[common], help="Compare the configured policies")

    evaluate = commands.add_parser("eval", help="Evaluation").add_subparsers(dest="action", required=True)
    passk = evaluate.add_parser("passk", parents=[common], help="pass@k of a results file")
    passk.add_argument("results", help="Results JSONL")
    passk.add_argument("--k", type=int, default=1)

    calibrate = commands.add_parser("calibrate", parents=[common], help="Evaluator calibration on a corpus")
    calibrate.add_argument("--corpus", required=True, help="Fragment JSONL")
    return parser


def _overrides(args: argparse.Namespace) -> Dict:
    return {
        "policy": args.policy,
        "seed": args.seed,
        "jobs": args.jobs,
        "out_dir": args.out_dir,
        "tasks": args.tasks,
    }


def _require_config(args: argparse.Namespace) -> str:
    if not args.config:
        raise ConfigurationError(f"{args.command} requires --config")
    return args.config


def dispatch(args: argparse.Namespace) -> int:
    if args.command == "eval":
        return cmd_eval_passk(args.results, args.k, out_dir=args.out_dir)
    config_path = _require_config(args)
    overrides = _overrides(args)
    if args.command == "corpus":
        return cmd_corpus_build(config_path, overrides)
    if args.command == "guard":
        return cmd_guard_run(config_path, overrides)
    if args.command == "bench":
        return cmd_bench_compare(config_path, overrides)
    return cmd_calibrate(config_path, args.corpus, overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    CLI entry point

    Returns:
        0 on success, 2 on configuration or usage errors, 3 when the run
        completed with recorded failures
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    try:
        return dispatch(args)
    except LineGuardError as e:
        logger.error(f"❌ {e.error_code}: {e.message}")
        print(json.dumps(e.to_dict(), ensure_ascii=False), file=sys.stderr)
        return EXIT_USAGE
