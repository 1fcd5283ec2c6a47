"""
Shared fixtures: scripted scenarios, evaluator tables, corpus records and run workspaces
"""

import json
import os
import shlex
import sys
from pathlib import Path
from typing import Dict, List

import pytest

# keep test runs from writing daily log files into the repo
os.environ.setdefault("LOG_TO_FILE", "false")

from app.config.run_config import GuardConfig  # noqa: E402
from app.schemas.models import Policy, RunnerConfig  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = FIXTURES / "golden_session"

PYTHON_TEMPLATE = f"{shlex.quote(sys.executable)} {{src}}"


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def runner_config() -> RunnerConfig:
    return RunnerConfig(command_template=PYTHON_TEMPLATE, timeout_ms=5000)


def guard_config(policy: Policy = Policy.SEMGUARD_PENALTY, **overrides) -> GuardConfig:
    values = dict(threshold=0.5, penalty_lambda=0.8, max_resamples=3, policy=policy, clock="logical")
    values.update(overrides)
    return GuardConfig(**values)


def write_json_file(path: Path, data) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2), encoding="utf-8")
    return path


def write_jsonl_file(path: Path, rows: List[Dict]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(json.dumps(row) + "\n" for row in rows), encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Planted-fault scenarios
# ---------------------------------------------------------------------------

def planted_scenario(index: int, mode: str = "rank") -> Dict:
    """
    One planted-fault scenario

    The generator prefers a faulty final line (weight 1.0) over the
    correct one (weight 0.9, different first token); the table scores the
    prefix ending in the faulty line 0.2. Prefix length varies with the index.
    The correct program prints sum(range(n)), the faulty one is off by index + 1.
    In sample mode the unbiased sampler repeats the faulty line with positive
    probability.
    """
    prefix = ["import sys", f"n{index} = int(input())", f"values = list(range(n{index}))"]
    prefix += [f"step{k} = {k + index}" for k in range(index % 3)]
    prefix.append("answer = sum(values)")
    faulty = f"print(answer - {index + 1})"
    correct = "sys.stdout.write(str(answer) + '\\n')"

    lines = [{"alternatives": [{"text": text, "first_token": 100 + k}]} for k, text in enumerate(prefix)]
    lines.append({"alternatives": [
        {"text": faulty, "first_token": 900, "weight": 1.0},
        {"text": correct, "first_token": 901, "weight": 0.9},
    ]})

    return {
        "scenario": {"mode": mode, "end_after": len(lines), "lines": lines},
        "table": {"default": 0.9, "entries": {"\n".join(prefix + [faulty]): 0.2}},
        "correct": correct,
        "faulty": faulty,
    }


def write_planted_suite(root: Path, mode: str) -> List[Dict]:
    suite = []
    for index in range(20):
        planted = planted_scenario(index, mode)
        planted["scenario_path"] = str(write_json_file(root / f"planted_{index:02d}" / "scenario.json",
                                                       planted["scenario"]))
        planted["table_path"] = str(write_json_file(root / f"planted_{index:02d}" / "table.json",
                                                    planted["table"]))
        suite.append(planted)
    return suite


@pytest.fixture
def planted_suite(tmp_path) -> List[Dict]:
    return write_planted_suite(tmp_path / "rank", "rank")


@pytest.fixture
def planted_sample_suite(tmp_path) -> List[Dict]:
    return write_planted_suite(tmp_path / "sample", "sample")


# ---------------------------------------------------------------------------
# Corpus records
# ---------------------------------------------------------------------------

def base_program(offset: int) -> List[str]:
    return [
        "import sys",
        "",
        "def read_ints():",
        "    return list(map(int, sys.stdin.readline().split()))",
        "",
        "def solve(n, values):",
        "    total = 0",
        "    best = values[0]",
        "    for index in range(n):",
        "        total += values[index]",
        "        if values[index] > best:",
        "            best = values[index]",
        "    average = total // n",
        "    return total, best, average",
        "",
        "def main():",
        "    n = read_ints()[0]",
        "    values = read_ints()",
        "    total, best, average = solve(n, values)",
        f"    print(total, best, average + {offset})",
        "",
        "def describe(values):",
        "    smallest = min(values)",
        "    largest = max(values)",
        "    spread = largest - smallest",
        "    counts = {}",
        "    for value in values:",
        "        counts[value] = counts.get(value, 0) + 1",
        "    mode = max(counts, key=counts.get)",
        "    return {'min': smallest, 'max': largest, 'spread': spread, 'mode': mode}",
        "",
        "def render(summary):",
        "    keys = sorted(summary)",
        "    return ' '.join(f'{key}={summary[key]}' for key in keys)",
        "",
        "main()",
    ]


# (1-based line, replacement) for the single-line mutations
SINGLE_LINE_MUTATIONS = [
    (10, "        total -= values[index]"),
    (11, "        if values[index] >= best:"),
    (8, "    best = values[1]"),
    (13, "    average = total // (n + 1)"),
    (7, "    total = 1"),
    (9, "    for index in range(n - 1):"),
    (12, "            best = index"),
    (17, "    n = read_ints()[1]"),
    (19, "    total, average, best = solve(n, values)"),
]


def mutate(lines: List[str], changes) -> List[str]:
    mutated = list(lines)
    for line_number, text in changes:
        mutated[line_number - 1] = text
    return mutated


def corpus_records() -> List[Dict]:
    """
    Twelve correct/erroneous pairs, one user per problem

    p01-p09 differ in one line, p10 in two lines (localized by an answer),
    p11 pairs with an unrelated program and p12 with an identical copy.
    """
    records = []
    for number in range(1, 13):
        problem = f"p{number:02d}"
        correct = base_program(number)
        if number <= 9:
            erroneous = mutate(correct, [SINGLE_LINE_MUTATIONS[number - 1]])
        elif number == 10:
            erroneous = mutate(correct, [(10, "        total -= values[index]"),
                                         (20, "    print(total, best, average)")])
        elif number == 11:
            erroneous = ["print(42)"]
        else:
            erroneous = list(correct)
        records.append({"problem_id": problem, "user_id": "u1", "verdict": "correct", "source_lines": correct})
        records.append({"problem_id": problem, "user_id": "u1", "verdict": "incorrect", "source_lines": erroneous})
    return records


@pytest.fixture
def corpus_inputs(tmp_path) -> Dict[str, str]:
    """Submissions, questions and answers files for the twelve-pair corpus"""
    root = tmp_path / "corpus_inputs"
    return {
        "submissions": str(write_jsonl_file(root / "submissions.jsonl", corpus_records())),
        "questions": str(write_json_file(
            root / "questions.json",
            {f"p{n:02d}": f"Print the sum, maximum and mean of the numbers plus {n}." for n in range(1, 13)},
        )),
        "answers": str(write_jsonl_file(
            root / "answers.jsonl", [{"pair_id": "p10/u1/0", "raw_answer": "10"}]
        )),
    }


# ---------------------------------------------------------------------------
# CLI workspaces
# ---------------------------------------------------------------------------

@pytest.fixture
def bench_workspace(tmp_path, planted_suite) -> Dict[str, Path]:
    """
    Config, tasks and oracle for bench/guard runs over the first four planted
    scenarios; the tasks carry stdin/stdout tests
    """
    root = tmp_path / "workspace"
    tasks = []
    for index, planted in enumerate(planted_suite[:4]):
        tasks.append({
            "task_id": f"planted_{index:02d}",
            "question": "Print the sum of 0..n-1.",
            "tests": [{"stdin": "4\n", "expected_stdout": "6\n"}],
            "scenario": planted["scenario_path"],
            "evaluator_table": planted["table_path"],
        })
    write_jsonl_file(root / "tasks.jsonl", tasks)

    # rollbacks per task: penalty 1, random 2, full_restart 3, unguided 0
    oracle = {f"planted_{i:02d}": {"0": "justified", "1": "false_positive", "2": "justified"} for i in range(4)}
    write_json_file(root / "oracle.json", oracle)

    config = {
        "seed": 7,
        "jobs": 2,
        "out_dir": "runs",
        "tasks": "tasks.jsonl",
        "runner": {"command_template": PYTHON_TEMPLATE, "timeout_ms": 5000},
        "guard": {"threshold": 0.5, "lambda": 0.8, "max_resamples": 3, "clock": "logical"},
        "generator": {"kind": "scripted"},
        "evaluator": {"kind": "scripted"},
        "bench": {
            "policies": ["semguard_penalty", "semguard_random", "full_restart", "unguided"],
            "samples_per_task": 1,
            "repeats": 2,
            "baseline": "unguided",
            "oracle": "oracle.json",
        },
    }
    write_json_file(root / "config.json", config)
    return {"root": root, "config": root / "config.json", "tasks": root / "tasks.jsonl"}
