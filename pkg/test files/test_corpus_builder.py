"""
Tests for the corpus pipeline: verification routing, pairing, localization, slicing and outputs
"""

import json
from pathlib import Path

import pytest

from app.config.run_config import CorpusConfig, SplitRatios
from app.corpus.builder import assign_split, build_corpus, load_corpus_inputs, parse_submission
from app.corpus.similarity import program_similarity
from app.schemas.models import IOCase, Split
from app.utils.exceptions import ConfigurationError
from app.utils.helpers import read_json, read_jsonl
from conftest import write_jsonl_file

OUTPUT_FILES = ["train.jsonl", "validation.jsonl", "test.jsonl", "pending_prompts.jsonl", "manifest.json"]


async def build(corpus_inputs, runner_config, out_dir: Path, **config_overrides) -> dict:
    config = CorpusConfig(**{**corpus_inputs, **config_overrides})
    records, tests, questions, answers = load_corpus_inputs(config)
    return await build_corpus(records, tests, config, runner_config, str(out_dir),
                              questions=questions, answers=answers, jobs=2)


def fragments(out_dir: Path):
    rows = []
    for split in ("train", "validation", "test"):
        rows.extend(read_jsonl(str(out_dir / f"{split}.jsonl")))
    return rows


async def test_twelve_pair_corpus(corpus_inputs, runner_config, tmp_path):
    out_dir = tmp_path / "corpus"
    manifest = await build(corpus_inputs, runner_config, out_dir)

    counts = manifest["counts"]
    assert counts["submissions"] == 24
    assert (counts["verified_correct"], counts["verified_erroneous"]) == (12, 12)
    assert counts["pairs_retained"] == 11
    assert counts["pairs_sliced"] == 10
    assert counts["fragments"] == 20
    assert counts["pending_prompts"] == 0
    assert counts["failed"] == 0
    assert manifest["drops"] == {
        "p11/u1/0": "below_similarity_threshold",
        "p12/u1/0": "no_divergence",
    }
    assert manifest["stats"]["pairs_by_diff_size"] == {"1": 9, "2": 1, "3+": 0}
    assert manifest["stats"]["fragments_per_label"] == {"0": 10, "1": 10}
    assert sum(manifest["stats"]["fragments_per_split"].values()) == 20
    assert read_json(str(out_dir / "manifest.json")) == manifest


async def test_retained_pairs_are_near_duplicates_and_fragments_differ_in_final_line(
    corpus_inputs, runner_config, tmp_path
):
    out_dir = tmp_path / "corpus"
    await build(corpus_inputs, runner_config, out_dir)

    submissions = {}
    for record in read_jsonl(corpus_inputs["submissions"]):
        submissions[(record["problem_id"], record["verdict"])] = record["source_lines"]

    by_pair = {}
    for row in fragments(out_dir):
        by_pair.setdefault(row["pair_id"], {})[row["label"]] = row
        assert set(row) == {"problem_id", "question", "prefix_lines", "label", "pair_id", "split"}

    assert len(by_pair) == 10
    for pair_id, labeled in by_pair.items():
        correct, incorrect = labeled[1], labeled[0]
        problem = correct["problem_id"]
        assert program_similarity(submissions[(problem, "correct")], submissions[(problem, "incorrect")]) > 0.9
        assert correct["prefix_lines"][:-1] == incorrect["prefix_lines"][:-1]
        assert correct["prefix_lines"][-1] != incorrect["prefix_lines"][-1]
        assert correct["split"] == incorrect["split"]
        assert correct["question"].startswith("Print the sum")


async def test_localized_pair_uses_the_answer(corpus_inputs, runner_config, tmp_path):
    out_dir = tmp_path / "corpus"
    await build(corpus_inputs, runner_config, out_dir)
    p10 = [row for row in fragments(out_dir) if row["pair_id"] == "p10/u1/0"]
    assert {len(row["prefix_lines"]) for row in p10} == {10}


async def test_build_is_byte_deterministic(corpus_inputs, runner_config, tmp_path):
    await build(corpus_inputs, runner_config, tmp_path / "first")
    await build(corpus_inputs, runner_config, tmp_path / "second")
    for name in OUTPUT_FILES:
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes(), name


async def test_unanswered_multi_line_pairs_become_prompts(corpus_inputs, runner_config, tmp_path):
    inputs = {key: value for key, value in corpus_inputs.items() if key != "answers"}
    out_dir = tmp_path / "corpus"
    manifest = await build(inputs, runner_config, out_dir)

    assert manifest["counts"]["pending_prompts"] == 1
    assert manifest["counts"]["fragments"] == 18
    pending = read_jsonl(str(out_dir / "pending_prompts.jsonl"))
    assert pending[0]["pair_id"] == "p10/u1/0"
    assert pending[0]["prompt_text"].endswith("[OUTPUT]\n")
    assert "plus 10." in pending[0]["prompt_text"]


async def test_first_diff_strategy_cuts_at_min_d(corpus_inputs, runner_config, tmp_path):
    inputs = {key: value for key, value in corpus_inputs.items() if key != "answers"}
    out_dir = tmp_path / "corpus"
    manifest = await build(inputs, runner_config, out_dir, multi_line_strategy="first_diff")

    assert manifest["counts"]["pending_prompts"] == 0
    assert manifest["counts"]["fragments"] == 20


async def test_rejected_answer_is_a_recorded_failure(corpus_inputs, runner_config, tmp_path):
    answers = write_jsonl_file(tmp_path / "bad_answers.jsonl", [{"pair_id": "p10/u1/0", "raw_answer": "line 99"}])
    manifest = await build({**corpus_inputs, "answers": str(answers)}, runner_config, tmp_path / "corpus")

    assert manifest["counts"]["failed"] == 1
    failure = manifest["failures"]["p10/u1/0"]
    assert failure["error_code"] == "localization_answer_rejected"
    assert failure["raw"] == "line 99"


async def test_verification_routes_submissions(runner_config, tmp_path):
    double = ["n = int(input())", "print(n * 2)"]
    records = [
        {"problem_id": "double", "user_id": "u1", "verdict": "correct", "source_lines": double},
        {"problem_id": "double", "user_id": "u1", "verdict": "unknown", "source_lines": ["n = int(input())", "print(n + 2)"]},
        {"problem_id": "double", "user_id": "u2", "verdict": "correct", "source_lines": ["n = int(input())", "print(n)"]},
        {"problem_id": "double", "user_id": "u3", "verdict": "unknown", "source_lines": ["n = int(input()"]},
        {"problem_id": "double", "user_id": "u4", "verdict": "incorrect", "source": "n = int(input())\nprint(n * 2)\n"},
        {"problem_id": "untested", "user_id": "u5", "verdict": "unknown", "source_lines": ["print(1)"]},
        {"user_id": "u6", "source_lines": ["print(1)"]},
    ]
    tests = {"double": [IOCase(stdin="3\n", expected_stdout="6\n")]}
    manifest = await build_corpus(records, tests, CorpusConfig(), runner_config, str(tmp_path / "corpus"))

    assert manifest["counts"]["verified_correct"] == 1
    assert manifest["counts"]["verified_erroneous"] == 1
    assert manifest["drops"]["double/u2@3"] == "correct_failed_verification"
    assert manifest["drops"]["double/u3@4"] == "syntax_error"
    assert manifest["drops"]["double/u4@5"] == "incorrect_passed_verification"
    assert manifest["drops"]["untested/u5@6"] == "unverifiable_unknown"
    assert manifest["failures"]["None/u6@7"]["error_code"] == "malformed_submission"


def test_split_assignment_depends_only_on_problem():
    ratios = SplitRatios()
    assert assign_split("p42", ratios) == assign_split("p42", ratios)
    assert assign_split("p42", SplitRatios(train=0, validation=0, test=1)) == Split.TEST
    assert assign_split("p42", SplitRatios(train=1, validation=0, test=0)) == Split.TRAIN


def test_parse_submission_normalizes_source():
    parsed = parse_submission({"problem_id": 7, "user_id": "u", "source": "a = 1   \r\nb = 2\n\n"})
    assert parsed.problem_id == "7"
    assert parsed.source_lines == ["a = 1", "b = 2"]


def test_missing_inputs_are_configuration_errors(tmp_path):
    with pytest.raises(ConfigurationError):
        load_corpus_inputs(CorpusConfig())
    with pytest.raises(ConfigurationError):
        load_corpus_inputs(CorpusConfig(submissions=str(tmp_path / "absent.jsonl")))

    broken = tmp_path / "broken.jsonl"
    broken.write_text('{"problem_id": "p1"\n', encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_corpus_inputs(CorpusConfig(submissions=str(broken)))


def test_tests_file_is_parsed_per_problem(tmp_path):
    submissions = write_jsonl_file(tmp_path / "s.jsonl", [])
    tests = tmp_path / "tests.json"
    tests.write_text(json.dumps({"p1": [{"stdin": "1\n", "expected_stdout": "2\n"}]}), encoding="utf-8")
    _, parsed, _, _ = load_corpus_inputs(CorpusConfig(submissions=str(submissions), tests=str(tests)))
    assert parsed == {"p1": [IOCase(stdin="1\n", expected_stdout="2\n")]}
