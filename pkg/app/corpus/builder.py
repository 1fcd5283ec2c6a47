"""
Corpus Builder
Verify -> pair -> diff -> slice pipeline writing per-split fragment files and a manifest
"""

import asyncio
import logging
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

from pydantic import ValidationError

from app.config.run_config import CorpusConfig, SplitRatios
from app.corpus.diffing import diff_indices, first_divergence, slice_pair
from app.corpus.pairing import group_pools, make_pair_id, pair_submissions
from app.corpus.prompts import emit_localization_prompt, ingest_localization_answer
from app.corpus.similarity import normalize_lines
from app.corpus.verifier import ProgramVerifier
from app.schemas.models import (
    CodePair,
    DivergenceSource,
    FragmentSample,
    IOCase,
    RunnerConfig,
    Split,
    Submission,
    SubmissionMatch,
    Verdict,
    VerifierStatus,
)
from app.utils.exceptions import ConfigurationError, LineGuardError, SliceError
from app.utils.helpers import read_json, read_jsonl, unit_interval, write_json, write_jsonl

logger = logging.getLogger(__name__)

SPLIT_ORDER = (Split.TRAIN, Split.VALIDATION, Split.TEST)


def assign_split(problem_id: str, ratios: SplitRatios) -> Split:
    """Split chosen from a stable hash of the problem id alone"""
    weights = [ratios.train, ratios.validation, ratios.test]
    total = sum(weights)
    point = unit_interval(problem_id) * total
    cumulative = 0.0
    for split, weight in zip(SPLIT_ORDER, weights):
        cumulative += weight
        if point < cumulative:
            return split
    # float rounding at the upper edge
    return next(split for split, weight in reversed(list(zip(SPLIT_ORDER, weights))) if weight > 0)


def diff_bucket(size: int) -> str:
    return str(size) if size < 3 else "3+"


def parse_submission(record: Dict) -> Submission:
    """Build a Submission from a raw record carrying either ``source`` or ``source_lines``"""
    if "source_lines" in record:
        lines = [line.rstrip() for line in record["source_lines"]]
        while lines and lines[-1] == "":
            lines.pop()
    else:
        lines = normalize_lines(record.get("source", ""))
    return Submission(
        problem_id=str(record["problem_id"]),
        user_id=str(record["user_id"]),
        verdict=record.get("verdict", Verdict.UNKNOWN),
        source_lines=lines,
    )


class CorpusBuilder:
    """Builds a fragment corpus from raw submissions"""

    def __init__(self, config: CorpusConfig, runner: RunnerConfig, jobs: int = 1):
        """
        Initialize corpus builder

        Args:
            config: n-gram size, pairing threshold, split ratios, multi-line strategy
            runner: Program runner used for re-verification
            jobs: Concurrent verification processes
        """
        self.config = config
        self.verifier = ProgramVerifier(runner)
        self.jobs = max(1, jobs)

    async def build(
        self,
        records: Iterable[Dict],
        tests: Dict[str, List[IOCase]],
        out_dir: str,
        questions: Optional[Dict[str, str]] = None,
        answers: Optional[Dict[str, str]] = None,
    ) -> Dict:
        """
        Run the full pipeline and write its outputs

        Per-item problems are recorded in the manifest; the run itself never
        aborts on them.

        Args:
            records: Raw submission records
            tests: Test cases per problem id
            out_dir: Directory receiving the split files, manifest and pending prompts
            questions: Problem statements per problem id
            answers: Raw localization answers per pair id

        Returns:
            The manifest dictionary (also written to manifest.json)
        """
        questions = questions or {}
        answers = answers or {}
        self.drops: Dict[str, str] = {}
        self.failures: Dict[str, Dict] = {}

        logger.info("=" * 60)
        logger.info("[CORPUS] Starting corpus build")
        logger.info(f"   n-gram: {self.config.ngram_n}, threshold: {self.config.threshold}")
        logger.info(f"   Multi-line strategy: {self.config.multi_line_strategy}")

        # Step 1: Parse submissions
        submissions = self._step_parse(records)

        # Step 2: Re-execute and route into pools
        correct, erroneous = await self._step_verify(submissions, tests)

        # Step 3: Pair near-duplicates
        matches = self._step_pair(correct, erroneous)

        # Step 4: Locate divergence
        pairs, pending, diff_sizes = self._step_locate(matches, questions, answers)

        # Step 5: Slice into fragments
        fragments = self._step_slice(pairs, questions)

        manifest = self._step_write(
            out_dir, submissions, correct, erroneous, matches, pairs, pending, fragments, diff_sizes
        )

        logger.info(
            f"✅ [CORPUS] Complete: {len(fragments)} fragments, {len(pending)} pending prompts, "
            f"{len(self.drops)} drops, {len(self.failures)} failures"
        )
        logger.info("=" * 60)
        return manifest

    def _fail(self, key: str, error: LineGuardError) -> None:
        logger.error(f"[CORPUS] {key}: {error.message}")
        self.failures[key] = {"error_code": error.error_code, "error": error.message, **error.details}

    def _step_parse(self, records: Iterable[Dict]) -> List[Tuple[str, Submission]]:
        """Keyed submissions; key = problem/user@record number"""
        parsed: List[Tuple[str, Submission]] = []
        for number, record in enumerate(records, 1):
            key = f"{record.get('problem_id')}/{record.get('user_id')}@{number}"
            try:
                submission = parse_submission(record)
            except (KeyError, TypeError, ValidationError) as e:
                logger.error(f"[CORPUS] {key}: malformed submission record ({e.__class__.__name__})")
                self.failures[key] = {"error_code": "malformed_submission", "error": str(e)}
                continue
            parsed.append((key, submission))
        logger.info(f"[CORPUS] Step 1: parsed {len(parsed)} submissions")
        return parsed

    async def _step_verify(
        self,
        submissions: List[Tuple[str, Submission]],
        tests: Dict[str, List[IOCase]],
    ) -> Tuple[List[Submission], List[Submission]]:
        semaphore = asyncio.Semaphore(self.jobs)

        async def _run(submission: Submission) -> Optional[VerifierStatus]:
            cases = tests.get(submission.problem_id)
            if not cases:
                return None
            async with semaphore:
                outcome = await self.verifier.verify(submission, cases)
            return outcome.status

        statuses = await asyncio.gather(*[_run(sub) for _, sub in submissions])

        correct: List[Submission] = []
        erroneous: List[Submission] = []
        for (key, submission), status in zip(submissions, statuses):
            verdict = submission.verdict
            if status is None:
                # no tests: the declared label stands
                if verdict == Verdict.CORRECT:
                    correct.append(submission)
                elif verdict == Verdict.INCORRECT:
                    erroneous.append(submission)
                else:
                    self.drops[key] = "unverifiable_unknown"
                continue

            if status == VerifierStatus.PASS and verdict != Verdict.INCORRECT:
                correct.append(submission)
            elif status == VerifierStatus.WRONG_OUTPUT and verdict != Verdict.CORRECT:
                erroneous.append(submission)
            elif verdict == Verdict.CORRECT:
                self.drops[key] = "correct_failed_verification"
            elif verdict == Verdict.INCORRECT and status == VerifierStatus.PASS:
                self.drops[key] = "incorrect_passed_verification"
            else:
                self.drops[key] = status.value

        logger.info(f"[CORPUS] Step 2: {len(correct)} correct, {len(erroneous)} erroneous after verification")
        return correct, erroneous

    def _step_pair(self, correct: List[Submission], erroneous: List[Submission]) -> List[SubmissionMatch]:
        matches: List[SubmissionMatch] = []
        pools = group_pools(correct, erroneous)
        for key in sorted(pools):
            correct_pool, erroneous_pool = pools[key]
            retained = pair_submissions(
                correct_pool, erroneous_pool, self.config.threshold, self.config.ngram_n
            )
            retained_ids = {match.pair_id for match in retained}
            for index, submission in enumerate(erroneous_pool):
                pair_id = make_pair_id(submission, index)
                if pair_id not in retained_ids:
                    self.drops[pair_id] = (
                        "no_correct_submission" if not correct_pool else "below_similarity_threshold"
                    )
            matches.extend(retained)
        logger.info(f"[CORPUS] Step 3: {len(matches)} pairs retained")
        return matches

    def _step_locate(
        self,
        matches: List[SubmissionMatch],
        questions: Dict[str, str],
        answers: Dict[str, str],
    ) -> Tuple[List[CodePair], List[Dict], Counter]:
        pairs: List[CodePair] = []
        pending: List[Dict] = []
        diff_sizes: Counter = Counter()

        for match in matches:
            indices = diff_indices(match.correct, match.erroneous)
            if not indices:
                self.drops[match.pair_id] = "no_divergence"
                continue
            diff_sizes[diff_bucket(len(indices))] += 1

            source = DivergenceSource.POSITIONAL_DIFF
            if len(indices) > 1 and self.config.multi_line_strategy == "localize":
                raw = answers.get(match.pair_id)
                if raw is None:
                    prompt = emit_localization_prompt(
                        questions.get(match.correct.problem_id, ""),
                        match.erroneous,
                        match.correct,
                        pair_id=match.pair_id,
                    )
                    pending.append({"pair_id": prompt.pair_id, "prompt_text": prompt.text})
                    continue
                try:
                    divergence = ingest_localization_answer(raw, match.erroneous)
                except LineGuardError as e:
                    self._fail(match.pair_id, e)
                    continue
                source = DivergenceSource.LLM_LOCALIZED
            else:
                divergence = first_divergence(indices)

            if divergence > len(match.erroneous.source_lines):
                self.drops[match.pair_id] = "divergence_out_of_range"
                continue

            pairs.append(CodePair(
                pair_id=match.pair_id,
                correct=match.correct,
                erroneous=match.erroneous,
                jaccard=match.jaccard,
                diff_indices=indices,
                divergence_line=divergence,
                divergence_source=source,
            ))

        logger.info(f"[CORPUS] Step 4: {len(pairs)} pairs located, {len(pending)} awaiting localization")
        return pairs, pending, diff_sizes

    def _step_slice(self, pairs: List[CodePair], questions: Dict[str, str]) -> List[FragmentSample]:
        fragments: List[FragmentSample] = []
        for pair in pairs:
            problem_id = pair.correct.problem_id
            try:
                fragments.extend(slice_pair(
                    pair,
                    question=questions.get(problem_id, ""),
                    split=assign_split(problem_id, self.config.split_ratios),
                ))
            except SliceError as e:
                self.drops[pair.pair_id] = e.details.get("reason", e.error_code)
        logger.info(f"[CORPUS] Step 5: {len(fragments)} fragments sliced")
        return fragments

    def _step_write(
        self,
        out_dir: str,
        submissions: List[Tuple[str, Submission]],
        correct: List[Submission],
        erroneous: List[Submission],
        matches: List[SubmissionMatch],
        pairs: List[CodePair],
        pending: List[Dict],
        fragments: List[FragmentSample],
        diff_sizes: Counter,
    ) -> Dict:
        out = Path(out_dir)
        pair_order = {pair.pair_id: position for position, pair in enumerate(pairs)}
        ordered = sorted(fragments, key=lambda f: (pair_order[f.pair_id], -int(f.label)))

        per_split = {split.value: 0 for split in SPLIT_ORDER}
        for split in SPLIT_ORDER:
            rows = [f.to_record() for f in ordered if f.split == split]
            per_split[split.value] = write_jsonl(str(out / f"{split.value}.jsonl"), rows)
        write_jsonl(str(out / "pending_prompts.jsonl"), pending)

        per_label = Counter(str(int(f.label)) for f in fragments)
        manifest = {
            "config": {
                "ngram_n": self.config.ngram_n,
                "threshold": self.config.threshold,
                "multi_line_strategy": self.config.multi_line_strategy,
                "split_ratios": self.config.split_ratios.model_dump(),
            },
            "counts": {
                "submissions": len(submissions),
                "verified_correct": len(correct),
                "verified_erroneous": len(erroneous),
                "pairs_retained": len(matches),
                "pairs_sliced": len({f.pair_id for f in fragments}),
                "pending_prompts": len(pending),
                "fragments": len(fragments),
                "dropped": len(self.drops),
                "failed": len(self.failures),
            },
            "drops": dict(sorted(self.drops.items())),
            "failures": dict(sorted(self.failures.items())),
            "stats": {
                "pairs_by_diff_size": {bucket: diff_sizes.get(bucket, 0) for bucket in ("1", "2", "3+")},
                "fragments_per_split": per_split,
                "fragments_per_label": {label: per_label.get(label, 0) for label in ("0", "1")},
            },
        }
        write_json(str(out / "manifest.json"), manifest)
        return manifest


def load_corpus_inputs(
    config: CorpusConfig,
) -> Tuple[List[Dict], Dict[str, List[IOCase]], Dict[str, str], Dict[str, str]]:
    """
    Read the configured corpus input files

    Returns:
        (submission records, tests per problem, questions per problem, answers per pair)
    """
    if not config.submissions:
        raise ConfigurationError("corpus.submissions is not configured")

    def _require(path: Optional[str], name: str) -> Optional[str]:
        if path is not None and not Path(path).is_file():
            raise ConfigurationError(f"corpus.{name} file not found: {path}")
        return path

    try:
        records = read_jsonl(_require(config.submissions, "submissions"))
        tests: Dict[str, List[IOCase]] = {}
        if _require(config.tests, "tests"):
            tests = {
                str(problem): [IOCase.model_validate(case) for case in cases]
                for problem, cases in read_json(config.tests).items()
            }
        questions = {str(k): str(v) for k, v in read_json(config.questions).items()} \
            if _require(config.questions, "questions") else {}
        answers: Dict[str, str] = {}
        if _require(config.answers, "answers"):
            answers = {str(row["pair_id"]): str(row["raw_answer"]) for row in read_jsonl(config.answers)}
    except (ValueError, KeyError, AttributeError, ValidationError) as e:
        raise ConfigurationError(f"unreadable corpus input: {e}")

    return records, tests, questions, answers


async def build_corpus(
    raw_submissions: Iterable[Dict],
    tests: Dict[str, List[IOCase]],
    config: CorpusConfig,
    runner: RunnerConfig,
    out_dir: str,
    questions: Optional[Dict[str, str]] = None,
    answers: Optional[Dict[str, str]] = None,
    jobs: int = 1,
) -> Dict:
    builder = CorpusBuilder(config, runner, jobs=jobs)
    return await builder.build(raw_submissions, tests, out_dir, questions=questions, answers=answers)
