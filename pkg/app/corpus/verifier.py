"""
Program Verifier
Re-executes a program against stdin/stdout test cases in an isolated subprocess
"""

import asyncio
import logging
import os
import shlex
import shutil
import signal
import tempfile
import time
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from app.schemas.models import IOCase, RunnerConfig, Submission, VerifierOutcome, VerifierStatus
from app.utils.exceptions import RunnerNotFoundError

logger = logging.getLogger(__name__)


def normalize_output(text: str) -> List[str]:
    """Per-line right-stripped output with trailing blank lines dropped"""
    lines = [line.rstrip() for line in text.replace("\r\n", "\n").split("\n")]
    while lines and lines[-1] == "":
        lines.pop()
    return lines


def outputs_match(actual: str, expected: str) -> bool:
    return normalize_output(actual) == normalize_output(expected)


class ProgramVerifier:
    """Runs programs through a configured command template"""

    def __init__(self, runner: RunnerConfig):
        """
        Initialize verifier

        Args:
            runner: Command template ({src}, optional {stdin}) and per-test timeout

        Raises:
            RunnerNotFoundError: The template's executable cannot be found
        """
        self.runner = runner
        self.command = self._parse_template(runner.command_template)
        self.compile_command = (
            self._parse_template(runner.compile_template) if runner.compile_template else None
        )
        self.timeout_s = runner.timeout_ms / 1000.0

    @staticmethod
    def _parse_template(template: str) -> List[str]:
        argv = shlex.split(template)
        if not argv:
            raise RunnerNotFoundError("runner command template is empty")
        if shutil.which(argv[0]) is None:
            raise RunnerNotFoundError(
                f"runner command not found: {argv[0]}",
                details={"command_template": template},
            )
        return argv

    @staticmethod
    def _expand(argv: Sequence[str], src: Path, stdin_path: Path) -> List[str]:
        return [
            arg.replace("{src}", str(src)).replace("{stdin}", str(stdin_path))
            for arg in argv
        ]

    @staticmethod
    def _kill_group(process: asyncio.subprocess.Process) -> None:
        """SIGKILL the process and everything it spawned in its session"""
        try:
            if hasattr(os, "killpg"):
                os.killpg(process.pid, signal.SIGKILL)
            else:
                process.kill()
        except ProcessLookupError:
            pass

    async def _execute(
        self,
        argv: List[str],
        stdin_data: Optional[bytes],
        cwd: Path,
    ) -> Tuple[Optional[int], bytes, bytes]:
        """Run one process; returns (exit code or None on timeout, stdout, stderr)"""
        process = await asyncio.create_subprocess_exec(
            *argv,
            stdin=asyncio.subprocess.PIPE if stdin_data is not None else asyncio.subprocess.DEVNULL,
            stdout=asyncio.subprocess.PIPE,
            stderr=asyncio.subprocess.PIPE,
            cwd=str(cwd),
            start_new_session=True,
        )
        try:
            stdout, stderr = await asyncio.wait_for(
                process.communicate(input=stdin_data), timeout=self.timeout_s
            )
        except asyncio.TimeoutError:
            self._kill_group(process)
            await process.wait()
            return None, b"", b""
        return process.returncode, stdout, stderr

    def _is_syntax_failure(self, stderr: str) -> bool:
        return any(marker in stderr for marker in self.runner.syntax_markers)

    async def verify(self, submission: Submission, tests: Sequence[IOCase]) -> VerifierOutcome:
        """
        Verify a submission against its tests

        The first failing test decides the status. A program without tests is
        run once on empty input and passes when it exits cleanly.

        Args:
            submission: Program to run
            tests: stdin/expected stdout cases

        Returns:
            VerifierOutcome with status, last stdout and total elapsed time
        """
        started = time.monotonic()
        cases = list(tests) or [None]
        last_stdout = ""

        with tempfile.TemporaryDirectory(prefix="lineguard_") as workdir:
            work = Path(workdir)
            src = work / f"main{self.runner.source_suffix}"
            src.write_text(submission.source, encoding="utf-8")
            stdin_path = work / "stdin.txt"

            def _elapsed() -> int:
                return int((time.monotonic() - started) * 1000)

            if self.compile_command:
                code, _, stderr = await self._execute(
                    self._expand(self.compile_command, src, stdin_path), None, work
                )
                if code is None:
                    return VerifierOutcome(status=VerifierStatus.TIMEOUT, elapsed_ms=_elapsed())
                if code != 0:
                    logger.debug(f"[VERIFY] {submission.problem_id}/{submission.user_id}: compile failed")
                    return VerifierOutcome(status=VerifierStatus.SYNTAX_ERROR, elapsed_ms=_elapsed())

            uses_stdin_file = any("{stdin}" in arg for arg in self.command)
            argv = self._expand(self.command, src, stdin_path)

            for case in cases:
                stdin_text = case.stdin if case is not None else ""
                stdin_path.write_text(stdin_text, encoding="utf-8")
                stdin_data = None if uses_stdin_file else stdin_text.encode("utf-8")

                code, stdout_raw, stderr_raw = await self._execute(argv, stdin_data, work)
                if code is None:
                    return VerifierOutcome(status=VerifierStatus.TIMEOUT, elapsed_ms=_elapsed())

                last_stdout = stdout_raw.decode("utf-8", errors="replace")
                if code != 0:
                    stderr = stderr_raw.decode("utf-8", errors="replace")
                    status = (
                        VerifierStatus.SYNTAX_ERROR if self._is_syntax_failure(stderr)
                        else VerifierStatus.RUNTIME_ERROR
                    )
                    return VerifierOutcome(status=status, stdout=last_stdout, elapsed_ms=_elapsed())

                if case is not None and not outputs_match(last_stdout, case.expected_stdout):
                    return VerifierOutcome(
                        status=VerifierStatus.WRONG_OUTPUT, stdout=last_stdout, elapsed_ms=_elapsed()
                    )

            return VerifierOutcome(status=VerifierStatus.PASS, stdout=last_stdout, elapsed_ms=_elapsed())


async def verify(submission: Submission, tests: Sequence[IOCase], runner: RunnerConfig) -> VerifierOutcome:
    """Convenience wrapper building a verifier for a single run"""
    return await ProgramVerifier(runner).verify(submission, tests)
