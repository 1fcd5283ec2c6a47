"""
Localization Prompts
Centralized prompt text for locating the first erroneous line of a multi-line diff
"""

import re
from typing import Tuple

from app.schemas.models import LocalizationPrompt, Submission
from app.utils.exceptions import LocalizationAnswerError

LOCALIZATION_INSTRUCTION = (
    "Please act as a senior programmer. Based on the programming question (QUESTION), "
    "identify the erroneous line in the code (RESPONSE 1). Refer to the correct code "
    "(RESPONSE 2) to make the judgment.\n"
    "\n"
    "It is known that (RESPONSE 1) is the incorrect code, and (RESPONSE 2) is the very "
    "similar correct code. Based on your judgment, output the line number of the initial "
    "erroneous line in (RESPONSE 1). Please do not provide any other explanations, just "
    "return the line number of the initial error.\n"
)

LOCALIZATION_NOTE = (
    "**Note**: You must deeply understand the semantic information of the code. When "
    "referencing the correct code, do not perform line-by-line comparison and directly "
    "return the line number of the first differing line.\n"
)

# Fixed text around the three slots, in slot order: question, incorrect, correct
LOCALIZATION_TEMPLATE: Tuple[str, str, str, str] = (
    LOCALIZATION_INSTRUCTION + "\n" + LOCALIZATION_NOTE + "\n[QUESTION]\n",
    "\n\n[RESPONSE 1]\n[The start of RESPONSE 1]\n",
    "\n[The end of RESPONSE 1]\n\n[RESPONSE 2]\n[The start of RESPONSE 2]\n",
    "\n[The end of RESPONSE 2]\n\n[OUTPUT]\n",
)

_FIRST_INTEGER = re.compile(r"-?\d+")


def template_length() -> int:
    return sum(len(part) for part in LOCALIZATION_TEMPLATE)


def emit_localization_prompt(
    question: str,
    erroneous: Submission,
    correct: Submission,
    pair_id: str = "",
) -> LocalizationPrompt:
    """
    Fill the localization template

    Slots are concatenated as-is; braces or other template-looking text in
    the question or sources is never interpreted.
    """
    head, after_question, after_incorrect, tail = LOCALIZATION_TEMPLATE
    text = "".join([
        head, question,
        after_question, "\n".join(erroneous.source_lines),
        after_incorrect, "\n".join(correct.source_lines),
        tail,
    ])
    return LocalizationPrompt(text=text, pair_id=pair_id)


def ingest_localization_answer(raw: str, erroneous: Submission) -> int:
    """
    Parse a localization answer into a 1-based line index

    Args:
        raw: Model answer; the first integer token is taken
        erroneous: Program the index refers to

    Returns:
        Validated line index

    Raises:
        LocalizationAnswerError: No integer, or index outside the program
    """
    match = _FIRST_INTEGER.search(raw)
    if match is None:
        raise LocalizationAnswerError("no line number in localization answer", raw)
    index = int(match.group())
    if not 1 <= index <= len(erroneous.source_lines):
        raise LocalizationAnswerError(
            f"line number {index} outside 1..{len(erroneous.source_lines)}", raw
        )
    return index
