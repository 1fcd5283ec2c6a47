"""
Tests for n-gram similarity, line diffing and prefix slicing
"""

import pytest

from app.corpus.diffing import counterpart_index, diff_line_indices, first_divergence, lcs_alignment, slice_pair
from app.corpus.similarity import jaccard, ngram_set, normalize_lines, program_similarity, tokenize_code
from app.schemas.models import CodePair, DivergenceSource, Label, Split, Submission
from app.utils.exceptions import NoDivergenceError, SliceError


def test_normalize_lines_strips_and_drops_trailing_blanks():
    assert normalize_lines("a = 1  \r\nb = 2\n\n\n") == ["a = 1", "b = 2"]


def test_tokenize_code_splits_identifiers_and_symbols():
    assert tokenize_code("if a[i]>=b:") == ["if", "a", "[", "i", "]", ">", "=", "b", ":"]


def test_ngram_set_and_jaccard():
    grams = ngram_set(["a = b + c"], 3)
    assert grams == {("a", "=", "b"), ("=", "b", "+"), ("b", "+", "c")}
    assert ngram_set(["a b"], 3) == set()
    assert jaccard(set(), set()) == 1.0
    assert jaccard({1, 2}, {2, 3}) == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        ngram_set(["a"], 0)


def test_program_similarity_is_symmetric():
    a = ["x = int(input())", "print(x + 1)"]
    b = ["x = int(input())", "print(x - 1)"]
    assert program_similarity(a, b) == program_similarity(b, a)
    assert program_similarity(a, a) == 1.0


def test_positional_diff_for_equal_lengths():
    assert diff_line_indices(["a", "b", "c"], ["a", "x", "y"]) == [2, 3]
    assert diff_line_indices(["a", "b"], ["a", "b"]) == []


def test_lcs_alignment():
    assert lcs_alignment(["a", "b", "c"], ["a", "c"]) == [(0, 0), (2, 1)]


def test_diff_with_inserted_line():
    correct = ["a", "b", "c"]
    erroneous = ["a", "b", "extra", "c"]
    assert diff_line_indices(correct, erroneous) == [3]


def test_diff_with_deleted_line():
    correct = ["a", "b", "c", "d"]
    erroneous = ["a", "c", "d"]
    # the missing "b" is reported where the erroneous program continues
    assert diff_line_indices(correct, erroneous) == [2]
    assert diff_line_indices(["a", "b"], ["a"]) == [2]


def test_first_divergence():
    assert first_divergence([7, 3, 5]) == 3
    with pytest.raises(NoDivergenceError):
        first_divergence([])


def submission(lines, verdict="correct") -> Submission:
    return Submission(problem_id="p1", user_id="u1", verdict=verdict, source_lines=lines)


def code_pair(correct, erroneous, divergence, indices=None, source=DivergenceSource.POSITIONAL_DIFF) -> CodePair:
    return CodePair(
        pair_id="p1/u1/0",
        correct=submission(correct),
        erroneous=submission(erroneous, "incorrect"),
        jaccard=0.95,
        diff_indices=indices if indices is not None else [divergence],
        divergence_line=divergence,
        divergence_source=source,
    )


def test_slice_pair_differs_only_in_final_line():
    pair = code_pair(["a = 1", "b = 2", "print(a + b)"], ["a = 1", "b = 3", "print(a + b)"], 2)
    correct, incorrect = slice_pair(pair, question="Add.", split=Split.VALIDATION)

    assert correct.prefix_lines == ["a = 1", "b = 2"]
    assert incorrect.prefix_lines == ["a = 1", "b = 3"]
    assert (correct.label, incorrect.label) == (Label.CORRECT, Label.INCORRECT)
    assert correct.split == incorrect.split == Split.VALIDATION
    assert correct.to_record() == {
        "problem_id": "p1",
        "question": "Add.",
        "prefix_lines": ["a = 1", "b = 2"],
        "label": 1,
        "pair_id": "p1/u1/0",
        "split": "validation",
    }


def test_slice_at_first_line_has_single_line_prefixes():
    pair = code_pair(["x = 1", "print(x)"], ["x = 2", "print(x)"], 1)
    correct, incorrect = slice_pair(pair)
    assert correct.prefix_lines == ["x = 1"]
    assert incorrect.prefix_lines == ["x = 2"]


def test_slice_shares_the_erroneous_head_for_localized_cuts():
    pair = code_pair(
        ["n = 1", "m = 2", "print(n + m)"],
        ["n = 1", "m = 5", "print(n * m)"],
        3,
        indices=[2, 3],
        source=DivergenceSource.LLM_LOCALIZED,
    )
    correct, incorrect = slice_pair(pair)
    assert correct.prefix_lines == ["n = 1", "m = 5", "print(n + m)"]
    assert incorrect.prefix_lines == ["n = 1", "m = 5", "print(n * m)"]


def test_slice_rejects_out_of_range_and_degenerate_cuts():
    with pytest.raises(SliceError) as excinfo:
        slice_pair(code_pair(["a", "b"], ["a", "b", "z"], 3))
    assert excinfo.value.details["reason"] == "divergence_out_of_range"

    with pytest.raises(SliceError) as excinfo:
        slice_pair(code_pair(["a", "b"], ["a", "b", "z"], 3, [3], DivergenceSource.LLM_LOCALIZED))
    assert excinfo.value.details["reason"] == "no_counterpart"

    with pytest.raises(SliceError) as excinfo:
        slice_pair(code_pair(["a", "b", "c"], ["a", "b", "d"], 2, [3], DivergenceSource.MANUAL))
    assert excinfo.value.details["reason"] == "degenerate_slice"


def test_code_pair_validates_divergence():
    with pytest.raises(ValueError):
        code_pair(["a"], ["b"], 1, indices=[])
    with pytest.raises(ValueError):
        code_pair(["a", "b"], ["a", "c"], 5, indices=[2])


def test_divergence_source_defaults_to_positional():
    pair = code_pair(["a", "b"], ["a", "c"], 2)
    assert pair.divergence_source == DivergenceSource.POSITIONAL_DIFF


def test_localized_cut_after_an_insertion_uses_the_aligned_correct_line():
    correct = ["a = 1", "b = 2", "c = a + b", "print(c)"]
    erroneous = ["a = 1", "x = 0", "b = 2", "c = a - b", "print(c)"]
    assert diff_line_indices(correct, erroneous) == [2, 4]

    pair = code_pair(correct, erroneous, 4, indices=[2, 4], source=DivergenceSource.LLM_LOCALIZED)
    correct_fragment, incorrect_fragment = slice_pair(pair)
    assert correct_fragment.prefix_lines == ["a = 1", "x = 0", "b = 2", "c = a + b"]
    assert incorrect_fragment.prefix_lines == ["a = 1", "x = 0", "b = 2", "c = a - b"]


def test_localized_cut_beyond_the_correct_length():
    correct = ["a = 1", "b = 2", "print(c)"]
    erroneous = ["a = 1", "x = 0", "y = 0", "b = 2", "print(d)"]
    pair = code_pair(correct, erroneous, 5, indices=[2, 3, 5], source=DivergenceSource.LLM_LOCALIZED)

    correct_fragment, incorrect_fragment = slice_pair(pair)
    assert correct_fragment.prefix_lines[-1] == "print(c)"
    assert incorrect_fragment.prefix_lines[-1] == "print(d)"
    assert correct_fragment.prefix_lines[:-1] == erroneous[:4]


def test_counterpart_index():
    assert counterpart_index(["a", "b"], ["a", "x"], 1) == 1
    # deleted "b": the line after the gap faces the first missing line
    assert counterpart_index(["a", "b", "c"], ["a", "c"], 1) == 1
    # inserted "x": faces the next aligned correct line
    assert counterpart_index(["a", "b"], ["a", "x", "b"], 1) == 1
    assert counterpart_index(["a", "b"], ["a", "b", "z"], 2) is None


@pytest.mark.parametrize("correct, erroneous", [
    (["a", "b", "c", "d"], ["a", "c", "d"]),
    (["a", "b", "c"], ["a", "b", "extra", "c"]),
    (["a = 1", "b = 2", "c = a + b", "print(c)"], ["a = 1", "x = 0", "b = 2", "c = a - b", "print(c)"]),
    (["n = 1", "m = 2", "print(n)"], ["n = 1", "m = 3", "print(m)"]),
    (["p", "q"], ["r", "p", "s", "q", "t"]),
])
def test_dropping_diff_lines_leaves_a_subsequence_of_the_correct_program(correct, erroneous):
    indices = set(diff_line_indices(correct, erroneous))
    kept = [line for i, line in enumerate(erroneous, 1) if i not in indices]
    remaining = iter(correct)
    assert all(line in remaining for line in kept)
