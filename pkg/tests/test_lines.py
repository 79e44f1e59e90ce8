import numpy as np
import pytest
from hypothesis import given, strategies as st

from lineformer.lines import align_batch, alignment_records, split_lines
from lineformer.tokenizer import CLS_ID, PAD_ID


class TestSplitLines:
    def test_simple(self):
        assert split_lines("a\nb") == ["a", "b"]

    def test_blank_line_retained(self):
        assert split_lines("a\n\nb") == ["a", "", "b"]

    def test_trailing_newline_consumed_indentation_kept(self):
        assert split_lines("  x();\n") == ["  x();"]

    def test_empty_text_is_one_blank_line(self):
        assert split_lines("") == [""]

    @given(st.lists(st.text(alphabet="ab \t", max_size=5), min_size=1, max_size=8))
    def test_join_round_trip(self, lines):
        # A trailing blank line is indistinguishable from a trailing newline,
        # which split_lines consumes; interior blanks always survive.
        if lines[-1] == "":
            lines = lines + ["x"]
        assert split_lines("\n".join(lines)) == lines


class TestAlignBatch:
    def test_k_follows_batch_max(self, tokenizer):
        batch = align_batch([["a"] * 3, ["b"] * 5], tokenizer, k_cap=100, p=20)
        assert batch.lines_per_snippet == 5
        assert batch.tokens.shape == (2, 5, 20)
        assert batch.token_mask.shape == (2, 5, 20)
        assert batch.line_mask.shape == (2, 5)
        # snippet 0 has two padding lines, fully masked and PAD-filled
        assert batch.line_mask[0].tolist() == [1, 1, 1, 0, 0]
        assert (batch.tokens[0, 3:] == PAD_ID).all()
        assert (batch.token_mask[0, 3:] == 0).all()

    def test_k_cap_truncates_long_snippets(self, tokenizer):
        batch = align_batch([["x"] * 120, ["y"] * 4], tokenizer, k_cap=100, p=20)
        assert batch.lines_per_snippet == 100
        assert batch.line_mask[0].sum() == 100
        assert batch.line_mask[1].sum() == 4

    def test_long_line_truncated_to_p(self, tokenizer):
        from lineformer.tokenizer import TokenSeq

        line = "x" * 30
        batch = align_batch([[line]], tokenizer, k_cap=10, p=20)
        assert batch.tokens.shape == (1, 1, 20)
        assert batch.tokens[0, 0, 0] == CLS_ID
        assert (batch.token_mask[0, 0] == 1).all()
        assert batch.line_truncated[0, 0]
        seq = TokenSeq(tuple(batch.tokens[0, 0]), tuple(batch.token_mask[0, 0]), True)
        assert tokenizer.decode(seq) == line[:19]

    def test_real_lines_start_with_cls(self, tokenizer):
        batch = align_batch([["a", "bb"], ["ccc"]], tokenizer, k_cap=10, p=8)
        for i in range(2):
            for j in range(batch.lines_per_snippet):
                if batch.line_mask[i, j]:
                    assert batch.tokens[i, j, 0] == CLS_ID

    def test_decode_reproduces_line_prefix(self, tokenizer):
        lines = ["  if (n > cap)", "    return -1;", ""]
        batch = align_batch([lines], tokenizer, k_cap=10, p=8)
        from lineformer.tokenizer import TokenSeq

        for j, line in enumerate(lines):
            seq = TokenSeq(tuple(batch.tokens[0, j]), tuple(batch.token_mask[0, j]), False)
            assert line.startswith(tokenizer.decode(seq))

    def test_rebatching_rows_are_stable(self, tokenizer):
        lines = ["int a;", "int b;", "call();"]
        alone = align_batch([lines], tokenizer, k_cap=10, p=12)
        together = align_batch([lines, ["x"] * 3], tokenizer, k_cap=10, p=12)
        assert alone.lines_per_snippet == together.lines_per_snippet == 3
        np.testing.assert_array_equal(alone.tokens[0], together.tokens[0])
        np.testing.assert_array_equal(alone.token_mask[0], together.token_mask[0])

    def test_pad_to_cap_pins_k(self, tokenizer):
        batch = align_batch([["a"]], tokenizer, k_cap=7, p=4, pad_to_cap=True)
        assert batch.lines_per_snippet == 7
        assert batch.line_mask[0].tolist() == [1, 0, 0, 0, 0, 0, 0]

    def test_errors(self, tokenizer):
        with pytest.raises(ValueError, match="empty batch"):
            align_batch([], tokenizer)
        with pytest.raises(ValueError, match="zero lines"):
            align_batch([[]], tokenizer)
        with pytest.raises(ValueError, match="k_cap"):
            align_batch([["a"]], tokenizer, k_cap=0)
        with pytest.raises(ValueError, match="p must be"):
            align_batch([["a"]], tokenizer, p=1)


def test_alignment_records(tokenizer):
    line_lists = [["a", "b" * 40], ["c"]]
    batch = align_batch(line_lists, tokenizer, k_cap=10, p=8)
    records = alignment_records(batch, line_lists, ids=[11, 12])
    assert records[0] == {
        "id": 11,
        "lines_total": 2,
        "lines_kept": 2,
        "k": 2,
        "p": 8,
        "line_truncated": [False, True],
    }
    assert records[1]["lines_kept"] == 1
