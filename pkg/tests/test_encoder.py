import pytest
import torch

from lineformer.encoder import (
    EncoderConfig,
    SequenceEncoder,
    cls_pool,
    encode_sequences,
    global_embed,
    line_embed,
)
from lineformer.lines import align_batch
from lineformer.tokenizer import encode_batch


def make_encoder(config, seed=0):
    torch.manual_seed(seed)
    return SequenceEncoder(config).eval()


class TestConfig:
    def test_heads_must_divide_hidden(self):
        with pytest.raises(ValueError, match="divisible"):
            EncoderConfig(hidden=30, heads=4)

    def test_dims_positive(self):
        with pytest.raises(ValueError):
            EncoderConfig(layers=0)

    def test_dropout_range(self):
        with pytest.raises(ValueError):
            EncoderConfig(dropout=1.0)


class TestEncodeSequences:
    def test_output_shape(self, desk_encoder_config):
        enc = make_encoder(desk_encoder_config)
        tokens = torch.randint(0, 260, (2, 20))
        mask = torch.ones(2, 20, dtype=torch.long)
        out = encode_sequences(enc, tokens, mask)
        assert out.shape == (2, 20, 32)

    def test_duplicated_row_duplicates_output(self, desk_encoder_config):
        enc = make_encoder(desk_encoder_config)
        row = torch.randint(0, 260, (1, 12))
        tokens = torch.cat([row, row], dim=0)
        mask = torch.ones(2, 12, dtype=torch.long)
        out = enc(tokens, mask)
        assert torch.equal(out[0], out[1])

    def test_masked_positions_cannot_influence_output(self, desk_encoder_config):
        enc = make_encoder(desk_encoder_config)
        tokens = torch.randint(0, 260, (3, 16))
        mask = torch.ones(3, 16, dtype=torch.long)
        mask[:, 10:] = 0
        base = enc(tokens, mask)
        tampered = tokens.clone()
        tampered[:, 10:] = torch.randint(0, 260, (3, 6))
        out = enc(tampered, mask)
        # exact: padded keys get softmax weight 0.0, all other ops are per-position
        assert torch.equal(base[:, :10], out[:, :10])

    def test_deterministic_forward(self, desk_encoder_config):
        enc = make_encoder(desk_encoder_config)
        tokens = torch.randint(0, 260, (2, 9))
        mask = torch.ones(2, 9, dtype=torch.long)
        assert torch.equal(enc(tokens, mask), enc(tokens, mask))

    def test_id_out_of_range(self, desk_encoder_config):
        enc = make_encoder(desk_encoder_config)
        tokens = torch.full((1, 4), 260, dtype=torch.long)
        with pytest.raises(ValueError, match="vocabulary"):
            enc(tokens, torch.ones(1, 4, dtype=torch.long))

    def test_shape_mismatch(self, desk_encoder_config):
        enc = make_encoder(desk_encoder_config)
        with pytest.raises(ValueError, match="shapes differ"):
            enc(torch.zeros(1, 4, dtype=torch.long), torch.ones(1, 5, dtype=torch.long))

    def test_sequence_longer_than_positions(self):
        enc = make_encoder(EncoderConfig(max_positions=8))
        tokens = torch.zeros(1, 9, dtype=torch.long)
        with pytest.raises(ValueError, match="max_positions"):
            enc(tokens, torch.ones(1, 9, dtype=torch.long))


class TestClsPool:
    def test_returns_first_position(self):
        hidden = torch.randn(4, 7, 16)
        assert torch.equal(cls_pool(hidden), hidden[:, 0, :])

    def test_single_row_shape(self):
        assert cls_pool(torch.randn(1, 3, 8)).shape == (1, 8)

    def test_empty_sequence_dimension(self):
        with pytest.raises(ValueError, match="empty"):
            cls_pool(torch.randn(2, 0, 8))

    def test_ignores_later_positions_when_attention_ablated(self, desk_encoder_config):
        # With all layer outputs forced to zero the residual stream carries
        # only embedding + position, so CLS depends on nothing but slot 0.
        enc = make_encoder(desk_encoder_config)
        with torch.no_grad():
            for layer in enc.layers:
                layer.attn.out.weight.zero_()
                layer.attn.out.bias.zero_()
                layer.ffn[2].weight.zero_()
                layer.ffn[2].bias.zero_()
        tokens = torch.randint(0, 260, (1, 10))
        mask = torch.ones(1, 10, dtype=torch.long)
        base = cls_pool(enc(tokens, mask))
        tokens2 = tokens.clone()
        tokens2[:, 1:] = torch.randint(0, 260, (1, 9))
        assert torch.equal(base, cls_pool(enc(tokens2, mask)))


class TestLineEmbed:
    def test_shape_chain(self, tokenizer, desk_encoder_config):
        enc = make_encoder(desk_encoder_config)
        batch = align_batch([["a", "b"], ["c", "d", "e"]], tokenizer, k_cap=5, p=20, pad_to_cap=True)
        out = line_embed(enc, batch)
        assert out.shape == (2, 5, 32)

    def test_rebatching_equivalence(self, tokenizer, desk_encoder_config):
        enc = make_encoder(desk_encoder_config)
        lines = ["int a = 0;", "return a;"]
        alone = line_embed(enc, align_batch([lines], tokenizer, k_cap=4, p=16, pad_to_cap=True))
        pair = line_embed(enc, align_batch([lines, ["x();"]], tokenizer, k_cap=4, p=16, pad_to_cap=True))
        assert torch.allclose(alone[0], pair[0], atol=1e-6)

    def test_permutation_equivariance(self, tokenizer, desk_encoder_config):
        enc = make_encoder(desk_encoder_config)
        lists = [["aa"], ["bb"], ["cc"]]
        batch = align_batch(lists, tokenizer, k_cap=2, p=8, pad_to_cap=True)
        flipped = align_batch(lists[::-1], tokenizer, k_cap=2, p=8, pad_to_cap=True)
        out = line_embed(enc, batch)
        out_flipped = line_embed(enc, flipped)
        assert torch.equal(out.flip(0), out_flipped)


class TestGlobalEmbed:
    def test_shape(self, tokenizer, desk_encoder_config):
        enc = make_encoder(desk_encoder_config)
        batch = encode_batch(["int f;", "long g;", "char h;"], tokenizer, max_len=32)
        assert global_embed(enc, batch).shape == (3, 32)

    def test_identical_snippets_identical_rows(self, tokenizer, desk_encoder_config):
        enc = make_encoder(desk_encoder_config)
        batch = encode_batch(["same text", "same text"], tokenizer, max_len=32)
        out = global_embed(enc, batch)
        assert torch.equal(out[0], out[1])

    def test_truncation_changes_representation(self, tokenizer, desk_encoder_config):
        enc = make_encoder(desk_encoder_config)
        text = "q" * 2000
        short = global_embed(enc, encode_batch([text], tokenizer, max_len=64))
        longer = global_embed(enc, encode_batch([text], tokenizer, max_len=512))
        assert not torch.allclose(short, longer)
