import dataclasses
import time

import pytest
import torch

from lineformer.encoder import EncoderConfig
from lineformer.head import bce_loss
from lineformer.model import ModelConfig, PipelineConfig, build_model, prepare_inputs
from lineformer.structure import StructureConfig
from lineformer.synthetic import make_synthetic_corpus
from lineformer.train import set_seed


@pytest.fixture
def small_pipeline():
    return PipelineConfig(max_len=256, tokens_per_line=20, max_lines=5)


def make_model(desk_model_config, seed=123456):
    set_seed(seed)
    return build_model(desk_model_config)


def forward_on(model, snippets, tokenizer, pipeline, gates=(1.0, 1.0, 1.0)):
    inputs = prepare_inputs(snippets, tokenizer, pipeline)
    output = model(inputs, branch_gates=gates)
    return inputs, output


class TestShapes:
    def test_full_chain(self, desk_model_config, tokenizer, small_pipeline):
        start = time.time()
        model = make_model(desk_model_config).eval()
        snippets = make_synthetic_corpus(2)
        _, out = forward_on(model, snippets, tokenizer, small_pipeline)
        assert out.line_embeddings.shape == (2, 5, 32)
        assert out.structure_vec.shape == (2, 32)
        assert out.sensitive.vector.shape == (2, 32)
        assert out.global_vec.shape == (2, 32)
        assert out.probability.shape == (2,)
        assert ((out.probability > 0) & (out.probability < 1)).all()
        assert time.time() - start < 1.0

    def test_forward_deterministic(self, desk_model_config, tokenizer, small_pipeline):
        model = make_model(desk_model_config).eval()
        snippets = make_synthetic_corpus(3)
        _, first = forward_on(model, snippets, tokenizer, small_pipeline)
        _, second = forward_on(model, snippets, tokenizer, small_pipeline)
        assert torch.equal(first.probability, second.probability)

    def test_hidden_size_mismatch_rejected(self):
        with pytest.raises(ValueError, match="must match"):
            ModelConfig(encoder=EncoderConfig(hidden=32), structure=StructureConfig(hidden=64, heads=4))

    def test_empty_batch_rejected(self, tokenizer, small_pipeline):
        with pytest.raises(ValueError, match="empty"):
            prepare_inputs([], tokenizer, small_pipeline)


class TestDetachIsolation:
    def ablated_backward(self, model, tokenizer, pipeline):
        snippets = make_synthetic_corpus(4)
        inputs, out = forward_on(model, snippets, tokenizer, pipeline, gates=(1.0, 0.0, 0.0))
        bce_loss(inputs.labels, out.probability).backward()

    def grads(self, module):
        return [p.grad for p in module.parameters()]

    def test_line_encoder_gets_zero_gradient_with_detach(self, desk_model_config, tokenizer, small_pipeline):
        model = make_model(desk_model_config)
        self.ablated_backward(model, tokenizer, small_pipeline)
        for grad in self.grads(model.line_encoder):
            assert grad is None or (grad == 0).all()
        assert any(g is not None and g.abs().sum() > 0 for g in self.grads(model.structure))

    def test_removing_detach_leaks_gradient(self, desk_model_config, tokenizer, small_pipeline):
        config = dataclasses.replace(desk_model_config, use_detach=False)
        model = make_model(config)
        self.ablated_backward(model, tokenizer, small_pipeline)
        assert any(g is not None and g.abs().sum() > 0 for g in self.grads(model.line_encoder))

    def test_sensitive_branch_trains_line_encoder(self, desk_model_config, tokenizer, small_pipeline):
        # structure and global contributions ablated: gradient must still
        # reach the line encoder through the selected line vector
        model = make_model(desk_model_config)
        snippets = make_synthetic_corpus(4)
        inputs, out = forward_on(model, snippets, tokenizer, small_pipeline, gates=(0.0, 1.0, 0.0))
        bce_loss(inputs.labels, out.probability).backward()
        assert any(g is not None and g.abs().sum() > 0 for g in self.grads(model.line_encoder))


class TestBatchInvariance:
    def test_probabilities_stable_across_batch_sizes(self, desk_model_config, tokenizer):
        pipeline = PipelineConfig(max_len=256, tokens_per_line=20, max_lines=10, pad_to_cap=True)
        model = make_model(desk_model_config).eval()
        snippets = make_synthetic_corpus(8)
        with torch.no_grad():
            _, batched = forward_on(model, snippets, tokenizer, pipeline)
            singles = []
            for snippet in snippets:
                _, out = forward_on(model, [snippet], tokenizer, pipeline)
                singles.append(out.probability)
        assert torch.allclose(batched.probability, torch.cat(singles), atol=1e-4)


def test_score_preserves_training_mode(desk_model_config, tokenizer, small_pipeline):
    model = make_model(desk_model_config)
    model.train()
    model.score(make_synthetic_corpus(2), tokenizer, small_pipeline)
    assert model.training
