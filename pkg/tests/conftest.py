import pytest

from lineformer.encoder import EncoderConfig
from lineformer.model import ModelConfig, PipelineConfig
from lineformer.structure import StructureConfig
from lineformer.tokenizer import ByteTokenizer


@pytest.fixture
def tokenizer():
    return ByteTokenizer()


@pytest.fixture
def desk_encoder_config():
    return EncoderConfig(vocab_size=260, hidden=32, layers=2, heads=4, ffn=64, max_positions=1024, dropout=0.0)


@pytest.fixture
def desk_structure_config():
    return StructureConfig(hidden=32, layers=2, heads=4, ffn=64, max_lines=128, dropout=0.0)


@pytest.fixture
def desk_model_config(desk_encoder_config, desk_structure_config):
    return ModelConfig(encoder=desk_encoder_config, structure=desk_structure_config)


@pytest.fixture
def desk_pipeline():
    return PipelineConfig(max_len=256, tokens_per_line=20, max_lines=100)
