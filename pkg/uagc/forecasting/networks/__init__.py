from .config import ARCHITECTURES, EMBEDDING_MODES, ModelConfig
from .layers import (
    Dense,
    DualWalkGraphConv,
    GraphOperators,
    LayerNorm,
    Module,
    diffusion_terms,
    dual_walk_gconv,
)
from .embedding import EmbeddingBank, build_step_input
from .base import BaseForecaster
from .recurrent import GCGRUCell, LSTMCell, UAGCRN, gcgru_cell, teacher_forcing_probability
from .transformer import UAGCTransformer, positional_encoding
from .checkpoint import Checkpoint, load_checkpoint, read_checkpoint, save_model, write_checkpoint
from .factory import build_model, count_parameters, model_from_checkpoint

__all__ = [
    'ARCHITECTURES',
    'EMBEDDING_MODES',
    'ModelConfig',
    'Dense',
    'DualWalkGraphConv',
    'GraphOperators',
    'LayerNorm',
    'Module',
    'diffusion_terms',
    'dual_walk_gconv',
    'EmbeddingBank',
    'build_step_input',
    'BaseForecaster',
    'GCGRUCell',
    'LSTMCell',
    'UAGCRN',
    'gcgru_cell',
    'teacher_forcing_probability',
    'UAGCTransformer',
    'positional_encoding',
    'Checkpoint',
    'load_checkpoint',
    'read_checkpoint',
    'save_model',
    'write_checkpoint',
    'build_model',
    'count_parameters',
    'model_from_checkpoint',
]
