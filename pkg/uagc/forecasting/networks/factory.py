from .base import BaseForecaster
from .checkpoint import Checkpoint
from .config import ModelConfig
from .recurrent import UAGCRN
from .transformer import UAGCTransformer


def build_model(config: ModelConfig, adjacency=None) -> BaseForecaster:
    """Instancia a arquitetura indicada na configuração."""
    if config.is_transformer:
        return UAGCTransformer(config, adjacency)
    return UAGCRN(config, adjacency)


def count_parameters(config: ModelConfig) -> int:
    """Total de escalares treináveis (não depende da adjacência)."""
    return build_model(config).n_parameters


def model_from_checkpoint(checkpoint: Checkpoint, adjacency=None) -> BaseForecaster:
    model = build_model(checkpoint.config, adjacency)
    model.load_state_dict(checkpoint.params)
    return model
