"""
EmbeddingBank - embeddings de sensor (SE), de atividade (AE) ou de timestamp (TE)
e as projeções de entrada e saída.
"""

from typing import Optional

import numpy as np

from ..engine import Tensor, add, as_tensor, embedding_lookup, relu, reshape, slice_tensor
from ..exceptions import ShapeError
from .config import ModelConfig
from .layers import Dense, LayerNorm, Module

SE_INIT_STD = 0.01


class ContextMLP(Module):
    """Duas camadas densas seguidas de normalização: F → D → D."""

    def __init__(self, name: str, in_dim: int, hidden_dim: int, rng: np.random.Generator):
        super().__init__(name)
        self.first = self.add_child(Dense(f"{name}.dense1", in_dim, hidden_dim, rng))
        self.second = self.add_child(Dense(f"{name}.dense2", hidden_dim, hidden_dim, rng))
        self.norm = self.add_child(LayerNorm(f"{name}.norm", hidden_dim))

    def __call__(self, x) -> Tensor:
        return self.norm(self.second(relu(self.first(x))))


class EmbeddingBank(Module):
    """
    Parâmetros compartilhados por codificador e decodificador.

    A entrada de cada passo é proj(x_t) + SE + contexto_t, omitindo os termos
    desligados pela configuração.
    """

    def __init__(self, config: ModelConfig, rng: np.random.Generator):
        super().__init__('embedding')
        self.config = config
        D = config.hidden_dim

        self.sensor = None
        if config.use_sensor_embedding:
            self.sensor = self.add_param('sensor', rng.normal(0.0, SE_INIT_STD, size=(config.n_sensors, D)))

        self.context = None
        if config.embedding_mode == 'AE':
            self.context = self.add_child(ContextMLP('embedding.activity', config.n_activity, D, rng))
        elif config.embedding_mode == 'TE':
            self.context = self.add_child(ContextMLP('embedding.timestamp', config.context_dim, D, rng))

        self.input_projection = self.add_child(Dense('embedding.input', 1, D, rng))
        self.output_projection = self.add_child(Dense('embedding.output', D, 1, rng))

    def context_vectors(self, features) -> Optional[Tensor]:
        """
        Aplica o MLP de contexto a todos os passos de uma vez.

        Args:
            features: (B, P+Q, F) janelas de atividade ou features de timestamp

        Returns:
            Tensor (B, P+Q, D) ou None quando não há embedding temporal
        """
        if self.context is None:
            return None
        if features is None:
            raise ShapeError(f"Modo {self.config.embedding_mode} requer features de contexto")
        features = as_tensor(features)
        expected = self.config.P + self.config.Q
        if features.ndim != 3 or features.shape[1:] != (expected, self.config.context_dim):
            raise ShapeError(
                f"Features de contexto {features.shape}, esperado (B, {expected}, {self.config.context_dim})"
            )
        return self.context(features)

    def sensor_vectors(self) -> Optional[Tensor]:
        if self.sensor is None:
            return None
        return embedding_lookup(self.sensor, np.arange(self.config.n_sensors))

    def step_input(self, x_t, context_t: Optional[Tensor] = None, sensor_vectors: Optional[Tensor] = None) -> Tensor:
        """
        Monta a entrada de um passo (build_step_input).

        Args:
            x_t: Valores (B, N, 1) padronizados
            context_t: Vetor de contexto (B, D) do passo, ou None
            sensor_vectors: SE (N, D), ou None

        Returns:
            Tensor: (B, N, D)
        """
        x_t = as_tensor(x_t)
        if x_t.ndim != 3 or x_t.shape[1:] != (self.config.n_sensors, 1):
            raise ShapeError(f"step_input: x_t {x_t.shape}, esperado (B, {self.config.n_sensors}, 1)")
        out = self.input_projection(x_t)
        if sensor_vectors is not None:
            out = add(out, sensor_vectors)
        if context_t is not None:
            out = add(out, reshape(context_t, (context_t.shape[0], 1, context_t.shape[-1])))
        return out

    def context_at(self, context: Optional[Tensor], step: int) -> Optional[Tensor]:
        if context is None:
            return None
        return slice_tensor(context, (slice(None), step))


def build_step_input(bank: EmbeddingBank, x_t, embedding_vec_t: Optional[Tensor] = None) -> Tensor:
    """Atalho funcional para EmbeddingBank.step_input com o SE do próprio banco."""
    return bank.step_input(x_t, embedding_vec_t, bank.sensor_vectors())
