import logging
from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from ..engine import Tensor, active_tape
from ..exceptions import ShapeError
from .config import ModelConfig
from .embedding import EmbeddingBank
from .layers import GraphOperators, Module


class BaseForecaster(Module, ABC):
    """
    Classe base abstrata para os modelos de previsão de tráfego.

    Fornece funcionalidades comuns como:
    - Inicialização determinística dos parâmetros a partir da semente da configuração
    - Banco de embeddings compartilhado (SE, AE/TE, projeções)
    - Validação das entradas e predição sem gravação de gradientes
    - Logging padronizado
    """

    def __init__(self, config: ModelConfig, adjacency=None):
        """
        Inicializa o modelo base.

        Args:
            config (ModelConfig): Hiperparâmetros do modelo
            adjacency: SensorAdjacency ou GraphOperators (obrigatório nas arquiteturas com grafo)
        """
        super().__init__('')
        self.config = config
        self.logger = logging.getLogger(self.__class__.__name__)
        self.operators: Optional[GraphOperators] = None

        rng = np.random.default_rng(config.seed)
        self.bank = self.add_child(EmbeddingBank(config, rng))
        self.build(rng)

        if adjacency is not None:
            self.set_adjacency(adjacency)
        self.logger.info(
            f"Modelo {self.__class__.__name__} ({config.architecture}) inicializado com "
            f"{self.n_parameters} parâmetros"
        )

    @abstractmethod
    def build(self, rng: np.random.Generator):
        """Cria as camadas específicas da arquitetura."""
        pass

    @abstractmethod
    def forward(self, history, context=None, teacher=None, iteration: int = 0, rng=None) -> Tensor:
        """
        Executa o modelo.

        Args:
            history: (B, P, N) valores padronizados, faltantes preenchidos com 0
            context: (B, P+Q, F) features de atividade ou de timestamp
            teacher: (B, Q, N) alvos padronizados para teacher forcing, ou None
            iteration (int): Número do lote, usado pela amostragem programada
            rng: Gerador para a amostragem programada

        Returns:
            Tensor: (B, Q, N, 1)
        """
        pass

    @property
    def n_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters() if p.trainable))

    def set_adjacency(self, adjacency):
        operators = adjacency if isinstance(adjacency, GraphOperators) else GraphOperators.from_adjacency(adjacency)
        if operators.n_sensors != self.config.n_sensors:
            raise ShapeError(
                f"Adjacência com {operators.n_sensors} sensores, modelo configurado para {self.config.n_sensors}"
            )
        self.operators = operators

    def require_operators(self) -> GraphOperators:
        if self.operators is None:
            raise ShapeError(f"Arquitetura {self.config.architecture} requer uma adjacência")
        return self.operators

    def check_inputs(self, history, teacher=None):
        history = np.asarray(history, dtype=np.float64)
        expected = (self.config.P, self.config.n_sensors)
        if history.ndim != 3 or history.shape[1:] != expected:
            raise ShapeError(f"history {history.shape}, esperado (B, {expected[0]}, {expected[1]})")
        if teacher is not None:
            teacher = np.asarray(teacher, dtype=np.float64)
            if teacher.shape != (history.shape[0], self.config.Q, self.config.n_sensors):
                raise ShapeError(
                    f"teacher {teacher.shape}, esperado ({history.shape[0]}, {self.config.Q}, {self.config.n_sensors})"
                )
        return history, teacher

    def predict(self, history, context=None) -> np.ndarray:
        """Previsão (B, Q, N) padronizada, sem teacher forcing e fora de qualquer fita."""
        if active_tape() is not None:
            raise RuntimeError("predict não deve ser chamado com uma fita ativa")
        return self.forward(history, context).value[..., 0]

    def state_dict(self) -> dict:
        return {name: param.value.copy() for name, param in self.named_parameters()}

    def load_state_dict(self, state: dict):
        params = dict(self.named_parameters())
        missing = set(params) - set(state)
        unexpected = set(state) - set(params)
        if missing or unexpected:
            raise ShapeError(
                f"Parâmetros não correspondem: faltando {sorted(missing)}, inesperados {sorted(unexpected)}"
            )
        for name, value in state.items():
            value = np.asarray(value, dtype=np.float64)
            if value.shape != params[name].shape:
                raise ShapeError(f"Parâmetro {name}: shape {value.shape}, esperado {params[name].shape}")
            params[name].value = np.ascontiguousarray(value)
