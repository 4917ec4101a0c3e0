"""
Otimizador Adam com correção de viés.
"""

import logging
from typing import Dict, Iterable, Optional, Tuple

import numpy as np

from ..exceptions import NumericError
from .tensor import Parameter

logger = logging.getLogger(__name__)


def adam_update(
    value: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    step_count: int,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Um passo de Adam para um único array.

    Args:
        step_count (int): Número do passo, começando em 1

    Returns:
        Tuple: (novo valor, novo primeiro momento, novo segundo momento)
    """
    m = beta1 * m + (1.0 - beta1) * grad
    v = beta2 * v + (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1 ** step_count)
    v_hat = v / (1.0 - beta2 ** step_count)
    return value - lr * m_hat / (np.sqrt(v_hat) + eps), m, v


class Adam:
    """
    Adam sobre os parâmetros treináveis de um modelo.

    Os momentos ficam indexados pelo nome do parâmetro, o que permite salvar e
    restaurar o estado junto com o checkpoint.
    """

    def __init__(
        self,
        params: Iterable[Parameter],
        lr: float = 0.01,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = [p for p in params if p.trainable]
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m: Dict[str, np.ndarray] = {p.name: np.zeros_like(p.value) for p in self.params}
        self.v: Dict[str, np.ndarray] = {p.name: np.zeros_like(p.value) for p in self.params}

    def zero_grad(self):
        for param in self.params:
            param.zero_grad()

    def step(self, lr: Optional[float] = None):
        """
        Aplica um passo a todos os parâmetros; gradiente ausente conta como zero.

        Raises:
            NumericError: gradiente não finito (com o nome do parâmetro)
        """
        lr = self.lr if lr is None else lr
        for param in self.params:
            if param.grad is not None and not np.isfinite(param.grad).all():
                raise NumericError(f"Gradiente não finito no parâmetro {param.name}")

        self.step_count += 1
        for param in self.params:
            grad = param.grad if param.grad is not None else np.zeros_like(param.value)
            param.value, self.m[param.name], self.v[param.name] = adam_update(
                param.value,
                grad,
                self.m[param.name],
                self.v[param.name],
                self.step_count,
                lr,
                self.beta1,
                self.beta2,
                self.eps,
            )
