"""
Verificação de gradientes por diferenças finitas centrais.
"""

from typing import Callable, Optional, Sequence

import numpy as np

from .tensor import Tape, Tensor, backward

FINITE_DIFFERENCE_STEP = 1e-5
NORM_FLOOR = 1e-6


def numerical_gradient(
    fn: Callable[[], Tensor],
    tensor: Tensor,
    coordinates: np.ndarray,
    h: float = FINITE_DIFFERENCE_STEP,
) -> np.ndarray:
    """Derivada central de fn() em relação às coordenadas (planas) indicadas do tensor."""
    flat = tensor.value.reshape(-1)
    result = np.zeros(len(coordinates), dtype=np.float64)
    for k, index in enumerate(coordinates):
        original = flat[index]
        flat[index] = original + h
        plus = float(fn().value.sum())
        flat[index] = original - h
        minus = float(fn().value.sum())
        flat[index] = original
        result[k] = (plus - minus) / (2.0 * h)
    return result


def gradcheck(
    fn: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    h: float = FINITE_DIFFERENCE_STEP,
    max_coordinates: Optional[int] = None,
    seed: int = 0,
) -> float:
    """
    Compara o gradiente analítico com o numérico para cada entrada.

    Args:
        fn: Função sem argumentos que devolve uma perda escalar
        inputs: Tensores com requires_grad a verificar
        h (float): Passo das diferenças finitas
        max_coordinates (int): Limite de coordenadas sorteadas por entrada
        seed (int): Semente do sorteio de coordenadas

    Returns:
        float: Maior erro relativo ||analítico - numérico|| / max(||analítico||, ||numérico||)
    """
    for tensor in inputs:
        tensor.zero_grad()
    with Tape() as tape:
        loss = fn()
    backward(tape, loss)

    rng = np.random.default_rng(seed)
    worst = 0.0
    for tensor in inputs:
        coordinates = np.arange(tensor.size)
        if max_coordinates is not None and tensor.size > max_coordinates:
            coordinates = np.sort(rng.choice(tensor.size, size=max_coordinates, replace=False))
        analytic = (tensor.grad if tensor.grad is not None else np.zeros_like(tensor.value)).reshape(-1)[coordinates]
        numeric = numerical_gradient(fn, tensor, coordinates, h)
        scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), NORM_FLOOR)
        worst = max(worst, float(np.linalg.norm(analytic - numeric) / scale))
    return worst
