"""
Baseline LastRepeat.
"""

from typing import Optional

import numpy as np

from ..exceptions import InputFormatError, ShapeError


def last_repeat(history, Q: int, mask: Optional[np.ndarray] = None, fallback: float = 0.0) -> np.ndarray:
    """
    Repete o último valor observado de cada sensor nos Q passos futuros.

    Args:
        history: (P, N) ou (B, P, N)
        Q (int): Passos a prever
        mask: Observação de cada entrada do histórico (None = tudo observado)
        fallback (float): Valor usado quando o sensor não tem nenhuma observação
            no histórico (a média do conjunto de dados)

    Returns:
        np.ndarray: (Q, N) ou (B, Q, N)
    """
    history = np.asarray(history, dtype=np.float64)
    squeeze = history.ndim == 2
    if squeeze:
        history = history[None]
        mask = None if mask is None else np.asarray(mask)[None]
    if history.ndim != 3:
        raise ShapeError(f"last_repeat: histórico {history.shape}, esperado (P, N) ou (B, P, N)")
    if history.shape[1] < 1:
        raise InputFormatError("last_repeat requer P >= 1")
    if mask is None:
        mask = np.ones(history.shape, dtype=bool)
    elif mask.shape != history.shape:
        raise ShapeError(f"last_repeat: máscara {mask.shape} != histórico {history.shape}")

    P = history.shape[1]
    # índice do último passo observado, -1 quando nenhum
    positions = np.where(mask, np.arange(P)[None, :, None], -1).max(axis=1)
    picked = np.take_along_axis(history, np.maximum(positions, 0)[:, None, :], axis=1)[:, 0, :]
    last = np.where(positions >= 0, picked, fallback)

    result = np.repeat(last[:, None, :], Q, axis=1)
    return result[0] if squeeze else result
