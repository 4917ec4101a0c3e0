"""
Métricas mascaradas (MAE, RMSE, MAPE) por passo de horizonte, em mph.
"""

from dataclasses import dataclass
from typing import Dict, Iterable

import numpy as np

from ..engine import Tensor, abs_, mul, sub, sum_
from ..exceptions import InputFormatError, ShapeError

REPORT_HORIZONS = (3, 6)


@dataclass(frozen=True)
class HorizonMetrics:
    horizon_step: int
    mae: float
    rmse: float
    mape_percent: float


def _masked(pred: np.ndarray, truth: np.ndarray, mask: np.ndarray) -> HorizonMetrics:
    observed = mask.astype(bool)
    if not observed.any():
        return HorizonMetrics(0, float('nan'), float('nan'), float('nan'))
    error = pred[observed] - truth[observed]
    mae = float(np.abs(error).mean())
    rmse = float(np.sqrt(np.square(error).mean()))
    nonzero = truth[observed] != 0
    if nonzero.any():
        mape = float((np.abs(error[nonzero]) / np.abs(truth[observed][nonzero])).mean() * 100.0)
    else:
        mape = float('nan')
    return HorizonMetrics(0, mae, rmse, mape)


def masked_metrics(pred, truth, mask, horizons: Iterable[int]) -> Dict[int, HorizonMetrics]:
    """
    Métricas sobre as entradas observadas em cada passo pedido (1 = primeiro).

    Args:
        pred, truth, mask: Arrays (Q, N) ou (B, Q, N) na escala original
        horizons: Passos de horizonte, 1-indexados

    Returns:
        Dict[int, HorizonMetrics]: Métricas indefinidas (máscara vazia) viram NaN

    Raises:
        ShapeError: shapes diferentes
        InputFormatError: passo fora de 1..Q
    """
    pred, truth, mask = np.asarray(pred, dtype=np.float64), np.asarray(truth, dtype=np.float64), np.asarray(mask)
    if pred.shape != truth.shape or pred.shape != mask.shape:
        raise ShapeError(f"masked_metrics: shapes {pred.shape}, {truth.shape}, {mask.shape}")
    if pred.ndim == 2:
        pred, truth, mask = pred[None], truth[None], mask[None]
    Q = pred.shape[1]

    result = {}
    for step in horizons:
        if not 1 <= step <= Q:
            raise InputFormatError(f"Passo de horizonte fora de 1..{Q}: {step}")
        metrics = _masked(pred[:, step - 1], truth[:, step - 1], mask[:, step - 1])
        result[step] = HorizonMetrics(step, metrics.mae, metrics.rmse, metrics.mape_percent)
    return result


def report_horizons(Q: int) -> tuple:
    """Passos 3, 6 e o último, sem repetição e limitados a Q."""
    return tuple(sorted({h for h in REPORT_HORIZONS if h <= Q} | {Q}))


def masked_mae_loss(prediction: Tensor, target: np.ndarray, mask: np.ndarray) -> Tensor:
    """MAE sobre entradas observadas, diferenciável; sem entradas observadas devolve 0."""
    weights = mask.astype(np.float64)
    count = weights.sum()
    difference = abs_(sub(prediction, target))
    total = sum_(mul(difference, weights))
    return mul(total, 1.0 / count if count > 0 else 0.0)
