"""
Divisão cronológica, padronização e janelas deslizantes (P histórico, Q alvo).
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from ..activity import ActivityTable, timestamp_features
from ..exceptions import InputFormatError, NumericError, ShapeError
from .series import TrafficSeries

logger = logging.getLogger(__name__)

SPLIT_RATIOS = (0.7, 0.1, 0.2)
MIN_STD = 1e-12


@dataclass(frozen=True)
class Scaler:
    mean: float
    std: float

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.std

    def inverse(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * self.std + self.mean


@dataclass(frozen=True)
class DatasetSplit:
    """Intervalos [início, fim) cronológicos e a padronização calculada no treino."""

    train: Tuple[int, int]
    val: Tuple[int, int]
    test: Tuple[int, int]
    scaler: Scaler

    def range_of(self, name: str) -> Tuple[int, int]:
        try:
            return {'train': self.train, 'val': self.val, 'test': self.test}[name]
        except KeyError:
            raise InputFormatError(f"Partição desconhecida: {name}") from None


def chronological_ranges(n_steps: int, ratios=SPLIT_RATIOS) -> Tuple[Tuple[int, int], ...]:
    """Cortes 70/10/20 por padrão; o teste recebe o resto."""
    train_end = int(n_steps * ratios[0])
    val_end = train_end + int(n_steps * ratios[1])
    return (0, train_end), (train_end, val_end), (val_end, n_steps)


def standardize(series: TrafficSeries, train_range: Tuple[int, int]) -> Tuple[np.ndarray, Scaler]:
    """
    Padroniza pela média e desvio populacional das entradas observadas do treino.

    Returns:
        Tuple[np.ndarray, Scaler]: Valores padronizados (faltantes = 0) e o scaler

    Raises:
        InputFormatError: partição de treino vazia
        NumericError: desvio padrão nulo
    """
    start, stop = train_range
    observed = series.values[start:stop][series.mask[start:stop]]
    if observed.size == 0:
        raise InputFormatError("Partição de treino sem entradas observadas")
    std = float(observed.std())
    if std < MIN_STD:
        raise NumericError("Desvio padrão nulo nos dados de treino; padronização impossível")
    scaler = Scaler(mean=float(observed.mean()), std=std)
    standardized = np.where(series.mask, scaler.transform(series.values), 0.0)
    return standardized, scaler


def make_split(series: TrafficSeries, ratios=SPLIT_RATIOS) -> Tuple[DatasetSplit, np.ndarray]:
    train, val, test = chronological_ranges(series.n_steps, ratios)
    standardized, scaler = standardize(series, train)
    logger.info(
        f"Divisão cronológica: treino {train}, validação {val}, teste {test}; "
        f"média {scaler.mean:.3f}, desvio {scaler.std:.3f}"
    )
    return DatasetSplit(train=train, val=val, test=test, scaler=scaler), standardized


def context_for_bins(bins: np.ndarray, embedding_mode: str, activity: Optional[ActivityTable] = None) -> Optional[np.ndarray]:
    """
    Features de contexto para bins semanais (B, L).

    Returns:
        Optional[np.ndarray]: (B, L, K) da tabela normalizada no modo AE,
        (B, L, 295) no modo TE, None sem embedding de contexto
    """
    if embedding_mode == 'none':
        return None
    bins = np.asarray(bins, dtype=np.int64)
    if embedding_mode == 'AE':
        if activity is None or activity.normalized is None:
            raise InputFormatError("Modo AE requer uma tabela de atividades normalizada")
        return np.transpose(activity.normalized[:, bins], (1, 2, 0))
    return timestamp_features(bins)


def window_starts(data_range: Tuple[int, int], P: int, Q: int) -> np.ndarray:
    """Inícios de janela cujos P+Q passos ficam inteiros dentro do intervalo."""
    start, stop = data_range
    last = stop - (P + Q)
    if last < start:
        return np.zeros(0, dtype=np.int64)
    return np.arange(start, last + 1, dtype=np.int64)


class WindowDataset:
    """
    Monta lotes de janelas a partir da série padronizada.

    O contexto de cada janela vem da tabela de atividades normalizada (AE) ou das
    features de timestamp (TE), indexado pelo bin semanal de cada passo.
    """

    def __init__(
        self,
        series: TrafficSeries,
        standardized: np.ndarray,
        P: int,
        Q: int,
        embedding_mode: str = 'AE',
        activity: Optional[ActivityTable] = None,
    ):
        if standardized.shape != series.values.shape:
            raise ShapeError(f"Série padronizada {standardized.shape} != {series.values.shape}")
        if embedding_mode == 'AE' and (activity is None or activity.normalized is None):
            raise InputFormatError("Modo AE requer uma tabela de atividades normalizada")
        self.series = series
        self.standardized = standardized
        self.P = P
        self.Q = Q
        self.embedding_mode = embedding_mode
        self.activity = activity
        self.bins = series.weekly_bins

    def context(self, starts: np.ndarray) -> Optional[np.ndarray]:
        if self.embedding_mode == 'none':
            return None
        steps = starts[:, None] + np.arange(self.P + self.Q)
        return context_for_bins(self.bins[steps], self.embedding_mode, self.activity)

    def batch(self, starts) -> Dict[str, np.ndarray]:
        starts = np.asarray(starts, dtype=np.int64)
        history_idx = starts[:, None] + np.arange(self.P)
        target_idx = starts[:, None] + self.P + np.arange(self.Q)
        return {
            'history': self.standardized[history_idx],
            'target': self.standardized[target_idx],
            'target_mph': self.series.values[target_idx],
            'mask': self.series.mask[target_idx],
            'history_mph': self.series.values[history_idx],
            'history_mask': self.series.mask[history_idx],
            'context': self.context(starts),
        }
