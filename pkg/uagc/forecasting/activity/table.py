"""
Tabela semanal de frequência de atividades humanas (H) e feature de timestamp.

Bin 0 corresponde a segunda-feira 00:00–00:05; a semana tem 7 × 288 = 2016 bins.
"""

import logging
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.ndimage import gaussian_filter1d

from ..exceptions import InputFormatError, ShapeError

logger = logging.getLogger(__name__)

BIN_MINUTES = 5
BINS_PER_DAY = 288
DAYS_PER_WEEK = 7
BINS_PER_WEEK = DAYS_PER_WEEK * BINS_PER_DAY
TIMESTAMP_FEATURE_SIZE = DAYS_PER_WEEK + BINS_PER_DAY
STD_EPSILON = 1e-12
DEFAULT_SIGMA_BINS = 2.0

DEFAULT_LABELS = (
    'home',
    'work',
    'school',
    'shopping',
    'social_recreation',
    'errands',
    'transport_others',
    'meals',
    'other',
)

SURVEY_COLUMNS = ['category', 'weekday', 'start_minute']


@dataclass(frozen=True, eq=False)
class ActivityTable:
    """
    Frequências por categoria (linhas) e bin semanal (colunas).

    `raw` guarda as frequências (contagens ou já suavizadas); `normalized` é a
    versão padronizada por categoria usada como entrada do modelo.
    """

    labels: Tuple[str, ...]
    raw: np.ndarray = field(repr=False)
    normalized: Optional[np.ndarray] = field(default=None, repr=False)
    centered: bool = True

    def __post_init__(self):
        if self.raw.shape != (len(self.labels), BINS_PER_WEEK):
            raise ShapeError(
                f"ActivityTable: esperado {(len(self.labels), BINS_PER_WEEK)}, recebido {self.raw.shape}"
            )
        if self.normalized is not None and self.normalized.shape != self.raw.shape:
            raise ShapeError(f"ActivityTable: normalizada com shape {self.normalized.shape}")

    @property
    def n_categories(self) -> int:
        return len(self.labels)

    @property
    def n_bins(self) -> int:
        return BINS_PER_WEEK


def weekly_bin(timestamp) -> int:
    """Bin semanal (0..2015) do instante, arredondando para baixo no bin de 5 minutos."""
    if isinstance(timestamp, str):
        try:
            timestamp = datetime.fromisoformat(timestamp)
        except ValueError:
            raise InputFormatError(f"Timestamp inválido: {timestamp!r}") from None
    if not isinstance(timestamp, datetime):
        try:
            timestamp = pd.Timestamp(timestamp).to_pydatetime()
        except (TypeError, ValueError):
            raise InputFormatError(f"Timestamp inválido: {timestamp!r}") from None
    slot = (timestamp.hour * 60 + timestamp.minute) // BIN_MINUTES
    return timestamp.weekday() * BINS_PER_DAY + slot


def build_histogram(survey_rows: Iterable[Sequence[int]], labels: Sequence[str] = DEFAULT_LABELS) -> ActivityTable:
    """
    Histograma semanal a partir de linhas (categoria 1..K, dia 0..6, minuto 0..1439).

    Args:
        survey_rows: Linhas da pesquisa de atividades
        labels: Rótulos das K categorias

    Returns:
        ActivityTable: Contagens brutas, sem normalização

    Raises:
        InputFormatError: campo fora do intervalo (com o índice da linha)
    """
    labels = tuple(labels)
    n_categories = len(labels)
    counts = np.zeros((n_categories, BINS_PER_WEEK), dtype=np.float64)

    for index, row in enumerate(survey_rows):
        try:
            category, weekday, start_minute = (int(value) for value in row)
        except (TypeError, ValueError):
            raise InputFormatError(f"Pesquisa de atividades: linha {index} malformada") from None
        if not 1 <= category <= n_categories:
            raise InputFormatError(f"Pesquisa de atividades: categoria fora do intervalo na linha {index}: {category}")
        if not 0 <= weekday < DAYS_PER_WEEK:
            raise InputFormatError(f"Pesquisa de atividades: weekday fora do intervalo na linha {index}: {weekday}")
        if not 0 <= start_minute < 24 * 60:
            raise InputFormatError(f"Pesquisa de atividades: minuto fora do intervalo na linha {index}: {start_minute}")
        counts[category - 1, weekday * BINS_PER_DAY + start_minute // BIN_MINUTES] += 1.0

    logger.info(f"Histograma de atividades: {int(counts.sum())} registros em {n_categories} categorias")
    return ActivityTable(labels=labels, raw=counts)


def smooth_histogram(table: ActivityTable, sigma_bins: float = DEFAULT_SIGMA_BINS) -> ActivityTable:
    """
    Suavização gaussiana circular ao longo da semana (kernel truncado em ±4σ e
    de massa unitária), preservando a massa de cada categoria.
    """
    if not sigma_bins > 0:
        raise InputFormatError(f"sigma de suavização deve ser positivo: {sigma_bins}")
    smoothed = gaussian_filter1d(table.raw, sigma=sigma_bins, axis=1, mode='wrap', truncate=4.0)
    return ActivityTable(labels=table.labels, raw=smoothed)


def normalize_activity(table: ActivityTable, center: bool = True) -> ActivityTable:
    """
    Padroniza cada categoria pelo desvio padrão populacional.

    Args:
        table (ActivityTable): Tabela suavizada
        center (bool): Subtrai a média da linha; False divide apenas pelo desvio

    Returns:
        ActivityTable: Mesma tabela com `normalized` preenchida; linhas com
        desvio < 1e-12 ficam zeradas
    """
    raw = table.raw
    std = raw.std(axis=1, keepdims=True)
    flat = std[:, 0] < STD_EPSILON
    shifted = raw - raw.mean(axis=1, keepdims=True) if center else raw
    normalized = np.divide(shifted, std, out=np.zeros_like(raw), where=~flat[:, None])
    if flat.any():
        logger.warning(f"{int(flat.sum())} categorias de atividade constantes foram zeradas")
    return ActivityTable(labels=table.labels, raw=raw, normalized=normalized, centered=center)


def slice_window(table: ActivityTable, timestamp, P: int, Q: int, step_minutes: int = BIN_MINUTES) -> np.ndarray:
    """
    Valores normalizados de H para os P passos históricos e os Q futuros.

    O instante informado é o último passo histórico (t); a janela cobre
    t-P+1 .. t+Q e indexa a tabela semanal em módulo 2016.

    Returns:
        np.ndarray: Matriz (P+Q) × K
    """
    if table.normalized is None:
        raise InputFormatError("slice_window requer uma tabela normalizada")
    if P < 0 or Q < 0 or P + Q < 1:
        raise InputFormatError(f"Janela inválida: P={P}, Q={Q}")
    if step_minutes <= 0 or step_minutes % BIN_MINUTES:
        raise InputFormatError(f"step_minutes deve ser múltiplo de {BIN_MINUTES}: {step_minutes}")
    stride = step_minutes // BIN_MINUTES
    last = weekly_bin(timestamp)
    offsets = np.arange(-(P - 1), Q + 1) * stride
    return table.normalized[:, (last + offsets) % BINS_PER_WEEK].T.copy()


def window_bins(last_bins: np.ndarray, P: int, Q: int, stride: int = 1) -> np.ndarray:
    """Versão vetorizada para lotes: bins (B, P+Q) a partir do bin do último passo histórico."""
    offsets = np.arange(-(P - 1), Q + 1) * stride
    return (np.asarray(last_bins, dtype=np.int64)[:, None] + offsets) % BINS_PER_WEEK


def timestamp_feature(timestamp) -> np.ndarray:
    """One-hot do dia da semana (segunda = 0) concatenado ao one-hot do slot de 5 minutos."""
    position = weekly_bin(timestamp)
    feature = np.zeros(TIMESTAMP_FEATURE_SIZE, dtype=np.float64)
    feature[position // BINS_PER_DAY] = 1.0
    feature[DAYS_PER_WEEK + position % BINS_PER_DAY] = 1.0
    return feature


def timestamp_features(bins: np.ndarray) -> np.ndarray:
    """Features de timestamp para um array de bins semanais: shape (..., 295)."""
    bins = np.asarray(bins, dtype=np.int64) % BINS_PER_WEEK
    features = np.zeros(bins.shape + (TIMESTAMP_FEATURE_SIZE,), dtype=np.float64)
    np.put_along_axis(features, (bins // BINS_PER_DAY)[..., None], 1.0, axis=-1)
    np.put_along_axis(features, (DAYS_PER_WEEK + bins % BINS_PER_DAY)[..., None], 1.0, axis=-1)
    return features
