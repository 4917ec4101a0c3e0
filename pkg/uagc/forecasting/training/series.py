"""
Série de velocidades por sensor e seu formato CSV.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..exceptions import InputFormatError, ShapeError

logger = logging.getLogger(__name__)

STEP_MINUTES = 5
TIMESTAMP_FORMAT = '%Y-%m-%dT%H:%M:%S'


@dataclass(frozen=True, eq=False)
class TrafficSeries:
    """
    Velocidades T × N em mph com máscara de observação (True = observado).

    Entradas faltantes guardam 0.0 em `values`; só `mask` diz o que é válido.
    """

    timestamps: pd.DatetimeIndex
    sensor_ids: Tuple[str, ...]
    values: np.ndarray = field(repr=False)
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        expected = (len(self.timestamps), len(self.sensor_ids))
        if self.values.shape != expected or self.mask.shape != expected:
            raise ShapeError(
                f"TrafficSeries: values {self.values.shape} / mask {self.mask.shape}, esperado {expected}"
            )
        if not np.isfinite(self.values[self.mask]).all():
            raise InputFormatError("TrafficSeries: valor não finito em entrada observada")

    @property
    def n_steps(self) -> int:
        return len(self.timestamps)

    @property
    def n_sensors(self) -> int:
        return len(self.sensor_ids)

    @property
    def weekly_bins(self) -> np.ndarray:
        """Bin semanal (segunda 00:00 = 0) de cada timestamp."""
        minutes = self.timestamps.hour * 60 + self.timestamps.minute
        return np.asarray(self.timestamps.weekday * 288 + minutes // STEP_MINUTES, dtype=np.int64)

    def observed_mean(self) -> float:
        return float(self.values[self.mask].mean()) if self.mask.any() else 0.0


def check_spacing(timestamps: pd.DatetimeIndex, step_minutes: int = STEP_MINUTES):
    """Exige timestamps estritamente crescentes com espaçamento fixo."""
    if len(timestamps) < 2:
        return
    deltas = np.diff(timestamps.asi8)
    expected = pd.Timedelta(minutes=step_minutes).value
    bad = np.flatnonzero(deltas != expected)
    if bad.size:
        line = int(bad[0]) + 3
        raise InputFormatError(
            f"traffic.csv: espaçamento irregular na linha {line} "
            f"({timestamps[bad[0]]} -> {timestamps[bad[0] + 1]}), esperado {step_minutes} min"
        )


def load_traffic_csv(
    source,
    sensor_ids: Optional[Sequence[str]] = None,
    zero_is_missing: bool = True,
    step_minutes: int = STEP_MINUTES,
) -> TrafficSeries:
    """
    Lê `timestamp,<sensor_id>,...` com timestamps ISO-8601.

    Args:
        source: Caminho ou stream
        sensor_ids: Ordem esperada das colunas (a do sensors.csv)
        zero_is_missing (bool): Trata velocidade 0 como falha do sensor
        step_minutes (int): Espaçamento exigido entre linhas

    Returns:
        TrafficSeries: Células vazias (e zeros, se configurado) ficam mascaradas

    Raises:
        InputFormatError: cabeçalho fora da ordem dos sensores, timestamp inválido,
            espaçamento irregular ou valor não numérico
    """
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False, encoding='utf-8')
    except pd.errors.EmptyDataError:
        raise InputFormatError("traffic.csv: arquivo vazio") from None
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise InputFormatError(f"traffic.csv: linha malformada ({e})") from None

    columns = list(frame.columns)
    if not columns or columns[0] != 'timestamp' or len(columns) < 2:
        raise InputFormatError(f"traffic.csv: cabeçalho inválido {columns}")
    columns_ids = tuple(columns[1:])
    if sensor_ids is not None and tuple(sensor_ids) != columns_ids:
        raise InputFormatError(
            "traffic.csv: colunas de sensores não correspondem à ordem do sensors.csv"
        )
    if len(frame) == 0:
        raise InputFormatError("traffic.csv: nenhuma linha de dados")

    try:
        timestamps = pd.DatetimeIndex(pd.to_datetime(frame['timestamp'], format='ISO8601'))
    except (ValueError, TypeError) as e:
        raise InputFormatError(f"traffic.csv: timestamp inválido ({e})") from None
    check_spacing(timestamps, step_minutes)

    raw = frame[list(columns_ids)].to_numpy()
    mask = raw != ''
    values = np.zeros(raw.shape, dtype=np.float64)
    try:
        values[mask] = raw[mask].astype(np.float64)
    except ValueError as e:
        raise InputFormatError(f"traffic.csv: valor não numérico ({e})") from None
    if not np.isfinite(values[mask]).all():
        row = int(np.argwhere(mask & ~np.isfinite(values))[0][0]) + 2
        raise InputFormatError(f"traffic.csv: valor não finito na linha {row}")
    if zero_is_missing:
        mask &= values != 0.0
    values[~mask] = 0.0

    series = TrafficSeries(timestamps=timestamps, sensor_ids=columns_ids, values=values, mask=mask)
    logger.info(
        f"Série carregada: {series.n_steps} passos, {series.n_sensors} sensores, "
        f"{int((~mask).sum())} entradas faltantes"
    )
    return series


def write_traffic_csv(series: TrafficSeries, target):
    """Escreve a série; entradas faltantes ficam vazias e valores em representação de ida e volta."""
    frame = pd.DataFrame({'timestamp': series.timestamps.strftime(TIMESTAMP_FORMAT)})
    for j, sensor_id in enumerate(series.sensor_ids):
        column = series.values[:, j]
        frame[sensor_id] = [repr(float(v)) if ok else '' for v, ok in zip(column, series.mask[:, j])]
    frame.to_csv(target, index=False, lineterminator='\n')
