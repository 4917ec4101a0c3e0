"""
Gerador do conjunto sintético em anel usado para verificação de ponta a ponta.

Sensores ficam sobre uma via expressa circular de mão única ligada a um nó
central por vias locais de mão dupla. A velocidade livre é 60 mph; pulsos de
congestionamento se propagam para o sensor seguinte com um passo de atraso e
decaem, e sua frequência acompanha duas curvas de atividade diárias (manhã e
fim de tarde).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
import pandas as pd

from ..exceptions import InputFormatError
from ..geodata import RoadEdge, RoadGraph, RoadNode, Sensor, haversine_miles
from .series import STEP_MINUTES, TrafficSeries

logger = logging.getLogger(__name__)

START_DATE = '2012-03-05'  # segunda-feira
CENTER = (34.05, -118.25)
RING_RADIUS_MILES = 5.0
FREE_FLOW_MPH = 60.0
MIN_SPEED_MPH = 5.0
MISSING_RATE = 0.02
NOISE_MPH = 1.0
PULSE_BASE_RATE = 0.002
PULSE_ACTIVITY_RATE = 0.03
PULSE_MAGNITUDE = (10.0, 25.0)
PULSE_DECAY = 0.6
PULSE_REACH = 4
ACTIVITY_DRAG_MPH = 12.0
MORNING_PEAK_MINUTE = 7 * 60 + 30
EVENING_PEAK_MINUTE = 17 * 60 + 30
MORNING_CATEGORY = 2  # work
EVENING_CATEGORY = 1  # home
SURVEY_ROWS_PER_DAY = 400
PULSE_COLUMNS = ['step', 'sensor', 'magnitude']


@dataclass
class SyntheticDataset:
    series: TrafficSeries
    graph: RoadGraph
    sensors: List[Sensor]
    survey_rows: List[Tuple[int, int, int]]
    pulses: pd.DataFrame
    seed: int
    sensitivity: np.ndarray = field(repr=False, default=None)


def activity_curves(minutes_of_day: np.ndarray, weekdays: np.ndarray) -> np.ndarray:
    """Intensidades (T, 2) das curvas de manhã e de fim de tarde, em [0, 1]."""
    morning = np.exp(-0.5 * ((minutes_of_day - MORNING_PEAK_MINUTE) / 45.0) ** 2)
    evening = np.exp(-0.5 * ((minutes_of_day - EVENING_PEAK_MINUTE) / 60.0) ** 2)
    weekend = np.where(weekdays >= 5, 0.3, 1.0)
    return np.stack([morning * weekend, evening * weekend], axis=1)


def ring_sensitivity(n_sensors: int) -> np.ndarray:
    """Primeira metade do anel reage à curva da manhã; a segunda, à do fim de tarde."""
    sensitivity = np.zeros((n_sensors, 2))
    half = n_sensors // 2
    sensitivity[:half, 0] = 1.0
    sensitivity[half:, 1] = 1.0
    return sensitivity


def ring_network(n_sensors: int) -> Tuple[RoadGraph, List[Sensor]]:
    lat0, lon0 = CENTER
    lon_scale = 69.09 * math.cos(math.radians(lat0))
    nodes = [RoadNode('hub', lat0, lon0)]
    for i in range(n_sensors):
        angle = 2.0 * math.pi * i / n_sensors
        nodes.append(RoadNode(
            f"r{i}",
            lat0 + RING_RADIUS_MILES * math.sin(angle) / 69.09,
            lon0 + RING_RADIUS_MILES * math.cos(angle) / lon_scale,
        ))

    coords = {n.node_id: (n.lat, n.lon) for n in nodes}
    edges = []
    for i in range(n_sensors):
        a, b = f"r{i}", f"r{(i + 1) % n_sensors}"
        edges.append(RoadEdge(f"ring-{i}", a, b, haversine_miles(coords[a], coords[b]), True))
        spoke = haversine_miles(coords[a], coords['hub']) * 1.2
        edges.append(RoadEdge(f"spoke-{i}", a, 'hub', spoke, False))
        edges.append(RoadEdge(f"spoke-{i}r", 'hub', a, spoke, False))

    graph = RoadGraph(nodes, edges)
    sensors = [Sensor(f"s{i}", coords[f"r{i}"][0], coords[f"r{i}"][1]) for i in range(n_sensors)]
    return graph, sensors


def replay_speeds(
    pulses: pd.DataFrame,
    curves: np.ndarray,
    sensitivity: np.ndarray,
    seed: int,
    noise_mph: float = NOISE_MPH,
) -> np.ndarray:
    """
    Reconstrói as velocidades a partir do cronograma de pulsos.

    Um pulso de magnitude m no sensor i e passo t deprime a velocidade em
    m·0.6^k no sensor i+k e passo t+k (k < 4). O ruído vem do mesmo fluxo
    pseudoaleatório do gerador, então a reconstrução é exata.
    """
    n_steps, n_sensors = curves.shape[0], sensitivity.shape[0]
    depression = np.zeros((n_steps, n_sensors))
    for step, sensor, magnitude in pulses[PULSE_COLUMNS].itertuples(index=False, name=None):
        for k in range(PULSE_REACH):
            if step + k >= n_steps:
                break
            depression[step + k, (sensor + k) % n_sensors] += magnitude * PULSE_DECAY ** k

    drag = ACTIVITY_DRAG_MPH * curves @ sensitivity.T
    noise = np.random.default_rng([seed, 1]).normal(0.0, 1.0, size=(n_steps, n_sensors)) * noise_mph
    return np.clip(FREE_FLOW_MPH - depression - drag + noise, MIN_SPEED_MPH, None)


def _survey(rng: np.random.Generator, n_days: int) -> List[Tuple[int, int, int]]:
    rows = []
    n_rows = SURVEY_ROWS_PER_DAY * max(n_days, 1)
    categories = rng.choice([MORNING_CATEGORY, EVENING_CATEGORY], size=n_rows)
    weekdays = rng.integers(0, 7, size=n_rows)
    centers = np.where(categories == MORNING_CATEGORY, MORNING_PEAK_MINUTE, EVENING_PEAK_MINUTE)
    spread = np.where(categories == MORNING_CATEGORY, 45.0, 60.0)
    minutes = np.clip(np.rint(rng.normal(centers, spread)), 0, 24 * 60 - 1).astype(int)
    for category, weekday, minute in zip(categories, weekdays, minutes):
        rows.append((int(category), int(weekday), int(minute)))
    return rows


def make_synthetic_dataset(n_sensors: int, n_days: int, seed: int) -> SyntheticDataset:
    """
    Gera série, rede, sensores, pesquisa de atividades e cronograma de pulsos.

    Cada componente usa um fluxo pseudoaleatório próprio derivado da semente, de
    modo que a mesma semente reproduz tudo bit a bit.

    Raises:
        InputFormatError: n_sensors < 4 ou n_days < 1
    """
    if n_sensors < 4:
        raise InputFormatError(f"O anel sintético requer ao menos 4 sensores: {n_sensors}")
    if n_days < 1:
        raise InputFormatError(f"n_days deve ser positivo: {n_days}")

    graph, sensors = ring_network(n_sensors)
    n_steps = n_days * 24 * 60 // STEP_MINUTES
    timestamps = pd.date_range(START_DATE, periods=n_steps, freq=f'{STEP_MINUTES}min')
    minutes = np.asarray(timestamps.hour * 60 + timestamps.minute, dtype=np.float64)
    curves = activity_curves(minutes, np.asarray(timestamps.weekday))
    sensitivity = ring_sensitivity(n_sensors)

    pulse_rng = np.random.default_rng([seed, 0])
    rate = PULSE_BASE_RATE + PULSE_ACTIVITY_RATE * (curves @ sensitivity.T)
    hits = pulse_rng.random((n_steps, n_sensors)) < rate
    magnitudes = pulse_rng.uniform(*PULSE_MAGNITUDE, size=(n_steps, n_sensors))
    steps, sensor_index = np.nonzero(hits)
    pulses = pd.DataFrame({
        'step': steps.astype(np.int64),
        'sensor': sensor_index.astype(np.int64),
        'magnitude': magnitudes[steps, sensor_index],
    })

    values = replay_speeds(pulses, curves, sensitivity, seed)
    mask = np.random.default_rng([seed, 2]).random((n_steps, n_sensors)) >= MISSING_RATE
    values = np.where(mask, values, 0.0)

    series = TrafficSeries(
        timestamps=pd.DatetimeIndex(timestamps),
        sensor_ids=tuple(s.sensor_id for s in sensors),
        values=values,
        mask=mask,
    )
    survey = _survey(np.random.default_rng([seed, 3]), n_days)
    logger.info(
        f"Conjunto sintético: {n_sensors} sensores, {n_days} dias, {len(pulses)} pulsos, "
        f"{int((~mask).sum())} entradas faltantes"
    )
    return SyntheticDataset(
        series=series,
        graph=graph,
        sensors=sensors,
        survey_rows=survey,
        pulses=pulses,
        seed=seed,
        sensitivity=sensitivity,
    )


def write_pulses_csv(pulses: pd.DataFrame, target):
    frame = pulses[PULSE_COLUMNS].copy()
    frame['magnitude'] = [repr(float(v)) for v in frame['magnitude']]
    frame.to_csv(target, index=False, lineterminator='\n')


def read_pulses_csv(source) -> pd.DataFrame:
    try:
        frame = pd.read_csv(source, dtype={'step': np.int64, 'sensor': np.int64, 'magnitude': np.float64})
    except (ValueError, pd.errors.ParserError) as e:
        raise InputFormatError(f"pulses.csv: conteúdo inválido ({e})") from None
    if list(frame.columns) != PULSE_COLUMNS:
        raise InputFormatError(f"pulses.csv: cabeçalho inválido {list(frame.columns)}")
    return frame
