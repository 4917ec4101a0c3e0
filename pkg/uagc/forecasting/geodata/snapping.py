import math
import logging
from dataclasses import replace
from typing import List

import numpy as np

from ..exceptions import InputFormatError
from .road_graph import RoadGraph, Sensor, haversine_miles, haversine_miles_array

logger = logging.getLogger(__name__)

# Folga relativa para considerar duas distâncias empatadas
TIE_TOLERANCE = 1e-12


def snap_sensors(graph: RoadGraph, sensors: List[Sensor]) -> List[Sensor]:
    """
    Associa cada sensor ao nó do grafo mais próximo (haversine).

    Empates são resolvidos pelo menor node_id em ordem lexicográfica.

    Args:
        graph (RoadGraph): Rede viária não vazia
        sensors (list): Sensores com coordenadas

    Returns:
        list: Novos Sensor com snapped_node e snap_distance_miles preenchidos
    """
    if len(graph) == 0:
        raise InputFormatError("Não é possível associar sensores a um grafo vazio")

    lats, lons = graph.coordinates
    node_ids = graph.node_ids
    snapped = []
    for sensor in sensors:
        if not (math.isfinite(sensor.lat) and math.isfinite(sensor.lon)):
            raise InputFormatError(f"Sensor {sensor.sensor_id} com coordenadas não finitas")

        distances = haversine_miles_array(sensor.lat, sensor.lon, lats, lons)
        best = distances.min()
        candidates = np.flatnonzero(distances <= best * (1.0 + TIE_TOLERANCE) + 1e-15)
        node_id = min(node_ids[i] for i in candidates)
        node = graph.node(node_id)
        distance = haversine_miles((sensor.lat, sensor.lon), (node.lat, node.lon))
        snapped.append(replace(sensor, snapped_node=node_id, snap_distance_miles=distance))

    far = [s for s in snapped if s.snap_distance_miles > 0.5]
    if far:
        logger.warning(f"{len(far)} sensores ficaram a mais de 0.5 mi do nó associado")
    logger.info(f"{len(snapped)} sensores associados à rede viária")
    return snapped
