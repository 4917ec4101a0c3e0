"""
Tipos do grafo viário dirigido e consultas de distância.

O grafo é imutável depois de construído; as consultas de distância são
reentrantes e podem ser compartilhadas entre threads.
"""

import math
import logging
from dataclasses import dataclass
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra

from ..exceptions import InputFormatError

logger = logging.getLogger(__name__)

EARTH_RADIUS_MILES = 3958.8
MILES_PER_DEGREE_LAT = 69.09


@dataclass(frozen=True)
class RoadNode:
    node_id: str
    lat: float
    lon: float


@dataclass(frozen=True)
class RoadEdge:
    edge_id: str
    from_node: str
    to_node: str
    length_miles: float
    is_freeway: bool

    def cost(self, freeway_coefficient: float = 1.0) -> float:
        """Custo de percorrer a aresta com o coeficiente de freeway informado."""
        if self.is_freeway:
            return self.length_miles * freeway_coefficient
        return self.length_miles


@dataclass(frozen=True)
class Sensor:
    sensor_id: str
    lat: float
    lon: float
    snapped_node: Optional[str] = None
    snap_distance_miles: Optional[float] = None

    @property
    def is_snapped(self) -> bool:
        return self.snapped_node is not None


def haversine_miles(a: Tuple[float, float], b: Tuple[float, float]) -> float:
    """
    Distância de grande círculo entre dois pontos (lat, lon) em milhas.

    Args:
        a: Par (lat, lon) em graus
        b: Par (lat, lon) em graus

    Returns:
        float: Distância em milhas (raio da Terra 3958.8)
    """
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    h = (math.sin((lat2 - lat1) / 2.0) ** 2
         + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2.0) ** 2)
    return 2.0 * EARTH_RADIUS_MILES * math.asin(math.sqrt(min(1.0, h)))


def haversine_miles_array(lat: float, lon: float, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    """Versão vetorizada: distância de um ponto para vários pontos."""
    lat1, lon1 = np.radians(lat), np.radians(lon)
    lat2, lon2 = np.radians(lats), np.radians(lons)
    h = (np.sin((lat2 - lat1) / 2.0) ** 2
         + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2.0) ** 2)
    return 2.0 * EARTH_RADIUS_MILES * np.arcsin(np.sqrt(np.minimum(1.0, h)))


class RoadGraph:
    """
    Rede viária dirigida: nós com coordenadas e arestas com comprimento em milhas.

    Uma rua de mão dupla é representada por duas arestas dirigidas.
    """

    def __init__(self, nodes: Iterable[RoadNode], edges: Iterable[RoadEdge]):
        node_map = {}
        for node in nodes:
            if node.node_id in node_map:
                raise InputFormatError(f"node_id duplicado: {node.node_id}")
            if not (math.isfinite(node.lat) and math.isfinite(node.lon)):
                raise InputFormatError(f"Coordenadas não finitas no nó {node.node_id}")
            if not (-90.0 <= node.lat <= 90.0 and -180.0 <= node.lon <= 180.0):
                raise InputFormatError(f"Coordenadas fora do intervalo no nó {node.node_id}")
            node_map[node.node_id] = node

        edge_map = {}
        out = {node_id: [] for node_id in node_map}
        for edge in edges:
            if edge.edge_id in edge_map:
                raise InputFormatError(f"edge_id duplicado: {edge.edge_id}")
            for endpoint in (edge.from_node, edge.to_node):
                if endpoint not in node_map:
                    raise InputFormatError(
                        f"Aresta {edge.edge_id} referencia nó inexistente: {endpoint}"
                    )
            if not (math.isfinite(edge.length_miles) and edge.length_miles > 0):
                raise InputFormatError(
                    f"Comprimento não positivo na aresta {edge.edge_id}: {edge.length_miles}"
                )
            edge_map[edge.edge_id] = edge
            out[edge.from_node].append(edge)

        self._nodes = node_map
        self._edges = edge_map
        self._out = {
            node_id: tuple(sorted(node_edges, key=lambda e: e.edge_id))
            for node_id, node_edges in out.items()
        }
        self.node_ids: Tuple[str, ...] = tuple(node_map)
        self._index = {node_id: i for i, node_id in enumerate(self.node_ids)}

    @property
    def nodes(self):
        return MappingProxyType(self._nodes)

    @property
    def edges(self):
        return MappingProxyType(self._edges)

    def __len__(self):
        return len(self._nodes)

    def __eq__(self, other):
        if not isinstance(other, RoadGraph):
            return NotImplemented
        return self._nodes == other._nodes and self._edges == other._edges

    def __repr__(self):
        return f"RoadGraph(|V|={len(self._nodes)}, |E|={len(self._edges)})"

    def node(self, node_id: str) -> RoadNode:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise InputFormatError(f"Nó desconhecido: {node_id}") from None

    def index_of(self, node_id: str) -> int:
        try:
            return self._index[node_id]
        except KeyError:
            raise InputFormatError(f"Nó desconhecido: {node_id}") from None

    def out_edges(self, node_id: str) -> Tuple[RoadEdge, ...]:
        self.node(node_id)
        return self._out[node_id]

    def out_degree(self, node_id: str) -> int:
        return len(self.out_edges(node_id))

    @cached_property
    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        lats = np.array([n.lat for n in self._nodes.values()], dtype=np.float64)
        lons = np.array([n.lon for n in self._nodes.values()], dtype=np.float64)
        return lats, lons

    def cost_matrix(self, freeway_coefficient: float = 1.0) -> sparse.csr_matrix:
        """
        Matriz esparsa |V|×|V| de custos dirigidos.

        Arestas paralelas ficam com o menor custo.
        """
        best = {}
        for edge in self._edges.values():
            key = (self._index[edge.from_node], self._index[edge.to_node])
            cost = edge.cost(freeway_coefficient)
            if key not in best or cost < best[key]:
                best[key] = cost
        n = len(self._nodes)
        if not best:
            return sparse.csr_matrix((n, n), dtype=np.float64)
        keys = sorted(best)
        rows = np.array([k[0] for k in keys], dtype=np.int64)
        cols = np.array([k[1] for k in keys], dtype=np.int64)
        values = np.array([best[k] for k in keys], dtype=np.float64)
        return sparse.csr_matrix((values, (rows, cols)), shape=(n, n))

    @cached_property
    def length_matrix(self) -> sparse.csr_matrix:
        return self.cost_matrix(1.0)

    @cached_property
    def heuristic_scale(self) -> float:
        """
        Menor razão comprimento/distância em linha reta entre as arestas, limitada a 1.

        Garante que a heurística do A* continue admissível quando o comprimento
        declarado de alguma aresta é menor que a distância geodésica entre as pontas.
        """
        scale = 1.0
        for edge in self._edges.values():
            a, b = self._nodes[edge.from_node], self._nodes[edge.to_node]
            straight = haversine_miles((a.lat, a.lon), (b.lat, b.lon))
            if straight > 0:
                scale = min(scale, edge.length_miles / straight)
        return scale

    def distances_from(self, sources: Sequence[str], limit: float = np.inf) -> np.ndarray:
        """
        Distâncias dirigidas (Dijkstra) dos nós de origem para todos os nós.

        Returns:
            np.ndarray: Matriz len(sources)×|V|; np.inf para nós inalcançáveis
        """
        indices = [self.index_of(node_id) for node_id in sources]
        if not indices:
            return np.zeros((0, len(self._nodes)))
        result = dijkstra(self.length_matrix, directed=True, indices=indices, limit=limit)
        return np.atleast_2d(result)


def road_distance_miles(graph: RoadGraph, src_node: str, dst_node: str) -> float:
    """
    Comprimento do menor caminho dirigido entre dois nós.

    Returns:
        float: Distância em milhas; math.inf quando o destino é inalcançável
    """
    dst_index = graph.index_of(dst_node)
    if src_node == dst_node:
        graph.index_of(src_node)
        return 0.0
    distance = float(graph.distances_from([src_node])[0, dst_index])
    return distance if np.isfinite(distance) else math.inf
