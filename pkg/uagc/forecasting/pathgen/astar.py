"""
Busca A* com custo de freeway ponderado.

O custo de cada aresta é o comprimento em milhas, multiplicado pelo
coeficiente de freeway quando a aresta é freeway. A heurística é a distância
em linha reta até o destino escalada pelo mesmo coeficiente, o que a mantém
admissível.
"""

import heapq
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from ..exceptions import InputFormatError
from ..geodata import RoadEdge, RoadGraph, haversine_miles

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TravelPath:
    nodes: Tuple[str, ...]
    edges: Tuple[str, ...]
    total_cost: float
    freeway_coefficient: float
    origin_cell: int = -1
    dest_cell: int = -1
    repetition: int = 0
    sensor_hits: Tuple[int, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.edges

    def sort_key(self):
        return self.origin_cell, self.dest_cell, self.repetition, self.freeway_coefficient

    def freeway_miles(self, graph: RoadGraph) -> float:
        return sum(graph.edges[e].length_miles for e in self.edges if graph.edges[e].is_freeway)

    def total_miles(self, graph: RoadGraph) -> float:
        return sum(graph.edges[e].length_miles for e in self.edges)


def validate_coefficient(freeway_coefficient: float):
    if not (0.0 < freeway_coefficient <= 1.0):
        raise InputFormatError(f"Coeficiente de freeway fora de (0, 1]: {freeway_coefficient}")


def astar_route(
    graph: RoadGraph,
    src_node: str,
    dst_node: str,
    freeway_coefficient: float = 1.0,
) -> Optional[TravelPath]:
    """
    Menor caminho de custo entre dois nós.

    Empates na fronteira são resolvidos pelo menor node_id; entre arestas
    paralelas fica a de menor custo (e menor edge_id).

    Returns:
        TravelPath: Caminho ótimo (vazio quando origem = destino) ou None se o
        destino for inalcançável
    """
    validate_coefficient(freeway_coefficient)
    graph.node(src_node)
    target = graph.node(dst_node)
    if src_node == dst_node:
        return TravelPath((src_node,), (), 0.0, freeway_coefficient)

    scale = freeway_coefficient * graph.heuristic_scale
    heuristic: Dict[str, float] = {}

    def h(node_id: str) -> float:
        value = heuristic.get(node_id)
        if value is None:
            node = graph.node(node_id)
            value = haversine_miles((node.lat, node.lon), (target.lat, target.lon)) * scale
            heuristic[node_id] = value
        return value

    g = {src_node: 0.0}
    parent: Dict[str, Tuple[Optional[str], Optional[RoadEdge]]] = {src_node: (None, None)}
    closed = set()
    frontier = [(h(src_node), src_node)]

    while frontier:
        _, current = heapq.heappop(frontier)
        if current in closed:
            continue
        if current == dst_node:
            return _reconstruct(parent, dst_node, g[dst_node], freeway_coefficient)
        closed.add(current)

        for edge in graph.out_edges(current):
            neighbor = edge.to_node
            if neighbor in closed:
                continue
            cost = g[current] + edge.cost(freeway_coefficient)
            if neighbor not in g or cost < g[neighbor]:
                g[neighbor] = cost
                parent[neighbor] = (current, edge)
                heapq.heappush(frontier, (cost + h(neighbor), neighbor))

    logger.debug(f"Destino {dst_node} inalcançável a partir de {src_node}")
    return None


def _reconstruct(parent, dst_node, total_cost, freeway_coefficient) -> TravelPath:
    nodes = [dst_node]
    edges = []
    node, edge = parent[dst_node]
    while node is not None:
        nodes.append(node)
        edges.append(edge.edge_id)
        node, edge = parent[node]
    nodes.reverse()
    edges.reverse()
    return TravelPath(tuple(nodes), tuple(edges), total_cost, freeway_coefficient)
