"""
Fixtures compartilhadas pelos testes: grafos pequenos, CSVs em memória e
diretórios temporários.
"""

import io
import shutil
import tempfile
from pathlib import Path

import numpy as np

from uagc.forecasting.geodata import RoadEdge, RoadGraph, RoadNode, Sensor, haversine_miles


def csv_stream(text: str) -> io.StringIO:
    return io.StringIO(text.lstrip())


def line_graph(n_nodes: int = 4, spacing_deg: float = 0.01, two_way: bool = True) -> RoadGraph:
    """Nós n0..n{k} ao longo de um paralelo, ligados em sequência."""
    nodes = [RoadNode(f"n{i}", 34.0, -118.0 + spacing_deg * i) for i in range(n_nodes)]
    edges = []
    for i in range(n_nodes - 1):
        length = haversine_miles((34.0, -118.0 + spacing_deg * i), (34.0, -118.0 + spacing_deg * (i + 1)))
        edges.append(RoadEdge(f"e{i}", f"n{i}", f"n{i + 1}", length, False))
        if two_way:
            edges.append(RoadEdge(f"e{i}r", f"n{i + 1}", f"n{i}", length, False))
    return RoadGraph(nodes, edges)


def random_graph(rng: np.random.Generator, n_nodes: int, n_edges: int, freeway_fraction: float = 0.3) -> RoadGraph:
    """
    Grafo dirigido aleatório numa caixa de ~10 mi com comprimentos iguais à
    distância em linha reta vezes um fator em [1, 1.5].
    """
    lats = 34.0 + rng.uniform(0.0, 0.15, size=n_nodes)
    lons = -118.0 + rng.uniform(0.0, 0.15, size=n_nodes)
    nodes = [RoadNode(f"v{i:03d}", float(lats[i]), float(lons[i])) for i in range(n_nodes)]
    edges = []
    seen = set()
    while len(edges) < n_edges:
        a, b = (int(x) for x in rng.integers(0, n_nodes, size=2))
        if a == b or (a, b) in seen:
            continue
        seen.add((a, b))
        straight = haversine_miles((lats[a], lons[a]), (lats[b], lons[b]))
        length = max(straight, 1e-3) * float(rng.uniform(1.0, 1.5))
        edges.append(RoadEdge(f"x{len(edges):04d}", nodes[a].node_id, nodes[b].node_id, length, bool(rng.random() < freeway_fraction)))
    return RoadGraph(nodes, edges)


def sensors_at(graph: RoadGraph, node_ids) -> list:
    """Sensores exatamente sobre os nós indicados (s0, s1, ...)."""
    result = []
    for i, node_id in enumerate(node_ids):
        node = graph.node(node_id)
        result.append(Sensor(f"s{i}", node.lat, node.lon))
    return result


class TemporaryDirectoryMixin:
    """Cria `self.tmp` (Path) antes de cada teste e o remove depois."""

    def setUp(self):
        super().setUp()
        self.tmp = Path(tempfile.mkdtemp(prefix='uagc-test-'))
        self.addCleanup(shutil.rmtree, self.tmp, ignore_errors=True)
