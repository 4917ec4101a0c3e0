"""
Geração do conjunto de trajetos M^(Gen) e contagens de aparição de sensores.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from ..exceptions import InputFormatError
from ..geodata import RoadGraph, Sensor
from .astar import TravelPath, astar_route, validate_coefficient
from .grid import Grid

logger = logging.getLogger(__name__)

PATHS_HEADER = '# uagc-paths v1'


@dataclass
class PathSet:
    """Trajetos gerados mais as contagens de aparição e coaparição por sensor."""

    paths: List[TravelPath]
    n_sensors: int
    seed: int
    appearance: np.ndarray = field(repr=False, default=None)
    coappearance: np.ndarray = field(repr=False, default=None)
    n_attempts: Optional[int] = None

    def __post_init__(self):
        if self.appearance is None or self.coappearance is None:
            self.appearance, self.coappearance = count_appearances(self.paths, self.n_sensors)

    def __len__(self):
        return len(self.paths)


def count_appearances(paths: Sequence[TravelPath], n_sensors: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Conta em quantos trajetos cada sensor aparece e cada par coaparece.

    A diagonal da matriz de coaparição é a própria contagem de aparição.
    """
    appearance = np.zeros(n_sensors, dtype=np.int64)
    coappearance = np.zeros((n_sensors, n_sensors), dtype=np.int64)
    for path in paths:
        if not path.sensor_hits:
            continue
        hits = np.asarray(path.sensor_hits, dtype=np.int64)
        appearance[hits] += 1
        coappearance[np.ix_(hits, hits)] += 1
    return appearance, coappearance


def sensors_by_node(sensors: Sequence[Sensor]) -> Dict[str, List[int]]:
    index: Dict[str, List[int]] = {}
    for i, sensor in enumerate(sensors):
        if not sensor.is_snapped:
            raise InputFormatError(f"Sensor {sensor.sensor_id} ainda não foi associado à rede")
        index.setdefault(sensor.snapped_node, []).append(i)
    return index


def sensor_hits(path: TravelPath, node_sensors: Dict[str, List[int]]) -> Tuple[int, ...]:
    """Sensores cujo nó associado está na sequência de nós do trajeto (trajetos vazios não contam)."""
    if path.is_empty:
        return ()
    hits = set()
    for node_id in path.nodes:
        hits.update(node_sensors.get(node_id, ()))
    return tuple(sorted(hits))


def generate_path_set(
    graph: RoadGraph,
    grid: Grid,
    sensors: Sequence[Sensor],
    coefficients: Sequence[float],
    repetitions: int,
    seed: int,
    threads: int = 1,
) -> PathSet:
    """
    Gera M^(Gen): para cada par ordenado de células e cada repetição sorteia uma
    origem e um destino entre os nós das células e tenta uma rota A* para cada
    coeficiente de freeway.

    Os sorteios de um par dependem só de (seed, origem, destino), então o
    resultado não depende do número de threads.

    Args:
        graph (RoadGraph): Rede viária
        grid (Grid): Grade com nós indexados por célula
        sensors: Sensores já associados à rede
        coefficients: Coeficientes de freeway em (0, 1]
        repetitions (int): Sorteios de origem/destino por par de células
        seed (int): Semente de 64 bits
        threads (int): Workers para os pares de células

    Returns:
        PathSet: Trajetos ordenados por (origem, destino, repetição, coeficiente)
    """
    if grid.n_cells < 1 or not any(grid.cell_nodes):
        raise InputFormatError("Grade vazia: nenhuma célula contém nós da rede")
    if not coefficients:
        raise InputFormatError("Lista de coeficientes de freeway vazia")
    for coefficient in coefficients:
        validate_coefficient(coefficient)
    if repetitions < 1:
        raise InputFormatError(f"Número de repetições deve ser positivo: {repetitions}")
    if not (0 <= seed < 2 ** 64):
        raise InputFormatError(f"Semente fora do intervalo de 64 bits: {seed}")

    node_sensors = sensors_by_node(sensors)
    coefficients = [float(c) for c in coefficients]

    def route_origin(origin: int):
        found = []
        attempts = 0
        origin_nodes = grid.nodes_in(origin)
        if not origin_nodes:
            return found, attempts
        for dest in range(grid.n_cells):
            dest_nodes = grid.nodes_in(dest)
            if not dest_nodes:
                continue
            rng = np.random.default_rng([seed, origin, dest])
            for repetition in range(repetitions):
                src = origin_nodes[rng.integers(len(origin_nodes))]
                dst = dest_nodes[rng.integers(len(dest_nodes))]
                for coefficient in coefficients:
                    attempts += 1
                    path = astar_route(graph, src, dst, coefficient)
                    if path is None or path.is_empty:
                        continue
                    path = replace(
                        path,
                        origin_cell=origin,
                        dest_cell=dest,
                        repetition=repetition,
                        sensor_hits=sensor_hits(path, node_sensors),
                    )
                    found.append(path)
        return found, attempts

    paths: List[TravelPath] = []
    total_attempts = 0
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        for found, attempts in executor.map(route_origin, range(grid.n_cells)):
            paths.extend(found)
            total_attempts += attempts

    paths.sort(key=TravelPath.sort_key)
    path_set = PathSet(paths=paths, n_sensors=len(sensors), seed=seed, n_attempts=total_attempts)

    silent = int((path_set.appearance == 0).sum())
    logger.info(f"{len(paths)} trajetos gerados em {total_attempts} tentativas")
    if silent:
        logger.warning(f"{silent} sensores não aparecem em nenhum trajeto gerado")
    return path_set


def write_path_set(path_set: PathSet, stream: TextIO):
    """Serializa o PathSet: cabeçalho com a semente e uma linha por trajeto."""
    stream.write(f"{PATHS_HEADER} seed={path_set.seed}\n")
    for path in path_set.paths:
        for node_id in path.nodes:
            if any(ch in node_id for ch in ',;\n'):
                raise InputFormatError(f"node_id não serializável no arquivo de trajetos: {node_id!r}")
        stream.write(
            f"{path.origin_cell};{path.dest_cell};{path.repetition};"
            f"{path.freeway_coefficient!r};{','.join(path.nodes)}\n"
        )


def read_path_set(stream: TextIO, graph: RoadGraph, sensors: Sequence[Sensor]) -> PathSet:
    """
    Lê um arquivo de trajetos e reconstrói arestas, custos e sensores atingidos.

    Entre nós consecutivos usa a aresta de menor custo sob o coeficiente do trajeto.
    """
    header = stream.readline().rstrip('\n')
    prefix = f"{PATHS_HEADER} seed="
    if not header.startswith(prefix):
        raise InputFormatError(f"Arquivo de trajetos: cabeçalho inválido {header!r}")
    try:
        seed = int(header[len(prefix):])
    except ValueError:
        raise InputFormatError(f"Arquivo de trajetos: semente inválida {header!r}") from None

    node_sensors = sensors_by_node(sensors)
    paths = []
    for line_number, line in enumerate(stream, start=2):
        line = line.rstrip('\n')
        if not line:
            continue
        parts = line.split(';')
        if len(parts) != 5:
            raise InputFormatError(f"Arquivo de trajetos: linha {line_number} malformada")
        try:
            origin, dest, repetition = int(parts[0]), int(parts[1]), int(parts[2])
            coefficient = float(parts[3])
        except ValueError:
            raise InputFormatError(f"Arquivo de trajetos: linha {line_number} malformada") from None
        validate_coefficient(coefficient)
        nodes = tuple(parts[4].split(','))

        edges = []
        total = 0.0
        for a, b in zip(nodes, nodes[1:]):
            candidates = [e for e in graph.out_edges(a) if e.to_node == b]
            if not candidates:
                raise InputFormatError(
                    f"Arquivo de trajetos: linha {line_number} usa trecho inexistente {a}->{b}"
                )
            edge = min(candidates, key=lambda e: (e.cost(coefficient), e.edge_id))
            edges.append(edge.edge_id)
            total += edge.cost(coefficient)

        path = TravelPath(nodes, tuple(edges), total, coefficient, origin, dest, repetition)
        paths.append(replace(path, sensor_hits=sensor_hits(path, node_sensors)))

    return PathSet(paths=paths, n_sensors=len(sensors), seed=seed)
