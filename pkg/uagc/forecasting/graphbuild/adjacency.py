"""
Matrizes de adjacência entre sensores: proximidade viária, coocorrência em
trajetos, combinação e operadores de passeio normalizados.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from ..exceptions import InputFormatError, ShapeError
from ..geodata import RoadGraph, Sensor
from ..pathgen import PathSet
from .sparse_io import canonical

logger = logging.getLogger(__name__)

DEFAULT_SIGMA_MILES = 5.0
DEFAULT_KAPPA_MILES = 80.0
LEGACY_THRESHOLD = 0.1


def sensor_distances(graph: RoadGraph, sensors: Sequence[Sensor], threads: int = 1) -> np.ndarray:
    """
    Distâncias dirigidas pela rede entre os nós associados aos sensores.

    Cada thread processa um bloco de sensores de origem; o resultado de cada
    linha não depende da divisão em blocos.

    Returns:
        np.ndarray: Matriz N×N em milhas, np.inf para pares inalcançáveis
    """
    for sensor in sensors:
        if not sensor.is_snapped:
            raise InputFormatError(f"Sensor {sensor.sensor_id} ainda não foi associado à rede")
    sensor_nodes = [s.snapped_node for s in sensors]
    columns = np.array([graph.index_of(node_id) for node_id in sensor_nodes], dtype=np.int64)
    if not sensor_nodes:
        return np.zeros((0, 0))

    threads = max(1, threads)
    chunk = int(np.ceil(len(sensor_nodes) / threads))
    blocks = [sensor_nodes[k:k + chunk] for k in range(0, len(sensor_nodes), chunk)]

    with ThreadPoolExecutor(max_workers=threads) as executor:
        rows = list(executor.map(lambda block: graph.distances_from(block)[:, columns], blocks))
    return np.vstack(rows)


def distance_adjacency(
    graph: RoadGraph,
    sensors: Sequence[Sensor],
    sigma_miles: float = DEFAULT_SIGMA_MILES,
    kappa_miles: float = DEFAULT_KAPPA_MILES,
    distances: Optional[np.ndarray] = None,
    threads: int = 1,
) -> sparse.csr_matrix:
    """
    Kernel gaussiano sobre a distância viária: exp(-d²/σ²) quando d < κ, senão 0.

    Args:
        graph (RoadGraph): Rede viária
        sensors: Sensores associados à rede, na ordem dos índices
        sigma_miles (float): Largura do kernel
        kappa_miles (float): Corte de distância (desigualdade estrita)
        distances (np.ndarray): Distâncias já calculadas por sensor_distances
        threads (int): Workers do Dijkstra

    Returns:
        sparse.csr_matrix: A^(D), diagonal 1
    """
    if sigma_miles <= 0 or kappa_miles <= 0:
        raise InputFormatError(f"sigma e kappa devem ser positivos (sigma={sigma_miles}, kappa={kappa_miles})")
    if distances is None:
        distances = sensor_distances(graph, sensors, threads)
    n = len(sensors)
    if distances.shape != (n, n):
        raise ShapeError(f"distance_adjacency: distâncias {distances.shape}, esperado {(n, n)}")

    within = np.isfinite(distances) & (distances < kappa_miles)
    weights = np.zeros_like(distances, dtype=np.float64)
    weights[within] = np.exp(-np.square(distances[within]) / sigma_miles ** 2)
    np.fill_diagonal(weights, 1.0)
    return canonical(weights)


def cooccurrence_matrix(paths: PathSet, sensors: Sequence[Sensor]) -> sparse.csr_matrix:
    """
    Coocorrência normalizada: coaparições(i,j) / sqrt(aparições(i)·aparições(j)).

    Sensores que não aparecem em nenhum trajeto ficam com linha e coluna zeradas.
    """
    n = len(sensors)
    if paths.n_sensors != n or paths.coappearance.shape != (n, n):
        raise ShapeError(
            f"cooccurrence_matrix: contagens para {paths.n_sensors} sensores, esperado {n}"
        )
    appearance = paths.appearance.astype(np.float64)
    coappearance = paths.coappearance.astype(np.float64)
    denominator = np.sqrt(np.outer(appearance, appearance))
    values = np.divide(
        coappearance, denominator, out=np.zeros_like(coappearance), where=denominator > 0
    )
    return canonical(values)


def walk_operators(a: sparse.csr_matrix) -> Tuple[sparse.csr_matrix, sparse.csr_matrix]:
    """
    Operadores de passeio D_out⁻¹A e D_in⁻¹Aᵀ.

    Linhas de grau zero continuam zeradas (não há divisão por zero).
    """
    a = canonical(a)
    out_degree = np.asarray(a.sum(axis=1)).ravel()
    in_degree = np.asarray(a.sum(axis=0)).ravel()
    inv_out = np.divide(1.0, out_degree, out=np.zeros_like(out_degree), where=out_degree > 0)
    inv_in = np.divide(1.0, in_degree, out=np.zeros_like(in_degree), where=in_degree > 0)

    isolated = int((out_degree == 0).sum())
    if isolated:
        logger.warning(f"{isolated} sensores sem vizinhos de saída na adjacência")

    forward = canonical(sparse.diags(inv_out) @ a)
    backward = canonical(sparse.diags(inv_in) @ a.T)
    return forward, backward


@dataclass(frozen=True)
class SensorAdjacency:
    """Adjacência final A = A^(D) ⊙ A^(S) e seus operadores de passeio."""

    sensor_ids: Tuple[str, ...]
    a: sparse.csr_matrix
    a_fwd: sparse.csr_matrix
    a_bwd: sparse.csr_matrix
    a_dist: Optional[sparse.csr_matrix] = None
    a_cooc: Optional[sparse.csr_matrix] = None
    sigma_miles: float = DEFAULT_SIGMA_MILES
    kappa_miles: float = DEFAULT_KAPPA_MILES

    @property
    def n_sensors(self) -> int:
        return self.a.shape[0]

    @property
    def nnz(self) -> int:
        return int(self.a.nnz)

    @classmethod
    def from_matrix(cls, a, sensor_ids: Sequence[str] = ()) -> 'SensorAdjacency':
        """Monta a adjacência a partir de uma matriz já combinada (ex.: lida de arquivo)."""
        a = canonical(a)
        if a.shape[0] != a.shape[1]:
            raise ShapeError(f"Adjacência deve ser quadrada, recebido {a.shape}")
        if a.nnz and a.data.min() < 0:
            raise InputFormatError("Adjacência com pesos negativos")
        sensor_ids = tuple(sensor_ids) or tuple(str(i) for i in range(a.shape[0]))
        if len(sensor_ids) != a.shape[0]:
            raise ShapeError(
                f"Adjacência {a.shape} não corresponde a {len(sensor_ids)} sensores"
            )
        forward, backward = walk_operators(a)
        return cls(sensor_ids=sensor_ids, a=a, a_fwd=forward, a_bwd=backward)


def combine_adjacency(
    a_dist,
    a_cooc,
    sensor_ids: Sequence[str] = (),
    sigma_miles: float = DEFAULT_SIGMA_MILES,
    kappa_miles: float = DEFAULT_KAPPA_MILES,
) -> SensorAdjacency:
    """
    Produto elemento a elemento de A^(D) e A^(S), mais os operadores normalizados.

    Raises:
        ShapeError: matrizes com dimensões diferentes
    """
    if a_dist.shape != a_cooc.shape:
        raise ShapeError(f"combine_adjacency: {a_dist.shape} != {a_cooc.shape}")
    a_dist = canonical(a_dist)
    a_cooc = canonical(a_cooc)
    base = SensorAdjacency.from_matrix(a_dist.multiply(a_cooc), sensor_ids)
    logger.info(f"Adjacência combinada: N={base.n_sensors}, NNZ={base.nnz}")
    return SensorAdjacency(
        sensor_ids=base.sensor_ids,
        a=base.a,
        a_fwd=base.a_fwd,
        a_bwd=base.a_bwd,
        a_dist=a_dist,
        a_cooc=a_cooc,
        sigma_miles=sigma_miles,
        kappa_miles=kappa_miles,
    )


def distance_std(distances: np.ndarray) -> float:
    """Desvio padrão das distâncias finitas fora da diagonal (0.0 se não houver)."""
    off_diagonal = ~np.eye(distances.shape[0], dtype=bool)
    finite = distances[off_diagonal & np.isfinite(distances)]
    if finite.size == 0:
        return 0.0
    return float(np.std(finite))


def legacy_adjacency(distances: np.ndarray, threshold: float = LEGACY_THRESHOLD) -> sparse.csr_matrix:
    """
    Grafo de distância tradicional: kernel gaussiano com σ igual ao desvio padrão
    das distâncias e pesos abaixo do limiar zerados.

    Args:
        distances (np.ndarray): Matriz N×N de sensor_distances
        threshold (float): Peso mínimo mantido

    Returns:
        sparse.csr_matrix: Adjacência de comparação
    """
    if distances.ndim != 2 or distances.shape[0] != distances.shape[1]:
        raise ShapeError(f"legacy_adjacency: matriz de distâncias {distances.shape} não é quadrada")
    sigma = distance_std(distances)
    finite = np.isfinite(distances)
    weights = np.zeros_like(distances, dtype=np.float64)
    if sigma > 0:
        weights[finite] = np.exp(-np.square(distances[finite] / sigma))
    else:
        logger.warning("Desvio padrão das distâncias é zero; grafo legado só com distâncias nulas")
        weights[finite & (distances == 0)] = 1.0
    weights[weights < threshold] = 0.0
    np.fill_diagonal(weights, 1.0)
    return canonical(weights)
