import math
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import InputFormatError
from ..geodata import MILES_PER_DEGREE_LAT, RoadGraph, Sensor

logger = logging.getLogger(__name__)

# Absorve o erro de arredondamento da conversão graus -> milhas no ceil
CEIL_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Grid:
    """
    Grade de células quadradas (em milhas) cobrindo a região dos sensores.

    A origem é o canto sudoeste da caixa expandida pelo padding. Linhas crescem
    para o norte (N_H) e colunas para o leste (N_W); o índice da célula é
    `row * n_cols + col`.
    """

    south: float
    west: float
    cell_size_miles: float
    n_rows: int
    n_cols: int
    mean_lat: float
    cell_nodes: Tuple[Tuple[str, ...], ...] = ()

    @property
    def n_cells(self) -> int:
        return self.n_rows * self.n_cols

    @property
    def shape(self) -> Tuple[int, int]:
        return self.n_rows, self.n_cols

    @property
    def miles_per_degree_lon(self) -> float:
        return MILES_PER_DEGREE_LAT * math.cos(math.radians(self.mean_lat))

    def cells_of(self, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
        """Índice de célula para cada coordenada; -1 fora da grade."""
        y = (np.asarray(lats, dtype=np.float64) - self.south) * MILES_PER_DEGREE_LAT / self.cell_size_miles
        x = (np.asarray(lons, dtype=np.float64) - self.west) * self.miles_per_degree_lon / self.cell_size_miles
        rows = np.floor(y).astype(np.int64)
        cols = np.floor(x).astype(np.int64)
        # Pontos exatamente sobre a borda norte/leste pertencem à última célula
        rows = np.where((rows == self.n_rows) & (y <= self.n_rows + CEIL_TOLERANCE), self.n_rows - 1, rows)
        cols = np.where((cols == self.n_cols) & (x <= self.n_cols + CEIL_TOLERANCE), self.n_cols - 1, cols)
        inside = (y >= 0) & (x >= 0) & (rows < self.n_rows) & (cols < self.n_cols)
        return np.where(inside, rows * self.n_cols + cols, -1)

    def cell_of(self, lat: float, lon: float) -> Optional[int]:
        cell = int(self.cells_of(np.array([lat]), np.array([lon]))[0])
        return None if cell < 0 else cell

    def nodes_in(self, cell: int) -> Tuple[str, ...]:
        if not self.cell_nodes:
            return ()
        return self.cell_nodes[cell]


def make_grid(
    sensors: Sequence[Sensor],
    cell_size_miles: float,
    padding_miles: float,
    graph: Optional[RoadGraph] = None,
) -> Grid:
    """
    Particiona a região dos sensores em células de `cell_size_miles`.

    Args:
        sensors: Pelo menos um sensor
        cell_size_miles (float): Lado da célula em milhas (> 0)
        padding_miles (float): Folga adicionada em todos os lados
        graph (RoadGraph): Quando informado, indexa os nós do grafo por célula

    Returns:
        Grid: Grade com ceil(extensão / célula) células por eixo
    """
    if not sensors:
        raise InputFormatError("A grade exige pelo menos um sensor")
    if not (cell_size_miles > 0):
        raise InputFormatError(f"Tamanho de célula deve ser positivo: {cell_size_miles}")
    if padding_miles < 0:
        raise InputFormatError(f"Padding não pode ser negativo: {padding_miles}")

    lats = np.array([s.lat for s in sensors], dtype=np.float64)
    lons = np.array([s.lon for s in sensors], dtype=np.float64)
    mean_lat = float(lats.mean())
    miles_per_lon = MILES_PER_DEGREE_LAT * math.cos(math.radians(mean_lat))

    height = (lats.max() - lats.min()) * MILES_PER_DEGREE_LAT + 2 * padding_miles
    width = (lons.max() - lons.min()) * miles_per_lon + 2 * padding_miles
    n_rows = max(1, math.ceil(height / cell_size_miles - CEIL_TOLERANCE))
    n_cols = max(1, math.ceil(width / cell_size_miles - CEIL_TOLERANCE))

    grid = Grid(
        south=float(lats.min() - padding_miles / MILES_PER_DEGREE_LAT),
        west=float(lons.min() - padding_miles / miles_per_lon),
        cell_size_miles=float(cell_size_miles),
        n_rows=n_rows,
        n_cols=n_cols,
        mean_lat=mean_lat,
    )
    if graph is not None:
        grid = index_nodes(grid, graph)
    logger.info(f"Grade {n_rows}x{n_cols} ({cell_size_miles} mi) criada")
    return grid


def index_nodes(grid: Grid, graph: RoadGraph) -> Grid:
    """Devolve uma cópia da grade com os nós do grafo agrupados por célula (ids ordenados)."""
    lats, lons = graph.coordinates
    cells = grid.cells_of(lats, lons)
    buckets: List[List[str]] = [[] for _ in range(grid.n_cells)]
    for node_id, cell in zip(graph.node_ids, cells):
        if cell >= 0:
            buckets[cell].append(node_id)
    cell_nodes = tuple(tuple(sorted(bucket)) for bucket in buckets)
    occupied = sum(1 for bucket in cell_nodes if bucket)
    logger.info(f"{occupied}/{grid.n_cells} células contêm nós da rede viária")
    return Grid(
        south=grid.south,
        west=grid.west,
        cell_size_miles=grid.cell_size_miles,
        n_rows=grid.n_rows,
        n_cols=grid.n_cols,
        mean_lat=grid.mean_lat,
        cell_nodes=cell_nodes,
    )
