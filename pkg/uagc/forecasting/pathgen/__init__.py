from .grid import Grid, index_nodes, make_grid
from .astar import TravelPath, astar_route
from .path_set import (
    PathSet,
    count_appearances,
    generate_path_set,
    read_path_set,
    write_path_set,
)

__all__ = [
    'Grid',
    'index_nodes',
    'make_grid',
    'TravelPath',
    'astar_route',
    'PathSet',
    'count_appearances',
    'generate_path_set',
    'read_path_set',
    'write_path_set',
]
