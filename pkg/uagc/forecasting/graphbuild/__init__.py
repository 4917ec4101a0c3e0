from .sparse_io import canonical, read_sparse, write_sparse
from .adjacency import (
    DEFAULT_KAPPA_MILES,
    DEFAULT_SIGMA_MILES,
    SensorAdjacency,
    combine_adjacency,
    cooccurrence_matrix,
    distance_adjacency,
    distance_std,
    legacy_adjacency,
    sensor_distances,
    walk_operators,
)
from .centrality import betweenness_centrality

__all__ = [
    'canonical',
    'read_sparse',
    'write_sparse',
    'DEFAULT_KAPPA_MILES',
    'DEFAULT_SIGMA_MILES',
    'SensorAdjacency',
    'combine_adjacency',
    'cooccurrence_matrix',
    'distance_adjacency',
    'distance_std',
    'legacy_adjacency',
    'sensor_distances',
    'walk_operators',
    'betweenness_centrality',
]
