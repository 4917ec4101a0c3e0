"""
Centralidade de intermediação sobre o suporte da adjacência.
"""

from typing import Tuple

import networkx as nx
import numpy as np
from scipy import sparse


def support_digraph(a) -> nx.DiGraph:
    """Grafo dirigido com uma aresta por entrada não nula fora da diagonal."""
    a = sparse.csr_matrix(a, dtype=np.float64, copy=True)
    a.eliminate_zeros()
    graph = nx.from_scipy_sparse_array(a, create_using=nx.DiGraph)
    graph.remove_edges_from(list(nx.selfloop_edges(graph)))
    return graph


def betweenness_centrality(a) -> Tuple[np.ndarray, float]:
    """
    Intermediação normalizada de cada nó, tratando a matriz como grafo dirigido
    sem pesos sobre o seu suporte.

    Args:
        a: Matriz N×N não negativa

    Returns:
        Tuple[np.ndarray, float]: Vetor de centralidades e a média;
        zeros quando N < 3
    """
    n = a.shape[0]
    if n < 3:
        return np.zeros(n, dtype=np.float64), 0.0

    # weight=None: só o suporte conta, pesos são ignorados
    scores = nx.betweenness_centrality(support_digraph(a), normalized=True, weight=None)
    centrality = np.array([scores[i] for i in range(n)], dtype=np.float64)
    return centrality, float(centrality.mean())
