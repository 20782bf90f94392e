"""
Graph types: binary DAGs, ground truth models and thresholding of weighted matrices
"""

# generic imports
from dataclasses import dataclass, field
from typing import NamedTuple, Optional
import logging
import networkx as nx
import numpy as np

# fedbnsl imports
from fedbnsl.utils.exceptions import CyclicGraphError, DimensionMismatchError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BinaryDag:
    """
    Directed acyclic graph over nodes 0..d-1. An edge (i, j) means i -> j, matching the convention that W[i, j] is
    the weight of that edge. Acyclicity and the absence of self-loops are checked on construction.
    """
    d: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        edges = frozenset((int(i), int(j)) for i, j in self.edges)
        object.__setattr__(self, "edges", edges)
        for i, j in edges:
            if not (0 <= i < self.d and 0 <= j < self.d):
                raise ValueError(f"edge ({i}, {j}) out of range for a graph with {self.d} nodes")
            if i == j:
                raise CyclicGraphError(f"self-loop on node {i}")
        if not nx.is_directed_acyclic_graph(self.to_networkx()):
            raise CyclicGraphError(f"graph contains a directed cycle: {nx.find_cycle(self.to_networkx())}")

    @classmethod
    def from_adjacency(cls, adjacency):
        """Build a DAG from the support of a square matrix."""
        adjacency = np.asarray(adjacency)
        if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
            raise ValueError(f"adjacency matrix must be square, got shape {adjacency.shape}")
        rows, cols = np.nonzero(adjacency)
        return cls(adjacency.shape[0], frozenset(zip(rows.tolist(), cols.tolist())))

    def adjacency(self):
        """Return the binary adjacency matrix as a d x d integer array."""
        matrix = np.zeros((self.d, self.d), dtype=np.int64)
        for i, j in self.edges:
            matrix[i, j] = 1
        return matrix

    def to_networkx(self):
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.d))
        graph.add_edges_from(self.edges)
        return graph

    def topological_order(self):
        """Return the nodes in a topological order, ties broken by node index."""
        return list(nx.lexicographical_topological_sort(self.to_networkx()))

    def parents(self, node):
        return sorted(i for i, j in self.edges if j == node)

    def reversed(self):
        return BinaryDag(self.d, frozenset((j, i) for i, j in self.edges))

    def __len__(self):
        return len(self.edges)


@dataclass(frozen=True, eq=False)
class GroundTruthModel:
    """
    Generating model of a synthetic federation.

    Attributes
    ----------
    structure : BinaryDag
        True DAG shared by every participant.
    global_weights : np.ndarray
        d x d weighted adjacency matrix supported on `structure`.
    participant_weights : list of np.ndarray, optional
        Per-participant weighted matrices in the heterogeneous setting.
    noise_variance : float
        Variance of the additive Gaussian noise, equal for every variable.
    """
    structure: BinaryDag
    global_weights: np.ndarray
    participant_weights: Optional[list] = None
    noise_variance: float = 1.

    def __post_init__(self):
        support = BinaryDag.from_adjacency(self.global_weights)
        if support.d != self.structure.d:
            raise DimensionMismatchError(f"weights are {support.d}x{support.d}, structure has {self.structure.d} nodes")
        if support.edges != self.structure.edges:
            raise ValueError("global weights support differs from the structure edge set")
        if self.noise_variance <= 0:
            raise ValueError(f"noise variance must be positive, got {self.noise_variance}")
        for p, weights in enumerate(self.participant_weights or []):
            if BinaryDag.from_adjacency(weights).edges != self.structure.edges:
                raise ValueError(f"participant {p} weights support differs from the structure edge set")

    @property
    def heterogeneous(self):
        return self.participant_weights is not None

    def weights_for(self, participant):
        """Weighted matrix that generated the given participant's data."""
        if self.participant_weights is None:
            return self.global_weights
        return self.participant_weights[participant]


class PruneResult(NamedTuple):
    dag: BinaryDag
    removed_edges: int


def prune(W, threshold):
    """
    Threshold a weighted matrix into a DAG.

    Edges with |W_ij| > threshold are kept. If the thresholded support is cyclic, the smallest |weight| edge on a
    remaining cycle is removed until the graph is acyclic.

    Parameters
    ----------
    W : array_like
        Square weighted adjacency matrix.
    threshold : float
        Non-negative pruning threshold.

    Returns
    -------
    PruneResult
        The pruned DAG and the number of edges removed to break cycles.
    """
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError(f"prune needs a square matrix, got shape {W.shape}")
    if threshold < 0:
        raise ValueError(f"pruning threshold must be non-negative, got {threshold}")
    keep = np.abs(W) > threshold
    np.fill_diagonal(keep, False)
    graph = nx.DiGraph()
    graph.add_nodes_from(range(W.shape[0]))
    rows, cols = np.nonzero(keep)
    graph.add_edges_from(zip(rows.tolist(), cols.tolist()))

    removed = 0
    while True:
        try:
            cycle = nx.find_cycle(graph)
        except nx.NetworkXNoCycle:
            break
        weakest = min(cycle, key=lambda edge: (abs(W[edge[0], edge[1]]), edge[0], edge[1]))
        graph.remove_edge(weakest[0], weakest[1])
        removed += 1
    if removed:
        log.debug(f"Removed {removed} edges to break cycles after thresholding at {threshold}")
    return PruneResult(BinaryDag(W.shape[0], frozenset(graph.edges())), removed)
