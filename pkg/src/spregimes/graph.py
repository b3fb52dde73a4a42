"""Spatial adjacency graphs and region partitions.

Units are dense integer indices 0..n-1. Graphs are undirected, have no
self-loops, and must be connected as a whole; builders reject anything
else. Instances are treated as immutable and may be shared freely across
concurrent solver runs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DisconnectedGraphError, DuplicatePointsError

__all__ = [
    "AdjacencyGraph",
    "Partition",
    "build_grid_graph",
    "build_edge_list_graph",
    "build_knn_graph",
    "read_edge_list",
    "is_connected_subset",
    "connected_components",
    "region_neighbors",
]


@dataclass(frozen=True)
class AdjacencyGraph:
    """Symmetric neighborhood structure over ``n`` spatial units.

    Attributes
    ----------
    n : int
        Number of units.
    edges : frozenset of (int, int)
        Unordered unit pairs stored as ``(i, j)`` with ``i < j``.
    neighbors : tuple of tuple of int
        Sorted neighbor list per unit.
    """

    n: int
    edges: frozenset
    neighbors: tuple

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def degree(self, unit: int) -> int:
        return len(self.neighbors[unit])


def _finalize_graph(n: int, neighbor_sets: list[set[int]]) -> AdjacencyGraph:
    """Freeze neighbor sets into an AdjacencyGraph, enforcing connectivity."""
    edges = frozenset(
        (i, j) for i in range(n) for j in neighbor_sets[i] if i < j
    )
    neighbors = tuple(tuple(sorted(neighbor_sets[i])) for i in range(n))
    graph = AdjacencyGraph(n=n, edges=edges, neighbors=neighbors)
    if n > 0 and not is_connected_subset(graph, range(n)):
        raise DisconnectedGraphError(
            "adjacency input does not form a single connected component"
        )
    return graph


def build_grid_graph(rows: int, cols: int) -> AdjacencyGraph:
    """Rook-contiguity graph of a ``rows`` x ``cols`` regular grid.

    Cells sharing an edge (not merely a corner) are neighbors. Cell
    ``(r, c)`` has index ``r * cols + c``.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    n = rows * cols
    neighbor_sets: list[set[int]] = [set() for _ in range(n)]
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                neighbor_sets[i].add(i + 1)
                neighbor_sets[i + 1].add(i)
            if r + 1 < rows:
                neighbor_sets[i].add(i + cols)
                neighbor_sets[i + cols].add(i)
    return _finalize_graph(n, neighbor_sets)


def build_edge_list_graph(n: int, pairs) -> AdjacencyGraph:
    """Graph over ``n`` units from an iterable of index pairs.

    Pairs are symmetrized and deduplicated. Raises IndexError for indices
    outside ``[0, n)``, ValueError for self-loops, and
    DisconnectedGraphError if the result is not connected.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    neighbor_sets: list[set[int]] = [set() for _ in range(n)]
    for i, j in pairs:
        i, j = int(i), int(j)
        if not (0 <= i < n and 0 <= j < n):
            raise IndexError(f"edge ({i}, {j}) out of range for n={n}")
        if i == j:
            raise ValueError(f"self-loop on unit {i}")
        neighbor_sets[i].add(j)
        neighbor_sets[j].add(i)
    return _finalize_graph(n, neighbor_sets)


def build_knn_graph(points, k: int) -> AdjacencyGraph:
    """Symmetrized k-nearest-neighbor graph over 2-D points.

    Each unit is linked to its ``k`` nearest neighbors by Euclidean
    distance and the directed edge set is then symmetrized (union).
    Distance ties are broken toward the lower unit index. Raises
    DisconnectedGraphError when the union graph is not connected (the
    caller should raise ``k``) and DuplicatePointsError on repeated
    coordinates.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be an (n, 2) array of coordinates")
    n = len(pts)
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")
    if len(np.unique(pts, axis=0)) != n:
        raise DuplicatePointsError("coordinate list contains repeated points")

    sq_norms = np.einsum("ij,ij->i", pts, pts)
    neighbor_sets: list[set[int]] = [set() for _ in range(n)]
    chunk = max(1, min(n, int(64_000_000 / (8 * n))))  # ~64 MB per distance block
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        block = sq_norms[start:stop, None] + sq_norms[None, :] - 2.0 * (
            pts[start:stop] @ pts.T
        )
        for local, i in enumerate(range(start, stop)):
            row = block[local]
            row[i] = np.inf
            part = np.argpartition(row, k - 1)[:k]
            cutoff = row[part].max()
            cand = np.flatnonzero(row <= cutoff)
            if len(cand) > k:
                # exact tie handling at the cutoff distance: lower index wins
                order = np.lexsort((cand, row[cand]))
                cand = cand[order[:k]]
            for j in cand:
                neighbor_sets[i].add(int(j))
                neighbor_sets[int(j)].add(i)
    try:
        return _finalize_graph(n, neighbor_sets)
    except DisconnectedGraphError:
        raise DisconnectedGraphError(
            f"k={k} nearest neighbors leave the graph disconnected; increase k"
        ) from None


def read_edge_list(path) -> list[tuple[int, int]]:
    """Parse an edge-list file: one ``i j`` pair per line, ``#`` comments."""
    pairs: list[tuple[int, int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'i j', got {text!r}")
            pairs.append((int(parts[0]), int(parts[1])))
    return pairs


def is_connected_subset(graph: AdjacencyGraph, subset) -> bool:
    """True iff the subgraph induced by ``subset`` is connected.

    Breadth-first search restricted to the subset; cost O(|E|).
    """
    sub = set(subset)
    if not sub:
        raise ValueError("subset must be non-empty")
    start = next(iter(sub))
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in graph.neighbors[u]:
            if v in sub and v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == len(sub)


def connected_components(graph: AdjacencyGraph, subset) -> list[list[int]]:
    """Connected components of the induced subgraph, as sorted index lists.

    Components are ordered by their smallest member, so the result is
    deterministic for a given subset.
    """
    sub = set(subset)
    components: list[list[int]] = []
    for seed in sorted(sub):
        if seed not in sub:
            continue
        comp = {seed}
        queue = deque([seed])
        while queue:
            u = queue.popleft()
            for v in graph.neighbors[u]:
                if v in sub and v not in comp:
                    comp.add(v)
                    queue.append(v)
        sub -= comp
        components.append(sorted(comp))
    return components


@dataclass
class Partition:
    """Assignment of every unit to exactly one region label in ``0..p-1``.

    Every label must be used by at least one unit.
    """

    assignment: np.ndarray
    p: int = field(default=0)

    def __post_init__(self):
        self.assignment = np.asarray(self.assignment, dtype=np.int64)
        if self.assignment.ndim != 1 or len(self.assignment) == 0:
            raise ValueError("assignment must be a non-empty 1-D label array")
        if self.p == 0:
            self.p = int(self.assignment.max()) + 1
        sizes = np.bincount(self.assignment, minlength=self.p)
        if self.assignment.min() < 0 or len(sizes) != self.p or sizes.min() == 0:
            raise ValueError("labels must be dense in 0..p-1 with no empty region")

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        """Build a Partition from arbitrary labels, compacted by first appearance."""
        labels = list(labels)
        mapping: dict = {}
        assignment = np.empty(len(labels), dtype=np.int64)
        for i, lab in enumerate(labels):
            if lab not in mapping:
                mapping[lab] = len(mapping)
            assignment[i] = mapping[lab]
        return cls(assignment, len(mapping))

    @property
    def n(self) -> int:
        return len(self.assignment)

    def members(self, region: int) -> np.ndarray:
        if not 0 <= region < self.p:
            raise ValueError(f"unknown region {region}")
        return np.flatnonzero(self.assignment == region)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.p)


def region_neighbors(graph: AdjacencyGraph, partition: Partition, region: int) -> set[int]:
    """Units outside ``region`` having at least one neighbor inside it."""
    if not 0 <= region < partition.p:
        raise ValueError(f"unknown region {region}")
    assignment = partition.assignment
    out: set[int] = set()
    for i in np.flatnonzero(assignment == region):
        for v in graph.neighbors[i]:
            if assignment[v] != region:
                out.add(int(v))
    return out
