"""Immutable d-regular graphs, vertex sets and exact set-pair counting.

Edge counts follow the ordered convention: ``E(S, T)`` is the number of
ordered pairs ``(u, v)`` with ``u in S``, ``v in T`` and ``uv`` an edge, so an
edge with both endpoints in ``S & T`` contributes 2.
"""

from __future__ import annotations

import io
import math
import os
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np
import scipy.sparse as sp

from .errors import (
    DuplicateEdge,
    EmptySet,
    InvalidGraph,
    NonRegular,
    SelfLoop,
    SizeOutOfRange,
)

__all__ = [
    "RegularGraph",
    "VertexSet",
    "SetPair",
    "SURPLUS_RTOL",
    "build_graph",
    "as_vertex_set",
    "ordered_edge_count",
    "density_surplus",
    "surplus_from_counts",
    "surplus_exceeds",
    "make_pair",
    "edge_boundary",
    "vertex_boundary",
    "neighbor_set",
    "conductance_of_cut",
    "vertex_expansion",
    "read_edge_list",
    "write_edge_list",
    "format_edge_list",
    "parse_edge_list",
    "connected_components",
    "is_connected",
    "two_coloring",
    "has_bipartite_component",
]

# Relative tolerance for comparing a surplus against a threshold alpha.
SURPLUS_RTOL = 1e-9


class RegularGraph:
    """Simple undirected d-regular graph on vertices ``0..n-1``.

    ``adjacency`` is an ``(n, d)`` integer array whose rows are strictly
    increasing neighbor lists. Instances are immutable; build them with
    :func:`build_graph` or :func:`read_edge_list`.
    """

    def __init__(self, adjacency: np.ndarray):
        adj = np.array(adjacency, dtype=np.int64, copy=True)
        if adj.ndim != 2:
            raise InvalidGraph("adjacency must be an (n, d) array")
        n, d = adj.shape
        if n < 2 or not 1 <= d < n:
            raise InvalidGraph(f"need n >= 2 and 1 <= d < n, got n={n}, d={d}")
        if (n * d) % 2:
            raise InvalidGraph(f"n*d must be even, got n={n}, d={d}")
        if adj.min() < 0 or adj.max() >= n:
            raise InvalidGraph("neighbor id out of range")
        rows = np.arange(n)[:, None]
        loops = np.nonzero((adj == rows).any(axis=1))[0]
        if loops.size:
            raise SelfLoop(int(loops[0]))
        if d > 1:
            steps = np.diff(adj, axis=1)
            bad = np.argwhere(steps <= 0)
            if bad.size:
                u, j = bad[0]
                if steps[u, j] == 0:
                    raise DuplicateEdge(int(u), int(adj[u, j]))
                raise InvalidGraph(f"neighbor list of vertex {u} is not sorted")
        # symmetry: (u, v) present iff (v, u) present
        fwd = np.sort(rows.repeat(d, axis=1).ravel() * n + adj.ravel())
        bwd = np.sort(adj.ravel() * n + rows.repeat(d, axis=1).ravel())
        if not np.array_equal(fwd, bwd):
            raise InvalidGraph("adjacency is not symmetric")
        adj.setflags(write=False)
        self._adj = adj

    @property
    def adjacency(self) -> np.ndarray:
        return self._adj

    @property
    def n(self) -> int:
        return self._adj.shape[0]

    @property
    def d(self) -> int:
        return self._adj.shape[1]

    @property
    def m(self) -> int:
        return self.n * self.d // 2

    def neighbors(self, v: int) -> np.ndarray:
        return self._adj[v]

    def edges(self) -> list[tuple[int, int]]:
        """Sorted list of ``(u, v)`` with ``u < v``."""
        out = []
        for u, row in enumerate(self._adj.tolist()):
            out.extend((u, v) for v in row if v > u)
        return out

    @cached_property
    def adjacency_matrix(self) -> sp.csr_matrix:
        n, d = self._adj.shape
        indptr = np.arange(0, n * d + 1, d)
        data = np.ones(n * d, dtype=np.float64)
        mat = sp.csr_matrix((data, self._adj.ravel().copy(), indptr), shape=(n, n))
        return mat

    @cached_property
    def transition_matrix(self) -> sp.csr_matrix:
        """Sparse ``P = A / d``."""
        return self.adjacency_matrix / self.d

    @cached_property
    def neighbor_bits(self) -> list[int]:
        """Neighborhood of each vertex as a Python integer bitmask."""
        return [sum(1 << int(v) for v in row) for row in self._adj]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RegularGraph):
            return NotImplemented
        return np.array_equal(self._adj, other._adj)

    def __hash__(self) -> int:
        return hash(self._adj.tobytes())

    def __repr__(self) -> str:
        return f"RegularGraph(n={self.n}, d={self.d})"


class VertexSet:
    """Subset of ``range(n)`` stored as a boolean membership mask."""

    __slots__ = ("_mask", "_ids")

    def __init__(self, mask: np.ndarray):
        m = np.array(mask, dtype=bool, copy=True)
        if m.ndim != 1:
            raise ValueError("mask must be one-dimensional")
        m.setflags(write=False)
        self._mask = m
        ids = np.flatnonzero(m)
        ids.setflags(write=False)
        self._ids = ids

    @classmethod
    def from_ids(cls, n: int, ids: Iterable[int]) -> VertexSet:
        mask = np.zeros(n, dtype=bool)
        idx = np.fromiter((int(i) for i in ids), dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise ValueError(f"vertex id out of range for n={n}")
        mask[idx] = True
        return cls(mask)

    @classmethod
    def from_bits(cls, n: int, bits: int) -> VertexSet:
        return cls.from_ids(n, (i for i in range(n) if bits >> i & 1))

    @classmethod
    def full(cls, n: int) -> VertexSet:
        return cls(np.ones(n, dtype=bool))

    @classmethod
    def empty(cls, n: int) -> VertexSet:
        return cls(np.zeros(n, dtype=bool))

    @property
    def mask(self) -> np.ndarray:
        return self._mask

    @property
    def ids(self) -> np.ndarray:
        return self._ids

    @property
    def size(self) -> int:
        return int(self._ids.size)

    @property
    def n(self) -> int:
        return int(self._mask.size)

    @property
    def bits(self) -> int:
        return sum(1 << int(i) for i in self._ids)

    def complement(self) -> VertexSet:
        return VertexSet(~self._mask)

    def __len__(self) -> int:
        return self.size

    def __iter__(self) -> Iterator[int]:
        return iter(self._ids.tolist())

    def __contains__(self, v: object) -> bool:
        return isinstance(v, (int, np.integer)) and 0 <= v < self.n and bool(self._mask[v])

    def __or__(self, other: VertexSet) -> VertexSet:
        return VertexSet(self._mask | other._mask)

    def __and__(self, other: VertexSet) -> VertexSet:
        return VertexSet(self._mask & other._mask)

    def __sub__(self, other: VertexSet) -> VertexSet:
        return VertexSet(self._mask & ~other._mask)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VertexSet):
            return NotImplemented
        return np.array_equal(self._mask, other._mask)

    def __hash__(self) -> int:
        return hash(self._mask.tobytes())

    def __repr__(self) -> str:
        return f"VertexSet({self._ids.tolist()})"


SetLike = Union[VertexSet, Iterable[int], np.ndarray]


def as_vertex_set(g: RegularGraph, S: SetLike) -> VertexSet:
    """Coerce ids, a boolean mask or a VertexSet into a VertexSet over ``g``."""
    if isinstance(S, VertexSet):
        if S.n != g.n:
            raise ValueError(f"vertex set over {S.n} vertices used with graph on {g.n}")
        return S
    if isinstance(S, np.ndarray) and S.dtype == bool:
        if S.shape != (g.n,):
            raise ValueError("boolean mask has wrong length")
        return VertexSet(S)
    return VertexSet.from_ids(g.n, S)


def build_graph(n: int, edges: Iterable[tuple[int, int]]) -> RegularGraph:
    """Validate an undirected simple edge list and build a RegularGraph.

    The degree ``d`` is taken from vertex 0; any vertex of a different degree
    raises :class:`NonRegular`.
    """
    if n < 2:
        raise InvalidGraph(f"need n >= 2, got {n}")
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        u, v = int(u), int(v)
        if not (0 <= u < n and 0 <= v < n):
            raise InvalidGraph(f"edge {u}-{v} out of range for n={n}")
        if u == v:
            raise SelfLoop(u)
        if v in nbrs[u]:
            raise DuplicateEdge(min(u, v), max(u, v))
        nbrs[u].add(v)
        nbrs[v].add(u)
    d = len(nbrs[0])
    for v, s in enumerate(nbrs):
        if len(s) != d:
            raise NonRegular(v, len(s), d)
    if d == 0:
        raise InvalidGraph("graph has no edges")
    return RegularGraph(np.array([sorted(s) for s in nbrs], dtype=np.int64))


def ordered_edge_count(g: RegularGraph, S: SetLike, T: SetLike) -> int:
    """Exact ``|E(S, T)|`` under the ordered convention."""
    S = as_vertex_set(g, S)
    T = as_vertex_set(g, T)
    if S.size > T.size:
        S, T = T, S
    if S.size == 0:
        return 0
    return int(np.count_nonzero(T.mask[g.adjacency[S.ids]]))


def surplus_from_counts(est: int, s: int, t: int, n: int, d: int) -> float:
    """``(est - d*s*t/n) / sqrt(s*t)`` with the numerator kept as an exact integer."""
    if s <= 0 or t <= 0:
        raise EmptySet("surplus needs nonempty S and T")
    return (est * n - d * s * t) / (n * math.sqrt(s * t))


def surplus_exceeds(surplus: float, alpha: float, rtol: float = SURPLUS_RTOL) -> bool:
    """True when ``surplus`` is above ``alpha`` by more than the comparison tolerance."""
    return surplus - alpha > rtol * max(abs(alpha), 1.0)


def density_surplus(g: RegularGraph, S: SetLike, T: SetLike) -> float:
    """Smallest alpha for which the pair ``(S, T)`` satisfies the density bound."""
    S = as_vertex_set(g, S)
    T = as_vertex_set(g, T)
    if S.size == 0 or T.size == 0:
        raise EmptySet("surplus needs nonempty S and T")
    return surplus_from_counts(ordered_edge_count(g, S, T), S.size, T.size, g.n, g.d)


@dataclass(frozen=True)
class SetPair:
    S: VertexSet
    T: VertexSet
    est: int
    surplus_alpha: float | None

    def to_dict(self) -> dict:
        return {
            "S": self.S.ids.tolist(),
            "T": self.T.ids.tolist(),
            "est": self.est,
            "surplus": self.surplus_alpha,
        }


def make_pair(g: RegularGraph, S: SetLike, T: SetLike) -> SetPair:
    S = as_vertex_set(g, S)
    T = as_vertex_set(g, T)
    est = ordered_edge_count(g, S, T)
    surplus = None
    if S.size and T.size:
        surplus = surplus_from_counts(est, S.size, T.size, g.n, g.d)
    return SetPair(S, T, est, surplus)


def neighbor_set(g: RegularGraph, S: SetLike) -> VertexSet:
    S = as_vertex_set(g, S)
    mask = np.zeros(g.n, dtype=bool)
    if S.size:
        mask[g.adjacency[S.ids].ravel()] = True
    return VertexSet(mask)


def edge_boundary(g: RegularGraph, S: SetLike) -> int:
    """``|E(S, V \\ S)|``."""
    S = as_vertex_set(g, S)
    return g.d * S.size - ordered_edge_count(g, S, S)


def vertex_boundary(g: RegularGraph, S: SetLike) -> int:
    """Number of vertices outside ``S`` adjacent to ``S``."""
    S = as_vertex_set(g, S)
    return int(np.count_nonzero(neighbor_set(g, S).mask & ~S.mask))


def vertex_expansion(g: RegularGraph, S: SetLike) -> float:
    S = as_vertex_set(g, S)
    if S.size == 0:
        raise EmptySet("vertex expansion of the empty set")
    return vertex_boundary(g, S) / S.size


def conductance_of_cut(g: RegularGraph, S: SetLike) -> float:
    S = as_vertex_set(g, S)
    if not 1 <= S.size <= g.n / 2:
        raise SizeOutOfRange(f"|S|={S.size} outside [1, n/2] for n={g.n}")
    return edge_boundary(g, S) / (g.d * S.size)


# ---------------------------------------------------------------------------
# edge-list I/O


def parse_edge_list(text: str) -> RegularGraph:
    """Parse the ``n d`` header + ``u v`` lines format (``#`` starts a comment)."""
    header = None
    edges = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InvalidGraph(f"line {lineno}: expected two integers, got {raw.strip()!r}")
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise InvalidGraph(f"line {lineno}: non-integer token in {raw.strip()!r}") from None
        if header is None:
            header = (a, b)
        else:
            edges.append((a, b))
    if header is None:
        raise InvalidGraph("empty edge list (missing 'n d' header)")
    n, d = header
    g = build_graph(n, edges)
    if g.d != d:
        raise NonRegular(0, g.d, d)
    return g


def read_edge_list(path: str | os.PathLike) -> RegularGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh.read())


def format_edge_list(g: RegularGraph, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines.extend(f"# {c}" for c in comment.splitlines())
    lines.append(f"{g.n} {g.d}")
    lines.extend(f"{u} {v}" for u, v in g.edges())
    return "\n".join(lines) + "\n"


def write_edge_list(g: RegularGraph, path: str | os.PathLike, comment: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_edge_list(g, comment))


# ---------------------------------------------------------------------------
# structure


def connected_components(g: RegularGraph) -> np.ndarray:
    """Component label per vertex (labels numbered in order of first vertex)."""
    labels = np.full(g.n, -1, dtype=np.int64)
    adj = g.adjacency
    current = 0
    for root in range(g.n):
        if labels[root] >= 0:
            continue
        labels[root] = current
        stack = [root]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if labels[v] < 0:
                    labels[v] = current
                    stack.append(int(v))
        current += 1
    return labels


def is_connected(g: RegularGraph) -> bool:
    return bool(connected_components(g).max() == 0)


def two_coloring(g: RegularGraph) -> np.ndarray | None:
    """Proper 2-coloring by BFS, or None if some component has an odd cycle."""
    color = np.full(g.n, -1, dtype=np.int64)
    adj = g.adjacency
    for root in range(g.n):
        if color[root] >= 0:
            continue
        color[root] = 0
        queue = [root]
        while queue:
            u = queue.pop()
            for v in adj[u]:
                if color[v] < 0:
                    color[v] = 1 - color[u]
                    queue.append(int(v))
                elif color[v] == color[u]:
                    return None
    return color


def has_bipartite_component(g: RegularGraph) -> bool:
    """True when at least one connected component is bipartite."""
    labels = connected_components(g)
    color = np.full(g.n, -1, dtype=np.int64)
    adj = g.adjacency
    for comp in range(int(labels.max()) + 1):
        root = int(np.flatnonzero(labels == comp)[0])
        color[root] = 0
        queue = [root]
        ok = True
        while queue and ok:
            u = queue.pop()
            for v in adj[u]:
                if color[v] < 0:
                    color[v] = 1 - color[u]
                    queue.append(int(v))
                elif color[v] == color[u]:
                    ok = False
                    break
        if ok:
            return True
    return False
