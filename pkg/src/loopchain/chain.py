"""Chain-of-loops metric graph with exact integer edge lengths.

The graph has vertices w_0, v_1, w_1, ..., w_g, v_{g+1}.  Bridge k joins
w_k to v_{k+1} (length n_k); the k-th loop consists of a top edge of
length l_k and a bottom edge of length m_k, both joining v_k to w_k.
All lengths are exact integers derived from a single base factor, so
every geometric predicate downstream is decidable in exact arithmetic.

Loop coordinates run counterclockwise: 0 at v_k, along the bottom edge
to w_k at m_k, then along the top edge back toward v_k (total l_k+m_k).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

Scalar = Union[int, Fraction]

# Edge kinds
BRIDGE = "B"
TOP = "T"
BOTTOM = "M"

# Largest pairwise-sum degree the admissibility margin must support.
MAX_PAIR_DEGREE = 26
MIN_BASE = 64


@dataclass(frozen=True)
class EdgeLengthScheme:
    """Geometric edge-length scheme n_k = B^{3(g-k)+3}, l_k = B^{3(g-k)+2}, m_k = B^{3(g-k)+1}."""

    g: int
    base: int = MIN_BASE

    def __post_init__(self):
        if self.g < 0:
            raise ValueError("loop count must be nonnegative")
        if self.base < MIN_BASE:
            raise ValueError(
                f"base {self.base} < {MIN_BASE}: admissibility margin too small for degree <= {MAX_PAIR_DEGREE}"
            )

    def bridge_length(self, k: int) -> int:
        if not 0 <= k <= self.g:
            raise IndexError(k)
        return self.base ** (3 * (self.g - k) + 3)

    def top_length(self, k: int) -> int:
        if not 1 <= k <= self.g:
            raise IndexError(k)
        return self.base ** (3 * (self.g - k) + 2)

    def bottom_length(self, k: int) -> int:
        if not 1 <= k <= self.g:
            raise IndexError(k)
        return self.base ** (3 * (self.g - k) + 1)

    def check_admissible(self) -> None:
        """Assert the separation inequalities the arguments actually use."""
        B, g = self.base, self.g
        for k in range(1, g):
            assert self.top_length(k + 1) * B <= self.bottom_length(k)
        for k in range(1, g + 1):
            assert self.bottom_length(k) * B <= self.top_length(k)
            assert self.top_length(k) * B <= self.bridge_length(k)
            assert self.bridge_length(k) * B <= self.bridge_length(k - 1)
        # (1/3) m_k dominates d * (sum of all later bottom edges) for d <= 26.
        tail = 0
        for k in range(g, 0, -1):
            if tail:
                assert 3 * MAX_PAIR_DEGREE * tail < self.bottom_length(k)
            tail += self.bottom_length(k)


@dataclass(frozen=True)
class Vertex:
    kind: str  # "w" or "v"
    index: int

    def __repr__(self):
        return f"{self.kind}{self.index}"


@dataclass(frozen=True)
class Edge:
    kind: str  # BRIDGE / TOP / BOTTOM
    index: int

    def __repr__(self):
        return f"{self.kind}{self.index}"


@dataclass(frozen=True)
class GraphPoint:
    """A point of the graph: either a vertex, or an interior point of an edge.

    Interior points carry the edge and the offset from the edge's start
    vertex; offsets 0 and len(edge) canonicalize to the vertex form.
    """

    vertex: Vertex | None = None
    edge: Edge | None = None
    offset: Scalar = 0

    def is_vertex(self) -> bool:
        return self.vertex is not None

    def __repr__(self):
        if self.vertex is not None:
            return f"@{self.vertex}"
        return f"@{self.edge}+{self.offset}"


class ChainOfLoops:
    """The chain of g loops with admissible edge lengths (g = 0 allowed)."""

    def __init__(self, g: int, base: int = MIN_BASE):
        self.scheme = EdgeLengthScheme(g, base)
        self.scheme.check_admissible()
        self.g = g
        self.base = base

    # -- topology ----------------------------------------------------------

    def vertices(self) -> Iterator[Vertex]:
        yield Vertex("w", 0)
        for k in range(1, self.g + 1):
            yield Vertex("v", k)
            yield Vertex("w", k)
        yield Vertex("v", self.g + 1)

    def edges(self) -> Iterator[Edge]:
        """Edges in left-to-right walking order (bridge 0, loop 1, bridge 1, ...)."""
        yield Edge(BRIDGE, 0)
        for k in range(1, self.g + 1):
            yield Edge(TOP, k)
            yield Edge(BOTTOM, k)
            yield Edge(BRIDGE, k)

    def n_vertices(self) -> int:
        return 2 * self.g + 2

    def n_edges(self) -> int:
        return 3 * self.g + 1

    def edge_length(self, e: Edge) -> int:
        if e.kind == BRIDGE:
            return self.scheme.bridge_length(e.index)
        if e.kind == TOP:
            return self.scheme.top_length(e.index)
        if e.kind == BOTTOM:
            return self.scheme.bottom_length(e.index)
        raise ValueError(e)

    def edge_ends(self, e: Edge) -> tuple[Vertex, Vertex]:
        """Start and end vertex; bridges run w_k -> v_{k+1}, loop edges v_k -> w_k."""
        if e.kind == BRIDGE:
            return Vertex("w", e.index), Vertex("v", e.index + 1)
        return Vertex("v", e.index), Vertex("w", e.index)

    # -- points ------------------------------------------------------------

    def point(self, e: Edge, offset: Scalar) -> GraphPoint:
        length = self.edge_length(e)
        if offset < 0 or offset > length:
            raise ValueError(f"offset {offset} outside edge {e} of length {length}")
        if offset == 0:
            return GraphPoint(vertex=self.edge_ends(e)[0])
        if offset == length:
            return GraphPoint(vertex=self.edge_ends(e)[1])
        return GraphPoint(edge=e, offset=offset)

    def vertex_point(self, kind: str, index: int) -> GraphPoint:
        return GraphPoint(vertex=Vertex(kind, index))

    def bridge_point(self, k: int, offset: Scalar) -> GraphPoint:
        return self.point(Edge(BRIDGE, k), offset)

    def loop_circumference(self, k: int) -> int:
        return self.scheme.top_length(k) + self.scheme.bottom_length(k)

    def loop_point(self, k: int, cc: Scalar) -> GraphPoint:
        """Point of loop k at counterclockwise coordinate cc in [0, l_k+m_k)."""
        L = self.loop_circumference(k)
        m = self.scheme.bottom_length(k)
        cc = cc % L
        if cc < m:
            return self.point(Edge(BOTTOM, k), cc)
        if cc == m:
            return GraphPoint(vertex=Vertex("w", k))
        # top edge, walked from w_k back toward v_k
        return self.point(Edge(TOP, k), L - cc)

    def loop_coordinate(self, p: GraphPoint) -> tuple[int, Scalar]:
        """Inverse of loop_point for points on a loop edge (or its vertices)."""
        if p.vertex is not None:
            raise ValueError("vertex belongs to two loop coordinates; resolve by caller")
        e = p.edge
        if e.kind == BOTTOM:
            return e.index, p.offset
        if e.kind == TOP:
            return e.index, self.loop_circumference(e.index) - p.offset
        raise ValueError(f"{p} is not on a loop")

    def __repr__(self):
        return f"ChainOfLoops(g={self.g}, base={self.base})"


def build_chain(g: int, base: int = MIN_BASE) -> ChainOfLoops:
    """Construct the chain with derived admissible lengths; rejects base < 64."""
    return ChainOfLoops(g, base)
