"""Piecewise-linear functions with integer slopes and exact rational values.

A PLFunction stores, per edge, the list of (offset, slope) pieces in
canonical form (strictly increasing offsets, no two adjacent pieces with
equal slope) together with the value at every vertex.  Values computed
along the top and bottom route of every loop must agree; the constructor
checks this, so evaluation is path-independent by construction.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .chain import BOTTOM, BRIDGE, TOP, ChainOfLoops, Edge, GraphPoint, Scalar, Vertex

Pieces = tuple[tuple[Scalar, int], ...]


def _canonical_pieces(pieces: Sequence[tuple[Scalar, int]], length: int) -> Pieces:
    if not pieces:
        raise ValueError("edge needs at least one piece")
    out: list[tuple[Scalar, int]] = []
    last_off = None
    for off, slope in pieces:
        if off < 0 or off >= length:
            raise ValueError(f"piece offset {off} outside [0, {length})")
        if last_off is not None and off <= last_off:
            raise ValueError("piece offsets must be strictly increasing")
        slope = int(slope)
        if out and out[-1][1] == slope:
            last_off = off
            continue  # merge equal adjacent slopes
        out.append((off, slope))
        last_off = off
    if out[0][0] != 0:
        raise ValueError("first piece must start at offset 0")
    return tuple(out)


def _integral(pieces: Pieces, length: int, upto: Scalar | None = None) -> Scalar:
    """Integral of the slope from 0 to `upto` (default: whole edge)."""
    end = length if upto is None else upto
    total: Scalar = 0
    for i, (off, slope) in enumerate(pieces):
        nxt = pieces[i + 1][0] if i + 1 < len(pieces) else length
        a, b = off, min(nxt, end)
        if b <= a:
            break
        total += slope * (b - a)
        if nxt >= end:
            break
    return total


class Divisor:
    """Finite formal sum of graph points with integer multiplicities."""

    def __init__(self, support: Mapping[GraphPoint, int] | None = None):
        self._d: dict[GraphPoint, int] = {}
        if support:
            for p, m in support.items():
                if m:
                    self._d[p] = self._d.get(p, 0) + m
        self._d = {p: m for p, m in self._d.items() if m}

    @property
    def support(self) -> dict[GraphPoint, int]:
        return dict(self._d)

    def degree(self) -> int:
        return sum(self._d.values())

    def is_effective(self) -> bool:
        return all(m > 0 for m in self._d.values())

    def multiplicity(self, p: GraphPoint) -> int:
        return self._d.get(p, 0)

    def __add__(self, other: "Divisor") -> "Divisor":
        out = dict(self._d)
        for p, m in other._d.items():
            out[p] = out.get(p, 0) + m
        return Divisor(out)

    def __mul__(self, n: int) -> "Divisor":
        return Divisor({p: n * m for p, m in self._d.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "Divisor":
        return self * -1

    def __eq__(self, other):
        return isinstance(other, Divisor) and self._d == other._d

    def __repr__(self):
        if not self._d:
            return "Divisor(0)"
        terms = " + ".join(f"{m}*{p}" for p, m in sorted(self._d.items(), key=lambda t: repr(t[0])))
        return f"Divisor({terms})"

    def items(self):
        return self._d.items()


class PLFunction:
    """Canonical piecewise-linear function on a chain of loops."""

    __slots__ = ("chain", "vertex_values", "pieces")

    def __init__(
        self,
        chain: ChainOfLoops,
        anchor: Scalar,
        pieces: Mapping[Edge, Sequence[tuple[Scalar, int]]],
        _trusted: bool = False,
    ):
        """Build from the value at w_0 and per-edge pieces; checks loop consistency."""
        self.chain = chain
        if _trusted:
            self.pieces = dict(pieces)  # already canonical
        else:
            self.pieces = {
                e: _canonical_pieces(pieces[e], chain.edge_length(e)) for e in chain.edges()
            }
        vals: dict[Vertex, Scalar] = {Vertex("w", 0): anchor}
        for k in range(0, chain.g + 1):
            b = Edge(BRIDGE, k)
            wk = Vertex("w", k)
            vk1 = Vertex("v", k + 1)
            vals[vk1] = vals[wk] + _integral(self.pieces[b], chain.edge_length(b))
            if k + 1 <= chain.g:
                t, m = Edge(TOP, k + 1), Edge(BOTTOM, k + 1)
                via_top = vals[vk1] + _integral(self.pieces[t], chain.edge_length(t))
                via_bottom = vals[vk1] + _integral(self.pieces[m], chain.edge_length(m))
                if via_top != via_bottom:
                    raise ValueError(
                        f"loop {k + 1} inconsistent: top route gives {via_top}, bottom {via_bottom}"
                    )
                vals[Vertex("w", k + 1)] = via_top
        self.vertex_values = vals

    # -- evaluation ---------------------------------------------------------

    def value_at(self, p: GraphPoint) -> Scalar:
        if p.vertex is not None:
            return self.vertex_values[p.vertex]
        start, _ = self.chain.edge_ends(p.edge)
        return self.vertex_values[start] + _integral(
            self.pieces[p.edge], self.chain.edge_length(p.edge), p.offset
        )

    def slope_on_bridge(self, k: int) -> int:
        """Constant slope on bridge k; raises if the function bends there."""
        ps = self.pieces[Edge(BRIDGE, k)]
        if len(ps) != 1:
            raise ValueError(f"function bends on bridge {k}")
        return ps[0][1]

    # -- algebra ------------------------------------------------------------

    def _merge_pieces(self, other: "PLFunction", e: Edge, op) -> list[tuple[Scalar, int]]:
        a, b = self.pieces[e], other.pieces[e]
        offs = sorted({o for o, _ in a} | {o for o, _ in b})

        def slope_at(ps: Pieces, off: Scalar) -> int:
            s = ps[0][1]
            for o, sl in ps:
                if o <= off:
                    s = sl
                else:
                    break
            return s

        return [(o, op(slope_at(a, o), slope_at(b, o))) for o in offs]

    def __add__(self, other: "PLFunction") -> "PLFunction":
        pieces = {e: self._merge_pieces(other, e, lambda x, y: x + y) for e in self.chain.edges()}
        anchor = self.vertex_values[Vertex("w", 0)] + other.vertex_values[Vertex("w", 0)]
        return PLFunction(self.chain, anchor, pieces)

    def __sub__(self, other: "PLFunction") -> "PLFunction":
        pieces = {e: self._merge_pieces(other, e, lambda x, y: x - y) for e in self.chain.edges()}
        anchor = self.vertex_values[Vertex("w", 0)] - other.vertex_values[Vertex("w", 0)]
        return PLFunction(self.chain, anchor, pieces)

    def add_const(self, c: Scalar) -> "PLFunction":
        f = PLFunction.__new__(PLFunction)
        f.chain = self.chain
        f.pieces = self.pieces
        f.vertex_values = {v: val + c for v, val in self.vertex_values.items()}
        return f

    def __eq__(self, other):
        return (
            isinstance(other, PLFunction)
            and self.vertex_values == other.vertex_values
            and self.pieces == other.pieces
        )

    # -- loop restrictions ---------------------------------------------------

    def loop_profile(self, k: int) -> tuple[Pieces, Pieces]:
        """Slope data of the restriction to loop k (top pieces, bottom pieces).

        Two functions agree on the loop (restrictions differ by an additive
        constant) iff their loop profiles are equal.
        """
        return self.pieces[Edge(TOP, k)], self.pieces[Edge(BOTTOM, k)]

    def agrees_on_loop(self, other: "PLFunction", k: int) -> bool:
        return self.loop_profile(k) == other.loop_profile(k)

    def agrees_on_prefix(self, other: "PLFunction", k: int) -> bool:
        """Agreement (up to a constant) on the subgraph through loop k, bridge k excluded."""
        d = self.vertex_values[Vertex("w", 0)] - other.vertex_values[Vertex("w", 0)]
        for e in self.chain.edges():
            if e.kind == BRIDGE and e.index >= k:
                break
            if self.pieces[e] != other.pieces[e]:
                return False
        for kk in range(1, min(k, self.chain.g) + 1):
            if self.vertex_values[Vertex("v", kk)] - other.vertex_values[Vertex("v", kk)] != d:
                return False
        return True

    # -- divisor -------------------------------------------------------------

    def divisor(self) -> Divisor:
        """div(f): order (sum of incoming slopes) at every bend and vertex."""
        ch = self.chain
        ords: dict[GraphPoint, int] = {}
        # interior bends
        for e in ch.edges():
            ps = self.pieces[e]
            for i in range(1, len(ps)):
                off, slope = ps[i]
                prev = ps[i - 1][1]
                ords[GraphPoint(edge=e, offset=off)] = prev - slope
        # vertices: incoming slope along each incident edge germ
        incoming: dict[Vertex, int] = {v: 0 for v in ch.vertices()}
        for e in ch.edges():
            ps = self.pieces[e]
            start, end = ch.edge_ends(e)
            incoming[start] -= ps[0][1]
            incoming[end] += ps[-1][1]
        for v, o in incoming.items():
            if o:
                ords[GraphPoint(vertex=v)] = o
        return Divisor(ords)


def in_linear_series(f: PLFunction, d: Divisor) -> bool:
    """True iff div(f) + D is effective (f in R(D))."""
    return (f.divisor() + d).is_effective()


def constant_function(chain: ChainOfLoops, c: Scalar = 0) -> PLFunction:
    return PLFunction(chain, c, {e: [(0, 0)] for e in chain.edges()})
