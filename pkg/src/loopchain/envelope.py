"""Exact lower envelopes of PL function families and tropical independence tests.

The envelope of a family {f_i + c_i} is computed edge by edge.  Within an
edge, offsets where any function bends split the edge into segments on
which every function is linear; on each segment the lower envelope of
lines is walked exactly (crossing points are exact rationals).  The
result records the set of achieving indices on every open cell and at
every cell endpoint, so uniqueness at isolated points is detected.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .chain import ChainOfLoops, Edge, GraphPoint, Scalar, Vertex
from .plfun import PLFunction


class _EdgeFun:
    """One function restricted to one edge: offsets, slopes, values at offsets."""

    __slots__ = ("idx", "offs", "slopes", "vals")

    def __init__(self, idx: int, start_value: Scalar, pieces, length: int):
        self.idx = idx
        self.offs = [o for o, _ in pieces]
        self.slopes = [s for _, s in pieces]
        vals = [start_value]
        for i in range(1, len(self.offs)):
            vals.append(vals[-1] + self.slopes[i - 1] * (self.offs[i] - self.offs[i - 1]))
        self.vals = vals

    def value(self, x: Scalar) -> Scalar:
        i = bisect_right(self.offs, x) - 1
        return self.vals[i] + self.slopes[i] * (x - self.offs[i])

    def slope(self, x: Scalar) -> int:
        """Slope on the piece containing x (right-continuous)."""
        i = bisect_right(self.offs, x) - 1
        return self.slopes[i]


@dataclass
class EdgeCells:
    """Envelope cells on one edge: breaks[0]=0 < ... < breaks[-1]=len."""

    edge: Edge
    breaks: list
    point_achievers: list  # frozenset at each break
    open_achievers: list  # frozenset on each open interval (len(breaks)-1)


class CellDecomposition:
    """Envelope cells for a family over the whole chain, plus vertex achiever sets."""

    def __init__(self, chain: ChainOfLoops, edge_cells: dict[Edge, EdgeCells], vertex_achievers):
        self.chain = chain
        self.edge_cells = edge_cells
        self.vertex_achievers = vertex_achievers

    def all_achiever_sets(self):
        for ach in self.vertex_achievers.values():
            yield ach
        for ec in self.edge_cells.values():
            for a in ec.point_achievers:
                yield a
            for a in ec.open_achievers:
                yield a

    def n_cells(self) -> int:
        return sum(len(ec.open_achievers) for ec in self.edge_cells.values())


def _segment_envelope(funs: Sequence[_EdgeFun], a: Scalar, b: Scalar):
    """Lower envelope of lines on [a, b]; funs must all be linear there.

    Returns (breaks, point_sets, open_sets) relative to [a, b], where
    breaks[0] = a and breaks[-1] = b.
    """
    vals_a = [f.value(a) for f in funs]
    slopes = [f.slope(a) for f in funs]
    n = len(funs)
    # prune lines that provably stay above the envelope
    env_a = min(vals_a)
    vals_b = [vals_a[i] + slopes[i] * (b - a) for i in range(n)]
    env_b = min(vals_b)
    span = max(abs(s) for s in slopes) * (b - a)
    keep = [
        i
        for i in range(n)
        if min(vals_a[i], vals_b[i]) <= min(env_a, env_b) + span
    ]

    def ach_at(x: Scalar) -> frozenset:
        vs = [(vals_a[i] + slopes[i] * (x - a)) for i in keep]
        m = min(vs)
        return frozenset(funs[keep[j]].idx for j, v in enumerate(vs) if v == m)

    breaks = [a]
    point_sets = [ach_at(a)]
    open_sets = []
    x = a
    # walk the envelope: current support = min-achievers just right of x
    while x < b:
        vs = [(vals_a[i] + slopes[i] * (x - a)) for i in keep]
        m = min(vs)
        cur = [keep[j] for j, v in enumerate(vs) if v == m]
        s_cur = min(slopes[i] for i in cur)
        open_members = frozenset(funs[i].idx for i in cur if slopes[i] == s_cur)
        v_cur = m
        # next crossing with a strictly smaller slope line
        x_next = b
        for i in keep:
            if slopes[i] < s_cur:
                vi = vals_a[i] + slopes[i] * (x - a)
                # v_cur + s_cur * t = vi + slopes[i] * t  =>  t = (vi - v_cur)/(s_cur - slopes[i])
                t = Fraction(vi - v_cur, s_cur - slopes[i])
                if 0 < t and x + t < x_next:
                    x_next = x + t
        open_sets.append(open_members)
        breaks.append(x_next)
        point_sets.append(ach_at(x_next))
        x = x_next
    return breaks, point_sets, open_sets


def _shifted_family(family):
    """Normalize [(f, c), ...] or [f, ...] to a list of coefficient-shifted PLFunctions."""
    out = []
    for item in family:
        if isinstance(item, PLFunction):
            out.append(item)
        else:
            f, c = item
            out.append(f if c == 0 else f.add_const(c))
    return out


def min_achievers(family) -> CellDecomposition:
    """Exact cell decomposition with achiever sets for min_i (f_i + c_i)."""
    funcs = _shifted_family(family)
    if not funcs:
        raise ValueError("empty family")
    chain = funcs[0].chain
    vertex_ach = {}
    for v in chain.vertices():
        vals = [f.vertex_values[v] for f in funcs]
        m = min(vals)
        vertex_ach[v] = frozenset(i for i, val in enumerate(vals) if val == m)
    edge_cells = {}
    for e in chain.edges():
        length = chain.edge_length(e)
        start = chain.edge_ends(e)[0]
        efuns = [
            _EdgeFun(i, f.vertex_values[start], f.pieces[e], length) for i, f in enumerate(funcs)
        ]
        # refine by all bend offsets
        offs = sorted({o for f in efuns for o in f.offs} | {0, length})
        breaks = [offs[0]]
        point_sets = []
        open_sets = []
        first = True
        for j in range(len(offs) - 1):
            sb, sp, so = _segment_envelope(efuns, offs[j], offs[j + 1])
            if first:
                point_sets.append(sp[0])
                first = False
            breaks.extend(sb[1:])
            point_sets.extend(sp[1:])
            open_sets.extend(so)
        # merge adjacent cells whose open and shared point sets coincide
        mb, mp, mo = [breaks[0]], [point_sets[0]], []
        for j in range(len(open_sets)):
            if mo and mo[-1] == open_sets[j] and mp[-1] == open_sets[j]:
                mb[-1] = breaks[j + 1]
                mp[-1] = point_sets[j + 1]
            else:
                mo.append(open_sets[j])
                mb.append(breaks[j + 1])
                mp.append(point_sets[j + 1])
        edge_cells[e] = EdgeCells(e, mb, mp, mo)
    return CellDecomposition(chain, edge_cells, vertex_ach)


def trop_min(family) -> PLFunction:
    """Pointwise minimum min_i (f_i + c_i), canonicalized as a PLFunction."""
    funcs = _shifted_family(family)
    cells = min_achievers(funcs)
    chain = funcs[0].chain
    pieces = {}
    for e in chain.edges():
        ec = cells.edge_cells[e]
        start = chain.edge_ends(e)[0]
        vals = [min(f.vertex_values[start] for f in funcs)]
        ps = []
        for j in range(len(ec.open_achievers)):
            a, b = ec.breaks[j], ec.breaks[j + 1]
            idx = next(iter(ec.open_achievers[j]))
            shifted = funcs[idx]
            efun = _EdgeFun(0, shifted.vertex_values[start], shifted.pieces[e], chain.edge_length(e))
            va, vb = efun.value(a), efun.value(b)
            slope = Fraction(vb - va, b - a)
            assert slope.denominator == 1, "envelope slope must be integral"
            ps.append((a, int(slope)))
        pieces[e] = ps
    anchor = min(f.vertex_values[Vertex("w", 0)] for f in funcs)
    return PLFunction(chain, anchor, pieces)


def is_dependence(family) -> bool:
    """True iff at every point of the chain at least two indices achieve the min."""
    if len(family) < 2:
        raise ValueError("need at least two functions")
    cells = min_achievers(family)
    return all(len(a) >= 2 for a in cells.all_achiever_sets())


def is_maximally_independent(family):
    """Check every index achieves the minimum uniquely somewhere.

    Returns (True, witnesses) with one GraphPoint per index on success, or
    (False, indices_without_unique_point).
    """
    funcs = _shifted_family(family)
    cells = min_achievers(funcs)
    chain = funcs[0].chain
    witnesses: dict[int, GraphPoint] = {}
    for v, ach in cells.vertex_achievers.items():
        if len(ach) == 1:
            witnesses.setdefault(next(iter(ach)), GraphPoint(vertex=v))
    for e, ec in cells.edge_cells.items():
        for j, ach in enumerate(ec.open_achievers):
            if len(ach) == 1:
                mid = Fraction(ec.breaks[j] + ec.breaks[j + 1], 2)
                witnesses.setdefault(next(iter(ach)), chain.point(e, mid))
        for j, ach in enumerate(ec.point_achievers):
            if len(ach) == 1:
                witnesses.setdefault(next(iter(ach)), chain.point(e, ec.breaks[j]))
    missing = frozenset(range(len(funcs))) - witnesses.keys()
    if missing:
        return False, missing
    return True, witnesses
