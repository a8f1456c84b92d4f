"""Standard Young tableaux on the 3x7 rectangle with symbols from {1..g}.

Column c (1-based, left to right) indexes the distinguished function
phi_{7-c}, so the leftmost column belongs to phi_6.  Entries of column
7-i are the loops where phi_i's bridge slope increases by one.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial
from typing import Iterator, Sequence

RECT = (7, 7, 7)  # row lengths of the 3x7 rectangle
N_CELLS = 21
N_PAIRS = 28


# ---------------------------------------------------------------------------
# shape counting (general small shapes are used by tests)


@lru_cache(maxsize=None)
def hook_count(shape: tuple[int, ...]) -> int:
    """Number of standard fillings of a left-justified shape, by hook lengths."""
    if any(shape[r] < shape[r + 1] for r in range(len(shape) - 1)):
        raise ValueError(f"row lengths must be non-increasing: {shape}")
    n = sum(shape)
    if n == 0:
        return 1
    prod = 1
    for r, length in enumerate(shape):
        for c in range(length):
            below = sum(1 for rr in range(r + 1, len(shape)) if shape[rr] > c)
            prod *= (length - c) + below
    return factorial(n) // prod


def brute_force_fillings(shape: tuple[int, ...]) -> list[tuple[tuple[int, ...], ...]]:
    """All standard fillings of a small shape with 1..n, by value-placement DFS."""
    n = sum(shape)
    out = []
    rows: list[list[int]] = [[] for _ in shape]

    def place(v: int):
        if v > n:
            out.append(tuple(tuple(r) for r in rows))
            return
        for r in range(len(shape)):
            if len(rows[r]) < shape[r] and (r == 0 or len(rows[r - 1]) > len(rows[r])):
                rows[r].append(v)
                place(v + 1)
                rows[r].pop()

    place(1)
    return out


def count_tableaux(g: int) -> int:
    """Tableaux on the 3x7 rectangle with 21 distinct symbols from {1..g}."""
    if g < 21:
        raise ValueError("need g >= 21")
    return comb(g, 21) * hook_count(RECT)


# ---------------------------------------------------------------------------
# the tableau type


@dataclass(frozen=True)
class Tableau:
    g: int
    rows: tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]

    def column(self, c: int) -> tuple[int, int, int]:
        """Entries of 1-based column c (top to bottom)."""
        return tuple(row[c - 1] for row in self.rows)

    def column_of_function(self, i: int) -> tuple[int, int, int]:
        return self.column(7 - i)

    def entries(self) -> frozenset[int]:
        return frozenset(x for row in self.rows for x in row)

    def lingering_loops(self) -> tuple[int, ...]:
        used = self.entries()
        return tuple(k for k in range(1, self.g + 1) if k not in used)

    def rho(self) -> int:
        return self.g - 21

    def to_text(self) -> str:
        return "\n".join(" ".join(str(x) for x in row) for row in self.rows) + "\n"

    @staticmethod
    def from_text(text: str, g: int) -> "Tableau":
        rows = []
        for line in text.strip().splitlines():
            rows.append(tuple(int(tok) for tok in line.split()))
        if len(rows) != 3 or any(len(r) != 7 for r in rows):
            raise ValueError("tableau text must be three lines of seven integers")
        return Tableau(g, (rows[0], rows[1], rows[2]))


def validate(t: Tableau) -> tuple[bool, str]:
    """Check standardness; returns (ok, reason-of-first-violation)."""
    flat = [x for row in t.rows for x in row]
    if len(t.rows) != 3 or any(len(r) != 7 for r in t.rows):
        return False, "shape is not 3x7"
    if len(set(flat)) != N_CELLS:
        return False, "entries are not distinct"
    if any(x < 1 or x > t.g for x in flat):
        return False, f"entries must lie in 1..{t.g}"
    for r, row in enumerate(t.rows):
        for c in range(1, 7):
            if row[c] <= row[c - 1]:
                return False, f"row {r + 1} not increasing at column {c + 1}"
    for r in range(1, 3):
        for c in range(7):
            if t.rows[r][c] <= t.rows[r - 1][c]:
                return False, f"column {c + 1} not increasing at row {r + 1}"
    return True, ""


# ---------------------------------------------------------------------------
# slopes, markers, permissibility


def outgoing_slope(t: Tableau, i: int, k: int) -> int:
    """s'_k(phi_i): the slope of phi_i on bridge k (entries <= k in column 7-i)."""
    col = t.column_of_function(i)
    return i - 3 + sum(1 for x in col if x <= k)


def incoming_slope(t: Tableau, i: int, k: int) -> int:
    """s_k(phi_i): the incoming slope at v_k (= slope on bridge k-1)."""
    return outgoing_slope(t, i, k - 1)


def bridge_slope(t: Tableau, i: int, k: int) -> int:
    """Spec-facing name for s'_k(phi_i)."""
    return outgoing_slope(t, i, k)


@dataclass(frozen=True)
class Markers:
    z: int
    zp: int
    b: int
    bp: int

    def __post_init__(self):
        if not (self.z < self.b < self.bp <= self.zp):
            raise ValueError(f"marker chain violated: {self}")


def _kth_smallest(values, k: int) -> int:
    return sorted(values)[k - 1]


def markers(t: Tableau) -> Markers:
    """z, z', b, b' from the row-union order statistics."""
    rows12 = list(t.rows[0]) + list(t.rows[1])
    rows23 = list(t.rows[1]) + list(t.rows[2])
    rows13 = list(t.rows[0]) + list(t.rows[2])
    z = _kth_smallest(rows12, 6)
    zp = _kth_smallest(rows23, 10) - 2
    b = _kth_smallest(rows12, 7)
    bp = _kth_smallest(rows13, 8)
    return Markers(z=z, zp=zp, b=b, bp=bp)


def theta_slope(t: Tableau, k: int) -> int:
    """Incoming slope of the master combination at v_k: 4, 3 or 2 by block."""
    mk = markers(t)
    if k <= mk.z:
        return 4
    if k <= mk.zp:
        return 3
    return 2


def pair_incoming_slope(t: Tableau, i: int, j: int, k: int) -> int:
    return incoming_slope(t, i, k) + incoming_slope(t, j, k)


def permissible_interval(t: Tableau, i: int, j: int) -> tuple[int, int] | None:
    """Maximal loop range where phi_i + phi_j is permissible (None if empty)."""
    ks = [
        k
        for k in range(1, t.g + 1)
        if pair_incoming_slope(t, i, j, k) <= theta_slope(t, k) <= pair_incoming_slope(t, i, j, k + 1)
    ]
    if not ks:
        return None
    lo, hi = min(ks), max(ks)
    assert ks == list(range(lo, hi + 1)), "permissible loops must be consecutive"
    return lo, hi


def all_pairs() -> list[tuple[int, int]]:
    return [(i, j) for i in range(7) for j in range(i, 7)]


# ---------------------------------------------------------------------------
# enumeration in row-reading-word lex order, with counting-based seek


def _cell_of(pos: int, shape: tuple[int, ...]) -> tuple[int, int]:
    for r, length in enumerate(shape):
        if pos < length:
            return r, pos
        pos -= length
    raise IndexError(pos)


def _greedy_completable(symbols: Sequence[int], rows: list[list[int]], shape: tuple[int, ...]) -> bool:
    """Can the row-major partial filling be completed with the unused symbols?

    Completes each row in turn with the columnwise-minimal admissible
    choices; minimal rows leave maximal freedom below, so greedy success
    is equivalent to completability (cross-checked against brute force).
    """
    used = set()
    for row in rows:
        used.update(row)
    rem_iter = sorted(s for s in symbols if s not in used)
    grid = [list(r) for r in rows]
    for r in range(len(shape)):
        while len(grid[r]) < shape[r]:
            c = len(grid[r])
            floor_val = grid[r][c - 1] if c > 0 else 0
            if r > 0:
                if len(grid[r - 1]) <= c:
                    return False
                floor_val = max(floor_val, grid[r - 1][c])
            pick = None
            for idx, s in enumerate(rem_iter):
                if s > floor_val:
                    pick = idx
                    break
            if pick is None:
                return False
            grid[r].append(rem_iter[pick])
            rem_iter = rem_iter[:pick] + rem_iter[pick + 1 :]
    return True


def _count_completions(symbols: Sequence[int], rows: list[list[int]], shape: tuple[int, ...]) -> int:
    """Exact number of standard completions of a row-major partial filling."""
    used = set()
    for row in rows:
        used.update(row)
    remaining = sorted(s for s in symbols if s not in used)
    nrows = len(shape)
    starts = [len(r) for r in rows]
    lens = [shape[r] - starts[r] for r in range(nrows)]
    # state: symbols placed so far into each incomplete row
    states = {tuple([0] * nrows): 1}
    for u in remaining:
        nxt: dict[tuple[int, ...], int] = {}
        for st, cnt in states.items():
            for r in range(nrows):
                if st[r] >= lens[r]:
                    continue
                col = starts[r] + st[r]
                if col > 0 and col - 1 < starts[r] and rows[r][col - 1] >= u:
                    continue  # fixed left neighbor too large
                if r > 0:
                    if col < starts[r - 1]:
                        if rows[r - 1][col] >= u:
                            continue
                    else:
                        if st[r - 1] <= col - starts[r - 1]:
                            continue
                new = list(st)
                new[r] += 1
                key = tuple(new)
                nxt[key] = nxt.get(key, 0) + cnt
        states = nxt
        if not states:
            return 0
    return states.get(tuple(lens), 0)


def _fillings_lex(
    symbols: Sequence[int], shape: tuple[int, ...] = RECT
) -> Iterator[tuple[tuple[int, ...], ...]]:
    """All standard fillings with the given symbols, row-reading-word lex order."""
    symbols = sorted(symbols)
    n = sum(shape)
    if len(symbols) != n:
        raise ValueError("symbol count must match shape size")
    rows: list[list[int]] = [[] for _ in shape]
    used: set[int] = set()

    def fill(pos: int) -> Iterator[tuple[tuple[int, ...], ...]]:
        if pos == n:
            yield tuple(tuple(r) for r in rows)
            return
        r, c = _cell_of(pos, shape)
        floor_val = rows[r][c - 1] if c > 0 else 0
        if r > 0:
            floor_val = max(floor_val, rows[r - 1][c])
        for s in symbols:
            if s <= floor_val or s in used:
                continue
            rows[r].append(s)
            used.add(s)
            if _greedy_completable(symbols, rows, shape):
                yield from fill(pos + 1)
            rows[r].pop()
            used.remove(s)

    yield from fill(0)


def _unrank_filling_lex(
    symbols: Sequence[int], rank: int, shape: tuple[int, ...] = RECT
) -> tuple[tuple[int, ...], ...]:
    """Filling at position `rank` of the row-word-lex order (counting-based)."""
    symbols = sorted(symbols)
    n = sum(shape)
    rows: list[list[int]] = [[] for _ in shape]
    used: set[int] = set()
    for pos in range(n):
        r, c = _cell_of(pos, shape)
        floor_val = rows[r][c - 1] if c > 0 else 0
        if r > 0:
            floor_val = max(floor_val, rows[r - 1][c])
        placed = False
        for s in symbols:
            if s <= floor_val or s in used:
                continue
            rows[r].append(s)
            used.add(s)
            cnt = _count_completions(symbols, rows, shape)
            if rank < cnt:
                placed = True
                break
            rank -= cnt
            rows[r].pop()
            used.remove(s)
        if not placed:
            raise IndexError("rank out of range")
    return tuple(tuple(r) for r in rows)


def _subsets_lex(g: int) -> Iterator[tuple[int, ...]]:
    """All 21-subsets of {1..g} as sorted tuples, lexicographic."""
    import itertools

    yield from itertools.combinations(range(1, g + 1), 21)


class TableauStream:
    """Deterministic stream of all tableaux for a given g, with seek.

    Order: symbol subsets lexicographically, then fillings in
    row-reading-word lex order within each subset.
    """

    def __init__(self, g: int):
        if g < 21:
            raise ValueError("need g >= 21")
        self.g = g
        self.per_subset = hook_count(RECT)
        self.total = count_tableaux(g)

    def __len__(self) -> int:
        return self.total

    def __iter__(self) -> Iterator[Tableau]:
        for subset in _subsets_lex(self.g):
            for rows in _fillings_lex(subset):
                yield Tableau(self.g, rows)

    def at(self, index: int) -> Tableau:
        sub_idx, fill_rank = divmod(index, self.per_subset)
        subset = self._subset_at(sub_idx)
        return Tableau(self.g, _unrank_filling_lex(subset, fill_rank))

    def iter_range(self, start: int, stop: int) -> Iterator[Tableau]:
        """Stream tableaux with indices in [start, stop)."""
        if not 0 <= start <= stop <= self.total:
            raise IndexError((start, stop))
        idx = start
        while idx < stop:
            sub_idx, fill_rank = divmod(idx, self.per_subset)
            subset = self._subset_at(sub_idx)
            take = min(stop - idx, self.per_subset - fill_rank)
            if fill_rank == 0:
                it = _fillings_lex(subset)
            else:
                it = self._fillings_from(subset, fill_rank)
            for _, rows in zip(range(take), it):
                yield Tableau(self.g, rows)
            idx += take

    def _fillings_from(self, subset, fill_rank: int) -> Iterator[tuple]:
        first = _unrank_filling_lex(subset, fill_rank)
        started = False
        for rows in _fillings_lex(subset):
            if not started:
                if rows == first:
                    started = True
                else:
                    continue
            yield rows

    def _subset_at(self, sub_idx: int) -> tuple[int, ...]:
        # unrank a 21-combination of {1..g} in lex order
        n, k = self.g, 21
        out = []
        x = 1
        rank = sub_idx
        while k > 0:
            c = comb(n - x, k - 1)
            if rank < c:
                out.append(x)
                k -= 1
            else:
                rank -= c
            x += 1
        if rank != 0:
            raise IndexError("subset index out of range")
        return tuple(out)


def enumerate_tableaux(g: int) -> TableauStream:
    return TableauStream(g)


# ---------------------------------------------------------------------------
# uniform random sampling (counting-based unranking in last-letter order)


def _shape_remove_corner(shape: tuple[int, ...], r: int) -> tuple[int, ...]:
    new = list(shape)
    new[r] -= 1
    while new and new[-1] == 0:
        new.pop()
    return tuple(new)


def _unrank_lastletter(shape: tuple[int, ...], rank: int) -> list[list[int]]:
    """Standard filling of `shape` with 1..n at position `rank` (last-letter order)."""
    n = sum(shape)
    cells: dict[int, tuple[int, int]] = {}
    cur = shape
    for v in range(n, 0, -1):
        for r in range(len(cur)):
            if cur[r] > 0 and (r == len(cur) - 1 or cur[r + 1] < cur[r]):
                sub = _shape_remove_corner(cur, r)
                cnt = hook_count(sub)
                if rank < cnt:
                    cells[v] = (r, cur[r] - 1)
                    cur = sub
                    break
                rank -= cnt
        else:
            raise IndexError("rank out of range")
    grid = [[0] * shape[r] for r in range(len(shape))]
    for v, (r, c) in cells.items():
        grid[r][c] = v
    return grid


def random_filling(shape: tuple[int, ...], rng: random.Random) -> list[list[int]]:
    """Uniform standard filling of a small shape (exact, via unranking)."""
    return _unrank_lastletter(shape, rng.randrange(hook_count(shape)))


def random_tableau(g: int, seed) -> Tableau:
    """Uniform tableau for genus g, deterministic per seed."""
    rng = random.Random(seed)
    symbols = sorted(rng.sample(range(1, g + 1), 21))
    grid = random_filling(RECT, rng)
    rows = tuple(tuple(symbols[v - 1] for v in row) for row in grid)
    return Tableau(g, rows)  # type: ignore[arg-type]


# The Figure-6 running example (used across tests and docs).
EXAMPLE_TABLEAU = Tableau(
    21,
    (
        (1, 3, 6, 9, 10, 13, 15),
        (2, 5, 7, 12, 16, 18, 19),
        (4, 8, 11, 14, 17, 20, 21),
    ),
)
