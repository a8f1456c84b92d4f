"""Left-to-right template engine for maximally independent combinations.

The engine walks the chain once, assigning one agreement class of
functions to each non-skipped loop and maintaining coefficients so that
assigned functions achieve the minimum where promised.  It implements
the vertex-avoiding algorithm and its master-template generalization
with a single code path; the two entry points differ in how skippable
loops and agreement classes are determined.

Tie points on the outer bridges: the steepest functions start at 0, the
next-steepest tie them a third of the way along the first bridge, and
functions first permissible on loop 1 tie the running minimum at the
two-thirds point.  On the last bridge the slope-1 and slope-0 functions
start at the midpoint and the three-quarter point.  Block transitions
initialize newly permissible functions at the midpoint of the bridge
between blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Mapping, Sequence

from .chain import BOTTOM, BRIDGE, TOP, ChainOfLoops, Edge, GraphPoint, Scalar, Vertex
from .envelope import _EdgeFun, _segment_envelope
from .plfun import PLFunction


class StructuralError(RuntimeError):
    """Raised when a counting-lemma guarantee fails during a run."""

    def __init__(self, loop: int, message: str, state=None):
        super().__init__(f"loop {loop}: {message}")
        self.loop = loop
        self.state = state


@dataclass(frozen=True)
class Location:
    kind: str  # "loop" or "bridge"
    index: int
    segment: str = ""  # bridges: "start" | "second" | "leftover" | "mid" | "late"

    def to_json(self):
        return {"kind": self.kind, "index": self.index, "segment": self.segment}


@dataclass
class LoopLedger:
    pool: tuple = ()
    new: tuple = ()
    departing: tuple = ()  # steep departers (s_{k+1} > block slope)
    flat_departing: tuple = ()  # interval-departing with s_{k+1} == block slope
    skipped: bool = False
    skip_reason: str = ""
    assigned: tuple = ()
    n_classes: int = 0
    cohort_new: bool = False  # a new cohort (shiny/new agreement class) appeared here


@dataclass
class TemplateRun:
    coefficients: dict
    assignment: dict
    witnesses: dict  # key -> GraphPoint candidate
    ledgers: dict  # k -> LoopLedger
    theta_in_slopes: list  # schedule used (s_k(theta) for k=1..g)
    block_ends: list


def permissible_table(in_slopes: Sequence[int], theta: Sequence[int], g: int) -> list[bool]:
    """General permissibility of one function on each loop 1..g.

    in_slopes[k] = incoming slope at v_k for k = 1..g+1 (index 0 unused);
    theta[k] = s_k(theta) for k = 1..g.
    """
    perm = [False] * (g + 1)
    prefix_ok = True
    # next position > k where slope dips below theta / exceeds theta
    next_bad = [None] * (g + 3)
    next_exceed = [None] * (g + 3)
    for j in range(g, 0, -1):
        next_bad[j] = j if in_slopes[j] < theta[j] else next_bad[j + 1]
        next_exceed[j] = j if in_slopes[j] > theta[j] else next_exceed[j + 1]
    for k in range(1, g + 1):
        prefix_ok = prefix_ok and in_slopes[k] <= theta[k]
        if not prefix_ok:
            break
        if in_slopes[k + 1] < theta[k]:
            continue
        nb = next_bad[k + 1] if k + 1 <= g else None
        if nb is not None:
            ne = next_exceed[k + 1] if k + 1 <= g else None
            if ne is None or ne >= nb:
                continue
        perm[k] = True
    return perm


class TemplateEngine:
    def __init__(
        self,
        chain: ChainOfLoops,
        funcs: Mapping[Hashable, PLFunction],
        theta_in_slopes: Sequence[int],
        skippable: Callable,
        s0_top: int,
        s0_second: int,
        send_mid: int,
        send_low: int,
        master_mode: bool = False,
    ):
        if chain.g < 1:
            raise ValueError("template engine needs at least one loop")
        self.chain = chain
        self.funcs = dict(funcs)
        self.keys = sorted(self.funcs)
        g = chain.g
        self.theta = [0] + list(theta_in_slopes)  # 1-based
        assert len(self.theta) == g + 1
        self.skippable = skippable
        self.s0_top, self.s0_second = s0_top, s0_second
        self.send_mid, self.send_low = send_mid, send_low
        self.master_mode = master_mode
        # incoming slopes s_k for k=1..g+1 per key
        self.in_slopes = {
            key: [None] + [f.slope_on_bridge(k - 1) for k in range(1, g + 2)]
            for key, f in self.funcs.items()
        }
        self.perm = {
            key: permissible_table(self.in_slopes[key], self.theta, g) for key in self.keys
        }
        self.first_perm = {}
        for key in self.keys:
            ks = [k for k in range(1, g + 1) if self.perm[key][k]]
            self.first_perm[key] = min(ks) if ks else None
        self.block_ends = [k for k in range(1, g) if self.theta[k + 1] < self.theta[k]] + [g]

        self.c: dict = {key: None for key in self.keys}
        self.assignment: dict = {}
        self.witness: dict = {}
        self.ledgers: dict[int, LoopLedger] = {}

    # -- helpers -------------------------------------------------------------

    def value(self, key, p: GraphPoint) -> Scalar:
        return self.funcs[key].value_at(p) + self.c[key]

    def theta_at(self, p: GraphPoint) -> Scalar:
        vals = [self.value(k, p) for k in self.keys if self.c[k] is not None]
        if not vals:
            raise StructuralError(0, "theta undefined: no finite coefficients yet")
        return min(vals)

    def _set_coeff(self, key, new_c, allow_init=True):
        old = self.c[key]
        if old is None:
            if not allow_init:
                raise StructuralError(0, f"{key} has no coefficient yet")
        elif new_c < old:
            raise StructuralError(0, f"coefficient of {key} would decrease: {old} -> {new_c}")
        self.c[key] = new_c

    def _tie_at(self, key, p: GraphPoint, target: Scalar):
        """Set c so that funcs[key] + c equals target at p (never downward)."""
        self._set_coeff(key, target - self.funcs[key].value_at(p))

    def agreement_classes(self, keys: Sequence, k: int) -> list[tuple]:
        """Group keys by agreement (equal slope data) on loop k; sorted reps."""
        groups: dict = {}
        for key in sorted(keys):
            prof = self.funcs[key].loop_profile(k)
            groups.setdefault(prof, []).append(key)
        return sorted((tuple(v) for v in groups.values()), key=lambda t: t[0])

    # -- loop winner selection (Prop. 5.8 / 7.28) ------------------------------

    def _loop_cells(self, k: int, keys: Sequence):
        """Envelope cells of {f+c : keys} on the two edges of loop k."""
        ch = self.chain
        out = {}
        for e in (Edge(TOP, k), Edge(BOTTOM, k)):
            length = ch.edge_length(e)
            start = ch.edge_ends(e)[0]
            efuns = []
            for i, key in enumerate(keys):
                f = self.funcs[key]
                efuns.append(
                    _EdgeFun(i, f.vertex_values[start] + self.c[key], f.pieces[e], length)
                )
            offs = sorted({o for f in efuns for o in f.offs} | {0, length})
            breaks, point_sets, open_sets = [offs[0]], [], []
            first = True
            for j in range(len(offs) - 1):
                sb, sp, so = _segment_envelope(efuns, offs[j], offs[j + 1])
                if first:
                    point_sets.append(sp[0])
                    first = False
                breaks.extend(sb[1:])
                point_sets.extend(sp[1:])
                open_sets.extend(so)
            out[e] = (efuns, breaks, point_sets, open_sets)
        return out

    def select_winner(self, k: int, classes: Sequence[tuple]):
        """Pick the agreement class that is strictly minimal somewhere on loop k.

        Returns (winner_class, witness_point, margin) where margin is the
        gap to the nearest other class at the witness.
        """
        keys = [cls[0] for cls in classes]  # one representative per class
        if len(keys) == 1:
            # single class: witness at the loop midpoint of the bottom edge
            e = Edge(BOTTOM, k)
            p = self.chain.point(e, Fraction(self.chain.edge_length(e), 2))
            return classes[0], p, None
        cells = self._loop_cells(k, keys)
        best = None  # (margin, rep_index, point)
        for e, (efuns, breaks, point_sets, open_sets) in cells.items():
            candidates = []
            for j, ach in enumerate(open_sets):
                if len(ach) == 1:
                    candidates.append((Fraction(breaks[j] + breaks[j + 1], 2), next(iter(ach))))
            for j, ach in enumerate(point_sets):
                if len(ach) == 1 and 0 < breaks[j] < breaks[-1]:
                    candidates.append((breaks[j], next(iter(ach))))
            for x, idx in candidates:
                vals = sorted(f.value(x) for f in efuns)
                margin = vals[1] - vals[0]
                if best is None or margin > best[0]:
                    best = (margin, idx, self.chain.point(e, x))
        if best is None:
            raise StructuralError(k, "no class achieves the minimum strictly on the loop")
        margin, idx, point = best
        return classes[idx], point, margin

    # -- the run ---------------------------------------------------------------

    def run(self) -> TemplateRun:
        ch = self.chain
        g = ch.g
        n0 = ch.scheme.bridge_length(0)
        b0 = Edge(BRIDGE, 0)

        # First bridge.
        top_keys = [k for k in self.keys if self.in_slopes[k][1] == self.s0_top]
        if not top_keys:
            raise StructuralError(0, f"no function with first-bridge slope {self.s0_top}")
        for key in top_keys:
            self.c[key] = 0
            self.assignment[key] = Location("bridge", 0, "start")
            self.witness[key] = ch.point(b0, Fraction(n0, 6))
        p_third = ch.point(b0, Fraction(n0, 3))
        second_keys = [k for k in self.keys if self.in_slopes[k][1] == self.s0_second]
        theta_third = self.theta_at(p_third)
        for key in second_keys:
            self._tie_at(key, p_third, theta_third)
            if self.first_perm[key] is None:
                self.assignment[key] = Location("bridge", 0, "second")
                self.witness[key] = ch.point(b0, Fraction(n0, 2))
        p_two_thirds = ch.point(b0, Fraction(2 * n0, 3))
        theta_tt = self.theta_at(p_two_thirds)
        for key in self.keys:
            if self.first_perm[key] == 1 and self.c[key] is None:
                self._tie_at(key, p_two_thirds, theta_tt)

        # Loops, left to right.
        for k in range(1, g + 1):
            self._loop_step(k)
            if k in self.block_ends:
                self._block_end(k)

        # Last bridge.
        bg = Edge(BRIDGE, g)
        ng = ch.edge_length(bg)
        p_mid = ch.point(bg, Fraction(ng, 2))
        theta_mid = self.theta_at(p_mid)
        for key in self.keys:
            if self.c[key] is None and self.in_slopes[key][g + 1] == self.send_mid:
                self._tie_at(key, p_mid, theta_mid)
                self.assignment[key] = Location("bridge", g, "mid")
                self.witness[key] = ch.point(bg, Fraction(5 * ng, 8))
        p_late = ch.point(bg, Fraction(3 * ng, 4))
        theta_late = self.theta_at(p_late)
        for key in self.keys:
            if self.c[key] is None and self.in_slopes[key][g + 1] == self.send_low:
                self._tie_at(key, p_late, theta_late)
                self.assignment[key] = Location("bridge", g, "late")
                self.witness[key] = ch.point(bg, Fraction(7 * ng, 8))

        unassigned = [k for k in self.keys if k not in self.assignment]
        if unassigned:
            raise StructuralError(g, f"functions never assigned: {unassigned}")
        return TemplateRun(
            coefficients=dict(self.c),
            assignment=dict(self.assignment),
            witnesses=dict(self.witness),
            ledgers=self.ledgers,
            theta_in_slopes=self.theta[1:],
            block_ends=list(self.block_ends),
        )

    # -- per-loop subroutine ----------------------------------------------------

    def _loop_step(self, k: int):
        ch = self.chain
        led = LoopLedger()
        self.ledgers[k] = led
        pool = [
            key
            for key in self.keys
            if key not in self.assignment and self.perm[key][k]
        ]
        led.pool = tuple(pool)
        led.new = tuple(key for key in pool if self.first_perm[key] == k)
        if not pool:
            led.skipped = True
            led.skip_reason = "no unassigned permissible functions"
            return

        wk = ch.vertex_point("w", k)
        vk = ch.vertex_point("v", k)
        theta_k = self.theta[k]

        # Step 2 (master): all unassigned permissible are new and agree.
        classes_all = self.agreement_classes(pool, k)
        if (
            self.master_mode
            and len(classes_all) == 1
            and all(key in led.new for key in pool)
            and any(self.c[key] is not None for key in self.keys)
        ):
            target = self.theta_at(vk)
            for key in pool:
                self._tie_at(key, vk, target)
                self.assignment[key] = Location("loop", k)
                self.witness[key] = None  # resolved by the final verification
            led.assigned = tuple(pool)
            led.n_classes = 1
            led.cohort_new = True
            return

        # Step 1/3: re-initialize unassigned coefficients at w_k.
        finite = [key for key in pool if self.c[key] is not None]
        if finite:
            best = max(finite, key=lambda key: (self.value(key, wk), [key]))
            level = self.value(best, wk)
        else:
            level = self.theta_at(wk)
        for key in pool:
            self._tie_at(key, wk, level)

        # Step 2/4: assign steep departing functions.
        steep = [key for key in pool if self.in_slopes[key][k + 1] > theta_k]
        led.departing = tuple(steep)
        led.flat_departing = tuple(
            key
            for key in pool
            if self.in_slopes[key][k + 1] == theta_k and not any(self.perm[key][j] for j in range(k + 1, ch.g + 1))
        )
        if steep:
            steep_classes = self.agreement_classes(steep, k)
            if len(steep_classes) != 1:
                raise StructuralError(k, f"departing functions disagree on the loop: {steep}")
            smallest = min(steep, key=lambda key: (self.in_slopes[key][k + 1], key))
            q = ch.point(Edge(BRIDGE, k), ch.scheme.bottom_length(k))
            target = self.value(smallest, q)
            for key in pool:
                if key in steep:
                    self.assignment[key] = Location("loop", k)
                    self.witness[key] = wk
                else:
                    self._tie_at(key, q, target)
            led.assigned = tuple(steep)
            led.n_classes = len(classes_all)
            return

        # Step 3/5: skip skippable loops.
        reason = self.skippable(self, k, pool)
        if reason:
            led.skipped = True
            led.skip_reason = reason
            return

        # Step 4/6: select the strictly-winning class and nudge it up.
        led.n_classes = len(classes_all)
        if len(classes_all) > 3:
            raise StructuralError(k, f"{len(classes_all)} agreement classes (at most 3 allowed)")
        winner, point, margin = self.select_winner(k, classes_all)
        bump = Fraction(ch.scheme.bottom_length(k), 3)
        if margin is not None and margin <= bump:
            raise StructuralError(k, f"winner margin {margin} does not survive the m_k/3 nudge")
        for key in winner:
            self._set_coeff(key, self.c[key] + bump, allow_init=False)
            self.assignment[key] = Location("loop", k)
            self.witness[key] = point
        led.assigned = tuple(winner)

    def _block_end(self, k: int):
        ch = self.chain
        leftovers = [
            key for key in self.keys if key not in self.assignment and self.perm[key][k]
        ]
        if leftovers:
            classes = self.agreement_classes(leftovers, k)
            if len(classes) != 1:
                raise StructuralError(k, f"block end leaves {len(classes)} unassigned classes")
            steep_here = self.ledgers[k].assigned and all(
                self.in_slopes[key][k + 1] > self.theta[k] for key in self.ledgers[k].assigned
            )
            nk = ch.scheme.bridge_length(k)
            if steep_here:
                # the departer owns the loop and the bridge up to q = m_k
                off = Fraction(ch.scheme.bottom_length(k) + Fraction(nk, 2), 2)
                wit = ch.point(Edge(BRIDGE, k), off)
            else:
                wit = ch.vertex_point("w", k)
            for key in leftovers:
                self.assignment[key] = Location("bridge", k, "leftover")
                self.witness[key] = wit
        if k == ch.g:
            return
        # initialize the next block's new functions at the bridge midpoint
        mid = ch.point(Edge(BRIDGE, k), Fraction(ch.scheme.bridge_length(k), 2))
        theta_mid = self.theta_at(mid)
        for key in self.keys:
            if self.first_perm[key] == k + 1 and self.c[key] is None:
                self._tie_at(key, mid, theta_mid)


def lingering_skip_rule(lingering: frozenset):
    """VA rule: skip exactly the lingering loops."""

    def rule(engine: TemplateEngine, k: int, pool) -> str:
        return "lingering loop" if k in lingering else ""

    return rule


def master_skip_rule(divisor, summands: Mapping):
    """Def.-7.22 rule: skip when a pair's divisor meets the off-grid conditions.

    `divisor` is the break divisor D; `summands` maps each key to its two
    building-block summand functions.
    """

    def rule(engine: TemplateEngine, k: int, pool) -> str:
        ch = engine.chain
        classes = engine.agreement_classes(pool, k)
        all_new_agree = len(classes) == 1 and all(
            engine.first_perm[key] == k for key in pool
        )
        if all_new_agree:
            return ""
        if any(
            engine.perm[key][j]
            for key in pool
            for j in (k,)
            if engine.in_slopes[key][k + 1] > engine.theta[k]
        ):
            return ""  # an unassigned departing function exists
        m_k = ch.scheme.bottom_length(k)
        L = ch.loop_circumference(k)
        wk = Vertex("w", k)
        vk = Vertex("v", k)
        for key in pool:
            f = engine.funcs[key]
            dd = f.divisor() + divisor * 2
            for p, mult in dd.items():
                if mult <= 0:
                    continue
                if p.vertex == wk:
                    return "2D + div(psi) contains w_k"
                if p.vertex is not None:
                    continue
                if p.edge.kind not in (TOP, BOTTOM) or p.edge.index != k:
                    continue
                _, cc = ch.loop_coordinate(p)
                dist = min(abs(cc - m_k), L - abs(cc - m_k))
                if dist % m_k != 0:
                    return "2D + div(psi) has a point off the m_k grid"
            fa, fb = summands[key]
            for part in (fa, fb):
                dpart = part.divisor() + divisor
                pts = 0
                for p, mult in dpart.items():
                    if mult <= 0 or p.vertex == vk:
                        continue
                    on_loop = (
                        p.vertex == wk
                        or (p.edge is not None and p.edge.kind in (TOP, BOTTOM) and p.edge.index == k)
                    )
                    if on_loop:
                        pts += mult
                if pts >= 2:
                    return "a summand divisor has two points on the punctured loop"
        return ""

    return rule
