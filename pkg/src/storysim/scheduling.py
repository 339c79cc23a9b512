"""Temporal constraint propagation and frame scheduling.

A TemporalNetwork holds one RelationSet per ordered event pair (stored
converse-consistently, missing edges are the full 13-set).  closure()
runs queue-based path consistency to a fixpoint.  schedule() turns a
story graph into concrete half-open frame intervals: convex relation
sets become difference constraints on event start points (a simple
temporal network, durations substituted out), solved by Bellman-Ford
with earliest-start extraction; non-convex sets trigger chronological
backtracking over base relations with closure pruning.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .allen import (
    FULL_MASK,
    AllenRelation,
    RelationSet,
    _compose_masks,
    _converse_mask,
    check_relation,
    is_convex,
    signature_bounds,
)
from .errors import InconsistentNetwork, UnschedulableDisjunction
from .model import EventKind, GestGraph

CHAIN_SET = RelationSet.of(AllenRelation.BEFORE, AllenRelation.MEETS)
MEETS_ONLY = RelationSet.of(AllenRelation.MEETS)
_EQ_MASK = RelationSet.of(AllenRelation.EQUALS).mask
_BEFORE_MASK = RelationSet.of(AllenRelation.BEFORE).mask


@dataclass(frozen=True)
class SchedulePolicy:
    origin_frame: int = 0
    strict_before_gap_frames: int = 25
    assignment: str = "earliest_start"

    def __post_init__(self):
        if self.strict_before_gap_frames < 1:
            raise ValueError("strict_before_gap_frames must be >= 1")
        if self.assignment != "earliest_start":
            raise ValueError(f"unknown assignment policy {self.assignment!r}")


@dataclass(frozen=True)
class EventTimeline:
    intervals: dict[int, tuple[int, int]]
    fps: int

    def interval(self, event_id: int) -> tuple[int, int]:
        return self.intervals[event_id]

    def start(self, event_id: int) -> int:
        return self.intervals[event_id][0]

    def end(self, event_id: int) -> int:
        return self.intervals[event_id][1]

    def makespan(self) -> int:
        return max((e for _, e in self.intervals.values()), default=0)


def duration_frames(duration_s: float, fps: int) -> int:
    return max(1, round(duration_s * fps))


class TemporalNetwork:
    """Qualitative constraint network over event ids."""

    def __init__(self, node_ids: list[int]):
        self.ids = list(node_ids)
        self._pos = {nid: i for i, nid in enumerate(self.ids)}
        if len(self._pos) != len(self.ids):
            raise ValueError("duplicate node ids")
        n = len(self.ids)
        self._m = [[FULL_MASK] * n for _ in range(n)]
        for i in range(n):
            self._m[i][i] = _EQ_MASK

    def copy(self) -> TemporalNetwork:
        dup = TemporalNetwork.__new__(TemporalNetwork)
        dup.ids = self.ids
        dup._pos = self._pos
        dup._m = [row[:] for row in self._m]
        return dup

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TemporalNetwork)
            and self.ids == other.ids
            and self._m == other._m
        )

    def edge(self, i: int, j: int) -> RelationSet:
        return RelationSet(self._m[self._pos[i]][self._pos[j]])

    def constrain(self, i: int, j: int, rs: RelationSet) -> None:
        """Intersect edge (i, j) with rs, keeping the converse in sync."""
        pi, pj = self._pos[i], self._pos[j]
        new = self._m[pi][pj] & rs.mask
        if not new:
            raise InconsistentNetwork(i, j)
        self._m[pi][pj] = new
        self._m[pj][pi] = _converse_mask(new)

    def constrained_pairs(self) -> list[tuple[int, int, RelationSet]]:
        out = []
        n = len(self.ids)
        for i in range(n):
            for j in range(i + 1, n):
                if self._m[i][j] != FULL_MASK:
                    out.append((self.ids[i], self.ids[j], RelationSet(self._m[i][j])))
        return out

    @classmethod
    def from_graph(cls, graph: GestGraph) -> TemporalNetwork:
        net = cls([e.event_id for e in graph.events])
        for a, b, rs in chain_constraints(graph):
            net.constrain(a, b, rs)
        for rel in graph.relations:
            net.constrain(rel.source, rel.target, rel.allen_set)
        return net


def chain_constraints(graph: GestGraph) -> list[tuple[int, int, RelationSet]]:
    """Implicit constraints between consecutive events of each actor.

    Consecutive chain events are {before, meets}; a movement event must
    meet the event it was inserted for.
    """
    out = []
    for chain in graph.chains().values():
        for prev, nxt in zip(chain, chain[1:]):
            rs = MEETS_ONLY if prev.kind is EventKind.MOVEMENT else CHAIN_SET
            out.append((prev.event_id, nxt.event_id, rs))
    return out


def _propagate(net: TemporalNetwork, queue: deque[tuple[int, int]]) -> None:
    """Path-consistency revision loop over matrix positions; in place."""
    m = net._m
    ids = net.ids
    n = len(ids)
    pending = set(queue)
    while queue:
        i, j = queue.popleft()
        pending.discard((i, j))
        mij = m[i][j]
        for k in range(n):
            if k == i or k == j:
                continue
            new = m[i][k] & _compose_masks(mij, m[j][k])
            if new != m[i][k]:
                if not new:
                    raise InconsistentNetwork(ids[i], ids[k], ids[j])
                m[i][k] = new
                m[k][i] = _converse_mask(new)
                if (i, k) not in pending:
                    pending.add((i, k))
                    queue.append((i, k))
            new = m[k][j] & _compose_masks(m[k][i], mij)
            if new != m[k][j]:
                if not new:
                    raise InconsistentNetwork(ids[k], ids[j], ids[i])
                m[k][j] = new
                m[j][k] = _converse_mask(new)
                if (k, j) not in pending:
                    pending.add((k, j))
                    queue.append((k, j))


def closure(net: TemporalNetwork) -> TemporalNetwork:
    """Path-consistent copy of net; raises InconsistentNetwork on an
    edge emptying, reporting the offending (i, j, via) triple."""
    out = net.copy()
    n = len(out.ids)
    queue: deque[tuple[int, int]] = deque(
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if out._m[i][j] != FULL_MASK
    )
    _propagate(out, queue)
    return out


class _StnInfeasible(Exception):
    def __init__(self, u, v):
        self.u = u
        self.v = v


def _edge_constraints(a: int, b: int, rs: RelationSet, lengths: dict[int, int],
                      before_gap: int = 1):
    """Difference constraints (x, y, c) meaning start_x - start_y <= c
    for one convex edge a rs b; interval ends eliminated via fixed
    lengths."""
    la, lb = lengths[a], lengths[b]
    # component values: (sa-sb, sa-eb, ea-sb, ea-eb) = (sa-sb) + offset
    offsets = (0, -lb, la, la - lb)
    for c, (lo, hi) in enumerate(signature_bounds(rs)):
        off = offsets[c]
        if hi <= 0:
            ub = 0 if hi == 0 else -1
            if c == 2 and hi == -1:
                # strict gap applies to the end(a) < start(b) component
                ub = -before_gap
            yield (a, b, ub - off)
        if lo >= 0:
            lb_v = 0 if lo == 0 else 1
            yield (b, a, off - lb_v)


_ORIGIN = object()


def _solve_stn(node_ids, constraints, origin_frame: int) -> dict[int, int]:
    """Earliest-start solution of difference constraints (x, y, c):
    start_x - start_y <= c, with every start >= origin_frame."""
    rev = list(constraints)
    for nid in node_ids:
        rev.append((_ORIGIN, nid, 0))  # origin <= every start
    dist = {nid: float("inf") for nid in node_ids}
    dist[_ORIGIN] = 0
    for _ in range(len(node_ids)):
        changed = False
        for x, y, c in rev:
            d = dist[x] + c
            if d < dist[y]:
                dist[y] = d
                changed = True
        if not changed:
            break
    else:
        for x, y, c in rev:
            if dist[x] + c < dist[y]:
                raise _StnInfeasible(x, y)
    return {nid: origin_frame - int(dist[nid]) for nid in node_ids}


def schedule(graph: GestGraph, registry, policy: SchedulePolicy,
             fps: int) -> EventTimeline:
    """Concrete earliest-start frame intervals for every graph event.

    The registry parameter is accepted for interface symmetry with the
    rest of the pipeline; durations are already fixed on the events.
    """
    ids = [e.event_id for e in graph.events]
    lengths = {e.event_id: duration_frames(e.duration_s, fps) for e in graph.events}

    base: list[tuple[int, int, RelationSet]] = list(chain_constraints(graph))
    net = TemporalNetwork(ids)
    for a, b, rs in base:
        net.constrain(a, b, rs)
    for rel in graph.relations:
        net.constrain(rel.source, rel.target, rel.allen_set)
        base.append((rel.source, rel.target, rel.allen_set))

    closed = closure(net)

    convex_edges: list[tuple[int, int, RelationSet]] = []
    disjunctions: list[tuple[int, int]] = []
    for a, b, rs in base:
        if is_convex(rs):
            convex_edges.append((a, b, rs))
        else:
            disjunctions.append((a, b))

    def leaf_constraints(chosen: list[tuple[int, int, RelationSet]]):
        cons = []
        for a, b, rs in convex_edges:
            cons.extend(_edge_constraints(a, b, rs, lengths))
        for a, b, rs in chosen:
            gap = policy.strict_before_gap_frames if rs.mask == _BEFORE_MASK else 1
            cons.extend(_edge_constraints(a, b, rs, lengths, before_gap=gap))
        return cons

    if not disjunctions:
        try:
            starts = _solve_stn(ids, leaf_constraints([]), policy.origin_frame)
        except _StnInfeasible as exc:
            u = exc.u if exc.u is not _ORIGIN else exc.v
            v = exc.v if exc.v is not _ORIGIN else exc.u
            raise InconsistentNetwork(
                u, v, message=f"durations admit no frame assignment near events {u}, {v}"
            ) from None
    else:
        starts = _backtrack(closed, disjunctions, leaf_constraints, ids,
                            policy.origin_frame)

    intervals = {eid: (starts[eid], starts[eid] + lengths[eid]) for eid in ids}
    timeline = EventTimeline(intervals=intervals, fps=fps)
    for a, b, rs in base:
        assert check_relation(intervals[a], intervals[b], rs), (a, b, rs)
    return timeline


def _backtrack(closed: TemporalNetwork, disjunctions, leaf_constraints,
               ids, origin_frame: int) -> dict[int, int]:
    """Chronological search over base relations of the non-convex edges,
    pruning with incremental closure after each commitment."""
    order = sorted(disjunctions, key=lambda ab: (len(closed.edge(*ab)), ab))
    work = closed.copy()

    def dfs(level: int) -> dict[int, int] | None:
        if level == len(order):
            chosen = [(a, b, work.edge(a, b)) for a, b in order]
            try:
                return _solve_stn(ids, leaf_constraints(chosen), origin_frame)
            except _StnInfeasible:
                return None
        a, b = order[level]
        for r in list(work.edge(a, b)):
            snapshot = [row[:] for row in work._m]
            try:
                work.constrain(a, b, RelationSet.of(r))
                _propagate(work, deque([(work._pos[a], work._pos[b])]))
            except InconsistentNetwork:
                work._m = snapshot
                continue
            found = dfs(level + 1)
            if found is not None:
                return found
            work._m = snapshot
        return None

    found = dfs(0)
    if found is None:
        raise UnschedulableDisjunction(
            f"no base-relation choice over {len(order)} non-convex edge(s) "
            "yields a feasible schedule"
        )
    return found
