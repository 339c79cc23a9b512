"""Allen interval algebra: 13 base relations, converse, composition.

Relations are identified by short codes (b, m, o, s, d, f, eq and the
converses bi, mi, oi, si, di, fi).  Sets of relations are 13-bit masks
wrapped in RelationSet.  The composition table below was derived once by
exhaustive enumeration of endpoint orderings and frozen; the test suite
re-derives it independently from integer endpoint configurations.

Interval semantics throughout: half-open [start, end) with end > start,
compared as real numbers on the endpoints.
"""

from __future__ import annotations

import functools
from enum import Enum


class Coarse(Enum):
    """Coarse temporal relation kinds used by the story generator."""

    BEFORE = "before"
    AFTER = "after"
    SAME_TIME = "same_time"


class AllenRelation(Enum):
    BEFORE = "b"
    MEETS = "m"
    OVERLAPS = "o"
    STARTS = "s"
    DURING = "d"
    FINISHES = "f"
    EQUALS = "eq"
    AFTER = "bi"
    MET_BY = "mi"
    OVERLAPPED_BY = "oi"
    STARTED_BY = "si"
    CONTAINS = "di"
    FINISHED_BY = "fi"

    @property
    def index(self) -> int:
        return _INDEX[self]


RELATIONS: tuple[AllenRelation, ...] = tuple(AllenRelation)
N_RELATIONS = 13
FULL_MASK = (1 << N_RELATIONS) - 1

_INDEX = {r: i for i, r in enumerate(RELATIONS)}
_BY_CODE = {r.value: r for r in RELATIONS}

_CONVERSE_PAIRS = [
    (AllenRelation.BEFORE, AllenRelation.AFTER),
    (AllenRelation.MEETS, AllenRelation.MET_BY),
    (AllenRelation.OVERLAPS, AllenRelation.OVERLAPPED_BY),
    (AllenRelation.STARTS, AllenRelation.STARTED_BY),
    (AllenRelation.DURING, AllenRelation.CONTAINS),
    (AllenRelation.FINISHES, AllenRelation.FINISHED_BY),
    (AllenRelation.EQUALS, AllenRelation.EQUALS),
]
_CONVERSE = {}
for _a, _b in _CONVERSE_PAIRS:
    _CONVERSE[_a] = _b
    _CONVERSE[_b] = _a


def converse(r: AllenRelation) -> AllenRelation:
    """Return the Allen converse: A r B iff B converse(r) A."""
    return _CONVERSE[r]


# Endpoint signature of each relation: signs of (As-Bs, As-Be, Ae-Bs, Ae-Be)
# for intervals A = [As, Ae), B = [Bs, Be).
SIGNATURES: dict[AllenRelation, tuple[int, int, int, int]] = {
    AllenRelation.BEFORE: (-1, -1, -1, -1),
    AllenRelation.MEETS: (-1, -1, 0, -1),
    AllenRelation.OVERLAPS: (-1, -1, 1, -1),
    AllenRelation.STARTS: (0, -1, 1, -1),
    AllenRelation.DURING: (1, -1, 1, -1),
    AllenRelation.FINISHES: (1, -1, 1, 0),
    AllenRelation.EQUALS: (0, -1, 1, 0),
    AllenRelation.AFTER: (1, 1, 1, 1),
    AllenRelation.MET_BY: (1, 0, 1, 1),
    AllenRelation.OVERLAPPED_BY: (1, -1, 1, 1),
    AllenRelation.STARTED_BY: (0, -1, 1, 1),
    AllenRelation.CONTAINS: (-1, -1, 1, 1),
    AllenRelation.FINISHED_BY: (-1, -1, 1, 0),
}

# Composition of base relations, frozen from a one-off exhaustive
# derivation over endpoint orderings.  Keys are (r1, r2) codes, values
# space-separated codes of compose(r1, r2), "full" = all 13.
_COMPOSITION_SOURCE = {
    ("b", "b"): "b",
    ("b", "m"): "b",
    ("b", "o"): "b",
    ("b", "s"): "b",
    ("b", "d"): "b m o s d",
    ("b", "f"): "b m o s d",
    ("b", "eq"): "b",
    ("b", "bi"): "full",
    ("b", "mi"): "b m o s d",
    ("b", "oi"): "b m o s d",
    ("b", "si"): "b",
    ("b", "di"): "b",
    ("b", "fi"): "b",
    ("m", "b"): "b",
    ("m", "m"): "b",
    ("m", "o"): "b",
    ("m", "s"): "m",
    ("m", "d"): "o s d",
    ("m", "f"): "o s d",
    ("m", "eq"): "m",
    ("m", "bi"): "bi mi oi si di",
    ("m", "mi"): "f eq fi",
    ("m", "oi"): "o s d",
    ("m", "si"): "m",
    ("m", "di"): "b",
    ("m", "fi"): "b",
    ("o", "b"): "b",
    ("o", "m"): "b",
    ("o", "o"): "b m o",
    ("o", "s"): "o",
    ("o", "d"): "o s d",
    ("o", "f"): "o s d",
    ("o", "eq"): "o",
    ("o", "bi"): "bi mi oi si di",
    ("o", "mi"): "oi si di",
    ("o", "oi"): "o s d f eq oi si di fi",
    ("o", "si"): "o di fi",
    ("o", "di"): "b m o di fi",
    ("o", "fi"): "b m o",
    ("s", "b"): "b",
    ("s", "m"): "b",
    ("s", "o"): "b m o",
    ("s", "s"): "s",
    ("s", "d"): "d",
    ("s", "f"): "d",
    ("s", "eq"): "s",
    ("s", "bi"): "bi",
    ("s", "mi"): "mi",
    ("s", "oi"): "d f oi",
    ("s", "si"): "s eq si",
    ("s", "di"): "b m o di fi",
    ("s", "fi"): "b m o",
    ("d", "b"): "b",
    ("d", "m"): "b",
    ("d", "o"): "b m o s d",
    ("d", "s"): "d",
    ("d", "d"): "d",
    ("d", "f"): "d",
    ("d", "eq"): "d",
    ("d", "bi"): "bi",
    ("d", "mi"): "bi",
    ("d", "oi"): "d f bi mi oi",
    ("d", "si"): "d f bi mi oi",
    ("d", "di"): "full",
    ("d", "fi"): "b m o s d",
    ("f", "b"): "b",
    ("f", "m"): "m",
    ("f", "o"): "o s d",
    ("f", "s"): "d",
    ("f", "d"): "d",
    ("f", "f"): "f",
    ("f", "eq"): "f",
    ("f", "bi"): "bi",
    ("f", "mi"): "bi",
    ("f", "oi"): "bi mi oi",
    ("f", "si"): "bi mi oi",
    ("f", "di"): "bi mi oi si di",
    ("f", "fi"): "f eq fi",
    ("eq", "b"): "b",
    ("eq", "m"): "m",
    ("eq", "o"): "o",
    ("eq", "s"): "s",
    ("eq", "d"): "d",
    ("eq", "f"): "f",
    ("eq", "eq"): "eq",
    ("eq", "bi"): "bi",
    ("eq", "mi"): "mi",
    ("eq", "oi"): "oi",
    ("eq", "si"): "si",
    ("eq", "di"): "di",
    ("eq", "fi"): "fi",
    ("bi", "b"): "full",
    ("bi", "m"): "d f bi mi oi",
    ("bi", "o"): "d f bi mi oi",
    ("bi", "s"): "d f bi mi oi",
    ("bi", "d"): "d f bi mi oi",
    ("bi", "f"): "bi",
    ("bi", "eq"): "bi",
    ("bi", "bi"): "bi",
    ("bi", "mi"): "bi",
    ("bi", "oi"): "bi",
    ("bi", "si"): "bi",
    ("bi", "di"): "bi",
    ("bi", "fi"): "bi",
    ("mi", "b"): "b m o di fi",
    ("mi", "m"): "s eq si",
    ("mi", "o"): "d f oi",
    ("mi", "s"): "d f oi",
    ("mi", "d"): "d f oi",
    ("mi", "f"): "mi",
    ("mi", "eq"): "mi",
    ("mi", "bi"): "bi",
    ("mi", "mi"): "bi",
    ("mi", "oi"): "bi",
    ("mi", "si"): "bi",
    ("mi", "di"): "bi",
    ("mi", "fi"): "mi",
    ("oi", "b"): "b m o di fi",
    ("oi", "m"): "o di fi",
    ("oi", "o"): "o s d f eq oi si di fi",
    ("oi", "s"): "d f oi",
    ("oi", "d"): "d f oi",
    ("oi", "f"): "oi",
    ("oi", "eq"): "oi",
    ("oi", "bi"): "bi",
    ("oi", "mi"): "bi",
    ("oi", "oi"): "bi mi oi",
    ("oi", "si"): "bi mi oi",
    ("oi", "di"): "bi mi oi si di",
    ("oi", "fi"): "oi si di",
    ("si", "b"): "b m o di fi",
    ("si", "m"): "o di fi",
    ("si", "o"): "o di fi",
    ("si", "s"): "s eq si",
    ("si", "d"): "d f oi",
    ("si", "f"): "oi",
    ("si", "eq"): "si",
    ("si", "bi"): "bi",
    ("si", "mi"): "mi",
    ("si", "oi"): "oi",
    ("si", "si"): "si",
    ("si", "di"): "di",
    ("si", "fi"): "di",
    ("di", "b"): "b m o di fi",
    ("di", "m"): "o di fi",
    ("di", "o"): "o di fi",
    ("di", "s"): "o di fi",
    ("di", "d"): "o s d f eq oi si di fi",
    ("di", "f"): "oi si di",
    ("di", "eq"): "di",
    ("di", "bi"): "bi mi oi si di",
    ("di", "mi"): "oi si di",
    ("di", "oi"): "oi si di",
    ("di", "si"): "di",
    ("di", "di"): "di",
    ("di", "fi"): "di",
    ("fi", "b"): "b",
    ("fi", "m"): "m",
    ("fi", "o"): "o",
    ("fi", "s"): "o",
    ("fi", "d"): "o s d",
    ("fi", "f"): "f eq fi",
    ("fi", "eq"): "fi",
    ("fi", "bi"): "bi mi oi si di",
    ("fi", "mi"): "oi si di",
    ("fi", "oi"): "oi si di",
    ("fi", "si"): "di",
    ("fi", "di"): "di",
    ("fi", "fi"): "fi",
}


def _codes_to_mask(codes: str) -> int:
    if codes == "full":
        return FULL_MASK
    mask = 0
    for code in codes.split():
        mask |= 1 << _INDEX[_BY_CODE[code]]
    return mask


# mask of compose(r1, r2), indexed [r1.index * 13 + r2.index]
_COMPOSE_BASE: list[int] = [0] * (N_RELATIONS * N_RELATIONS)
for (_c1, _c2), _codes in _COMPOSITION_SOURCE.items():
    _COMPOSE_BASE[_INDEX[_BY_CODE[_c1]] * N_RELATIONS + _INDEX[_BY_CODE[_c2]]] = (
        _codes_to_mask(_codes)
    )

_CONVERSE_BIT = [0] * N_RELATIONS
for _r in RELATIONS:
    _CONVERSE_BIT[_r.index] = 1 << _CONVERSE[_r].index


def _mask_bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@functools.lru_cache(maxsize=65536)
def _compose_masks(mask_a: int, mask_b: int) -> int:
    out = 0
    for i in _mask_bits(mask_a):
        row = i * N_RELATIONS
        for j in _mask_bits(mask_b):
            out |= _COMPOSE_BASE[row + j]
        if out == FULL_MASK:
            return FULL_MASK
    return out


@functools.lru_cache(maxsize=8192)
def _converse_mask(mask: int) -> int:
    out = 0
    for i in _mask_bits(mask):
        out |= _CONVERSE_BIT[i]
    return out


class RelationSet:
    """Immutable set of Allen relations backed by a 13-bit mask."""

    __slots__ = ("mask",)

    def __init__(self, mask: int = 0):
        object.__setattr__(self, "mask", mask & FULL_MASK)

    def __setattr__(self, name, value):
        raise AttributeError("RelationSet is immutable")

    @classmethod
    def of(cls, *relations: AllenRelation) -> RelationSet:
        mask = 0
        for r in relations:
            mask |= 1 << r.index
        return cls(mask)

    @classmethod
    def from_codes(cls, codes: str) -> RelationSet:
        """Build from space-separated codes, e.g. "b m"."""
        return cls(_codes_to_mask(codes))

    @classmethod
    def full(cls) -> RelationSet:
        return cls(FULL_MASK)

    @classmethod
    def empty(cls) -> RelationSet:
        return cls(0)

    def __contains__(self, r: AllenRelation) -> bool:
        return bool(self.mask >> r.index & 1)

    def __iter__(self):
        for i in _mask_bits(self.mask):
            yield RELATIONS[i]

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __bool__(self) -> bool:
        return self.mask != 0

    def __eq__(self, other) -> bool:
        return isinstance(other, RelationSet) and self.mask == other.mask

    def __hash__(self) -> int:
        return hash(self.mask)

    def __and__(self, other: RelationSet) -> RelationSet:
        return RelationSet(self.mask & other.mask)

    def __or__(self, other: RelationSet) -> RelationSet:
        return RelationSet(self.mask | other.mask)

    def __le__(self, other: RelationSet) -> bool:
        return self.mask & ~other.mask == 0

    def converse(self) -> RelationSet:
        return RelationSet(_converse_mask(self.mask))

    def compose(self, other: RelationSet) -> RelationSet:
        return RelationSet(_compose_masks(self.mask, other.mask))

    def codes(self) -> str:
        return " ".join(r.value for r in self)

    def __repr__(self) -> str:
        return f"RelationSet({{{self.codes()}}})"


def compose(r1: AllenRelation, r2: AllenRelation) -> RelationSet:
    """All base relations s admitting intervals A r1 B, B r2 C, A s C."""
    return RelationSet(_COMPOSE_BASE[r1.index * N_RELATIONS + r2.index])


_COARSE_MAP = {
    Coarse.BEFORE: RelationSet.of(AllenRelation.BEFORE, AllenRelation.MEETS),
    Coarse.AFTER: RelationSet.of(AllenRelation.AFTER, AllenRelation.MET_BY),
    Coarse.SAME_TIME: RelationSet.of(
        AllenRelation.EQUALS, AllenRelation.STARTS, AllenRelation.STARTED_BY
    ),
}


def coarse_to_allen(c: Coarse) -> RelationSet:
    """Allen sets for the generator's coarse relation kinds.

    before allows back-to-back execution (meets); same_time means a
    shared start, with durations free to differ.
    """
    return _COARSE_MAP[c]


def _sign(x) -> int:
    return (x > 0) - (x < 0)


_SIGNATURE_TO_RELATION = {sig: r for r, sig in SIGNATURES.items()}


def relation_between(a_start, a_end, b_start, b_end) -> AllenRelation:
    """Classify the base relation between two nonempty half-open intervals."""
    if a_end <= a_start or b_end <= b_start:
        raise ValueError("intervals must be nonempty")
    sig = (
        _sign(a_start - b_start),
        _sign(a_start - b_end),
        _sign(a_end - b_start),
        _sign(a_end - b_end),
    )
    return _SIGNATURE_TO_RELATION[sig]


def check_relation(a: tuple[int, int], b: tuple[int, int], s: RelationSet) -> bool:
    """True iff the relation holding between intervals a and b is in s."""
    return relation_between(a[0], a[1], b[0], b[1]) in s


def signature_bounds(rs: RelationSet) -> tuple[tuple[int, int], ...]:
    """Per-component (min, max) of endpoint signs over the set's members."""
    if not rs:
        raise ValueError("empty relation set has no bounds")
    los = [1, 1, 1, 1]
    his = [-1, -1, -1, -1]
    for r in rs:
        for c, v in enumerate(SIGNATURES[r]):
            los[c] = min(los[c], v)
            his[c] = max(his[c], v)
    return tuple(zip(los, his))


def convex_envelope(rs: RelationSet) -> RelationSet:
    """Smallest convex relation set containing rs.

    A set is convex when it equals the set of all relations whose
    endpoint signatures fit inside its per-component sign bounds; those
    sets translate exactly to conjunctions of endpoint inequalities.
    """
    bounds = signature_bounds(rs)
    mask = 0
    for r in RELATIONS:
        sig = SIGNATURES[r]
        if all(lo <= sig[c] <= hi for c, (lo, hi) in enumerate(bounds)):
            mask |= 1 << r.index
    return RelationSet(mask)


def is_convex(rs: RelationSet) -> bool:
    return bool(rs) and convex_envelope(rs) == rs
