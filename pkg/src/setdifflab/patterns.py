"""Difference-pattern witnesses.

A pattern says how two distinct subsets A, B of a coordinate-power universe
may differ: by a union of powers S^{d_1} u ... u S^{d_s} of a common S, by
planted members of a small template family inside an interval window, by a
cyclic interval (d = 1 universes read as Z_n), or - for set systems encoding
hypergraphs - by a complete clique bundle.  Each witness op either returns a
certificate or None; certificates are independently checkable and serialize
to plain JSON objects.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional, Union

from .errors import ShapeMismatchError
from .universe import (
    Family,
    OrderedWindow,
    SubsetMask,
    UniverseShape,
    plant_into_window,
    restrict_and_relabel,
    window_region,
)

SAME_WINDOW = "same-window"
DISJOINT_WINDOWS = "disjoint-windows"
NESTED = "nested"
_MODES = (SAME_WINDOW, DISJOINT_WINDOWS, NESTED)


# ---------------------------------------------------------------------------
# pattern specs


@dataclass(frozen=True)
class PowerDifference:
    degree: int


@dataclass(frozen=True)
class PolynomialDifference:
    degrees: tuple[int, ...]

    def __post_init__(self):
        if not isinstance(self.degrees, tuple):
            object.__setattr__(self, "degrees", tuple(self.degrees))


@dataclass(frozen=True)
class FamilyDifference:
    family: Family
    mode: str = SAME_WINDOW

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class IntervalModN:
    pass


@dataclass(frozen=True)
class CliqueDifference:
    degrees: tuple[int, ...]

    def __post_init__(self):
        if not isinstance(self.degrees, tuple):
            object.__setattr__(self, "degrees", tuple(self.degrees))


PatternSpec = Union[
    PowerDifference, PolynomialDifference, FamilyDifference, IntervalModN,
    CliqueDifference,
]


# ---------------------------------------------------------------------------
# witnesses


@dataclass(frozen=True)
class PowerWitness:
    S: frozenset[int]

    def to_json(self) -> dict:
        return {"kind": "power-difference", "S": sorted(self.S)}


@dataclass(frozen=True)
class Distance2Witness:
    U: SubsetMask
    S1: frozenset[int]
    S2: frozenset[int]

    def to_json(self) -> dict:
        return {
            "kind": "distance-2",
            "U": self.U.to_hex(),
            "S1": sorted(self.S1),
            "S2": sorted(self.S2),
        }


@dataclass(frozen=True)
class FamilyWitness:
    """Certificate (windows, U, F_1, F_2) for a template-family difference.

    F1/F2 are the planted sets inside the window power region of the big
    universe; F1_member/F2_member are their relabelings, i.e. the template
    members they come from.  In nested mode F2 is strictly inside F1 (so the
    certified ordered pair has B inside A).
    """

    mode: str
    windows: tuple[OrderedWindow, ...]
    U: SubsetMask
    F1: SubsetMask
    F2: SubsetMask
    F1_member: SubsetMask
    F2_member: SubsetMask

    def to_json(self) -> dict:
        return {
            "kind": "family-difference",
            "mode": self.mode,
            "windows": [list(w.elements) for w in self.windows],
            "U": self.U.to_hex(),
            "F1": self.F1.to_hex(),
            "F2": self.F2.to_hex(),
            "F1_member": self.F1_member.to_hex(),
            "F2_member": self.F2_member.to_hex(),
        }


@dataclass(frozen=True)
class IntervalWitness:
    start: int
    length: int

    def to_json(self) -> dict:
        return {"kind": "interval-mod-n", "start": self.start, "length": self.length}


@dataclass(frozen=True)
class CliqueWitness:
    S: frozenset[int]

    def to_json(self) -> dict:
        return {"kind": "clique-difference", "S": sorted(self.S)}


Witness = Union[
    PowerWitness, Distance2Witness, FamilyWitness, IntervalWitness, CliqueWitness
]


# ---------------------------------------------------------------------------
# helpers


def set_from_bits(bits: int) -> frozenset[int]:
    out = []
    z = 1
    while bits:
        if bits & 1:
            out.append(z)
        bits >>= 1
        z += 1
    return frozenset(out)


def subsets_ascending(n: int) -> Iterator[frozenset[int]]:
    """All subsets of [n] in ascending bit order (the canonical scan order)."""
    for b in range(1 << n):
        yield set_from_bits(b)


def union_of_powers(shape: UniverseShape, S) -> SubsetMask:
    """S^{d_1} u ... u S^{d_s} as a mask."""
    elems = sorted(S)
    if any(not 1 <= x <= shape.n for x in elems):
        raise ValueError(f"S {elems} not inside [{shape.n}]")
    bits = 0
    for part in range(1, shape.s + 1):
        d = shape.degrees[part - 1]
        for coords in itertools.product(elems, repeat=d):
            bits |= 1 << shape.index_of(part, coords)
    return SubsetMask(shape, bits)


def _same_shape(A: SubsetMask, B: SubsetMask) -> UniverseShape:
    if A.shape != B.shape:
        raise ShapeMismatchError(f"{A.shape} vs {B.shape}")
    return A.shape


# ---------------------------------------------------------------------------
# power / polynomial difference


def power_difference_witness(A: SubsetMask, B: SubsetMask) -> Optional[PowerWitness]:
    """S with B \\ A = S^{d_1} u ... u S^{d_s}, if the pair has one.

    S is recovered from the diagonal points of part 1 (x in S iff the
    all-x point of part 1 lies in B \\ A) and then verified against every
    part, which also shows the witness is unique when it exists.
    """
    shape = _same_shape(A, B)
    if A.bits == B.bits or not A.issubset(B):
        return None
    diff = B.difference(A)
    d1 = shape.degrees[0]
    S = frozenset(
        x for x in range(1, shape.n + 1) if diff.contains(1, (x,) * d1)
    )
    if not S:
        return None
    if diff.bits != union_of_powers(shape, S).bits:
        return None
    return PowerWitness(S)


def distance2_witness(
    A: SubsetMask, B: SubsetMask, spec: Optional[PatternSpec] = None
) -> Optional[Distance2Witness]:
    """Common-subset certificate: U with A \\ U and B \\ U both power-form.

    Scans candidate pairs (S_1, S_2) in ascending bit order; U is forced to
    A minus the S_1-powers.  Empty S_i are allowed (then that side equals U);
    A == B is rejected outright since the pair must be distinct.
    """
    shape = _same_shape(A, B)
    if A.bits == B.bits:
        raise ValueError("distance-2 witness needs a distinct pair")
    if spec is not None:
        _check_degrees(spec, shape)
    powers = [union_of_powers(shape, S) for S in subsets_ascending(shape.n)]
    for P1 in powers:
        if not P1.issubset(A):
            continue
        rest1 = A.bits & ~P1.bits
        for P2 in powers:
            if not P2.issubset(B):
                continue
            if rest1 == B.bits & ~P2.bits:
                S1 = frozenset(x for x in range(1, shape.n + 1)
                               if P1.contains(1, (x,) * shape.degrees[0]))
                S2 = frozenset(x for x in range(1, shape.n + 1)
                               if P2.contains(1, (x,) * shape.degrees[0]))
                return Distance2Witness(SubsetMask(shape, rest1), S1, S2)
    return None


def _check_degrees(spec: PatternSpec, shape: UniverseShape) -> None:
    if isinstance(spec, PowerDifference) and shape.degrees != (spec.degree,):
        raise ShapeMismatchError(
            f"pattern wants a single part of degree {spec.degree}, shape has {shape.degrees}"
        )
    if isinstance(spec, (PolynomialDifference, CliqueDifference)) and (
        shape.degrees != spec.degrees
    ):
        raise ShapeMismatchError(
            f"pattern degrees {spec.degrees} vs shape {shape.degrees}"
        )
    if isinstance(spec, IntervalModN) and shape.degrees != (1,):
        raise ShapeMismatchError("interval pattern needs a single degree-1 part")


# ---------------------------------------------------------------------------
# template-family difference inside interval windows


def family_difference_witness(
    A: SubsetMask, B: SubsetMask, template: Family, mode: str = SAME_WINDOW
) -> Optional[FamilyWitness]:
    """Witness that A and B differ by planted template members.

    same-window: one interval I, A \\ U and B \\ U are planted members F_1,
    F_2 inside I.  disjoint-windows: F_1 sits in I_1, F_2 in I_2 with I_1,
    I_2 disjoint (then A sym-diff B = F_1 u F_2).  nested: same window and
    F_2 strictly inside F_1 (then A sym-diff B = F_1 \\ F_2).

    Scan order: interval starts ascending (ordered pairs of starts for the
    disjoint mode), then template members ascending; first hit wins.
    """
    shape = _same_shape(A, B)
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")
    if template.shape.degrees != shape.degrees:
        raise ShapeMismatchError("template degrees do not match the pair's shape")
    m = template.shape.n
    n = shape.n
    if m > n:
        raise ValueError(f"template side m={m} exceeds n={n}")
    if A.bits == B.bits:
        return None
    members = list(template.masks())

    def planted(I: OrderedWindow) -> list[tuple[SubsetMask, SubsetMask]]:
        return [(f, plant_into_window(f, I, shape)) for f in members]

    if mode in (SAME_WINDOW, NESTED):
        for start in range(1, n - m + 2):
            I = OrderedWindow.interval(start, m)
            for f1, F1 in planted(I):
                if not F1.issubset(A):
                    continue
                rest = A.bits & ~F1.bits
                for f2, F2 in planted(I):
                    if F1.bits == F2.bits or not F2.issubset(B):
                        continue
                    if rest != B.bits & ~F2.bits:
                        continue
                    if mode == NESTED and F2.bits & ~F1.bits:
                        continue
                    return FamilyWitness(
                        mode, (I,), SubsetMask(shape, rest), F1, F2, f1, f2
                    )
        return None

    # disjoint-windows
    for s1 in range(1, n - m + 2):
        I1 = OrderedWindow.interval(s1, m)
        for s2 in range(1, n - m + 2):
            if abs(s1 - s2) < m:
                continue
            I2 = OrderedWindow.interval(s2, m)
            for f1, F1 in planted(I1):
                if not F1.issubset(A):
                    continue
                rest = A.bits & ~F1.bits
                for f2, F2 in planted(I2):
                    if not F2.issubset(B):
                        continue
                    if rest == B.bits & ~F2.bits:
                        return FamilyWitness(
                            mode, (I1, I2), SubsetMask(shape, rest), F1, F2, f1, f2
                        )
    return None


# ---------------------------------------------------------------------------
# cyclic intervals over Z_n


def cyclic_interval_bits(n: int, start: int, length: int) -> int:
    """Bits of {start, start+1, ..., start+length-1} mod n, elements 1..n."""
    if not 1 <= start <= n:
        raise ValueError(f"start {start} not in 1..{n}")
    if not 0 <= length <= n:
        raise ValueError(f"length {length} not in 0..{n}")
    bits = 0
    z = start
    for _ in range(length):
        bits |= 1 << (z - 1)
        z = z % n + 1
    return bits


def interval_mod_n_witness(
    a_bits: int, b_bits: int, n: int
) -> Optional[IntervalWitness]:
    """(start, length) if the symmetric difference is one cyclic interval.

    The full set is an interval from any start; ties break to start 1.
    """
    diff = a_bits ^ b_bits
    if diff == 0:
        return None
    if diff == (1 << n) - 1:
        return IntervalWitness(1, n)
    k = diff.bit_count()
    starts = []
    for z in range(1, n + 1):
        pred = n if z == 1 else z - 1
        if diff >> (z - 1) & 1 and not diff >> (pred - 1) & 1:
            starts.append(z)
    if len(starts) != 1:
        return None  # more than one run
    y = starts[0]
    if cyclic_interval_bits(n, y, k) != diff:
        return None
    return IntervalWitness(y, k)


# ---------------------------------------------------------------------------
# clique bundles (strictly increasing coordinates encode hyperedges)


def hyperedges_of(mask: SubsetMask) -> tuple[frozenset[frozenset[int]], ...]:
    """Per part: the d_j-subsets read off strictly increasing points."""
    shape = mask.shape
    out: list[set[frozenset[int]]] = [set() for _ in range(shape.s)]
    for part, coords in mask.points():
        if all(coords[i] < coords[i + 1] for i in range(len(coords) - 1)):
            out[part - 1].add(frozenset(coords))
    return tuple(frozenset(e) for e in out)


def clique_difference_witness(
    A: SubsetMask, B: SubsetMask
) -> Optional[CliqueWitness]:
    """S with (edges of B) \\ (edges of A) = all d_j-subsets of S, per part.

    Only the strictly-increasing cells matter; the rest are free bits.  S is
    recovered as the union of vertices over all difference edges, then
    verified (parts with |S| < d_j must have empty difference).
    """
    shape = _same_shape(A, B)
    H = hyperedges_of(A)
    G = hyperedges_of(B)
    if any(h - g for h, g in zip(H, G)):
        return None
    diffs = [g - h for h, g in zip(H, G)]
    S: set[int] = set()
    for dset in diffs:
        for e in dset:
            S |= e
    if not S:
        return None
    for j, dset in enumerate(diffs):
        d = shape.degrees[j]
        want = {frozenset(c) for c in itertools.combinations(sorted(S), d)}
        if dset != want:
            return None
    return CliqueWitness(frozenset(S))


# ---------------------------------------------------------------------------
# dispatch


def find_witness(A: SubsetMask, B: SubsetMask, spec: PatternSpec) -> Optional[Witness]:
    shape = _same_shape(A, B)
    _check_degrees(spec, shape)
    if isinstance(spec, (PowerDifference, PolynomialDifference)):
        return power_difference_witness(A, B)
    if isinstance(spec, FamilyDifference):
        return family_difference_witness(A, B, spec.family, spec.mode)
    if isinstance(spec, IntervalModN):
        if A.bits == B.bits:
            return None
        return interval_mod_n_witness(A.bits, B.bits, shape.n)
    if isinstance(spec, CliqueDifference):
        return clique_difference_witness(A, B)
    raise TypeError(f"unknown pattern spec {spec!r}")


def verify_witness(
    A: SubsetMask, B: SubsetMask, spec: PatternSpec, w: Witness
) -> bool:
    """Independent certificate check: recompute the claimed difference."""
    shape = _same_shape(A, B)
    if isinstance(w, PowerWitness):
        return (
            bool(w.S)
            and A.issubset(B)
            and A.bits != B.bits
            and B.difference(A).bits == union_of_powers(shape, w.S).bits
        )
    if isinstance(w, Distance2Witness):
        return (
            A.bits != B.bits
            and w.U.issubset(A)
            and w.U.issubset(B)
            and A.difference(w.U).bits == union_of_powers(shape, w.S1).bits
            and B.difference(w.U).bits == union_of_powers(shape, w.S2).bits
        )
    if isinstance(w, FamilyWitness):
        if not isinstance(spec, FamilyDifference):
            return False
        regions = [window_region(shape, I) for I in w.windows]
        if w.mode in (SAME_WINDOW, NESTED):
            if len(w.windows) != 1 or not w.windows[0].is_interval():
                return False
            r1 = r2 = regions[0]
        else:
            if (
                len(w.windows) != 2
                or not all(I.is_interval() for I in w.windows)
                or set(w.windows[0].elements) & set(w.windows[1].elements)
            ):
                return False
            r1, r2 = regions
        ok = (
            w.U.issubset(A)
            and w.U.issubset(B)
            and A.difference(w.U).bits == w.F1.bits
            and B.difference(w.U).bits == w.F2.bits
            and w.F1.issubset(r1)
            and w.F2.issubset(r2)
            and restrict_and_relabel(w.F1, w.windows[0]) in spec.family
            and restrict_and_relabel(w.F2, w.windows[-1]) in spec.family
            and w.F1.bits != w.F2.bits
        )
        if w.mode == NESTED:
            ok = ok and w.F2.issubset(w.F1)
        return ok
    if isinstance(w, IntervalWitness):
        return (
            w.length >= 1
            and (A.bits ^ B.bits) == cyclic_interval_bits(shape.n, w.start, w.length)
        )
    if isinstance(w, CliqueWitness):
        H = hyperedges_of(A)
        G = hyperedges_of(B)
        if not w.S:
            return False
        for j in range(shape.s):
            d = shape.degrees[j]
            want = {frozenset(c) for c in itertools.combinations(sorted(w.S), d)}
            if not H[j] <= G[j] or G[j] - H[j] != want:
                return False
        return True
    raise TypeError(f"unknown witness {w!r}")


def find_pattern_pair(
    fam: Family, spec: PatternSpec
) -> Optional[tuple[SubsetMask, SubsetMask, Witness]]:
    """First ordered pair of distinct members admitting a witness.

    Pairs are scanned in ascending (A.bits, B.bits) order, so the result is
    deterministic for a given family and spec.
    """
    members = sorted(fam.members)
    for a in members:
        A = SubsetMask(fam.shape, a)
        for b in members:
            if a == b:
                continue
            B = SubsetMask(fam.shape, b)
            w = find_witness(A, B, spec)
            if w is not None:
                return A, B, w
    return None
