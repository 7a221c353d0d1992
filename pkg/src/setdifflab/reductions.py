"""Constructive equivalences between problem variants.

Five exact transports: restriction of symmetric sets to the sorted-coordinate
region and back, diagonal multiplexing into several equal parts, the
interval-partition bijection between symmetric sets and hypergraph bundles,
the clique-square correspondence between graph families and families over
[n]^2, and diagonal block families that spread a family across disjoint
windows.  Every map preserves exact counts and transports witnesses in the
documented direction.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from math import comb
from typing import Iterable, Iterator, Sequence

from .errors import FormatError, ShapeMismatchError
from .patterns import hyperedges_of
from .universe import (
    Family,
    OrderedWindow,
    SubsetMask,
    UniverseShape,
    plant_into_window,
)

Hyperedge = frozenset[int]


def _single_part(shape: UniverseShape) -> int:
    if shape.s != 1:
        raise ShapeMismatchError("expected a single-part universe")
    return shape.degrees[0]


# ---------------------------------------------------------------------------
# symmetric region


@dataclass(frozen=True)
class SymmetricRegion:
    """Sorted-coordinate representatives {x_1 <= ... <= x_d} inside [n]^d."""

    d: int
    n: int

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise ValueError("d and n must be positive")

    @property
    def size(self) -> int:
        return comb(self.n + self.d - 1, self.d)

    def shape(self) -> UniverseShape:
        return UniverseShape(degrees=(self.d,), n=self.n)

    def mask(self) -> SubsetMask:
        pts = [
            (1, coords)
            for coords in itertools.combinations_with_replacement(
                range(1, self.n + 1), self.d)
        ]
        return SubsetMask.from_points(self.shape(), pts)


def is_symmetric(A: SubsetMask) -> bool:
    """Invariance under every coordinate permutation."""
    _single_part(A.shape)
    for part, coords in A.points():
        for perm in itertools.permutations(coords):
            if not A.contains(part, perm):
                return False
    return True


def symmetric_lift(A_sym: SubsetMask) -> SubsetMask:
    """Restrict a symmetric set to its sorted representatives."""
    d = _single_part(A_sym.shape)
    if not is_symmetric(A_sym):
        raise ValueError("symmetric_lift needs a symmetric input")
    region = SymmetricRegion(d=d, n=A_sym.shape.n)
    return A_sym.intersection(region.mask())


def symmetric_extend(B: SubsetMask) -> SubsetMask:
    """Orbit closure of a set of sorted representatives."""
    d = _single_part(B.shape)
    region = SymmetricRegion(d=d, n=B.shape.n)
    if not B.issubset(region.mask()):
        raise ValueError("symmetric_extend needs a subset of the sorted region")
    pts = [
        (1, perm)
        for _part, coords in B.points()
        for perm in set(itertools.permutations(coords))
    ]
    return SubsetMask.from_points(B.shape, pts)


# ---------------------------------------------------------------------------
# multiplexing


def multiplex(fam: Family, s: int) -> Family:
    """Diagonal copies A |-> A u ... u A over s parts of the same degree."""
    if s < 1:
        raise ValueError("s must be at least 1")
    d = _single_part(fam.shape)
    big = UniverseShape(degrees=(d,) * s, n=fam.shape.n)
    members = []
    for mask in fam.masks():
        pts = [
            (part, coords)
            for _p, coords in mask.points()
            for part in range(1, s + 1)
        ]
        members.append(SubsetMask.from_points(big, pts).bits)
    return Family(big, frozenset(members))


# ---------------------------------------------------------------------------
# interval partitions and the hypergraph bijection


@dataclass(frozen=True)
class IntervalPartitionCatalog:
    """Partitions of [d] into k consecutive intervals, for every k.

    A partition into k intervals is the same thing as a composition
    (c_1,...,c_k) of d; parts are enumerated k ascending, then compositions
    in lexicographic order, which fixes the part indexing used by the
    hypergraph bijection.
    """

    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be positive")

    def compositions(self, k: int) -> tuple[tuple[int, ...], ...]:
        if not 1 <= k <= self.d:
            raise ValueError(f"k must lie in [1, {self.d}]")
        out = []
        for cuts in itertools.combinations(range(1, self.d), k - 1):
            bounds = (0,) + cuts + (self.d,)
            out.append(tuple(bounds[i + 1] - bounds[i] for i in range(k)))
        return tuple(out)

    def intervals(self, k: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
        out = []
        for comp in self.compositions(k):
            stop = 0
            blocks = []
            for c in comp:
                blocks.append(tuple(range(stop + 1, stop + c + 1)))
                stop += c
            out.append(tuple(blocks))
        return tuple(out)

    def m(self, k: int) -> int:
        return len(self.compositions(k))

    @property
    def s(self) -> int:
        return 2 ** (self.d - 1)

    def parts(self) -> Iterator[tuple[int, tuple[int, ...]]]:
        for k in range(1, self.d + 1):
            for comp in self.compositions(k):
                yield k, comp

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(k for k, _ in self.parts())


@dataclass(frozen=True)
class HypergraphBundle:
    """One k_j-uniform hypergraph on [n] per part."""

    n: int
    degrees: tuple[int, ...]
    parts: tuple[frozenset[Hyperedge], ...]

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(self.degrees))
        object.__setattr__(
            self, "parts",
            tuple(frozenset(frozenset(e) for e in part) for part in self.parts))
        if len(self.parts) != len(self.degrees):
            raise ValueError("one hyperedge set per degree required")
        for deg, part in zip(self.degrees, self.parts):
            for edge in part:
                if len(edge) != deg:
                    raise ValueError(
                        f"hyperedge {sorted(edge)} does not have {deg} vertices")
                if not all(1 <= v <= self.n for v in edge):
                    raise ValueError(f"vertex out of range in {sorted(edge)}")

    def shape(self) -> UniverseShape:
        return UniverseShape(degrees=self.degrees, n=self.n)

    def to_mask(self) -> SubsetMask:
        """Strictly-increasing representative points, one per hyperedge."""
        pts = [
            (j, tuple(sorted(edge)))
            for j, part in enumerate(self.parts, start=1)
            for edge in part
        ]
        return SubsetMask.from_points(self.shape(), pts)

    @classmethod
    def from_mask(cls, mask: SubsetMask) -> "HypergraphBundle":
        return cls(n=mask.shape.n, degrees=mask.shape.degrees,
                   parts=hyperedges_of(mask))

    def to_text(self) -> str:
        return bundles_to_text([self])


_HEADER = re.compile(r"n=(\d+) degrees=(\d+(?:,\d+)*)")


def bundles_to_text(bundles: Sequence[HypergraphBundle]) -> str:
    """Header line, then one line per part per bundle ('-' = no hyperedges)."""
    if not bundles:
        raise ValueError("nothing to serialize")
    n, degrees = bundles[0].n, bundles[0].degrees
    if any(b.n != n or b.degrees != degrees for b in bundles):
        raise ValueError("bundles in one file must share n and degrees")
    lines = [f"n={n} degrees={','.join(str(d) for d in degrees)}"]
    for bundle in bundles:
        for part in bundle.parts:
            edges = sorted(tuple(sorted(e)) for e in part)
            lines.append(
                " ".join(",".join(str(v) for v in e) for e in edges) or "-")
    return "\n".join(lines) + "\n"


def bundles_from_text(text: str) -> list[HypergraphBundle]:
    lines = [
        ln.strip() for ln in text.splitlines()
        if ln.strip() and not ln.lstrip().startswith("#")
    ]
    if not lines:
        raise FormatError("empty bundle file")
    header = _HEADER.fullmatch(lines[0])
    if header is None:
        raise FormatError(f"bad header {lines[0]!r}")
    n = int(header.group(1))
    degrees = tuple(int(tok) for tok in header.group(2).split(","))
    body = lines[1:]
    if not body or len(body) % len(degrees) != 0:
        raise FormatError(
            f"expected a multiple of {len(degrees)} part lines, got {len(body)}")
    bundles = []
    for start in range(0, len(body), len(degrees)):
        parts = []
        for line in body[start:start + len(degrees)]:
            edges = set()
            if line != "-":
                for token in line.split():
                    try:
                        edges.add(frozenset(int(v) for v in token.split(",")))
                    except ValueError:
                        raise FormatError(f"bad hyperedge {token!r}") from None
            parts.append(frozenset(edges))
        try:
            bundles.append(
                HypergraphBundle(n=n, degrees=degrees, parts=tuple(parts)))
        except ValueError as exc:
            raise FormatError(str(exc)) from None
    return bundles


def bundle_from_text(text: str) -> HypergraphBundle:
    bundles = bundles_from_text(text)
    if len(bundles) != 1:
        raise FormatError(f"expected one bundle, found {len(bundles)}")
    return bundles[0]


def _representative(combo: Sequence[int], comp: Sequence[int]) -> tuple[int, ...]:
    coords: list[int] = []
    for value, count in zip(combo, comp):
        coords.extend([value] * count)
    return tuple(coords)


def beta_bijection(A_sym: SubsetMask) -> HypergraphBundle:
    """Symmetric set -> bundle: part (k,t) gets {a_1 < ... < a_k} iff the
    sorted point with a_i repeated per the t-th composition lies in the set."""
    d = _single_part(A_sym.shape)
    if not is_symmetric(A_sym):
        raise ValueError("beta_bijection needs a symmetric input")
    n = A_sym.shape.n
    catalog = IntervalPartitionCatalog(d=d)
    parts = []
    for k, comp in catalog.parts():
        edges = set()
        for combo in itertools.combinations(range(1, n + 1), k):
            if A_sym.contains(1, _representative(combo, comp)):
                edges.add(frozenset(combo))
        parts.append(frozenset(edges))
    return HypergraphBundle(n=n, degrees=catalog.degrees, parts=tuple(parts))


def beta_inverse(bundle: HypergraphBundle) -> SubsetMask:
    d = bundle.degrees[-1]
    catalog = IntervalPartitionCatalog(d=d)
    if bundle.degrees != catalog.degrees:
        raise ValueError(
            f"degrees {bundle.degrees} do not match the catalog for d={d}")
    shape = UniverseShape(degrees=(d,), n=bundle.n)
    pts = []
    for (k, comp), part in zip(catalog.parts(), bundle.parts):
        for edge in part:
            base = _representative(sorted(edge), comp)
            pts.extend((1, perm) for perm in set(itertools.permutations(base)))
    return SubsetMask.from_points(shape, pts)


# ---------------------------------------------------------------------------
# clique-square correspondence


def _normalize_graph(edges: Iterable[Iterable[int]], n: int,
                     loopful: bool) -> frozenset[Hyperedge]:
    out = set()
    for edge in edges:
        e = frozenset(edge)
        if not all(1 <= v <= n for v in e):
            raise ValueError(f"vertex out of range in {sorted(e)}")
        if len(e) == 2 or (loopful and len(e) == 1):
            out.add(e)
        else:
            raise ValueError(f"{sorted(e)} is not an edge on [{n}]")
    return frozenset(out)


def clique_square_correspondence(graphs: Iterable[Iterable[Iterable[int]]],
                                 n: int, loopful: bool = False) -> Family:
    """Graph family -> family over [n]^2 with (x,y), x<y, reading edges.

    Cells on and below the diagonal are free and range over all values, so
    each graph contributes a fiber of 2^(n^2 - C(n,2)) masks; in loopful
    mode the diagonal encodes loops and only the below-diagonal cells are
    free.  Distinct graphs have disjoint fibers, so density is preserved.
    """
    if n < 1:
        raise ValueError("n must be positive")
    shape = UniverseShape(degrees=(2,), n=n)
    fixed_cells = [(x, y) for x in range(1, n + 1) for y in range(x + 1, n + 1)]
    if loopful:
        fixed_cells += [(x, x) for x in range(1, n + 1)]
    free_cells = [
        (x, y)
        for x in range(1, n + 1) for y in range(1, n + 1)
        if (x, y) not in fixed_cells
    ]
    members = set()
    for graph in graphs:
        edge_set = _normalize_graph(graph, n, loopful)
        base = 0
        for x, y in fixed_cells:
            if (frozenset({x, y}) if x != y else frozenset({x})) in edge_set:
                base |= 1 << shape.index_of(1, (x, y))
        for choice in range(1 << len(free_cells)):
            bits = base
            for i, cell in enumerate(free_cells):
                if choice >> i & 1:
                    bits |= 1 << shape.index_of(1, cell)
            members.add(bits)
    return Family(shape, frozenset(members))


def graph_of_square_mask(mask: SubsetMask) -> frozenset[Hyperedge]:
    """Read the encoded edge set back off the strictly-increasing cells."""
    if mask.shape.degrees != (2,):
        raise ShapeMismatchError("expected a mask over [n]^2")
    return hyperedges_of(mask)[0]


# ---------------------------------------------------------------------------
# diagonal block families


def diagonal_block_family(F: Family) -> Family:
    """Plant the t-th member (ascending mask order) in the t-th window.

    The result lives over [m*l] with l = |F| and has pairwise disjoint
    members; it turns same-window conclusions into disjoint-window ones.
    """
    if not F.members:
        raise ValueError("family is empty")
    m = F.shape.n
    l = len(F)
    big = UniverseShape(degrees=F.shape.degrees, n=m * l)
    members = []
    for t, small in enumerate(F.masks(), start=1):
        window = OrderedWindow.interval((t - 1) * m + 1, m)
        members.append(plant_into_window(small, window, big).bits)
    return Family(big, frozenset(members))
