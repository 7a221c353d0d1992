"""Ground universes, subsets-as-bitmasks, families, and relabeling maps.

The ground set is a disjoint union of coordinate powers

    [n]^{d_1}  u  [n]^{d_2}  u  ...  u  [n]^{d_s}

with coordinates 1-based.  A subset is stored as a single Python int whose
bit ``i`` records membership of the cell with index ``i``; cell indices are
assigned row-major within each part, parts concatenated in order:

    index(part, (c_1, ..., c_d)) = offset(part) + sum_k (c_k - 1) * n^(d - k)

so the *first* coordinate is most significant and ``offset(part)`` is the
total cell count of the earlier parts.  All densities are exact rationals.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from .errors import FormatError, ShapeMismatchError

Point = tuple[int, tuple[int, ...]]  # (part, coordinates), both 1-based


@dataclass(frozen=True)
class UniverseShape:
    """Shape descriptor: part degrees (d_1, ..., d_s) and side n."""

    degrees: tuple[int, ...]
    n: int

    def __post_init__(self) -> None:
        if not isinstance(self.degrees, tuple):
            object.__setattr__(self, "degrees", tuple(self.degrees))
        if len(self.degrees) < 1:
            raise ValueError("need at least one part")
        if any(not isinstance(d, int) or d < 1 for d in self.degrees):
            raise ValueError(f"degrees must be positive ints, got {self.degrees}")
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"side n must be a positive int, got {self.n}")

    @property
    def s(self) -> int:
        return len(self.degrees)

    @property
    def cells(self) -> int:
        return sum(self.n ** d for d in self.degrees)

    def part_cells(self, part: int) -> int:
        """Cell count of one part (1-based part index)."""
        return self.n ** self.degrees[part - 1]

    def part_offset(self, part: int) -> int:
        if not 1 <= part <= self.s:
            raise ValueError(f"part {part} out of range 1..{self.s}")
        return sum(self.n ** d for d in self.degrees[: part - 1])

    def index_of(self, part: int, coords: Sequence[int]) -> int:
        d = self.degrees[part - 1]
        coords = tuple(coords)
        if len(coords) != d:
            raise ValueError(f"part {part} has degree {d}, got coords {coords}")
        if any(not 1 <= c <= self.n for c in coords):
            raise ValueError(f"coordinates {coords} out of range 1..{self.n}")
        idx = self.part_offset(part)
        for k, c in enumerate(coords, start=1):
            idx += (c - 1) * self.n ** (d - k)
        return idx

    def point_of(self, index: int) -> Point:
        if not 0 <= index < self.cells:
            raise ValueError(f"cell index {index} out of range 0..{self.cells - 1}")
        part = 1
        while index >= self.part_cells(part):
            index -= self.part_cells(part)
            part += 1
        d = self.degrees[part - 1]
        coords = []
        for k in range(1, d + 1):
            w = self.n ** (d - k)
            coords.append(index // w + 1)
            index %= w
        return part, tuple(coords)

    def points(self) -> Iterator[Point]:
        """All points in cell-index order."""
        for part in range(1, self.s + 1):
            d = self.degrees[part - 1]
            for coords in itertools.product(range(1, self.n + 1), repeat=d):
                yield part, coords

    def full_bits(self) -> int:
        return (1 << self.cells) - 1


@dataclass(frozen=True)
class SubsetMask:
    """A subset of the ground set, encoded as an int bitmask."""

    shape: UniverseShape
    bits: int

    def __post_init__(self) -> None:
        if not 0 <= self.bits <= self.shape.full_bits():
            raise ValueError("bits outside the universe")

    def __len__(self) -> int:
        return self.bits.bit_count()

    def contains(self, part: int, coords: Sequence[int]) -> bool:
        return bool(self.bits >> self.shape.index_of(part, coords) & 1)

    def points(self) -> Iterator[Point]:
        bits = self.bits
        while bits:
            low = bits & -bits
            yield self.shape.point_of(low.bit_length() - 1)
            bits ^= low

    def indices(self) -> Iterator[int]:
        bits = self.bits
        while bits:
            low = bits & -bits
            yield low.bit_length() - 1
            bits ^= low

    def _check(self, other: "SubsetMask") -> None:
        if self.shape != other.shape:
            raise ShapeMismatchError(f"{self.shape} vs {other.shape}")

    def union(self, other: "SubsetMask") -> "SubsetMask":
        self._check(other)
        return SubsetMask(self.shape, self.bits | other.bits)

    def intersection(self, other: "SubsetMask") -> "SubsetMask":
        self._check(other)
        return SubsetMask(self.shape, self.bits & other.bits)

    def difference(self, other: "SubsetMask") -> "SubsetMask":
        self._check(other)
        return SubsetMask(self.shape, self.bits & ~other.bits)

    def symmetric_difference(self, other: "SubsetMask") -> "SubsetMask":
        self._check(other)
        return SubsetMask(self.shape, self.bits ^ other.bits)

    def issubset(self, other: "SubsetMask") -> bool:
        self._check(other)
        return self.bits & ~other.bits == 0

    def complement(self) -> "SubsetMask":
        return SubsetMask(self.shape, self.shape.full_bits() ^ self.bits)

    def to_hex(self) -> str:
        return mask_to_hex(self.bits, self.shape.cells)

    @classmethod
    def from_points(cls, shape: UniverseShape, pts: Iterable[Point]) -> "SubsetMask":
        bits = 0
        for part, coords in pts:
            bits |= 1 << shape.index_of(part, coords)
        return cls(shape, bits)

    @classmethod
    def empty(cls, shape: UniverseShape) -> "SubsetMask":
        return cls(shape, 0)

    @classmethod
    def full(cls, shape: UniverseShape) -> "SubsetMask":
        return cls(shape, shape.full_bits())


@dataclass(frozen=True)
class Family:
    """A set of subsets of one universe.  Members stored as raw bit values."""

    shape: UniverseShape
    members: frozenset[int]

    def __post_init__(self) -> None:
        if not isinstance(self.members, frozenset):
            object.__setattr__(self, "members", frozenset(self.members))
        full = self.shape.full_bits()
        for b in self.members:
            if not 0 <= b <= full:
                raise ValueError("family member outside the universe")

    @classmethod
    def from_masks(cls, masks: Iterable[SubsetMask]) -> "Family":
        masks = list(masks)
        if not masks:
            raise ValueError("cannot infer shape from an empty mask list")
        shape = masks[0].shape
        for m in masks:
            if m.shape != shape:
                raise ShapeMismatchError("mixed shapes in family")
        return cls(shape, frozenset(m.bits for m in masks))

    @classmethod
    def full_power_set(cls, shape: UniverseShape) -> "Family":
        return cls(shape, frozenset(range(1 << shape.cells)))

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, item) -> bool:
        if isinstance(item, SubsetMask):
            return item.shape == self.shape and item.bits in self.members
        return item in self.members

    def masks(self) -> Iterator[SubsetMask]:
        """Members as masks, ascending bit value (the canonical order)."""
        for b in sorted(self.members):
            yield SubsetMask(self.shape, b)

    def density(self) -> Fraction:
        return Fraction(len(self.members), 1 << self.shape.cells)


@dataclass(frozen=True)
class OrderedWindow:
    """An ordered m-subset of [n]; position in the tuple is the ordering.

    ``relabel`` sends elements[k-1] to k, i.e. the k-th element under the
    window's ordering becomes the label k of the small universe [m].
    """

    elements: tuple[int, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.elements, tuple):
            object.__setattr__(self, "elements", tuple(self.elements))
        if len(set(self.elements)) != len(self.elements):
            raise ValueError(f"window elements not distinct: {self.elements}")
        if not self.elements:
            raise ValueError("window cannot be empty")
        if any(not isinstance(x, int) or x < 1 for x in self.elements):
            raise ValueError(f"window elements must be positive ints: {self.elements}")

    @property
    def m(self) -> int:
        return len(self.elements)

    @classmethod
    def interval(cls, start: int, size: int) -> "OrderedWindow":
        """The interval {start, ..., start+size-1} in increasing order."""
        return cls(tuple(range(start, start + size)))

    def is_interval(self) -> bool:
        e = self.elements
        return all(e[i + 1] == e[i] + 1 for i in range(len(e) - 1))


def _normalize_windows(
    shape: UniverseShape, windows: OrderedWindow | Sequence[OrderedWindow]
) -> tuple[OrderedWindow, ...]:
    if isinstance(windows, OrderedWindow):
        ws = (windows,) * shape.s
    else:
        ws = tuple(windows)
        if len(ws) == 1:
            ws = ws * shape.s
        if len(ws) != shape.s:
            raise ValueError(f"need 1 or {shape.s} windows, got {len(ws)}")
    m = ws[0].m
    for w in ws:
        if w.m != m:
            raise ValueError("windows must share a common size")
        if any(x > shape.n for x in w.elements):
            raise ValueError(f"window {w.elements} exceeds side n={shape.n}")
    return ws


@lru_cache(maxsize=4096)
def _window_index_table(
    shape: UniverseShape, windows: tuple[OrderedWindow, ...]
) -> tuple[int, ...]:
    """Source cell index for each cell of the relabeled m-shape, in order."""
    m = windows[0].m
    small = UniverseShape(shape.degrees, m)
    table = []
    for part, coords in small.points():
        w = windows[part - 1].elements
        src = tuple(w[c - 1] for c in coords)
        table.append(shape.index_of(part, src))
    assert len(table) == small.cells
    return tuple(table)


def restrict_and_relabel(
    mask: SubsetMask, windows: OrderedWindow | Sequence[OrderedWindow]
) -> SubsetMask:
    """Keep points with all coordinates in the window, relabel into [m].

    One window may be given for all parts, or one per part.  The k-th window
    element (under the window's ordering) becomes the label k.
    """
    ws = _normalize_windows(mask.shape, windows)
    table = _window_index_table(mask.shape, ws)
    small = UniverseShape(mask.shape.degrees, ws[0].m)
    bits = 0
    for small_idx, src_idx in enumerate(table):
        if mask.bits >> src_idx & 1:
            bits |= 1 << small_idx
    return SubsetMask(small, bits)


def plant_into_window(
    small_mask: SubsetMask,
    windows: OrderedWindow | Sequence[OrderedWindow],
    shape: UniverseShape,
) -> SubsetMask:
    """Right inverse of restrict_and_relabel: place an [m]-shape subset into
    the window power region of the big universe (all other cells empty)."""
    ws = _normalize_windows(shape, windows)
    if ws[0].m != small_mask.shape.n or small_mask.shape.degrees != shape.degrees:
        raise ShapeMismatchError("small mask does not match window size / degrees")
    table = _window_index_table(shape, ws)
    bits = 0
    for small_idx, src_idx in enumerate(table):
        if small_mask.bits >> small_idx & 1:
            bits |= 1 << src_idx
    return SubsetMask(shape, bits)


def window_region(
    shape: UniverseShape, windows: OrderedWindow | Sequence[OrderedWindow]
) -> SubsetMask:
    """The region X_1^{d_1} u ... u X_s^{d_s} as a mask over the big shape."""
    ws = _normalize_windows(shape, windows)
    bits = 0
    for src_idx in _window_index_table(shape, ws):
        bits |= 1 << src_idx
    return SubsetMask(shape, bits)


# ---------------------------------------------------------------------------
# degree embedding


def _embed_point(coords: tuple[int, ...], d_target: int) -> tuple[int, ...]:
    reps = d_target - len(coords) + 1
    return (coords[0],) * reps + coords[1:]


def embed_lower_degree(
    mask: SubsetMask, target_degrees: Sequence[int]
) -> SubsetMask:
    """Pointwise image of a lower-degree subset inside a higher-degree shape.

    Per part, (x_1, ..., x_{d'}) maps to (x_1, ..., x_1, x_2, ..., x_{d'})
    with the first coordinate repeated d - d' + 1 times.
    """
    src = mask.shape
    tdeg = tuple(target_degrees)
    if len(tdeg) != src.s:
        raise ValueError("part count must match")
    if any(t < d for t, d in zip(tdeg, src.degrees)):
        raise ValueError(f"target degrees {tdeg} below source {src.degrees}")
    target = UniverseShape(tdeg, src.n)
    bits = 0
    for part, coords in mask.points():
        bits |= 1 << target.index_of(part, _embed_point(coords, tdeg[part - 1]))
    return SubsetMask(target, bits)


def embedded_region(
    source_shape: UniverseShape, target_degrees: Sequence[int]
) -> SubsetMask:
    """The image E of the whole lower-degree universe under the embedding."""
    return embed_lower_degree(SubsetMask.full(source_shape), target_degrees)


def embed_preimage(
    mask: SubsetMask, source_degrees: Sequence[int]
) -> SubsetMask:
    """Inverse of the embedding on its image region E.

    ``mask`` must be contained in E (raises ValueError otherwise).
    """
    sdeg = tuple(source_degrees)
    source = UniverseShape(sdeg, mask.shape.n)
    region = embedded_region(source, mask.shape.degrees)
    if not mask.issubset(region):
        raise ValueError("mask is not contained in the embedded region")
    bits = 0
    for part, coords in SubsetMask.full(source).points():
        img = _embed_point(coords, mask.shape.degrees[part - 1])
        if mask.contains(part, img):
            bits |= 1 << source.index_of(part, coords)
    return SubsetMask(source, bits)


# ---------------------------------------------------------------------------
# text serialization
#
# Family file: a header line
#     shape s=<s> d=<d_1,...,d_s> n=<n>
# followed by one line per member: lowercase hex of the cell bit array with
# the most significant cell LAST (hex digit j encodes cells 4j..4j+3).
# Members are written in ascending bit order; blank lines and #-comments are
# ignored on input.

_HEADER_RE = re.compile(
    r"^shape\s+s=(\d+)\s+d=([0-9,]+)\s+n=(\d+)\s*$"
)


def mask_to_hex(bits: int, cells: int) -> str:
    ndigits = max(1, (cells + 3) // 4)
    return format(bits, f"0{ndigits}x")[::-1]


def mask_from_hex(text: str, cells: int) -> int:
    ndigits = max(1, (cells + 3) // 4)
    if len(text) != ndigits or not re.fullmatch(r"[0-9a-f]+", text):
        raise FormatError(f"bad member line {text!r} (want {ndigits} hex digits)")
    bits = int(text[::-1], 16)
    if bits >= 1 << cells:
        raise FormatError(f"member line {text!r} sets bits outside the universe")
    return bits


def family_to_text(fam: Family) -> str:
    sh = fam.shape
    lines = [f"shape s={sh.s} d={','.join(map(str, sh.degrees))} n={sh.n}"]
    lines.extend(mask_to_hex(b, sh.cells) for b in sorted(fam.members))
    return "\n".join(lines) + "\n"


def family_from_text(text: str) -> Family:
    lines = [
        ln.strip()
        for ln in text.splitlines()
        if ln.strip() and not ln.lstrip().startswith("#")
    ]
    if not lines:
        raise FormatError("empty family file")
    m = _HEADER_RE.match(lines[0])
    if not m:
        raise FormatError(f"bad family header {lines[0]!r}")
    s, dlist, n = int(m.group(1)), m.group(2), int(m.group(3))
    try:
        degrees = tuple(int(x) for x in dlist.split(","))
    except ValueError as e:
        raise FormatError(f"bad degree list {dlist!r}") from e
    if len(degrees) != s:
        raise FormatError(f"header says s={s} but lists {len(degrees)} degrees")
    try:
        shape = UniverseShape(degrees, n)
    except ValueError as e:
        raise FormatError(str(e)) from e
    members = set()
    for ln in lines[1:]:
        b = mask_from_hex(ln, shape.cells)
        if b in members:
            raise FormatError(f"duplicate member {ln!r}")
        members.add(b)
    return Family(shape, frozenset(members))
