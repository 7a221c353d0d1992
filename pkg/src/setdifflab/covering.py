"""Window covering and double counting.

A window system is a list of t pairwise-disjoint size-m windows of [n]; a
subset A "hits" window X_r when its restriction-and-relabel into [m] lands in
a chosen pattern family (equivalently, satisfies a predicate).  Everything
here is exact: hit-count moments over the uniform random subset are computed
as rationals via the window-bit decomposition, the dense-cell scan reports
exact relative densities, and the cyclic-shift demo realizes the abstract
covering conditions over Z_2^{Z_n}.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Collection, Hashable, Iterator, Optional, Sequence

from .errors import CapExceededError, ShapeMismatchError, UnsatisfiablePredicateError, UniverseTooSmallError
from .patterns import cyclic_interval_bits, interval_mod_n_witness
from .universe import (
    Family,
    OrderedWindow,
    SubsetMask,
    UniverseShape,
    plant_into_window,
    restrict_and_relabel,
    window_region,
)

Predicate = Callable[[SubsetMask], bool]


@dataclass(frozen=True)
class WindowSystem:
    shape: UniverseShape
    windows: tuple[OrderedWindow, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.windows, tuple):
            object.__setattr__(self, "windows", tuple(self.windows))
        if not self.windows:
            raise ValueError("need at least one window")
        m = self.windows[0].m
        seen: set[int] = set()
        for w in self.windows:
            if w.m != m:
                raise ValueError("windows must share a common size")
            elems = set(w.elements)
            if elems & seen:
                raise ValueError("windows must be pairwise disjoint")
            if any(x > self.shape.n for x in elems):
                raise ValueError(f"window {w.elements} exceeds n={self.shape.n}")
            seen |= elems

    @property
    def m(self) -> int:
        return self.windows[0].m

    @property
    def t(self) -> int:
        return len(self.windows)

    @property
    def small_shape(self) -> UniverseShape:
        return UniverseShape(self.shape.degrees, self.m)

    @classmethod
    def canonical(cls, shape: UniverseShape, m: int) -> "WindowSystem":
        """The intervals [(r-1)m+1 .. rm] for r = 1..floor(n/m)."""
        t = shape.n // m
        if t < 1:
            raise UniverseTooSmallError(f"no size-{m} window fits in [{shape.n}]")
        return cls(
            shape,
            tuple(OrderedWindow.interval((r - 1) * m + 1, m) for r in range(1, t + 1)),
        )


def count_hits(A: SubsetMask, ws: WindowSystem, pred: Predicate) -> int:
    """N(A): the number of windows whose relabeled restriction satisfies pred."""
    if A.shape != ws.shape:
        raise ShapeMismatchError("mask shape does not match the window system")
    return sum(1 for w in ws.windows if pred(restrict_and_relabel(A, w)))


def satisfying_count(small_shape: UniverseShape, pred: Predicate) -> int:
    """|{F in P([m]-shape) : pred(F)}| by full enumeration."""
    if small_shape.cells > 24:
        raise CapExceededError(
            f"predicate enumeration over 2^{small_shape.cells} subsets refused"
        )
    return sum(1 for b in range(1 << small_shape.cells) if pred(SubsetMask(small_shape, b)))


@dataclass(frozen=True)
class MomentReport:
    t: int
    p_P: Fraction
    expectation: Fraction
    variance: Fraction
    epsilon: Optional[Fraction]
    epsilon_bound_ok: Optional[bool]


def exact_moments(
    ws: WindowSystem, pred: Predicate, epsilon: Optional[Fraction] = None
) -> MomentReport:
    """Exact E[N] = t p(P) and Var[N] = t p(P)(1 - p(P)) over uniform A.

    The windows occupy disjoint bit blocks, so the t restrictions are
    independent uniform subsets of the [m]-shape and the closed forms are
    identities of exact counting, not approximations.  When epsilon is
    given, the report checks the implication t >= 1/(eps p(P))  =>
    Var <= eps E^2 symbolically (Var/E^2 = (1-p)/(t p)).
    """
    count = satisfying_count(ws.small_shape, pred)
    if count == 0:
        raise UnsatisfiablePredicateError("predicate admits no subset: p(P) = 0")
    p = Fraction(count, 1 << ws.small_shape.cells)
    t = ws.t
    expectation = t * p
    variance = t * p * (1 - p)
    ok = None
    if epsilon is not None:
        epsilon = Fraction(epsilon)
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        # implication check, all exact
        ok = t < 1 / (epsilon * p) or variance <= epsilon * expectation**2
    return MomentReport(t, p, expectation, variance, epsilon, ok)


def guarantee_threshold(m: int, degrees: Sequence[int], epsilon: Fraction) -> Fraction:
    """Smallest n (as an exact rational) above which the dense-cell guarantee
    kicks in: 2^(m^{d_1} + ... + m^{d_s}) * eps^-3 * m."""
    epsilon = Fraction(epsilon)
    if not 0 < epsilon:
        raise ValueError("epsilon must be positive")
    exponent = sum(m**d for d in degrees)
    return (1 << exponent) * epsilon**-3 * m


@dataclass(frozen=True)
class CoveringCell:
    """The cell C(I_r, U): subsets agreeing with U off the window power region
    whose relabeled window part lies in the pattern family."""

    window: OrderedWindow
    background: SubsetMask
    pattern_family: Family

    def __len__(self) -> int:
        return len(self.pattern_family)

    def members(self) -> Iterator[SubsetMask]:
        shape = self.background.shape
        for f in self.pattern_family.masks():
            yield plant_into_window(f, self.window, shape).union(self.background)

    def __contains__(self, mask: SubsetMask) -> bool:
        shape = self.background.shape
        region = window_region(shape, self.window)
        if mask.bits & ~region.bits != self.background.bits:
            return False
        return restrict_and_relabel(mask, self.window) in self.pattern_family


def scan_for_dense_cell(
    fam: Family, m: int, pattern_family: Family
) -> tuple[CoveringCell, Fraction, Fraction]:
    """Max-density cell over the canonical interval windows.

    Returns (cell, its relative density, the global average density over all
    cells).  All cells share the size |pattern_family|, so the average over
    cells of |fam n C| / |C| equals a ratio of two incidence counts and the
    pigeonhole max >= average is exact.  Ties break to the smallest window
    index, then the smallest background bit value.
    """
    shape = fam.shape
    if pattern_family.shape.degrees != shape.degrees:
        raise ShapeMismatchError("pattern family degrees do not match")
    if pattern_family.shape.n != m:
        raise ShapeMismatchError(f"pattern family side {pattern_family.shape.n} != m={m}")
    if len(pattern_family) == 0:
        raise UnsatisfiablePredicateError("empty pattern family has empty cells")
    ws = WindowSystem.canonical(shape, m)
    pf = pattern_family.members
    counters: dict[tuple[int, int], int] = {}
    regions = [window_region(shape, w).bits for w in ws.windows]
    for b in sorted(fam.members):
        A = SubsetMask(shape, b)
        for r, w in enumerate(ws.windows):
            if restrict_and_relabel(A, w).bits in pf:
                key = (r, b & ~regions[r])
                counters[key] = counters.get(key, 0) + 1
    cell_size = len(pattern_family)
    off_cells = shape.cells - ws.small_shape.cells
    total_cells = ws.t * (1 << off_cells)
    incidences = sum(counters.values())
    average = Fraction(incidences, total_cells * cell_size)
    if counters:
        best_key = max(counters, key=lambda k: (counters[k], -k[0], -k[1]))
        # max count first; among equals prefer smaller r then smaller U
        best_count = counters[best_key]
    else:
        best_key, best_count = (0, 0), 0
    r, ubits = best_key
    cell = CoveringCell(ws.windows[r], SubsetMask(shape, ubits), pattern_family)
    return cell, Fraction(best_count, cell_size), average


@dataclass(frozen=True)
class ProofChainReport:
    """Exact accounting behind the dense-cell guarantee, over all subsets."""

    epsilon: Fraction
    density: Fraction
    expectation: Fraction
    sum_N: int                      # sum over all A of N(A)
    sum_N_fam: int                  # restricted to family members
    sum_N_fam_high: int             # family members with N >= (1-eps) E[N]
    high_fam_count: int
    window_counts: tuple[int, ...]      # |D(I_r)| by direct count
    fam_window_counts: tuple[int, ...]  # |fam n D(I_r)|
    double_counting_all_ok: bool
    double_counting_fam_ok: bool
    monotone_ok: bool
    high_fraction_antecedent: bool  # family covers a (delta-eps) fraction of high-N sets
    lower_bound_ok: bool            # (delta-eps)(1-eps) bound, vacuous when antecedent fails


def proof_chain_report(
    fam: Family, m: int, pattern_family: Family, epsilon: Fraction
) -> ProofChainReport:
    """Enumerate every subset of the universe and audit the covering proof."""
    shape = fam.shape
    epsilon = Fraction(epsilon)
    if shape.cells > 20:
        raise CapExceededError("full enumeration refused beyond 2^20 subsets")
    ws = WindowSystem.canonical(shape, m)
    pf = pattern_family.members
    pred = lambda F: F.bits in pf
    p = Fraction(len(pattern_family), 1 << ws.small_shape.cells)
    expectation = ws.t * p
    threshold = (1 - epsilon) * expectation
    sum_N = sum_N_fam = sum_N_fam_high = high_fam_count = 0
    window_counts = [0] * ws.t
    fam_window_counts = [0] * ws.t
    for b in range(1 << shape.cells):
        A = SubsetMask(shape, b)
        hits = [pred(restrict_and_relabel(A, w)) for w in ws.windows]
        N = sum(hits)
        sum_N += N
        for r, h in enumerate(hits):
            if h:
                window_counts[r] += 1
        if b in fam.members:
            sum_N_fam += N
            for r, h in enumerate(hits):
                if h:
                    fam_window_counts[r] += 1
            if N >= threshold:
                sum_N_fam_high += N
                high_fam_count += 1
    delta = fam.density()
    total = 1 << shape.cells
    antecedent = high_fam_count >= (delta - epsilon) * total
    lower = (delta - epsilon) * (1 - epsilon) * sum_N
    return ProofChainReport(
        epsilon=epsilon,
        density=delta,
        expectation=expectation,
        sum_N=sum_N,
        sum_N_fam=sum_N_fam,
        sum_N_fam_high=sum_N_fam_high,
        high_fam_count=high_fam_count,
        window_counts=tuple(window_counts),
        fam_window_counts=tuple(fam_window_counts),
        double_counting_all_ok=sum_N == sum(window_counts),
        double_counting_fam_ok=sum_N_fam == sum(fam_window_counts),
        monotone_ok=sum_N_fam >= sum_N_fam_high,
        high_fraction_antecedent=antecedent,
        lower_bound_ok=(not antecedent) or sum_N_fam_high >= lower,
    )


# ---------------------------------------------------------------------------
# cyclic-shift demo over Z_2^{Z_n}
#
# Cells are labeled by (base C, anchor y); the members are C + 1_{I} over the
# n cyclic intervals I starting at y of length 0..n-1 (addition is XOR).
# Distinct labels can carry equal member collections; the accounting counts
# labels, which is what makes |Omega| L = |W| K come out exactly.


@dataclass(frozen=True)
class DemoCell:
    n: int
    base: int
    anchor: int
    members: tuple[int, ...]

    def __contains__(self, bits: int) -> bool:
        return bits in self.members


def interval_demo_cells(n: int) -> list[DemoCell]:
    """All n 2^n labeled cells, bases ascending then anchors ascending."""
    if n < 1:
        raise ValueError("n must be positive")
    out = []
    for base in range(1 << n):
        for y in range(1, n + 1):
            members = tuple(
                base ^ cyclic_interval_bits(n, y, length) for length in range(n)
            )
            out.append(DemoCell(n, base, y, members))
    return out


def demo_average_density(n: int, fam_bits: Collection[int]) -> Fraction:
    """Average over labeled cells of |fam n C| / |C|, as an exact rational."""
    fam = set(fam_bits)
    cells = interval_demo_cells(n)
    hits = sum(sum(1 for mbr in c.members if mbr in fam) for c in cells)
    return Fraction(hits, len(cells) * n)


@dataclass(frozen=True)
class FrameworkReport:
    omega_size: int
    num_cells: int
    K: Optional[int]            # common cell size, None if not uniform
    L: Optional[int]            # common membership count, None if not uniform
    equal_cell_size: bool
    equal_membership: bool
    pattern_ok: Optional[bool]  # None when no pattern predicate was supplied
    accounting_ok: Optional[bool]  # |Omega| L == |W| K


def verify_framework_conditions(
    cells: Sequence,
    universe: Collection[Hashable],
    pattern: Optional[Callable[[Hashable, Hashable], bool]] = None,
) -> FrameworkReport:
    """Check the finite covering conditions on an explicit cell list.

    (i) every ordered pair of distinct members within a cell satisfies the
    pattern, (ii) cells share a common size K, (iii) every universe element
    lies in a common number L of cells, and the label accounting
    |Omega| L = |W| K.  Cells may be DemoCells or plain member collections.
    """
    member_lists = [
        tuple(c.members) if isinstance(c, DemoCell) else tuple(c) for c in cells
    ]
    if not member_lists:
        raise ValueError("need at least one cell")
    sizes = {len(ms) for ms in member_lists}
    equal_size = len(sizes) == 1
    K = sizes.pop() if equal_size else None
    counts = {u: 0 for u in universe}
    stray = False
    for ms in member_lists:
        for mbr in ms:
            if mbr in counts:
                counts[mbr] += 1
            else:
                stray = True
    membership_values = set(counts.values())
    equal_membership = len(membership_values) == 1 and not stray
    L = membership_values.pop() if equal_membership else None
    pattern_ok = None
    if pattern is not None:
        pattern_ok = all(
            pattern(a, b)
            for ms in member_lists
            for a in ms
            for b in ms
            if a != b
        )
    accounting = None
    if equal_size and equal_membership:
        accounting = len(counts) * L == len(member_lists) * K
    return FrameworkReport(
        omega_size=len(counts),
        num_cells=len(member_lists),
        K=K,
        L=L,
        equal_cell_size=equal_size,
        equal_membership=equal_membership,
        pattern_ok=pattern_ok,
        accounting_ok=accounting,
    )


def demo_framework_report(n: int) -> FrameworkReport:
    """The cyclic-shift demo run through the generic condition checker."""
    return verify_framework_conditions(
        interval_demo_cells(n),
        range(1 << n),
        pattern=lambda a, b: interval_mod_n_witness(a, b, n) is not None,
    )
