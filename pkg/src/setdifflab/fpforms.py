"""Linear forms over F_p, their induced forms on power universes, and
zero-sum block partitions.

A linear form ``phi(x) = a_1 x_1 + ... + a_n x_n`` acts on subsets of [n]
through indicator vectors; its degree-d induced form ``Phi`` acts on subsets
of [n]^d, the cell (i_1, ..., i_d) carrying the coefficient
``a_{i_1} * ... * a_{i_d}``.  Output distributions over uniformly random
subsets are computed exactly by convolving per-cell Bernoulli pushforwards,
which stays cheap at side lengths where raw enumeration is hopeless.

The block-partition construction splits [n] into rows of m pairwise disjoint
blocks on which the form vanishes, plus a remainder.  On any cell that is
block-constant over a row, the induced form then takes a single value -- the
fact the density-increment step lives on.
"""

from __future__ import annotations

import itertools
import math
import re
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from random import Random
from typing import Iterable, Iterator, Optional, Union

from .errors import CapExceededError, FormatError, ShapeMismatchError, UniverseTooSmallError
from .universe import SubsetMask, UniverseShape

DEFAULT_ENUMERATION_BUDGET = 24
DEFAULT_SAMPLE_COUNT = 10_000
DEFAULT_SEED = 0


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % q for q in range(2, math.isqrt(p) + 1))


@dataclass(frozen=True)
class LinearFormP:
    """``phi(x) = a_1 x_1 + ... + a_n x_n`` over F_p, applied to subsets of [n]."""

    p: int
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if not _is_prime(self.p):
            raise ValueError(f"modulus {self.p} is not prime")
        coeffs = tuple(int(a) for a in self.coeffs)
        if any(not 0 <= a < self.p for a in coeffs):
            raise ValueError("coefficients must lie in {0, ..., p-1}")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def n(self) -> int:
        return len(self.coeffs)

    def induced(self, degree: int) -> "InducedForm":
        return InducedForm(base=self, degree=degree)


@dataclass(frozen=True)
class InducedForm:
    """Degree-d lift of a linear form to subsets of [n]^d.

    Never stores its own coefficients: the cell (i_1, ..., i_d) always
    carries the product ``a_{i_1} * ... * a_{i_d}`` of the base form's.
    """

    base: LinearFormP
    degree: int

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("degree must be at least 1")

    @property
    def p(self) -> int:
        return self.base.p

    @property
    def n(self) -> int:
        return self.base.n

    def shape(self) -> UniverseShape:
        return UniverseShape(degrees=(self.degree,), n=self.base.n)


AnyForm = Union[LinearFormP, InducedForm]


def phi_eval(form: LinearFormP, S: Iterable[int]) -> int:
    """Sum of the coefficients over a subset of [n], mod p."""
    total = 0
    for z in S:
        if not 1 <= z <= form.n:
            raise ValueError(f"element {z} outside [1, {form.n}]")
        total += form.coeffs[z - 1]
    return total % form.p


def Phi_eval(form: InducedForm, A: SubsetMask) -> int:
    """Sum of the coefficient products over the cells of A, mod p."""
    shape = A.shape
    if shape.degrees != (form.degree,) or shape.n != form.n:
        raise ShapeMismatchError(
            f"mask over {shape.degrees}/{shape.n} fed to an induced form of "
            f"degree {form.degree} over [{form.n}]")
    coeffs = form.base.coeffs
    p = form.p
    total = 0
    for _part, coords in A.points():
        term = 1
        for i in coords:
            term = term * coeffs[i - 1] % p
        total += term
    return total % p


def support(form: LinearFormP) -> frozenset[int]:
    """The coordinates carrying a nonzero coefficient."""
    return frozenset(z for z, a in enumerate(form.coeffs, start=1) if a)


def support_size(form: AnyForm) -> int:
    """Number of universe cells with nonzero coefficient.

    For an induced form this is |Z|^d: a product of field elements vanishes
    exactly when some factor does.
    """
    if isinstance(form, InducedForm):
        return len(support(form.base)) ** form.degree
    return len(support(form))


def cell_count(form: AnyForm) -> int:
    if isinstance(form, InducedForm):
        return form.n ** form.degree
    return form.n


@lru_cache(maxsize=None)
def _cell_coefficients(form: AnyForm) -> tuple[int, ...]:
    """Coefficient of every universe cell, in row-major cell order."""
    if isinstance(form, LinearFormP):
        return form.coeffs
    p = form.p
    coeffs = form.base.coeffs
    out = []
    for combo in itertools.product(range(form.n), repeat=form.degree):
        term = 1
        for i in combo:
            term = term * coeffs[i] % p
        out.append(term)
    return tuple(out)


@lru_cache(maxsize=None)
def coefficient_class_masks(form: AnyForm) -> tuple[tuple[int, int], ...]:
    """(value, cell bitmask) per nonzero coefficient value, values ascending."""
    masks: dict[int, int] = {}
    for idx, c in enumerate(_cell_coefficients(form)):
        if c:
            masks[c] = masks.get(c, 0) | (1 << idx)
    return tuple(sorted(masks.items()))


def eval_on_bits(form: AnyForm, bits: int) -> int:
    """Evaluate the form on a subset given as a bitmask over its universe."""
    total = 0
    for value, mask in coefficient_class_masks(form):
        total += value * (bits & mask).bit_count()
    return total % form.p


# ---------------------------------------------------------------------------
# Output distributions


def uniformity_bound(p: int, zsize: int) -> Fraction:
    """``p * (1 - p^-2)^{|Z|}``: explicit closeness-to-uniform bound."""
    return p * (1 - Fraction(1, p * p)) ** zsize


@dataclass(frozen=True)
class DistributionTable:
    """Distribution of a form's value over a uniformly random subset."""

    p: int
    masses: tuple[Fraction, ...]
    mode: str
    support_size: int
    uniformity_bound: Fraction
    sample_count: Optional[int] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if len(self.masses) != self.p:
            raise ValueError("need exactly one mass per residue")
        if sum(self.masses) != 1:
            raise ValueError("masses must sum to 1")

    def mass(self, y: int) -> Fraction:
        return self.masses[y % self.p]

    @property
    def deviation(self) -> Fraction:
        uniform = Fraction(1, self.p)
        return max(abs(q - uniform) for q in self.masses)

    @property
    def within_bound(self) -> bool:
        return self.deviation <= self.uniformity_bound

    def to_json(self) -> dict:
        report = {
            "p": self.p,
            "mode": self.mode,
            "masses": [_frac(q) for q in self.masses],
            "support_size": self.support_size,
            "uniformity_bound": _frac(self.uniformity_bound),
            "deviation": _frac(self.deviation),
            "within_bound": self.within_bound,
        }
        if self.mode == "sampled":
            report["sample_count"] = self.sample_count
            report["seed"] = self.seed
        return report


def _frac(q) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def _convolved_masses(p: int, coefficient_counts) -> tuple[Fraction, ...]:
    """Distribution of ``sum(c * Bernoulli(1/2))`` mod p, exactly.

    Cells sharing a nonzero coefficient value c contribute Binomial(k, 1/2)
    copies of c; the values are folded in one at a time.  Zero coefficients
    never move the sum, so the identity start vector absorbs them.
    """
    masses = [Fraction(1)] + [Fraction(0)] * (p - 1)
    for value in range(1, p):
        k = coefficient_counts.get(value, 0)
        if not k:
            continue
        scale = Fraction(1, 2 ** k)
        weights = [math.comb(k, j) * scale for j in range(k + 1)]
        masses = [
            sum(w * masses[(y - j * value) % p] for j, w in enumerate(weights))
            for y in range(p)
        ]
    return tuple(masses)


def distribution(form: AnyForm, mode: str = "exact",
                 samples: int = DEFAULT_SAMPLE_COUNT, seed: int = DEFAULT_SEED,
                 budget: int = DEFAULT_ENUMERATION_BUDGET) -> DistributionTable:
    """Distribution table of the form's value over uniform random subsets.

    ``exact`` convolves per-coefficient-value binomials (no size limit),
    ``enumerate`` walks all ``2^cells`` subsets (cells capped by ``budget``)
    and exists as an independent cross-check, ``sampled`` draws subsets from
    a seeded generator.
    """
    p = form.p
    zsize = support_size(form)
    bound = uniformity_bound(p, zsize)
    if mode == "exact":
        masses = _convolved_masses(p, Counter(_cell_coefficients(form)))
        return DistributionTable(p=p, masses=masses, mode="exact",
                                 support_size=zsize, uniformity_bound=bound)
    cells = cell_count(form)
    if mode == "enumerate":
        if cells > budget:
            raise CapExceededError(
                f"enumeration over 2^{cells} subsets exceeds budget 2^{budget}")
        counts = [0] * p
        for bits in range(1 << cells):
            counts[eval_on_bits(form, bits)] += 1
        masses = tuple(Fraction(c, 1 << cells) for c in counts)
        return DistributionTable(p=p, masses=masses, mode="enumerate",
                                 support_size=zsize, uniformity_bound=bound)
    if mode == "sampled":
        if samples < 1:
            raise ValueError("need at least one sample")
        rng = Random(seed)
        counts = [0] * p
        for _ in range(samples):
            counts[eval_on_bits(form, rng.getrandbits(cells))] += 1
        masses = tuple(Fraction(c, samples) for c in counts)
        return DistributionTable(p=p, masses=masses, mode="sampled",
                                 support_size=zsize, uniformity_bound=bound,
                                 sample_count=samples, seed=seed)
    raise ValueError(f"unknown distribution mode {mode!r}")


# ---------------------------------------------------------------------------
# Block partitions


@dataclass(frozen=True)
class BlockPartition:
    """t rows of m pairwise disjoint form-null blocks plus a remainder.

    Every block has the common size sigma (1 in the small-support case, p
    otherwise) and sums to zero under the owning linear form; the blocks
    together with the remainder partition [n].
    """

    n: int
    p: int
    m: int
    sigma: int
    rows: tuple[tuple[frozenset[int], ...], ...]
    remainder: frozenset[int]

    @property
    def t(self) -> int:
        return len(self.rows)

    @property
    def required_rows(self) -> int:
        return max(math.ceil(self.n / (self.p * self.m)) - 2, 0)

    def blocks(self) -> Iterator[frozenset[int]]:
        for row in self.rows:
            yield from row

    def row_union(self, row_index: int) -> frozenset[int]:
        """The union X_i of the blocks in row i (1-based)."""
        if not 1 <= row_index <= self.t:
            raise ValueError(f"row {row_index} outside [1, {self.t}]")
        return frozenset().union(*self.rows[row_index - 1])


def check_block_partition(partition: BlockPartition, form: LinearFormP) -> None:
    """Raise ValueError if the partition violates any defining guarantee."""
    if form.n != partition.n or form.p != partition.p:
        raise ShapeMismatchError("partition belongs to a different form shape")
    if partition.sigma not in (1, partition.p):
        raise ValueError(f"block size {partition.sigma} not in {{1, p}}")
    seen: set[int] = set()
    for row in partition.rows:
        if len(row) != partition.m:
            raise ValueError("row width differs from m")
        for block in row:
            if len(block) != partition.sigma:
                raise ValueError("block size differs from sigma")
            if block & seen:
                raise ValueError("blocks are not pairwise disjoint")
            seen |= block
            if phi_eval(form, block) != 0:
                raise ValueError(f"block {sorted(block)} has nonzero form value")
    if seen & partition.remainder:
        raise ValueError("remainder overlaps a block")
    if seen | partition.remainder != set(range(1, partition.n + 1)):
        raise ValueError("blocks and remainder do not cover [n]")
    if partition.t < partition.required_rows:
        raise ValueError(
            f"only {partition.t} rows, need {partition.required_rows}")


def build_block_partition(form: LinearFormP, m: int) -> BlockPartition:
    """Split [n] into t >= ceil(n/(pm)) - 2 rows of m form-null blocks.

    Small support (2|Z| <= n): singleton blocks from the coefficient-free
    elements in ascending order.  Large support: equal-coefficient p-blocks
    are pulled from a fixed support prefix while it stays thick, then
    zero-sum p-blocks are composed across coefficient classes from whatever
    is left until the row bound is met.  The row bound can be vacuous (0) at
    small n, in which case an empty partition is legitimate.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    n = form.n
    Z = support(form)
    if 2 * len(Z) <= n:
        free = sorted(set(range(1, n + 1)) - Z)
        t = len(free) // m
        rows = tuple(
            tuple(frozenset((free[i * m + j],)) for j in range(m))
            for i in range(t))
        partition = BlockPartition(
            n=n, p=form.p, m=m, sigma=1, rows=rows,
            remainder=frozenset(Z | set(free[t * m:])))
    else:
        partition = _large_support_partition(form, m)
    check_block_partition(partition, form)
    return partition


def _large_support_partition(form: LinearFormP, m: int) -> BlockPartition:
    n, p = form.n, form.p
    coeffs = form.coeffs
    prefix = set(sorted(support(form))[:math.ceil(n / 4)])
    rows: list[tuple[frozenset[int], ...]] = []

    # Equal-coefficient rows from the prefix while it stays thick enough
    # that a whole row of m blocks is guaranteed to come out.
    pool = sorted(prefix)
    while len(pool) >= p * p + m * p:
        row = []
        for _ in range(m):
            block = _equal_coefficient_block(pool, coeffs, p)
            if block is None:  # unreachable while the pool is thick; guard anyway
                break
            row.append(block)
            pool = [z for z in pool if z not in block]
        if len(row) < m:
            pool = sorted(set(pool).union(*row))
            break
        rows.append(tuple(row))

    # Top up with zero-sum blocks drawn from everything still unused until
    # the row bound holds.  While rows are missing the leftover pool keeps at
    # least 2p elements per block extraction, so a zero-sum p-subset always
    # exists and the exhaustive profile search below finds one.
    required = max(math.ceil(n / (p * m)) - 2, 0)
    pool = sorted((set(range(1, n + 1)) - prefix) | set(pool))
    while len(rows) < required:
        row = []
        for _ in range(m):
            block = _zero_sum_block(pool, coeffs, p)
            if block is None:
                raise UniverseTooSmallError(
                    f"cannot reach {required} rows of {m} zero-sum "
                    f"{p}-blocks inside [{n}]")
            row.append(block)
            pool = [z for z in pool if z not in block]
        rows.append(tuple(row))
    return BlockPartition(n=n, p=p, m=m, sigma=p, rows=tuple(rows),
                          remainder=frozenset(pool))


def _equal_coefficient_block(pool, coeffs, p):
    """The p smallest elements of the first thick equal-coefficient class."""
    classes: dict[int, list[int]] = {}
    for z in pool:
        classes.setdefault(coeffs[z - 1], []).append(z)
    for value in sorted(classes):
        elems = classes[value]
        if len(elems) >= p:
            return frozenset(elems[:p])
    return None


def _zero_sum_block(pool, coeffs, p):
    """A p-element subset of the pool whose coefficients sum to 0 mod p.

    Prefers a whole equal-coefficient class; otherwise takes the first
    per-class count profile (classes by ascending value, profiles in
    lexicographic order) with total p and weighted sum 0, using the smallest
    elements of each class.
    """
    block = _equal_coefficient_block(pool, coeffs, p)
    if block is not None:
        return block
    classes: dict[int, list[int]] = {}
    for z in pool:
        classes.setdefault(coeffs[z - 1], []).append(z)
    values = sorted(classes)
    ranges = [range(min(len(classes[v]), p) + 1) for v in values]
    for profile in itertools.product(*ranges):
        if sum(profile) != p:
            continue
        if sum(v * k for v, k in zip(values, profile)) % p:
            continue
        chosen: list[int] = []
        for v, k in zip(values, profile):
            chosen.extend(classes[v][:k])
        return frozenset(chosen)
    return None


# ---------------------------------------------------------------------------
# Block-constant cells


@lru_cache(maxsize=None)
def _product_table(partition: BlockPartition, row: int, degree: int) -> tuple[int, ...]:
    """Bitmask over [n]^degree of each complete block product of a row,
    indexed by the row-major cell index of the small universe [m]^degree."""
    shape = UniverseShape(degrees=(degree,), n=partition.n)
    blocks = [sorted(b) for b in partition.rows[row - 1]]
    table = []
    for combo in itertools.product(range(partition.m), repeat=degree):
        bits = 0
        for cell in itertools.product(*(blocks[j] for j in combo)):
            bits |= 1 << shape.index_of(1, cell)
        table.append(bits)
    return tuple(table)


@dataclass(frozen=True)
class BlockCell:
    """Subsets of [n]^d pinned to a background off a row's region X_i^d and
    block-constant on it.

    The cell is the bijective image of P([m]^d): a member is the background
    plus a union of complete block products, one product per chosen cell of
    the small universe.  ``plant`` realizes that map and ``lift`` inverts it.
    """

    partition: BlockPartition
    row: int
    background: SubsetMask

    def __post_init__(self):
        shape = self.background.shape
        if shape.s != 1:
            raise ShapeMismatchError("cells live over a single-part power universe")
        if shape.n != self.partition.n:
            raise ShapeMismatchError(
                "background side length differs from the partition's")
        if not 1 <= self.row <= self.partition.t:
            raise ValueError(f"row {self.row} outside [1, {self.partition.t}]")
        if self.background.bits & self.region_bits():
            raise ValueError("background must be disjoint from the row region")

    @property
    def degree(self) -> int:
        return self.background.shape.degrees[0]

    def small_shape(self) -> UniverseShape:
        return UniverseShape(degrees=(self.degree,), n=self.partition.m)

    def region_bits(self) -> int:
        bits = 0
        for product in _product_table(self.partition, self.row, self.degree):
            bits |= product
        return bits

    def plant(self, small: SubsetMask) -> SubsetMask:
        """Map a subset of [m]^d to the corresponding cell member."""
        if small.shape != self.small_shape():
            raise ShapeMismatchError(
                f"expected a mask over [{self.partition.m}]^{self.degree}")
        table = _product_table(self.partition, self.row, self.degree)
        bits = self.background.bits
        rest = small.bits
        while rest:
            low = rest & -rest
            bits |= table[low.bit_length() - 1]
            rest ^= low
        return SubsetMask(shape=self.background.shape, bits=bits)

    def lift(self, A: SubsetMask) -> SubsetMask:
        """Invert ``plant``; reject masks outside the cell."""
        if A.shape != self.background.shape:
            raise ShapeMismatchError("mask shape differs from the cell's")
        region = self.region_bits()
        if A.bits & ~region != self.background.bits:
            raise ValueError("mask does not extend this cell's background")
        inside = A.bits & region
        chosen = 0
        covered = 0
        for idx, product in enumerate(
                _product_table(self.partition, self.row, self.degree)):
            if product & inside == product:
                chosen |= 1 << idx
                covered |= product
        if covered != inside:
            raise ValueError("mask is not block-constant on the row region")
        return SubsetMask(shape=self.small_shape(), bits=chosen)

    def __contains__(self, A) -> bool:
        if not isinstance(A, SubsetMask):
            return False
        try:
            self.lift(A)
        except (ValueError, ShapeMismatchError):
            return False
        return True

    def __len__(self) -> int:
        return 1 << (self.partition.m ** self.degree)

    def members(self) -> Iterator[SubsetMask]:
        small_shape = self.small_shape()
        for bits in range(len(self)):
            yield self.plant(SubsetMask(shape=small_shape, bits=bits))


def cell_form_value(form: InducedForm, partition: BlockPartition, row: int,
                    background: SubsetMask) -> int:
    """The common value of the induced form on every member of the cell.

    A complete block product contributes the product of the per-block form
    values, all zero by construction, so only the background survives.
    """
    if form.n != partition.n or form.p != partition.p:
        raise ShapeMismatchError("form and partition disagree on n or p")
    BlockCell(partition=partition, row=row, background=background)
    return Phi_eval(form, background)


@dataclass(frozen=True)
class CellValueReport:
    """Cell-value distribution (uniform row, uniform background) vs global."""

    cell_masses: tuple[Fraction, ...]
    global_masses: tuple[Fraction, ...]
    gaps: tuple[Fraction, ...]

    @property
    def max_gap(self) -> Fraction:
        return max(self.gaps)


def cell_value_report(form: InducedForm, partition: BlockPartition) -> CellValueReport:
    """Compare the constant cell values against the global distribution.

    The cell value equals the induced form on the background, so per row the
    value of a uniform background is distributed as the convolution over the
    coefficients living off that row's region; rows are then averaged.
    """
    if form.n != partition.n or form.p != partition.p:
        raise ShapeMismatchError("form and partition disagree on n or p")
    if partition.t == 0:
        raise UniverseTooSmallError("partition has no rows to average over")
    p = form.p
    total = Counter(_cell_coefficients(form))
    acc = [Fraction(0)] * p
    for row in range(1, partition.t + 1):
        base = Counter(form.base.coeffs[z - 1] for z in partition.row_union(row))
        counts = base.copy()
        for _ in range(form.degree - 1):
            folded: Counter = Counter()
            for v, cv in counts.items():
                for w, cw in base.items():
                    folded[v * w % p] += cv * cw
            counts = folded
        masses = _convolved_masses(p, total - counts)
        for y in range(p):
            acc[y] += masses[y]
    cell_masses = tuple(q / partition.t for q in acc)
    global_masses = _convolved_masses(p, total)
    gaps = tuple(abs(a - b) for a, b in zip(cell_masses, global_masses))
    return CellValueReport(cell_masses=cell_masses, global_masses=global_masses,
                           gaps=gaps)


# ---------------------------------------------------------------------------
# Form files

_FORM_HEADER = re.compile(r"p=(\d+)")


def forms_from_text(text: str) -> list[LinearFormP]:
    """Parse a form file: a ``p=<prime>`` header line, then one
    space-separated coefficient row per form.

    Blank lines and ``#`` comments are skipped; coefficients may be arbitrary
    integers and are reduced mod p.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise FormatError("empty form file")
    match = _FORM_HEADER.fullmatch(lines[0])
    if not match:
        raise FormatError(f"bad form header {lines[0]!r}, expected p=<prime>")
    p = int(match.group(1))
    if not _is_prime(p):
        raise FormatError(f"modulus {p} is not prime")
    forms = []
    for ln in lines[1:]:
        try:
            raw = [int(tok) for tok in ln.split()]
        except ValueError as exc:
            raise FormatError(f"bad coefficient row {ln!r}") from exc
        forms.append(LinearFormP(p=p, coeffs=tuple(a % p for a in raw)))
    if not forms:
        raise FormatError("form file has no coefficient rows")
    return forms


def forms_to_text(forms: Iterable[LinearFormP]) -> str:
    forms = list(forms)
    if not forms:
        raise ValueError("nothing to serialize")
    moduli = {f.p for f in forms}
    if len(moduli) != 1:
        raise ValueError("all forms in one file must share a modulus")
    lines = [f"p={moduli.pop()}"]
    lines.extend(" ".join(str(a) for a in f.coeffs) for f in forms)
    return "\n".join(lines) + "\n"
