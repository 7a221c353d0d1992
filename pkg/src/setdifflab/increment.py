"""Density increment driven by distinguishing linear forms.

A family that is *not* close to uniform under some induced form must
concentrate on a block-constant cell of the form's block partition; pulling
the family back through that cell's product isomorphism yields a denser
family over a smaller universe.  Iterating either certifies pool-uniformity,
finds a pattern pair along the way, or runs out of room.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence, Union

from .errors import ContractViolationError, ShapeMismatchError, UniverseTooSmallError
from .fpforms import (
    BlockCell,
    LinearFormP,
    build_block_partition,
    distribution,
    eval_on_bits,
)
from .patterns import PatternSpec, PowerDifference, find_pattern_pair
from .universe import Family, SubsetMask, UniverseShape

DEFAULT_FORM_BUDGET = 1 << 20

Numeric = Union[int, Fraction]


def _single_part_degree(shape: UniverseShape) -> int:
    if shape.s != 1:
        raise ShapeMismatchError("increment machinery runs on single-part universes")
    return shape.degrees[0]


def family_value_masses(fam: Family, form) -> tuple[Fraction, ...]:
    """Distribution of the (induced) form over the family's members."""
    if not fam.members:
        raise ValueError("family is empty")
    counts = [0] * form.p
    for bits in fam.members:
        counts[eval_on_bits(form, bits)] += 1
    return tuple(Fraction(c, len(fam.members)) for c in counts)


@dataclass(frozen=True)
class DistinguishingReport:
    """A form whose induced distribution on the family strays from global."""

    form: LinearFormP
    y: int
    gap: Fraction
    scope: str  # "exhaustive" or "pool"

    def __post_init__(self):
        if self.gap < 0:
            raise ValueError("gap must be nonnegative")

    def to_json(self) -> dict:
        return {
            "form": {"p": self.form.p, "coeffs": list(self.form.coeffs)},
            "y": self.y,
            "gap": _frac(self.gap),
            "scope": self.scope,
        }


def _frac(q) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def _vector_forms(p: int, n: int) -> Iterator[LinearFormP]:
    """All p^n coefficient vectors, first coordinate fastest."""
    for index in range(p ** n):
        coeffs = []
        rest = index
        for _ in range(n):
            coeffs.append(rest % p)
            rest //= p
        yield LinearFormP(p=p, coeffs=tuple(coeffs))


def _pool_forms(p: int, n: int) -> Iterator[LinearFormP]:
    """Weight <= 2 coefficient vectors (the documented default pool)."""
    yield LinearFormP(p=p, coeffs=(0,) * n)
    for z in range(n):
        for a in range(1, p):
            coeffs = [0] * n
            coeffs[z] = a
            yield LinearFormP(p=p, coeffs=tuple(coeffs))
    for z1, z2 in itertools.combinations(range(n), 2):
        for a1 in range(1, p):
            for a2 in range(1, p):
                coeffs = [0] * n
                coeffs[z1], coeffs[z2] = a1, a2
                yield LinearFormP(p=p, coeffs=tuple(coeffs))


def find_distinguishing_form(fam: Family, p: int, eta: Numeric,
                             search_budget: int = DEFAULT_FORM_BUDGET,
                             extra_forms: Sequence[LinearFormP] = (),
                             ) -> Optional[DistinguishingReport]:
    """Search linear forms for an induced-distribution gap of at least eta.

    All p^n forms are tried when p^n fits the budget; otherwise the search
    falls back to the weight-<=2 pool plus any user-supplied forms, and a
    miss then only certifies "pool"-uniformity.  Returns the maximal-gap
    report (first form, then smallest y, on ties) or None below threshold.
    """
    if not fam.members:
        raise ValueError("family is empty")
    eta = Fraction(eta)
    degree = _single_part_degree(fam.shape)
    n = fam.shape.n
    exhaustive = p ** n <= search_budget
    if exhaustive:
        candidates: Iterable[LinearFormP] = _vector_forms(p, n)
        scope = "exhaustive"
    else:
        candidates = itertools.chain(_pool_forms(p, n), extra_forms)
        scope = "pool"
    best: Optional[DistinguishingReport] = None
    for form in candidates:
        if form.p != p or form.n != n:
            raise ShapeMismatchError(f"candidate form {form} does not fit p={p}, n={n}")
        induced = form.induced(degree)
        fam_masses = family_value_masses(fam, induced)
        global_masses = distribution(induced).masses
        for y in range(p):
            gap = abs(fam_masses[y] - global_masses[y])
            if best is None or gap > best.gap:
                best = DistinguishingReport(form=form, y=y, gap=gap, scope=scope)
    if best is not None and best.gap >= eta:
        return best
    return None


@dataclass(frozen=True)
class IncrementStep:
    """Result of one increment: the chosen cell and the pulled-back family."""

    cell: BlockCell
    family: Family
    density: Fraction
    previous_density: Fraction
    guarantee_ratio: Fraction
    guaranteed: bool

    def __iter__(self):
        yield self.cell
        yield self.family
        yield self.density


def increment_step(fam: Family, report: DistinguishingReport, m: int,
                   expect_guarantee: bool = False) -> IncrementStep:
    """Scan the form's block cells for the densest one and pull back into it.

    The returned family lives over [m]^d.  The step is flagged guaranteed
    when the relative density reaches the previous density times
    ``1 + gap/3`` (the increment the theory promises once its size
    preconditions hold); with ``expect_guarantee`` a step that fails to beat
    the previous density at all raises ContractViolationError.
    """
    _single_part_degree(fam.shape)
    shape = fam.shape
    if report.form.n != shape.n:
        raise ShapeMismatchError("report's form lives on a different [n]")
    previous = fam.density()
    partition = build_block_partition(report.form, m)
    if partition.t == 0:
        raise UniverseTooSmallError(
            f"block partition of [{shape.n}] at m={m} produced no rows")

    counters: dict[tuple[int, int], int] = {}
    regions = {}
    for row in range(1, partition.t + 1):
        probe = BlockCell(partition=partition, row=row,
                          background=SubsetMask.empty(shape))
        regions[row] = probe.region_bits()
    for bits in fam.members:
        for row in range(1, partition.t + 1):
            background = bits & ~regions[row]
            cell = BlockCell(partition=partition, row=row,
                             background=SubsetMask(shape, background))
            if SubsetMask(shape, bits) in cell:
                key = (row, background)
                counters[key] = counters.get(key, 0) + 1

    if counters:
        row, background = max(counters, key=lambda k: (counters[k], -k[0], -k[1]))
        count = counters[(row, background)]
    else:
        row, background, count = 1, 0, 0
    cell = BlockCell(partition=partition, row=row,
                     background=SubsetMask(shape, background))
    density = Fraction(count, len(cell))
    if expect_guarantee and density <= previous:
        raise ContractViolationError(
            f"no cell beats density {previous}; distinguishing gap {report.gap}")
    lifted = Family(cell.small_shape(),
                    frozenset(cell.lift(member).bits
                              for member in (SubsetMask(shape, b) for b in fam.members)
                              if member in cell))
    ratio = 1 + Fraction(report.gap) / 3
    return IncrementStep(
        cell=cell, family=lifted, density=density, previous_density=previous,
        guarantee_ratio=ratio,
        guaranteed=report.gap > 0 and density >= previous * ratio)


def iteration_cap(delta: Numeric, eta: Numeric, p: int) -> int:
    """Smallest q with delta * (1 + eta/3p)^q >= 1, computed exactly.

    This equals ceil(log(1/delta) / log(1 + eta/3p)) away from boundary
    cases, but avoids floating logs entirely.
    """
    delta = Fraction(delta)
    eta = Fraction(eta)
    if not 0 < delta <= 1:
        raise ValueError("density must lie in (0, 1]")
    if eta <= 0:
        raise ValueError("eta must be positive")
    ratio = 1 + eta / (3 * p)
    q = 0
    value = delta
    while value < 1:
        value *= ratio
        q += 1
    return q


@dataclass(frozen=True)
class IncrementTrace:
    """What the quasirandomization loop did, step by step."""

    steps: tuple[tuple[DistinguishingReport, IncrementStep], ...]
    status: str
    cap: int
    initial_density: Fraction
    final_density: Fraction

    @property
    def iterations(self) -> int:
        return len(self.steps)

    def to_json(self) -> dict:
        steps = []
        for report, step in self.steps:
            cell = step.cell
            steps.append({
                "n": cell.background.shape.n,
                "m": cell.partition.m,
                "row": cell.row,
                "blocks": [sorted(b) for b in cell.partition.rows[cell.row - 1]],
                "background": cell.background.to_hex(),
                "density_before": _frac(step.previous_density),
                "density_after": _frac(step.density),
                "guarantee_ratio": _frac(step.guarantee_ratio),
                "guaranteed": step.guaranteed,
                "report": report.to_json(),
            })
        return {
            "steps": steps,
            "iterations": self.iterations,
            "cap": self.cap,
            "status": self.status,
            "initial_density": _frac(self.initial_density),
            "final_density": _frac(self.final_density),
        }


def default_m_schedule(n: int, p: int) -> int:
    """Window size floor(sqrt(n/p)); 0 signals that the universe ran out."""
    return math.isqrt(n // p)


def quasirandomize(fam: Family, p: int, eta: Numeric,
                   m_schedule: Optional[Sequence[int]] = None,
                   search_budget: int = DEFAULT_FORM_BUDGET,
                   extra_forms: Sequence[LinearFormP] = (),
                   max_steps: Optional[int] = None,
                   pattern: Optional[PatternSpec] = None,
                   ):
    """Iterate distinguishing-form search (threshold eta/p) and increment.

    Stops when no distinguishing form remains ("uniform"), when the current
    family exhibits a pattern pair after a step ("pattern-found"), or with an
    "inconclusive:*" status when the schedule or progress runs out.  Returns
    (final family, IncrementTrace, pattern pair or None).
    """
    eta = Fraction(eta)
    degree = _single_part_degree(fam.shape)
    if pattern is None:
        pattern = PowerDifference(degree=degree)
    initial_density = fam.density()
    cap = iteration_cap(initial_density, eta, p) if initial_density > 0 else 0
    if max_steps is None:
        max_steps = cap
    threshold = eta / p

    steps: list[tuple[DistinguishingReport, IncrementStep]] = []
    status = "uniform"
    pair = None
    schedule = list(m_schedule) if m_schedule is not None else None

    while True:
        report = find_distinguishing_form(fam, p, threshold,
                                          search_budget=search_budget,
                                          extra_forms=extra_forms)
        if report is None:
            status = "uniform"
            break
        if len(steps) >= max_steps:
            status = "inconclusive:max-steps"
            break
        if schedule is not None:
            if not schedule:
                status = "inconclusive:m-schedule"
                break
            m = schedule.pop(0)
        else:
            m = default_m_schedule(fam.shape.n, p)
        if m < 1:
            status = "inconclusive:m-schedule"
            break
        try:
            step = increment_step(fam, report, m)
        except UniverseTooSmallError:
            status = "inconclusive:partition"
            break
        if step.density <= step.previous_density:
            status = "inconclusive:no-progress"
            break
        steps.append((report, step))
        fam = step.family
        found = find_pattern_pair(fam, pattern)
        if found is not None:
            status = "pattern-found"
            pair = found
            break

    trace = IncrementTrace(
        steps=tuple(steps), status=status, cap=cap,
        initial_density=initial_density, final_density=fam.density())
    if steps and all(s.guaranteed for _, s in steps) and trace.iterations > cap:
        raise ContractViolationError(
            f"{trace.iterations} guaranteed steps exceed the cap {cap}")
    return fam, trace, pair
