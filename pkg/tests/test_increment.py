"""Increment machinery: distinguishing forms, cell concentration, iteration."""

import itertools
import random
from fractions import Fraction

import pytest

from setdifflab.errors import (
    ContractViolationError,
    ShapeMismatchError,
    UniverseTooSmallError,
)
from setdifflab.fpforms import BlockCell, LinearFormP, build_block_partition
from setdifflab.increment import (
    DistinguishingReport,
    default_m_schedule,
    family_value_masses,
    find_distinguishing_form,
    increment_step,
    iteration_cap,
    quasirandomize,
)
from setdifflab.patterns import PowerDifference, power_difference_witness
from setdifflab.universe import Family, SubsetMask, UniverseShape

F = Fraction
LINE6 = UniverseShape(degrees=(1,), n=6)


def halfspace(shape: UniverseShape, element: int = 1) -> Family:
    """All subsets containing one fixed ground-set element (density 1/2)."""
    bit = 1 << shape.index_of(1, (element,))
    return Family(shape, frozenset(
        b for b in range(1 << shape.cells) if b & bit))


def even_family() -> Family:
    """Subsets of [3] of even size; only the all-ones form sees the skew."""
    shape = UniverseShape(degrees=(1,), n=3)
    return Family(shape, frozenset(
        b for b in range(8) if b.bit_count() % 2 == 0))


def no_progress_family() -> Family:
    """Two subsets of [16]^2 that every weight-<=2 form fails to separate.

    A holds two off-diagonal points; B holds the full diagonal plus the rest
    of the strict upper triangle.  Single-coordinate forms read the diagonal
    (A: never, B: always - balanced), two-coordinate forms read a 2x2 grid
    parity that the construction flips between the members, and the all-ones
    form values both members 0.  Neither member is block-constant on any row
    of the all-ones partition, so the concentration scan comes up empty.
    """
    shape = UniverseShape(degrees=(2,), n=16)
    a_pts = [(1, (1, 3)), (1, (5, 7))]
    diag = [(1, (x, x)) for x in range(1, 17)]
    upper = [(1, (x, y)) for x in range(1, 17) for y in range(x + 1, 17)]
    A = SubsetMask.from_points(shape, a_pts)
    B = SubsetMask.from_points(shape, diag + [p for p in upper if p not in a_pts])
    return Family(shape, frozenset({A.bits, B.bits}))


class TestFamilyValueMasses:
    def test_halfspace_is_all_ones_under_e1(self):
        form = LinearFormP(p=2, coeffs=(1, 0, 0, 0, 0, 0)).induced(1)
        assert family_value_masses(halfspace(LINE6), form) == (0, 1)

    def test_full_power_set_is_balanced(self):
        shape = UniverseShape(degrees=(1,), n=2)
        form = LinearFormP(p=2, coeffs=(1, 0)).induced(1)
        masses = family_value_masses(Family.full_power_set(shape), form)
        assert masses == (F(1, 2), F(1, 2))

    def test_degree_two_point_mass(self):
        shape = UniverseShape(degrees=(2,), n=2)
        corner = SubsetMask.from_points(shape, [(1, (1, 1))])
        form = LinearFormP(p=2, coeffs=(1, 0)).induced(2)
        assert family_value_masses(Family(shape, {corner.bits}), form) == (0, 1)

    def test_empty_family_rejected(self):
        form = LinearFormP(p=2, coeffs=(1, 0)).induced(1)
        with pytest.raises(ValueError):
            family_value_masses(
                Family(UniverseShape(degrees=(1,), n=2), frozenset()), form)


class TestDistinguishingReport:
    def test_negative_gap_rejected(self):
        with pytest.raises(ValueError):
            DistinguishingReport(
                form=LinearFormP(p=2, coeffs=(1,)), y=0, gap=F(-1, 4),
                scope="exhaustive")

    def test_json(self):
        report = DistinguishingReport(
            form=LinearFormP(p=2, coeffs=(1, 0)), y=1, gap=F(1, 4),
            scope="pool")
        assert report.to_json() == {
            "form": {"p": 2, "coeffs": [1, 0]},
            "y": 1,
            "gap": "1/4",
            "scope": "pool",
        }


class TestFindDistinguishingForm:
    def test_halfspace_picks_first_coordinate(self):
        # every nonzero F_2 form is globally balanced, so no gap can exceed
        # 1/2; e_1 attains it first in enumeration order.
        report = find_distinguishing_form(halfspace(LINE6), 2, F(1, 4))
        assert report.form == LinearFormP(p=2, coeffs=(1, 0, 0, 0, 0, 0))
        assert report.y == 0
        assert report.gap == F(1, 2)
        assert report.scope == "exhaustive"

    def test_full_power_set_is_uniform(self):
        fam = Family.full_power_set(UniverseShape(degrees=(1,), n=3))
        assert find_distinguishing_form(fam, 2, F(1, 4)) is None

    def test_singleton_empty_set(self):
        fam = Family(UniverseShape(degrees=(1,), n=2), {0})
        report = find_distinguishing_form(fam, 2, F(1, 4))
        assert report.form == LinearFormP(p=2, coeffs=(1, 0))
        assert (report.y, report.gap) == (0, F(1, 2))

    def test_exhaustive_search_sees_parity(self):
        report = find_distinguishing_form(even_family(), 2, F(1, 4))
        assert report.form == LinearFormP(p=2, coeffs=(1, 1, 1))
        assert report.gap == F(1, 2)

    def test_pool_scope_misses_parity(self):
        # p^n = 8 over budget: only weight-<=2 forms are tried, and the
        # even-size family is balanced under all of them.
        assert find_distinguishing_form(
            even_family(), 2, F(1, 4), search_budget=4) is None

    def test_extra_forms_extend_the_pool(self):
        report = find_distinguishing_form(
            even_family(), 2, F(1, 4), search_budget=4,
            extra_forms=(LinearFormP(p=2, coeffs=(1, 1, 1)),))
        assert report.scope == "pool"
        assert report.form == LinearFormP(p=2, coeffs=(1, 1, 1))
        assert report.gap == F(1, 2)

    def test_threshold_respected(self):
        assert find_distinguishing_form(halfspace(LINE6), 2, F(3, 4)) is None

    def test_mismatched_extra_form_rejected(self):
        with pytest.raises(ShapeMismatchError):
            find_distinguishing_form(
                even_family(), 2, F(1, 4), search_budget=4,
                extra_forms=(LinearFormP(p=2, coeffs=(1,)),))

    def test_multi_part_universe_rejected(self):
        fam = Family.full_power_set(UniverseShape(degrees=(1, 2), n=2))
        with pytest.raises(ShapeMismatchError):
            find_distinguishing_form(fam, 2, F(1, 4))

    def test_empty_family_rejected(self):
        with pytest.raises(ValueError):
            find_distinguishing_form(
                Family(LINE6, frozenset()), 2, F(1, 4))


class TestIncrementStep:
    def test_halfspace_single_window(self):
        fam = halfspace(LINE6)
        report = find_distinguishing_form(fam, 2, F(1, 4))
        step = increment_step(fam, report, 1)
        # every (row, background) cell holds exactly 2 members; ties resolve
        # to the first row and the smallest background, which is {1}.
        assert step.cell.row == 1
        assert step.cell.background.bits == 1
        assert step.cell.partition.rows[0] == (frozenset({2}),)
        assert step.previous_density == F(1, 2)
        assert step.density == 1
        assert step.guarantee_ratio == F(7, 6)
        assert step.guaranteed
        cell, lifted, density = step
        assert density == 1
        assert lifted == Family.full_power_set(
            UniverseShape(degrees=(1,), n=1))

    def test_halfspace_window_two(self):
        fam = halfspace(LINE6)
        report = find_distinguishing_form(fam, 2, F(1, 4))
        step = increment_step(fam, report, 2)
        assert step.cell.partition.rows == (
            (frozenset({2}), frozenset({3})),
            (frozenset({4}), frozenset({5})),
        )
        assert (step.cell.row, step.cell.background.bits) == (1, 1)
        assert step.density == 1
        assert step.family == Family.full_power_set(
            UniverseShape(degrees=(1,), n=2))

    def test_gap_zero_never_guaranteed(self):
        fam = Family.full_power_set(UniverseShape(degrees=(1,), n=2))
        report = DistinguishingReport(
            form=LinearFormP(p=2, coeffs=(0, 0)), y=0, gap=F(0),
            scope="exhaustive")
        step = increment_step(fam, report, 1)
        assert step.density == step.previous_density == 1
        assert not step.guaranteed

    def test_expect_guarantee_contract(self):
        fam = Family.full_power_set(UniverseShape(degrees=(1,), n=2))
        report = DistinguishingReport(
            form=LinearFormP(p=2, coeffs=(0, 0)), y=0, gap=F(0),
            scope="exhaustive")
        with pytest.raises(ContractViolationError):
            increment_step(fam, report, 1, expect_guarantee=True)

    def test_partition_failure_surfaces(self):
        # all-ones mod 5 on [8] admits no block at window 2
        fam = Family(UniverseShape(degrees=(1,), n=8), {0})
        report = DistinguishingReport(
            form=LinearFormP(p=5, coeffs=(1,) * 8), y=0, gap=F(1, 2),
            scope="exhaustive")
        with pytest.raises(UniverseTooSmallError):
            increment_step(fam, report, 2)

    def test_members_straddling_every_row(self):
        # a member partial on one block of every row lands in no cell; the
        # scan falls back to the first row's empty-background cell.
        shape = UniverseShape(degrees=(2,), n=16)
        member = SubsetMask.from_points(shape, [(1, (1, 1)), (1, (5, 5))])
        fam = Family(shape, {member.bits})
        report = DistinguishingReport(
            form=LinearFormP(p=2, coeffs=(1,) * 16), y=0, gap=F(1, 2),
            scope="pool")
        step = increment_step(fam, report, 2)
        assert (step.cell.row, step.cell.background.bits) == (1, 0)
        assert step.density == 0
        assert len(step.family) == 0
        assert not step.guaranteed

    def test_report_shape_mismatch(self):
        report = DistinguishingReport(
            form=LinearFormP(p=2, coeffs=(1, 0, 0, 0, 0)), y=0, gap=F(1, 2),
            scope="exhaustive")
        with pytest.raises(ShapeMismatchError):
            increment_step(halfspace(LINE6), report, 1)


class TestIterationCap:
    def test_frozen_example(self):
        assert iteration_cap(F(1, 2), F(1, 2), 2) == 9

    def test_full_density_needs_no_steps(self):
        assert iteration_cap(F(1), F(1, 2), 2) == 0

    def test_definition_holds(self):
        rng = random.Random(20260823)
        for _ in range(50):
            delta = F(rng.randrange(1, 64), 64)
            eta = F(rng.randrange(1, 16), 16)
            p = rng.choice([2, 3, 5])
            q = iteration_cap(delta, eta, p)
            ratio = 1 + eta / (3 * p)
            assert delta * ratio ** q >= 1
            assert q == 0 or delta * ratio ** (q - 1) < 1

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            iteration_cap(F(0), F(1, 2), 2)
        with pytest.raises(ValueError):
            iteration_cap(F(3, 2), F(1, 2), 2)
        with pytest.raises(ValueError):
            iteration_cap(F(1, 2), F(0), 2)


class TestDefaultSchedule:
    def test_values(self):
        assert default_m_schedule(6, 2) == 1
        assert default_m_schedule(16, 2) == 2
        assert default_m_schedule(50, 2) == 5
        assert default_m_schedule(1, 2) == 0


class TestQuasirandomize:
    def test_halfspace_one_step_to_pattern(self):
        final, trace, pair = quasirandomize(halfspace(LINE6), 2, F(1, 2))
        assert trace.status == "pattern-found"
        assert trace.iterations == 1
        assert trace.cap == 9
        assert trace.initial_density == F(1, 2)
        assert trace.final_density == 1
        assert final == Family.full_power_set(UniverseShape(degrees=(1,), n=1))
        A, B, witness = pair
        assert (A.bits, B.bits) == (0, 1)
        assert witness.S == frozenset({1})
        report, step = trace.steps[0]
        assert report.form == LinearFormP(p=2, coeffs=(1, 0, 0, 0, 0, 0))
        assert step.guaranteed

    def test_halfspace_explicit_schedule(self):
        final, trace, pair = quasirandomize(
            halfspace(LINE6), 2, F(1, 2), m_schedule=(2,))
        assert trace.status == "pattern-found"
        assert trace.iterations == 1
        assert final == Family.full_power_set(UniverseShape(degrees=(1,), n=2))
        assert pair[0].bits == 0 and pair[1].bits == 1

    def test_full_power_set_already_uniform(self):
        fam = Family.full_power_set(UniverseShape(degrees=(1,), n=2))
        final, trace, pair = quasirandomize(fam, 2, F(1, 2))
        assert trace.status == "uniform"
        assert trace.iterations == 0
        assert trace.cap == 0
        assert final == fam
        assert pair is None

    def test_schedule_runs_out(self):
        # {Ø} halves its universe once, then floor(sqrt(1/2)) = 0 stops it
        fam = Family(UniverseShape(degrees=(1,), n=2), {0})
        final, trace, pair = quasirandomize(fam, 2, F(1, 2))
        assert trace.status == "inconclusive:m-schedule"
        assert trace.iterations == 1
        assert trace.cap == 18
        assert trace.final_density == F(1, 2)
        assert final == Family(UniverseShape(degrees=(1,), n=1), {0})
        assert pair is None
        report, step = trace.steps[0]
        assert report.form == LinearFormP(p=2, coeffs=(1, 0))
        assert step.density == F(1, 2)

    def test_explicit_empty_schedule(self):
        _, trace, _ = quasirandomize(
            halfspace(LINE6), 2, F(1, 2), m_schedule=())
        assert trace.status == "inconclusive:m-schedule"
        assert trace.iterations == 0

    def test_max_steps(self):
        _, trace, _ = quasirandomize(
            halfspace(LINE6), 2, F(1, 2), max_steps=0)
        assert trace.status == "inconclusive:max-steps"
        assert trace.iterations == 0

    def test_partition_too_small(self):
        # only the all-ones form separates {Ø, {1,2}}, and its partition
        # needs more room than [2] has
        fam = Family(UniverseShape(degrees=(1,), n=2), {0, 3})
        final, trace, pair = quasirandomize(fam, 2, F(1, 2))
        assert trace.status == "inconclusive:partition"
        assert trace.iterations == 0
        assert final == fam

    def test_no_progress(self):
        fam = no_progress_family()
        final, trace, pair = quasirandomize(
            fam, 2, F(1, 2), search_budget=1000,
            extra_forms=(LinearFormP(p=2, coeffs=(1,) * 16),))
        assert trace.status == "inconclusive:no-progress"
        assert trace.iterations == 0
        assert final == fam
        assert trace.final_density == trace.initial_density == F(1, 2 ** 255)

    def test_trace_json(self):
        _, trace, _ = quasirandomize(halfspace(LINE6), 2, F(1, 2))
        assert trace.to_json() == {
            "steps": [{
                "n": 6,
                "m": 1,
                "row": 1,
                "blocks": [[2]],
                "background": "10",
                "density_before": "1/2",
                "density_after": "1/1",
                "guarantee_ratio": "7/6",
                "guaranteed": True,
                "report": {
                    "form": {"p": 2, "coeffs": [1, 0, 0, 0, 0, 0]},
                    "y": 0,
                    "gap": "1/2",
                    "scope": "exhaustive",
                },
            }],
            "iterations": 1,
            "cap": 9,
            "status": "pattern-found",
            "initial_density": "1/2",
            "final_density": "1/1",
        }


class TestPlantedPatternConservation:
    """Power pairs survive the cell isomorphism in both directions."""

    def check_cell(self, cell: BlockCell, blocks):
        small_shape = cell.small_shape()
        masks = [SubsetMask(small_shape, b) for b in range(1 << small_shape.cells)]
        for a, b in itertools.product(masks, repeat=2):
            small_w = power_difference_witness(a, b)
            big_w = power_difference_witness(cell.plant(a), cell.plant(b))
            if small_w is None:
                assert big_w is None
            else:
                expected = frozenset().union(
                    *(blocks[j - 1] for j in small_w.S))
                assert big_w is not None and big_w.S == expected

    def test_singleton_blocks_degree_two(self):
        form = LinearFormP(p=2, coeffs=(1, 1, 0, 0, 0, 0))
        partition = build_block_partition(form, 2)
        assert partition.rows == (
            (frozenset({3}), frozenset({4})),
            (frozenset({5}), frozenset({6})),
        )
        shape = UniverseShape(degrees=(2,), n=6)
        for background in (
            SubsetMask.empty(shape),
            SubsetMask.from_points(shape, [(1, (1, 2)), (1, (5, 5))]),
        ):
            cell = BlockCell(partition=partition, row=1, background=background)
            self.check_cell(cell, partition.rows[0])

    def test_paired_blocks_degree_two(self):
        form = LinearFormP(p=2, coeffs=(1,) * 16)
        partition = build_block_partition(form, 2)
        assert partition.rows[0] == (frozenset({1, 2}), frozenset({3, 4}))
        shape = UniverseShape(degrees=(2,), n=16)
        cell = BlockCell(partition=partition, row=1,
                         background=SubsetMask.empty(shape))
        self.check_cell(cell, partition.rows[0])
