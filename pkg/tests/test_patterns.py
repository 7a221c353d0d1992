"""Witness ops against literal brute-force oracles.

The oracles below re-state the pattern definitions as raw searches over the
whole certificate space; the library should agree with them on existence on
every pair, and every certificate the library emits must verify.
"""

import itertools
import random

import pytest

from setdifflab.patterns import (
    DISJOINT_WINDOWS,
    NESTED,
    SAME_WINDOW,
    CliqueDifference,
    FamilyDifference,
    IntervalModN,
    PolynomialDifference,
    PowerDifference,
    clique_difference_witness,
    cyclic_interval_bits,
    distance2_witness,
    family_difference_witness,
    find_pattern_pair,
    find_witness,
    hyperedges_of,
    interval_mod_n_witness,
    power_difference_witness,
    set_from_bits,
    subsets_ascending,
    union_of_powers,
    verify_witness,
)
from setdifflab.universe import (
    Family,
    OrderedWindow,
    SubsetMask,
    UniverseShape,
    plant_into_window,
)


def masks(shape):
    return [SubsetMask(shape, b) for b in range(1 << shape.cells)]


def ordered_pairs(shape):
    ms = masks(shape)
    return [(a, b) for a in ms for b in ms if a.bits != b.bits]


def powers_table(shape):
    """bits of S^{d_1} u ... -> S, for every S including the empty set."""
    table = {}
    for S in subsets_ascending(shape.n):
        table[union_of_powers(shape, S).bits] = S
    return table


# ---------------------------------------------------------------------------
# oracles


def oracle_power(A, B):
    """All nonempty S with B = A u powers(S), powers(S) disjoint from A."""
    out = []
    for S in subsets_ascending(A.shape.n):
        if not S:
            continue
        P = union_of_powers(A.shape, S)
        if P.bits & A.bits == 0 and A.bits | P.bits == B.bits:
            out.append(S)
    return out


def oracle_distance2(A, B):
    """Literal search over U below A n B with power-form lookups per side."""
    table = powers_table(A.shape)
    common = A.bits & B.bits
    sub = common
    while True:
        U = common & ~sub  # enumerate all subsets of the common part
        s1 = table.get(A.bits & ~U)
        s2 = table.get(B.bits & ~U)
        if s1 is not None and s2 is not None:
            return U, s1, s2
        if sub == 0:
            return None
        sub = (sub - 1) & common


def oracle_family(A, B, template, mode):
    shape = A.shape
    m, n = template.shape.n, shape.n
    planted = {}
    for start in range(1, n - m + 2):
        I = OrderedWindow.interval(start, m)
        planted[start] = {
            plant_into_window(f, I, shape).bits for f in template.masks()
        }
    starts = list(planted)
    if mode == DISJOINT_WINDOWS:
        window_choices = [
            (s1, s2) for s1 in starts for s2 in starts if abs(s1 - s2) >= m
        ]
    else:
        window_choices = [(s, s) for s in starts]
    common = A.bits & B.bits
    for s1, s2 in window_choices:
        sub = common
        while True:
            U = common & ~sub
            f1 = A.bits & ~U
            f2 = B.bits & ~U
            ok = f1 in planted[s1] and f2 in planted[s2] and f1 != f2
            if ok and mode == NESTED:
                ok = f2 & ~f1 == 0
            if ok:
                return s1, s2, U, f1, f2
            if sub == 0:
                break
            sub = (sub - 1) & common
    return None


def oracle_interval(a_bits, b_bits, n):
    out = []
    for y in range(1, n + 1):
        for length in range(1, n + 1):
            if cyclic_interval_bits(n, y, length) == a_bits ^ b_bits:
                out.append((y, length))
    return out


# ---------------------------------------------------------------------------
# power / polynomial difference


def test_power_worked_examples():
    sh = UniverseShape((2,), 3)
    A = SubsetMask.from_points(sh, [(1, (3, 3))])
    B = A.union(union_of_powers(sh, {1, 2}))
    w = power_difference_witness(A, B)
    assert w is not None and w.S == frozenset({1, 2})
    assert verify_witness(A, B, PowerDifference(2), w)

    sh2 = UniverseShape((2,), 2)
    A2 = SubsetMask(sh2, 0)
    B2 = SubsetMask.from_points(sh2, [(1, (1, 2))])
    assert power_difference_witness(A2, B2) is None

    sh3 = UniverseShape((1, 2), 2)
    A3 = SubsetMask(sh3, 0)
    B3 = SubsetMask.from_points(sh3, [(1, (1,)), (2, (1, 1))])
    w3 = power_difference_witness(A3, B3)
    assert w3 is not None and w3.S == frozenset({1})


def test_power_rejects_non_difference_pairs():
    sh = UniverseShape((2,), 2)
    full = SubsetMask.full(sh)
    assert power_difference_witness(full, full) is None  # not distinct
    A = SubsetMask.from_points(sh, [(1, (1, 2))])
    assert power_difference_witness(A, SubsetMask(sh, 0)) is None  # not nested


@pytest.mark.parametrize(
    "shape",
    [
        UniverseShape((1,), 3),
        UniverseShape((2,), 2),
        UniverseShape((1, 2), 2),
        UniverseShape((3,), 2),
    ],
)
def test_power_matches_oracle_exhaustively(shape):
    for A, B in ordered_pairs(shape):
        oracle = oracle_power(A, B)
        assert len(oracle) <= 1  # witness uniqueness
        w = power_difference_witness(A, B)
        if oracle:
            assert w is not None and w.S == oracle[0]
            assert verify_witness(A, B, PolynomialDifference(shape.degrees), w)
        else:
            assert w is None


def test_intransitivity_exhibit():
    # two consecutive power steps whose composition is not a power step
    sh = UniverseShape((2,), 2)
    A = SubsetMask(sh, 0)
    B = union_of_powers(sh, {1})
    C = B.union(union_of_powers(sh, {2}))
    assert power_difference_witness(A, B) is not None
    assert power_difference_witness(B, C) is not None
    assert power_difference_witness(A, C) is None


def test_counterexample_family_has_no_power_pairs():
    # all pure powers {S^d : S nonempty} pairwise admit no witness for d >= 2
    for n, d in [(2, 2), (3, 2), (2, 3)]:
        sh = UniverseShape((d,), n)
        fam = Family.from_masks(
            [union_of_powers(sh, S) for S in subsets_ascending(n) if S]
        )
        assert find_pattern_pair(fam, PowerDifference(d)) is None


def test_find_pattern_pair_first_in_mask_order():
    sh = UniverseShape((2,), 2)
    hit = find_pattern_pair(Family.full_power_set(sh), PowerDifference(2))
    assert hit is not None
    A, B, w = hit
    assert A.bits == 0
    assert B.bits == union_of_powers(sh, {1}).bits
    assert w.S == frozenset({1})


# ---------------------------------------------------------------------------
# distance 2


def test_distance2_worked_examples():
    sh = UniverseShape((2,), 2)
    A = union_of_powers(sh, {1})
    B = union_of_powers(sh, {2})
    w = distance2_witness(A, B)
    assert w is not None
    assert (w.U.bits, w.S1, w.S2) == (0, frozenset({1}), frozenset({2}))
    assert verify_witness(A, B, PowerDifference(2), w)

    A2 = SubsetMask.from_points(sh, [(1, (1, 2))])
    B2 = SubsetMask.from_points(sh, [(1, (2, 1))])
    assert distance2_witness(A2, B2) is None

    with pytest.raises(ValueError):
        distance2_witness(A, A)


@pytest.mark.parametrize(
    "shape", [UniverseShape((1,), 3), UniverseShape((2,), 2), UniverseShape((1, 2), 2)]
)
def test_distance2_matches_oracle_exhaustively(shape):
    for A, B in ordered_pairs(shape):
        got = distance2_witness(A, B)
        want = oracle_distance2(A, B)
        assert (got is None) == (want is None)
        if got is not None:
            assert verify_witness(A, B, PolynomialDifference(shape.degrees), got)


# ---------------------------------------------------------------------------
# template-family differences


def test_family_worked_example_same_window():
    sh = UniverseShape((1,), 3)
    template = Family(UniverseShape((1,), 1), frozenset([0, 1]))  # {0, {1}}
    A = SubsetMask(sh, 0)
    B = SubsetMask.from_points(sh, [(1, (3,))])
    w = family_difference_witness(A, B, template)
    assert w is not None
    assert w.windows[0].elements == (3,)
    assert w.U.bits == 0
    assert w.F1.bits == 0
    assert sorted(w.F2.points()) == [(1, (3,))]
    assert w.F2_member.bits == 1  # relabel 3 -> 1
    assert verify_witness(A, B, FamilyDifference(template), w)


def test_family_worked_example_nested_chain():
    m = 2
    small = UniverseShape((1,), m)
    chain = Family(small, frozenset([0b00, 0b01, 0b11]))
    sh = UniverseShape((1,), 4)
    I = OrderedWindow.interval(2, m)
    A = plant_into_window(SubsetMask(small, 0b11), I, sh)
    B = plant_into_window(SubsetMask(small, 0b01), I, sh)
    w = family_difference_witness(A, B, chain, NESTED)
    assert w is not None
    assert w.F2.issubset(w.F1) and w.F1.bits != w.F2.bits
    assert A.symmetric_difference(B).bits == w.F1.bits & ~w.F2.bits
    assert verify_witness(A, B, FamilyDifference(chain, NESTED), w)


def test_family_disjoint_windows_union():
    small = UniverseShape((1,), 1)
    template = Family(small, frozenset([0, 1]))
    sh = UniverseShape((1,), 4)
    A = SubsetMask.from_points(sh, [(1, (1,))])
    B = SubsetMask.from_points(sh, [(1, (4,))])
    w = family_difference_witness(A, B, template, DISJOINT_WINDOWS)
    assert w is not None
    assert w.mode == DISJOINT_WINDOWS
    I1, I2 = w.windows
    assert not set(I1.elements) & set(I2.elements)
    assert A.symmetric_difference(B).bits == w.F1.bits | w.F2.bits
    assert verify_witness(A, B, FamilyDifference(template, DISJOINT_WINDOWS), w)


@pytest.mark.parametrize("mode", [SAME_WINDOW, DISJOINT_WINDOWS, NESTED])
@pytest.mark.parametrize("m", [1, 2])
def test_family_matches_oracle_exhaustively(mode, m):
    sh = UniverseShape((1,), 4)
    small = UniverseShape((1,), m)
    templates = [
        Family.full_power_set(small),
        Family(small, frozenset([0, (1 << small.cells) - 1])),
    ]
    for template in templates:
        spec = FamilyDifference(template, mode)
        for A, B in ordered_pairs(sh):
            got = family_difference_witness(A, B, template, mode)
            want = oracle_family(A, B, template, mode)
            assert (got is None) == (want is None), (mode, m, A.bits, B.bits)
            if got is not None:
                assert verify_witness(A, B, spec, got)


def test_family_requires_matching_degrees():
    sh = UniverseShape((2,), 3)
    template = Family(UniverseShape((1,), 2), frozenset([0]))
    A, B = SubsetMask(sh, 0), SubsetMask(sh, 1)
    with pytest.raises(Exception):
        family_difference_witness(A, B, template)


# ---------------------------------------------------------------------------
# cyclic intervals


def test_interval_worked_examples():
    w = interval_mod_n_witness(0b000, 0b011, 3)
    assert (w.start, w.length) == (1, 2)
    w2 = interval_mod_n_witness(0b000, 0b111, 3)
    assert (w2.start, w2.length) == (1, 3)  # full set ties break to start 1
    # wrap-around: {3, 1} is the interval starting at 3 of length 2
    w3 = interval_mod_n_witness(0b000, 0b101, 3)
    assert (w3.start, w3.length) == (3, 2)
    assert interval_mod_n_witness(0b0101, 0b0000, 4) is None  # two runs
    assert interval_mod_n_witness(0b11, 0b11, 2) is None  # equal pair


def test_interval_matches_oracle_exhaustively():
    for n in (2, 3, 4, 5):
        for a in range(1 << n):
            for b in range(1 << n):
                if a == b:
                    continue
                got = interval_mod_n_witness(a, b, n)
                want = oracle_interval(a, b, n)
                assert (got is None) == (not want)
                if got is not None:
                    assert (got.start, got.length) in want
                    if len(want) > 1:  # only the full set is ambiguous
                        assert a ^ b == (1 << n) - 1
                        assert got.start == 1


# ---------------------------------------------------------------------------
# clique difference


def graph_mask(shape, edges, extra_bits=0):
    pts = [(1, tuple(sorted(e))) for e in edges]
    return SubsetMask(shape, SubsetMask.from_points(shape, pts).bits | extra_bits)


def test_clique_worked_example():
    sh = UniverseShape((2,), 3)
    H = graph_mask(sh, [])
    G = graph_mask(sh, [(1, 2), (1, 3), (2, 3)])
    w = clique_difference_witness(H, G)
    assert w is not None and w.S == frozenset({1, 2, 3})
    assert verify_witness(H, G, CliqueDifference((2,)), w)
    # an edge already present in H breaks the complete-difference requirement
    H2 = graph_mask(sh, [(1, 2)])
    assert clique_difference_witness(H2, G) is None


def test_clique_ignores_free_bits():
    sh = UniverseShape((2,), 3)
    diag = SubsetMask.from_points(sh, [(1, (1, 1)), (1, (3, 1))]).bits
    H = graph_mask(sh, [], extra_bits=diag)
    G = graph_mask(sh, [(1, 2)])
    w = clique_difference_witness(H, G)
    assert w is not None and w.S == frozenset({1, 2})


def test_clique_multi_part_bundle():
    sh = UniverseShape((1, 2), 3)
    S = {1, 3}
    bits = 0
    for x in S:
        bits |= 1 << sh.index_of(1, (x,))
    bits |= 1 << sh.index_of(2, (1, 3))
    H = SubsetMask(sh, 0)
    G = SubsetMask(sh, bits)
    w = clique_difference_witness(H, G)
    assert w is not None and w.S == frozenset(S)
    # singleton S: degree-2 part must stay empty
    H1 = SubsetMask(sh, 0)
    G1 = SubsetMask(sh, 1 << sh.index_of(1, (2,)))
    w1 = clique_difference_witness(H1, G1)
    assert w1 is not None and w1.S == frozenset({2})
    bad = SubsetMask(sh, G1.bits | 1 << sh.index_of(2, (1, 2)))
    assert clique_difference_witness(H1, bad) is None


def test_hyperedges_reading():
    sh = UniverseShape((2,), 3)
    m = SubsetMask.from_points(sh, [(1, (1, 2)), (1, (2, 1)), (1, (2, 2))])
    (edges,) = hyperedges_of(m)
    assert edges == frozenset({frozenset({1, 2})})


# ---------------------------------------------------------------------------
# dispatch plumbing


def test_find_witness_dispatch_and_shape_checks():
    sh = UniverseShape((2,), 2)
    A, B = SubsetMask(sh, 0), union_of_powers(sh, {2})
    assert find_witness(A, B, PowerDifference(2)).S == frozenset({2})
    with pytest.raises(Exception):
        find_witness(A, B, PowerDifference(3))
    with pytest.raises(Exception):
        find_witness(A, B, IntervalModN())
    shz = UniverseShape((1,), 4)
    a, b = SubsetMask(shz, 0b0011), SubsetMask(shz, 0b0000)
    w = find_witness(a, b, IntervalModN())
    assert (w.start, w.length) == (1, 2)


def test_witness_json_shapes():
    sh = UniverseShape((2,), 2)
    w = power_difference_witness(SubsetMask(sh, 0), union_of_powers(sh, {1, 2}))
    assert w.to_json() == {"kind": "power-difference", "S": [1, 2]}
    d2 = distance2_witness(union_of_powers(sh, {1}), union_of_powers(sh, {2}))
    j = d2.to_json()
    assert j["kind"] == "distance-2" and j["S1"] == [1] and j["S2"] == [2]
    iv = interval_mod_n_witness(0, 0b11, 3)
    assert iv.to_json() == {"kind": "interval-mod-n", "start": 1, "length": 2}


def test_verify_rejects_corrupted_certificates():
    sh = UniverseShape((2,), 2)
    A, B = SubsetMask(sh, 0), union_of_powers(sh, {1})
    w = power_difference_witness(A, B)
    from setdifflab.patterns import PowerWitness

    assert not verify_witness(A, B, PowerDifference(2), PowerWitness(frozenset({2})))
    assert not verify_witness(B, A, PowerDifference(2), w)


def test_set_from_bits():
    assert set_from_bits(0b101) == frozenset({1, 3})
    assert set_from_bits(0) == frozenset()
    assert list(subsets_ascending(2)) == [
        frozenset(),
        frozenset({1}),
        frozenset({2}),
        frozenset({1, 2}),
    ]
