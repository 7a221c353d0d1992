"""Exact extremal oracle: maximum pattern-avoiding families at toy scale.

Builds the graph whose vertices are all subsets of a universe and whose edges
are the pairs admitting a difference-pattern witness, then finds an exact
maximum independent set.  These numbers are the ground truth the rest of the
package's tests calibrate against, so the solver re-verifies every record it
emits and a small regression table of solved instances is shipped with the
package data.
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Iterable, Iterator, Optional

from .errors import CapExceededError, ContractViolationError
from .patterns import (
    CliqueDifference,
    FamilyDifference,
    IntervalModN,
    PatternSpec,
    PolynomialDifference,
    PowerDifference,
    find_pattern_pair,
    find_witness,
    union_of_powers,
)
from .universe import Family, SubsetMask, UniverseShape

DEFAULT_VERTEX_CAP = 1 << 16
EXHAUSTIVE_VERTEX_CAP = 20


def pattern_name(spec: PatternSpec) -> str:
    names = {
        PowerDifference: "power-difference",
        PolynomialDifference: "polynomial-difference",
        FamilyDifference: "family-difference",
        IntervalModN: "interval-mod-n",
        CliqueDifference: "clique-difference",
    }
    return names[type(spec)]


@dataclass(frozen=True)
class ForbiddenPairGraph:
    """All subsets as vertices; edges are witness-admitting pairs."""

    shape: UniverseShape
    spec: PatternSpec
    neighbors: tuple[tuple[int, ...], ...]

    @property
    def vertex_count(self) -> int:
        return len(self.neighbors)

    @property
    def edge_count(self) -> int:
        return sum(len(ns) for ns in self.neighbors) // 2

    def edges(self) -> Iterator[tuple[int, int]]:
        for a, ns in enumerate(self.neighbors):
            for b in ns:
                if a < b:
                    yield a, b

    def mask(self, vertex: int) -> SubsetMask:
        return SubsetMask(self.shape, vertex)

    def distance2_closure(self) -> "ForbiddenPairGraph":
        """Pairs sharing a common lower set they both extend by a pattern.

        This is the square of the oriented (upward) relation: A and B are
        joined when some U reaches both by a single oriented step or is one
        of them.  It reproduces the two-sided witness relation checked by
        ``distance2_witness``, which the tests confirm pair by pair.
        """
        up = _oriented_successors(self.shape, self.spec, self.vertex_count)
        adj: list[set[int]] = [set() for _ in range(self.vertex_count)]
        for u in range(self.vertex_count):
            reach = sorted(up[u] | {u})
            for a, b in itertools.combinations(reach, 2):
                adj[a].add(b)
                adj[b].add(a)
        return ForbiddenPairGraph(
            shape=self.shape, spec=self.spec,
            neighbors=tuple(tuple(sorted(ns)) for ns in adj))


def _power_bit_patterns(shape: UniverseShape) -> list[int]:
    patterns = []
    for size in range(1, shape.n + 1):
        for S in itertools.combinations(range(1, shape.n + 1), size):
            patterns.append(union_of_powers(shape, S).bits)
    return patterns


def _is_power_spec(shape: UniverseShape, spec: PatternSpec) -> bool:
    if isinstance(spec, PowerDifference):
        return shape.degrees == (spec.degree,)
    if isinstance(spec, PolynomialDifference):
        return shape.degrees == spec.degrees
    return False


def _oriented_successors(shape: UniverseShape, spec: PatternSpec,
                         vertices: int) -> list[set[int]]:
    up: list[set[int]] = [set() for _ in range(vertices)]
    if _is_power_spec(shape, spec):
        for pattern in _power_bit_patterns(shape):
            for a in range(vertices):
                if a & pattern == 0:
                    up[a].add(a | pattern)
    else:
        for a in range(vertices):
            A = SubsetMask(shape, a)
            for b in range(vertices):
                if a != b and find_witness(A, SubsetMask(shape, b), spec):
                    up[a].add(b)
    return up


def build_forbidden_graph(shape: UniverseShape, spec: PatternSpec,
                          vertex_cap: int = DEFAULT_VERTEX_CAP,
                          ) -> ForbiddenPairGraph:
    """Edge set by witness checks; power specs use the direct neighborhood
    {A u S^d : S^d disjoint from A} plus the reverse removals."""
    vertices = 1 << shape.cells
    if vertices > vertex_cap:
        raise CapExceededError(
            f"{vertices} vertices exceed the cap {vertex_cap}")
    adj: list[set[int]] = [set() for _ in range(vertices)]
    up = _oriented_successors(shape, spec, vertices)
    for a in range(vertices):
        for b in up[a]:
            adj[a].add(b)
            adj[b].add(a)
    return ForbiddenPairGraph(
        shape=shape, spec=spec,
        neighbors=tuple(tuple(sorted(ns)) for ns in adj))


# ---------------------------------------------------------------------------
# maximum independent set


def _greedy_clique_cover_bound(candidates: int, adj: list[int]) -> int:
    bound = 0
    rest = candidates
    while rest:
        v = (rest & -rest).bit_length() - 1
        clique = 1 << v
        common = adj[v] & rest
        rest &= ~(1 << v)
        scan = common
        while scan:
            u = (scan & -scan).bit_length() - 1
            clique |= 1 << u
            rest &= ~(1 << u)
            common &= adj[u]
            scan = common & ~((1 << (u + 1)) - 1)
        bound += 1
    return bound


def _solve_mis(adj: list[int], deadline: Optional[float]) -> tuple[int, int, bool]:
    """Exact MIS by branch and bound; returns (size, member bits, optimal)."""
    n = len(adj)
    best_size = 0
    best_set = 0
    optimal = True
    full = (1 << n) - 1

    def popcount(x: int) -> int:
        return x.bit_count()

    stack = [(full, 0, 0)]
    while stack:
        if deadline is not None and time.monotonic() > deadline:
            optimal = False
            break
        candidates, chosen, size = stack.pop()
        if size + popcount(candidates) <= best_size:
            continue
        if not candidates:
            if size > best_size:
                best_size, best_set = size, chosen
            continue
        if size + _greedy_clique_cover_bound(candidates, adj) <= best_size:
            continue
        # branch on the max-degree candidate vertex
        branch, branch_degree = -1, -1
        scan = candidates
        while scan:
            v = (scan & -scan).bit_length() - 1
            deg = popcount(adj[v] & candidates)
            if deg > branch_degree:
                branch, branch_degree = v, deg
            scan &= scan - 1
        if branch_degree == 0:
            # the candidates form an independent set: take them all
            total = size + popcount(candidates)
            if total > best_size:
                best_size, best_set = total, chosen | candidates
            continue
        v_bit = 1 << branch
        stack.append((candidates & ~v_bit, chosen, size))
        stack.append((candidates & ~v_bit & ~adj[branch],
                      chosen | v_bit, size + 1))
    return best_size, best_set, optimal


def _exhaustive_mis(adj: list[int]) -> tuple[int, int]:
    n = len(adj)
    if n > EXHAUSTIVE_VERTEX_CAP:
        raise CapExceededError(
            f"exhaustive search over 2^{n} subsets refused")
    best_size, best_set = 0, 0
    for subset in range(1 << n):
        if subset.bit_count() <= best_size:
            continue
        scan = subset
        independent = True
        while scan:
            v = (scan & -scan).bit_length() - 1
            if adj[v] & subset:
                independent = False
                break
            scan &= scan - 1
        if independent:
            best_size, best_set = subset.bit_count(), subset
    return best_size, best_set


@dataclass(frozen=True)
class ExtremalRecord:
    shape: UniverseShape
    spec: PatternSpec
    max_size: int
    witness_family: Family
    method: str
    optimal: bool = True

    @property
    def max_density(self) -> Fraction:
        return Fraction(self.max_size, 1 << self.shape.cells)

    def to_json(self) -> dict:
        return {
            "degrees": list(self.shape.degrees),
            "n": self.shape.n,
            "pattern": pattern_name(self.spec),
            "max_size": self.max_size,
            "max_density": f"{self.max_density.numerator}/{self.max_density.denominator}",
            "witness_family": [m.to_hex() for m in self.witness_family.masks()],
            "method": self.method,
            "optimal": self.optimal,
        }


def _dense_adjacency(graph: ForbiddenPairGraph) -> list[int]:
    adj = [0] * graph.vertex_count
    for a, ns in enumerate(graph.neighbors):
        for b in ns:
            adj[a] |= 1 << b
    return adj


def max_avoiding_family(shape: UniverseShape, spec: PatternSpec,
                        method: str = "branch-and-bound",
                        vertex_cap: int = DEFAULT_VERTEX_CAP,
                        time_limit: Optional[float] = None) -> ExtremalRecord:
    """Exact largest family with no witnessed pair; re-verified before return.

    A time limit (seconds) turns the result into a best-known lower bound
    with ``optimal=False``; without one the search runs to completion.
    """
    graph = build_forbidden_graph(shape, spec, vertex_cap=vertex_cap)
    adj = _dense_adjacency(graph)
    if method == "branch-and-bound":
        deadline = None if time_limit is None else time.monotonic() + time_limit
        size, chosen, optimal = _solve_mis(adj, deadline)
    elif method == "exhaustive":
        size, chosen = _exhaustive_mis(adj)
        optimal = True
    else:
        raise ValueError(f"unknown method {method!r}")
    members = frozenset(
        v for v in range(graph.vertex_count) if chosen >> v & 1)
    family = Family(shape, members)
    if len(family) != size or find_pattern_pair(family, spec) is not None:
        raise ContractViolationError("solver produced an invalid record")
    return ExtremalRecord(shape=shape, spec=spec, max_size=size,
                          witness_family=family, method=method,
                          optimal=optimal)


# ---------------------------------------------------------------------------
# threshold tables and regression data


@dataclass(frozen=True)
class ThresholdTable:
    rows: tuple[ExtremalRecord, ...]

    @property
    def monotone_nondecreasing(self) -> bool:
        sizes = [r.max_size for r in self.rows]
        return all(a <= b for a, b in zip(sizes, sizes[1:]))

    def to_json(self) -> dict:
        return {
            "rows": [
                {
                    "n": r.shape.n,
                    "max_size": r.max_size,
                    "max_density": f"{r.max_density.numerator}/{r.max_density.denominator}",
                    "optimal": r.optimal,
                }
                for r in self.rows
            ],
            "monotone_nondecreasing": self.monotone_nondecreasing,
        }


def density_threshold_table(degrees: tuple[int, ...], ns: Iterable[int],
                            spec: PatternSpec,
                            vertex_cap: int = DEFAULT_VERTEX_CAP,
                            ) -> ThresholdTable:
    rows = []
    for n in ns:
        shape = UniverseShape(degrees=tuple(degrees), n=n)
        rows.append(max_avoiding_family(shape, spec, vertex_cap=vertex_cap))
    return ThresholdTable(rows=tuple(rows))


def load_regression_table() -> list[dict]:
    """Solved instances shipped with the package (degrees, n, max_size)."""
    text = resources.files("setdifflab").joinpath(
        "data/extremal_regression.json").read_text()
    return json.loads(text)
