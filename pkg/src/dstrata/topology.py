"""Closed-form topology of root-clustering strata.

All counting is exact big-integer arithmetic.  The key inputs are the Betti
data (b0, b1) of the three planar strata of a stability theory; symmetric
powers then determine components, Betti numbers, homotopy types and
fundamental groups of the polynomial strata.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .polys import StabilityIndex
from .regions import STRATA, StabilityTheory, StratumKind, TopologyTriple


class TopologyError(ValueError):
    pass


def multiset_coefficient(b0: int, count: int) -> int:
    """Number of size-`count` multisets over b0 components."""
    if count == 0:
        return 1
    if b0 <= 0:
        raise TopologyError("positive root count in a stratum declared empty")
    return math.comb(b0 + count - 1, count)


def _index_tuple(index) -> tuple[int, int, int]:
    if isinstance(index, StabilityIndex):
        return index.as_tuple()
    k, l, m = index
    if min(k, l, m) < 0:
        raise TopologyError("index entries must be nonnegative")
    return (int(k), int(l), int(m))


def _topology_triple(topology) -> TopologyTriple:
    if isinstance(topology, TopologyTriple):
        return topology
    if isinstance(topology, StabilityTheory):
        return topology.own_topology()
    raise TopologyError("expected a TopologyTriple or a StabilityTheory")


def component_count(topology, index) -> int:
    """Connected components of the stratum with the given index.

    Product of multiset coefficients C(b0 + count - 1, count) over the three
    strata.
    """
    topo = _topology_triple(topology)
    k, l, m = _index_tuple(index)
    return (
        multiset_coefficient(topo.stable.b0, k)
        * multiset_coefficient(topo.semistable.b0, l)
        * multiset_coefficient(topo.unstable.b0, m)
    )


def betti(topology, index, u: int) -> int:
    """u-th Betti number of the stratum with the given index.

    The triple binomial sum: over r + q + t = u,
    C(b1s,r) C(b1ss,q) C(b1un,t) * C(b0s+k-r-1,k-r) C(b0ss+l-q-1,l-q)
    C(b0un+m-t-1,m-t).
    """
    if u < 0:
        raise TopologyError("u must be nonnegative")
    topo = _topology_triple(topology)
    k, l, m = _index_tuple(index)
    (b0s, b0ss, b0un) = topo.b0()
    (b1s, b1ss, b1un) = topo.b1()
    for count, b0 in ((k, b0s), (l, b0ss), (m, b0un)):
        if count > 0 and b0 == 0:
            raise TopologyError("positive root count in a stratum declared empty")
    total = 0
    for r in range(0, min(k, b1s, u) + 1):
        for q in range(0, min(l, b1ss, u - r) + 1):
            t = u - r - q
            if t > m or t > b1un:
                continue
            total += (
                math.comb(b1s, r)
                * math.comb(b1ss, q)
                * math.comb(b1un, t)
                * multiset_coefficient(b0s, k - r)
                * multiset_coefficient(b0ss, l - q)
                * multiset_coefficient(b0un, m - t)
            )
    return total


def poincare_series_oracle(b0: int, b1: int, n: int, cap: int = 64) -> list[list[int]]:
    """Poincare polynomials of the symmetric powers of a bouquet space.

    Expands (1+xt)^b1 / (1-t)^b0 by literal truncated polynomial
    multiplication (no binomial formulas), and returns for each w <= n the
    coefficient list of the w-th symmetric power's Poincare polynomial.
    """
    if n > cap:
        raise TopologyError(f"series truncation cap is {cap}")
    if b0 < 0 or b1 < 0 or n < 0:
        raise TopologyError("arguments must be nonnegative")
    # series[w] is the list of x-coefficients at t^w.
    series: list[list[int]] = [[1]] + [[] for _ in range(n)]
    geometric = [[1] for _ in range(n + 1)]  # expansion of 1/(1-t)
    for _ in range(b0):
        series = _mul_series(series, geometric, n)
    one_plus_xt = [[1], [0, 1]] + [[] for _ in range(n - 1)] if n >= 1 else [[1]]
    for _ in range(b1):
        series = _mul_series(series, one_plus_xt, n)
    return series


def _mul_series(a: list[list[int]], b: list[list[int]], n: int) -> list[list[int]]:
    out: list[list[int]] = [[] for _ in range(n + 1)]
    for i, pa in enumerate(a):
        if not pa or i > n:
            continue
        for j, pb in enumerate(b):
            if not pb or i + j > n:
                continue
            target = out[i + j]
            width = len(pa) + len(pb) - 1
            if len(target) < width:
                target.extend([0] * (width - len(target)))
            for da, ca in enumerate(pa):
                if ca:
                    for db, cb in enumerate(pb):
                        if cb:
                            target[da + db] += ca * cb
    return out


# ---------------------------------------------------------------------------
# Component enumeration and homotopy types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Factor:
    """One planar component carrying lambda >= 1 roots."""

    stratum: StratumKind
    component: int
    b1: int
    multiplicity: int

    def __post_init__(self):
        if self.multiplicity < 1 or self.b1 < 0:
            raise TopologyError("factor needs multiplicity >= 1 and b1 >= 0")


@dataclass(frozen=True)
class ComponentSpec:
    factors: tuple[Factor, ...]

    def label(self) -> str:
        return " * ".join(
            f"{f.stratum.value}{f.component}^{f.multiplicity}" for f in self.factors
        ) or "point"


def _weak_compositions(total: int, parts: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for head in range(total + 1):
        for tail in _weak_compositions(total - head, parts - 1):
            yield (head,) + tail


def enumerate_components(topology, index) -> list[ComponentSpec]:
    """All component specs of the stratum: one per way of distributing the
    root counts over the planar components of each stratum."""
    topo = _topology_triple(topology)
    k, l, m = _index_tuple(index)
    per_stratum = []
    for stratum, count in ((StratumKind.STABLE, k), (StratumKind.SEMISTABLE, l),
                           (StratumKind.UNSTABLE, m)):
        data = topo.get(stratum)
        if count > 0 and data.b0 == 0:
            raise TopologyError(f"index places roots in the empty stratum {stratum}")
        try:
            comps = data.components() if count > 0 else ()
        except ValueError as exc:
            raise TopologyError(str(exc)) from None
        options = []
        for split in _weak_compositions(count, len(comps)) if count > 0 else [()]:
            factors = tuple(
                Factor(stratum, ci, comps[ci], lam)
                for ci, lam in enumerate(split)
                if lam > 0
            )
            options.append(factors)
        per_stratum.append(options)
    specs = [
        ComponentSpec(fa + fb + fc)
        for fa in per_stratum[0]
        for fb in per_stratum[1]
        for fc in per_stratum[2]
    ]
    return specs


@dataclass(frozen=True)
class HomotopyExpr:
    """Canonical product of a torus, torus skeletons and circle bouquets.

    torus_dim collects all full-torus factors into one torus; skeletons are
    (q, n) pairs with n > q > 1; bouquets hold the free ranks of the
    lambda = 1 factors (rank 0 entries are dropped as points).
    """

    torus_dim: int = 0
    skeletons: tuple[tuple[int, int], ...] = ()
    bouquets: tuple[int, ...] = ()

    def __post_init__(self):
        for q, n in self.skeletons:
            if not (1 < q < n):
                raise TopologyError("torus skeleton needs n > q > 1")
        if any(b < 1 for b in self.bouquets):
            raise TopologyError("bouquet rank must be >= 1")

    def is_point(self) -> bool:
        return self.torus_dim == 0 and not self.skeletons and not self.bouquets

    def __str__(self) -> str:
        parts = []
        if self.torus_dim == 1:
            parts.append("S^1")
        elif self.torus_dim > 1:
            parts.append(f"T^{self.torus_dim}")
        for q, n in self.skeletons:
            parts.append(f"T^{n}_{q}")
        for b in self.bouquets:
            parts.append("S^1" if b == 1 else f"(v_{b} S^1)")
        return " x ".join(parts) if parts else "point"


def homotopy_type(spec: ComponentSpec) -> HomotopyExpr:
    """Homotopy type of one connected component of a stratum.

    Per factor: lambda = 1 gives a bouquet of b1 circles; lambda > 1 with
    0 < b1 <= lambda contributes b1 to a single merged torus; b1 > lambda > 1
    gives the lambda-skeleton of the b1-torus; b1 = 0 is contractible.
    """
    torus_dim = 0
    skeletons = []
    bouquets = []
    for f in spec.factors:
        if f.b1 == 0:
            continue
        if f.multiplicity == 1:
            bouquets.append(f.b1)
        elif f.b1 <= f.multiplicity:
            torus_dim += f.b1
        else:
            skeletons.append((f.multiplicity, f.b1))
    return HomotopyExpr(torus_dim, tuple(sorted(skeletons)), tuple(sorted(bouquets, reverse=True)))


@dataclass(frozen=True)
class GroupDescriptor:
    """Z^rank x (free product factors), with F_1 folded into the rank."""

    free_abelian_rank: int
    free_factors: tuple[int, ...]

    def __str__(self) -> str:
        parts = []
        if self.free_abelian_rank == 1:
            parts.append("Z")
        elif self.free_abelian_rank > 1:
            parts.append(f"Z^{self.free_abelian_rank}")
        parts.extend(f"F_{r}" for r in self.free_factors)
        return " x ".join(parts) if parts else "trivial"


def fundamental_group(spec: ComponentSpec) -> GroupDescriptor:
    """Fundamental group of a component: Z^(sum of b1 over lambda > 1 factors)
    times free groups F_b1 for the lambda = 1 factors (F_1 is Z)."""
    rank = 0
    free = []
    for f in spec.factors:
        if f.b1 == 0:
            continue
        if f.multiplicity > 1:
            rank += f.b1
        elif f.b1 == 1:
            rank += 1
        else:
            free.append(f.b1)
    return GroupDescriptor(rank, tuple(sorted(free, reverse=True)))


def group_of_expr(expr: HomotopyExpr) -> GroupDescriptor:
    """Fundamental group read off a homotopy expression (atom-wise)."""
    rank = expr.torus_dim + sum(n for _, n in expr.skeletons)
    free = []
    for b in expr.bouquets:
        if b == 1:
            rank += 1
        else:
            free.append(b)
    return GroupDescriptor(rank, tuple(sorted(free, reverse=True)))


# ---------------------------------------------------------------------------
# Circle-boundary homeomorphism types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CircleBoundaryType:
    index: tuple[int, int, int]
    kind: str  # "cell", "orientable", "nonorientable"
    euclidean_dim: int
    disc_dim: int

    def __str__(self) -> str:
        if self.kind == "cell":
            return f"R^{self.euclidean_dim}"
        bundle = "S^1 x" if self.kind == "orientable" else "S^1 x~"
        return f"{bundle} D^{self.disc_dim} x R^{self.euclidean_dim}"


def homeomorphism_type_circle_boundary(index) -> CircleBoundaryType:
    """Homeomorphism type of a stratum when the semistable set is a circle.

    l = 0 gives a euclidean cell; l odd an orientable disc bundle over the
    circle; l even (> 0) the nonorientable bundle.  The caller asserts that
    the theory's semistable stratum really is a circle.
    """
    k, l, m = _index_tuple(index)
    dim = 2 * (k + m)
    if l == 0:
        return CircleBoundaryType((k, l, m), "cell", dim, 0)
    kind = "orientable" if l % 2 == 1 else "nonorientable"
    return CircleBoundaryType((k, l, m), kind, dim, l - 1)


# ---------------------------------------------------------------------------
# Pole placement arrangements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolePlacementPoset:
    poles: int
    ambient_degree: int
    min_cardinality: int
    counts: dict
    elements: tuple[tuple[int, ...], ...]
    cover_edges: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]

    def count_for(self, cardinality: int) -> int:
        return self.counts[cardinality]


def pole_placement_poset(r: int, n: int, q: int = 1,
                         enumeration_cap: int = 200_000) -> PolePlacementPoset:
    """Subspace arrangement data for a finite stable set of r points.

    For each cardinality c in [q, n] there are C(r+c-1, c) subspaces of
    codimension c, indexed by size-c multisubsets of the poles; containment
    of multisets is the intersection poset.  Cover edges connect multisets
    differing by one element.
    """
    if r < 1:
        raise TopologyError("need at least one pole")
    if not (1 <= q <= n):
        raise TopologyError("need 1 <= q <= n")
    counts = {c: math.comb(r + c - 1, c) for c in range(q, n + 1)}
    if sum(counts.values()) > enumeration_cap:
        raise TopologyError("arrangement too large to enumerate")
    elements: list[tuple[int, ...]] = []
    for c in range(q, n + 1):
        elements.extend(itertools.combinations_with_replacement(range(1, r + 1), c))
    by_size: dict[int, list[tuple[int, ...]]] = {}
    for e in elements:
        by_size.setdefault(len(e), []).append(e)
    covers = []
    for c in range(q, n):
        smaller = set(by_size.get(c, ()))
        for big in by_size.get(c + 1, ()):
            seen = set()
            for drop in range(len(big)):
                small = big[:drop] + big[drop + 1:]
                if small in smaller and small not in seen:
                    covers.append((small, big))
                    seen.add(small)
    return PolePlacementPoset(
        poles=r,
        ambient_degree=n,
        min_cardinality=q,
        counts=counts,
        elements=tuple(elements),
        cover_edges=tuple(sorted(covers)),
    )


# ---------------------------------------------------------------------------
# Local degree-change strata
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalStratumInfo:
    index: tuple[int, int, int]
    local_degree: int
    ambient_degree: int
    component_count: int
    betti: tuple[int, ...]

    def __str__(self) -> str:
        k, l, m = self.index
        return (
            f"local stratum ({k},{l},{m}) in ambient degree {self.ambient_degree}: "
            f"monic stratum of degree {self.local_degree} with "
            f"{self.component_count} component(s), betti {list(self.betti)}"
        )


def local_stratum_info(theory: StabilityTheory, index, ambient_degree: int) -> LocalStratumInfo:
    """The monic-theory stratum a local degree-change stratum is homeomorphic to.

    The stratum (k, l, m) with k+l+m = r <= n of the degree-filtered
    stratification matches the (k, l, m) stratum of the monic theory on the
    finite plane, in total degree r; its component and Betti data follow
    from the affine topology.
    """
    k, l, m = _index_tuple(index)
    r = k + l + m
    if r > ambient_degree:
        raise TopologyError("index total exceeds the ambient degree")
    affine = theory.affine_topology()
    count = component_count(affine, (k, l, m))
    bettis = tuple(betti(affine, (k, l, m), u) for u in range(r + 1))
    return LocalStratumInfo((k, l, m), r, ambient_degree, count, bettis)
