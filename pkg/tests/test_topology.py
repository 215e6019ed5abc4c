import itertools
import math

import pytest

from dstrata.regions import StratumData, StratumKind, TopologyTriple, builtin_theory
from dstrata.topology import (
    ComponentSpec,
    Factor,
    TopologyError,
    betti,
    component_count,
    enumerate_components,
    fundamental_group,
    group_of_expr,
    homeomorphism_type_circle_boundary,
    homotopy_type,
    local_stratum_info,
    poincare_series_oracle,
    pole_placement_poset,
)

S, SS, UN = StratumKind.STABLE, StratumKind.SEMISTABLE, StratumKind.UNSTABLE


def topo(s, ss, un):
    return TopologyTriple(StratumData(*s), StratumData(*ss), StratumData(*un))


HURWITZ_TOPO = builtin_theory("hurwitz").stratum_topology
SCHUR_TOPO = builtin_theory("schur").stratum_topology


def composition_count(total, parts):
    """Independent oracle: enumerate weak compositions."""
    if parts == 0:
        return 1 if total == 0 else 0
    return sum(
        1
        for c in itertools.product(range(total + 1), repeat=parts)
        if sum(c) == total
    )


class TestComponentCount:
    def test_hurwitz_single_components(self):
        assert component_count(HURWITZ_TOPO, (3, 1, 2)) == 1

    def test_two_pole_components(self):
        poles = builtin_theory("poles", (1 + 0j, -1 + 0j))
        assert component_count(poles.stratum_topology, (2, 0, 0)) == 3

    def test_fenichel(self):
        fen = builtin_theory("fenichel")
        # Index (2,0,1) is impossible: the unstable stratum is empty.
        with pytest.raises(TopologyError):
            component_count(fen.stratum_topology, (2, 0, 1))
        custom = topo((2, 0), (1, 1), (1, 0))
        assert component_count(custom, (2, 0, 1)) == 3

    def test_matches_composition_enumeration(self):
        for b0 in range(1, 4):
            for count in range(0, 9):
                expected = composition_count(count, b0)
                got = component_count(topo((b0, 0), (1, 0), (1, 0)), (count, 0, 0))
                assert got == expected

    def test_empty_stratum_guard(self):
        bad = topo((0, 0), (1, 0), (1, 0))
        with pytest.raises(TopologyError):
            component_count(bad, (1, 0, 0))
        assert component_count(bad, (0, 1, 1)) == 1


class TestBetti:
    def test_schur_double_semistable(self):
        values = [betti(SCHUR_TOPO, (0, 2, 0), u) for u in (0, 1, 2)]
        assert values == [1, 1, 0]

    def test_point_stratum(self):
        assert betti(SCHUR_TOPO, (0, 0, 0), 0) == 1
        assert betti(SCHUR_TOPO, (0, 0, 0), 3) == 0

    def test_hurwitz_triple_semistable(self):
        assert betti(HURWITZ_TOPO, (0, 3, 0), 1) == 1

    def test_vanishing_above_total_degree(self):
        t = topo((2, 1), (1, 1), (3, 2))
        for index in ((1, 1, 1), (2, 0, 3)):
            total = sum(index)
            for u in range(total + 1, total + 4):
                assert betti(t, index, u) == 0

    def test_betti_zero_is_component_count(self):
        for b0s in (1, 2):
            for b1s in (0, 1, 2):
                t = topo((b0s, b1s), (1, 1), (2, 0))
                for index in ((2, 1, 0), (0, 3, 2), (4, 0, 1)):
                    assert betti(t, index, 0) == component_count(t, index)


class TestSeriesOracle:
    def test_contractible_factors(self):
        series = poincare_series_oracle(1, 0, 3)
        assert series == [[1], [1], [1], [1]]

    def test_circle_square(self):
        series = poincare_series_oracle(1, 1, 2)
        assert series[2] == [1, 1]

    def test_two_components(self):
        series = poincare_series_oracle(2, 0, 2)
        assert series[2] == [3]

    def test_matches_betti_formula(self):
        for b0s, b1s, b0ss, b1ss in ((1, 0, 1, 1), (2, 1, 1, 0), (3, 2, 2, 2)):
            t = topo((b0s, b1s), (b0ss, b1ss), (1, 0))
            for k in range(4):
                for l in range(4):
                    ps = poincare_series_oracle(b0s, b1s, k)[k]
                    pss = poincare_series_oracle(b0ss, b1ss, l)[l]
                    # Convolve the two truncated Poincare polynomials.
                    for u in range(k + l + 1):
                        expected = sum(
                            (ps[r] if r < len(ps) else 0)
                            * (pss[u - r] if 0 <= u - r < len(pss) else 0)
                            for r in range(u + 1)
                        )
                        assert betti(t, (k, l, 0), u) == expected

    def test_truncation_cap(self):
        with pytest.raises(TopologyError):
            poincare_series_oracle(1, 1, 100)


class TestEnumerateComponents:
    def test_single_components(self):
        specs = enumerate_components(HURWITZ_TOPO, (1, 1, 1))
        assert len(specs) == 1

    def test_two_poles(self):
        poles = builtin_theory("poles", (1 + 0j, -1 + 0j))
        specs = enumerate_components(poles.stratum_topology, (2, 0, 0))
        assert len(specs) == 3
        patterns = sorted(
            tuple(sorted((f.component, f.multiplicity) for f in s.factors)) for s in specs
        )
        assert patterns == [((0, 1), (1, 1)), ((0, 2),), ((1, 2),)]

    def test_length_equals_component_count(self):
        cases = [
            (topo((2, 0), (1, 1), (1, 0)), (2, 1, 1)),
            (topo((3, 0), (2, 0), (1, 0)), (2, 2, 0)),
            (topo((1, 1), (1, 0), (2, 0)), (4, 0, 3)),
        ]
        for t, index in cases:
            t = TopologyTriple(
                StratumData(t.stable.b0, t.stable.b1, tuple([t.stable.b1] + [0] * (t.stable.b0 - 1)) if t.stable.b0 > 1 else None),
                StratumData(t.semistable.b0, t.semistable.b1, tuple([t.semistable.b1] + [0] * (t.semistable.b0 - 1)) if t.semistable.b0 > 1 else None),
                StratumData(t.unstable.b0, t.unstable.b1, tuple([t.unstable.b1] + [0] * (t.unstable.b0 - 1)) if t.unstable.b0 > 1 else None),
            )
            assert len(enumerate_components(t, index)) == component_count(t, index)

    def test_missing_component_data(self):
        t = topo((2, 1), (1, 0), (1, 0))  # two components, no per-component b1
        with pytest.raises(TopologyError):
            enumerate_components(t, (1, 0, 0))


def factor(b1, mult, stratum=S, component=0):
    return Factor(stratum, component, b1, mult)


class TestHomotopyType:
    def test_full_torus_case(self):
        expr = homotopy_type(ComponentSpec((factor(1, 3),)))
        assert expr.torus_dim == 1 and not expr.skeletons and not expr.bouquets
        assert str(expr) == "S^1"

    def test_skeleton_case(self):
        expr = homotopy_type(ComponentSpec((factor(3, 2),)))
        assert expr.skeletons == ((2, 3),)
        assert str(expr) == "T^3_2"

    def test_contractible(self):
        expr = homotopy_type(ComponentSpec((factor(0, 5),)))
        assert expr.is_point()
        assert str(expr) == "point"

    def test_bouquet(self):
        expr = homotopy_type(ComponentSpec((factor(3, 1),)))
        assert expr.bouquets == (3,)

    def test_torus_merging(self):
        expr = homotopy_type(
            ComponentSpec((factor(1, 2), factor(2, 3, SS, 1), factor(0, 4, UN, 2)))
        )
        assert expr.torus_dim == 3
        assert str(expr) == "T^3"

    def test_boundary_case_b1_equals_lambda(self):
        # b1 = lambda > 1 lands in the full-torus case (non-strict inequality).
        expr = homotopy_type(ComponentSpec((factor(2, 2),)))
        assert expr.torus_dim == 2 and not expr.skeletons


class TestFundamentalGroup:
    def test_circle(self):
        g = fundamental_group(ComponentSpec((factor(1, 3),)))
        assert (g.free_abelian_rank, g.free_factors) == (1, ())

    def test_free_group(self):
        g = fundamental_group(ComponentSpec((factor(3, 1),)))
        assert g.free_factors == (3,)

    def test_abelianized_square(self):
        g = fundamental_group(ComponentSpec((factor(2, 2),)))
        assert g.free_abelian_rank == 2

    def test_f1_is_z(self):
        g = fundamental_group(ComponentSpec((factor(1, 1),)))
        assert (g.free_abelian_rank, g.free_factors) == (1, ())

    def test_matches_expression_groups(self):
        specs = [
            ComponentSpec((factor(1, 3), factor(2, 1, SS, 1))),
            ComponentSpec((factor(3, 2), factor(1, 1, UN, 2))),
            ComponentSpec((factor(0, 2), factor(4, 1, SS, 3))),
        ]
        for spec in specs:
            a = fundamental_group(spec)
            b = group_of_expr(homotopy_type(spec))
            assert (a.free_abelian_rank, a.free_factors) == (b.free_abelian_rank, b.free_factors)


class TestCircleBoundary:
    def test_cell(self):
        t = homeomorphism_type_circle_boundary((2, 0, 1))
        assert str(t) == "R^6"

    def test_odd_orientable(self):
        t = homeomorphism_type_circle_boundary((0, 3, 0))
        assert t.kind == "orientable"
        assert str(t) == "S^1 x D^2 x R^0"

    def test_even_nonorientable(self):
        t = homeomorphism_type_circle_boundary((0, 2, 0))
        assert t.kind == "nonorientable"
        assert str(t) == "S^1 x~ D^1 x R^0"

    def test_betti_consistency_with_disc_bundles(self):
        # Disc bundles over a circle are homotopy circles: Betti (1, 1, 0, ...).
        for l in range(1, 7):
            values = [betti(SCHUR_TOPO, (0, l, 0), u) for u in range(l + 1)]
            assert values[0] == 1 and values[1] == 1
            assert all(v == 0 for v in values[2:])


class TestPolePlacementPoset:
    def test_single_pole_chain(self):
        poset = pole_placement_poset(1, 3, 1)
        assert poset.counts == {1: 1, 2: 1, 3: 1}
        assert len(poset.cover_edges) == 2

    def test_two_poles(self):
        poset = pole_placement_poset(2, 2, 1)
        assert poset.counts == {1: 2, 2: 3}

    def test_hyperplane_antichain(self):
        poset = pole_placement_poset(3, 1, 1)
        assert poset.counts == {1: 3}
        assert poset.cover_edges == ()

    def test_pascal_recurrence(self):
        for r in range(1, 5):
            poset = pole_placement_poset(r, 6, 1)
            for c in range(2, 7):
                expected = math.comb(r + c - 2, c - 1) + math.comb(r + c - 2, c - 2)
                # C(r+c-1, c) = C(r+c-2, c-1) + C(r+c-2, c): with the second
                # term's identity C(r+c-2, c) of one fewer pole.
                assert poset.counts[c] == math.comb(r + c - 1, c)
                if r > 1:
                    smaller = pole_placement_poset(r - 1, 6, 1)
                    assert poset.counts[c] == poset.counts[c - 1] + smaller.counts[c]

    def test_cover_edges_are_inclusions(self):
        poset = pole_placement_poset(2, 3, 1)
        for small, big in poset.cover_edges:
            assert len(big) == len(small) + 1
            rest = list(big)
            for v in small:
                rest.remove(v)
            assert len(rest) == 1

    def test_argument_validation(self):
        with pytest.raises(TopologyError):
            pole_placement_poset(0, 3, 1)
        with pytest.raises(TopologyError):
            pole_placement_poset(2, 3, 5)


class TestLocalStratumInfo:
    def test_hurwitz_contractible(self):
        info = local_stratum_info(builtin_theory("hurwitz"), (1, 0, 0), 3)
        assert info.component_count == 1
        assert info.betti == (1, 0)

    def test_point_stratum(self):
        info = local_stratum_info(builtin_theory("schur"), (0, 0, 0), 2)
        assert info.component_count == 1
        assert info.betti == (1,)

    def test_hyperbolicity_real_line(self):
        info = local_stratum_info(builtin_theory("hyperbolicity"), (0, 2, 0), 2)
        assert info.component_count == 1
        assert info.betti[1] == 0

    def test_exceeding_ambient_rejected(self):
        with pytest.raises(TopologyError):
            local_stratum_info(builtin_theory("hurwitz"), (2, 2, 0), 3)
