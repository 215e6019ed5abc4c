import cmath
import math
import random

import numpy as np
import pytest

from dstrata.polys import (
    ComplexPoly,
    PolynomialError,
    RootMultiset,
    StabilityIndex,
    char_poly,
    companion_matrix,
    duality_check,
    find_roots,
    format_complex,
    parse_complex,
    parse_poly,
    perturb_monic,
    perturb_nonmonic,
    roots_to_coeffs,
    stability_index,
)
from dstrata.regions import StratumKind, builtin_theory, classify_point, dualize

HURWITZ = builtin_theory("hurwitz")
SCHUR = builtin_theory("schur")


def P(*coeffs):
    return ComplexPoly(tuple(coeffs))


class TestComplexPoly:
    def test_zero_rejected(self):
        with pytest.raises(PolynomialError):
            ComplexPoly((0,))
        with pytest.raises(PolynomialError):
            ComplexPoly(())

    def test_trailing_zeros_trimmed(self):
        assert P(1, 2, 0, 0).degree == 1

    def test_eval_horner(self):
        p = P(1, 2, 3)
        assert p(2) == 1 + 4 + 12

    def test_parse(self):
        p = parse_poly("1,0,1")
        assert p.coefficients == (1 + 0j, 0j, 1 + 0j)
        q = parse_poly("1+2i,-i,3")
        assert q.coefficients == (1 + 2j, -1j, 3 + 0j)

    def test_parse_complex_forms(self):
        assert parse_complex("i") == 1j
        assert parse_complex("-i") == -1j
        assert parse_complex("2.5") == 2.5
        assert parse_complex("-1e-6-3i") == complex(-1e-6, -3)

    def test_format_roundtrip(self):
        for z in (1 + 2j, -1j, 3 + 0j, -0.5 - 0.25j):
            assert parse_complex(format_complex(z)) == z


class TestFindRoots:
    def test_quadratic_imaginary(self):
        roots = find_roots(P(1, 0, 1))
        assert roots.matches(RootMultiset.of([1j, -1j]))

    def test_double_root(self):
        roots = find_roots(P(1, 2, 1))
        assert len(roots.finite) == 1
        center, mult = roots.finite[0]
        assert mult == 2
        assert abs(center - (-1)) < 1e-6

    def test_plant_and_recover_degree_eight(self):
        rng = random.Random(42)
        planted = []
        while len(planted) < 8:
            z = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
            if all(abs(z - w) > 0.1 for w in planted):
                planted.append(z)
        p = roots_to_coeffs(planted, 1.0)
        recovered = find_roots(p)
        assert recovered.matches(RootMultiset.of(planted), tol=1e-6)

    def test_residual_contract(self):
        rng = random.Random(1)
        for _ in range(20):
            coeffs = [complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(7)]
            coeffs[-1] += 2.0  # keep the leading coefficient honest
            p = ComplexPoly(tuple(coeffs))
            cap = 1e-8 * (1 + p.norm_inf())
            for r, _ in find_roots(p).finite:
                assert abs(p(r)) <= cap * max(1.0, abs(r)) ** p.degree

    def test_constant_rejected(self):
        with pytest.raises(PolynomialError):
            find_roots(P(5))


class TestRootsToCoeffs:
    def test_double_root(self):
        assert roots_to_coeffs([-1, -1], 1).coefficients == (1 + 0j, 2 + 0j, 1 + 0j)

    def test_conjugate_pair(self):
        assert roots_to_coeffs([1j, -1j], 1).coefficients == (1 + 0j, 0j, 1 + 0j)

    def test_empty_product(self):
        assert roots_to_coeffs([], 5).coefficients == (5 + 0j,)

    def test_order_independence(self):
        roots = [1 + 1j, -2 + 0j, 0.5 - 0.5j]
        a = roots_to_coeffs(roots, 2.0)
        b = roots_to_coeffs(list(reversed(roots)), 2.0)
        assert a.coefficients == b.coefficients

    def test_roundtrip_random_multisets(self):
        rng = random.Random(7)
        for _ in range(25):
            size = rng.randint(1, 12)
            roots = []
            while len(roots) < size:
                z = complex(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5))
                if all(abs(z - w) > 1e-3 * 30 for w in roots):
                    roots.append(z)
            p = roots_to_coeffs(roots, 1.0)
            assert find_roots(p).matches(RootMultiset.of(roots), tol=1e-6)


class TestStabilityIndex:
    def test_hurwitz_axis_pair(self):
        assert stability_index(HURWITZ, P(1, 0, 1), 2).as_tuple() == (0, 2, 0)

    def test_schur_circle_pair(self):
        assert stability_index(SCHUR, P(-1, 0, 1), 2).as_tuple() == (0, 2, 0)

    def test_degree_deficit_goes_to_infinity(self):
        index = stability_index(HURWITZ, P(1, 1), 3)
        # Root -1 is stable; two deficit roots take the declared infinity stratum.
        assert classify_point(HURWITZ, -1) is StratumKind.STABLE
        assert index.as_tuple() == (1, 2, 0)

    def test_ambient_below_degree_rejected(self):
        with pytest.raises(PolynomialError):
            stability_index(HURWITZ, P(1, 0, 1), 1)

    def test_monic_mode_requires_full_degree(self):
        monic = builtin_theory("hurwitz", mode="monic")
        with pytest.raises(PolynomialError):
            stability_index(monic, P(1, 1), 2)

    def test_index_additivity_over_products(self):
        rng = random.Random(3)
        for _ in range(15):
            a = roots_to_coeffs(
                [complex(rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(3)], 1
            )
            b = roots_to_coeffs(
                [complex(rng.uniform(-2, 2), rng.uniform(-2, 2)) for _ in range(2)], 1
            )
            total = stability_index(HURWITZ, a * b, 5)
            parts = stability_index(HURWITZ, a, 3) + stability_index(HURWITZ, b, 2)
            assert total == parts


class TestPerturbations:
    def test_nonmonic_shape(self):
        assert perturb_nonmonic(P(1), 1).coefficients == (1 + 0j, 1 + 0j)
        assert perturb_nonmonic(P(1, 0, 1), 1j).coefficients == (1 + 0j, 0j, 1 + 0j, 1j)

    def test_nonmonic_escaping_root(self):
        p = perturb_nonmonic(P(1, 1), 1e-6)
        roots = sorted(find_roots(p).points(), key=abs)
        # Quadratic formula oracle for 1e-6 z^2 + z + 1.
        disc = cmath.sqrt(1 - 4e-6)
        expected = sorted([(-1 + disc) / 2e-6, (-1 - disc) / 2e-6], key=abs)
        assert abs(roots[0] - expected[0]) < 1e-6
        assert abs(roots[1] - expected[1]) / abs(expected[1]) < 1e-9
        assert abs(roots[1]) > 1e5

    def test_nonmonic_zero_epsilon_rejected(self):
        with pytest.raises(PolynomialError):
            perturb_nonmonic(P(1, 1), 0)

    def test_monic_shape(self):
        assert perturb_monic(P(1), 1).coefficients == (1 + 0j, 1 + 0j)
        assert perturb_monic(P(-1, 1), 0).coefficients == (0j, -1 + 0j, 1 + 0j)

    def test_monic_small_root(self):
        p = perturb_monic(P(2, 1), 1e-6)
        roots = sorted(find_roots(p).points(), key=abs)
        # Quadratic formula oracle for z^2 + 2z + 1e-6.
        disc = cmath.sqrt(4 - 4e-6)
        expected = sorted([(-2 + disc) / 2, (-2 - disc) / 2], key=abs)
        assert abs(roots[0] - expected[0]) < 1e-12
        assert abs(roots[1] - expected[1]) < 1e-9

    def test_perturbation_index_consistency(self):
        rng = random.Random(5)
        for _ in range(10):
            roots = []
            while len(roots) < 4:
                z = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
                if abs(z.real) > 1e-2 and all(abs(z - w) > 0.05 for w in roots):
                    roots.append(z)
            p = roots_to_coeffs(roots, 1.0)
            base = stability_index(HURWITZ, p, 4)
            eps = 1e-8 * p.norm_inf()
            # The monic perturbation adds one root near the origin.
            grown = stability_index(HURWITZ, perturb_monic(p, eps), 5)
            new_root_stratum = classify_point(HURWITZ, -eps / p(0) * 1.0)
            expected = {
                StratumKind.STABLE: (base.stable + 1, base.semistable, base.unstable),
                StratumKind.SEMISTABLE: (base.stable, base.semistable + 1, base.unstable),
                StratumKind.UNSTABLE: (base.stable, base.semistable, base.unstable + 1),
            }[new_root_stratum]
            assert grown.as_tuple() == expected
            # The nonmonic perturbation adds one root escaping to infinity,
            # landing next to the declared infinity stratum's neighborhood.
            raised = stability_index(HURWITZ, perturb_nonmonic(p, eps), 5)
            large_root = max(find_roots(perturb_nonmonic(p, eps)).points(), key=abs)
            stratum = classify_point(HURWITZ, large_root)
            expected = {
                StratumKind.STABLE: (base.stable + 1, base.semistable, base.unstable),
                StratumKind.SEMISTABLE: (base.stable, base.semistable + 1, base.unstable),
                StratumKind.UNSTABLE: (base.stable, base.semistable, base.unstable + 1),
            }[stratum]
            assert raised.as_tuple() == expected


class TestCharPoly:
    def test_diagonal(self):
        p = char_poly(np.diag([1.0, 2.0]))
        assert np.allclose(p.coefficients, (2, -3, 1))

    def test_zero_matrix(self):
        p = char_poly(np.zeros((2, 2)))
        assert p.coefficients == (0j, 0j, 1 + 0j)

    def test_against_eigenvalue_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            a = rng.uniform(-1, 1, (4, 4)) + 1j * rng.uniform(-1, 1, (4, 4))
            p = char_poly(a)
            expected = roots_to_coeffs(list(np.linalg.eigvals(a)), 1.0)
            scale = max(abs(c) for c in expected.coefficients)
            assert all(
                abs(x - y) <= 1e-7 * scale
                for x, y in zip(p.coefficients, expected.coefficients)
            )

    def test_companion_roundtrip(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            coeffs = rng.uniform(-2, 2, 6) + 1j * rng.uniform(-2, 2, 6)
            p = ComplexPoly(tuple(coeffs) + (1 + 0j,))
            back = char_poly(companion_matrix(p))
            assert all(
                abs(x - y) <= 1e-9 * max(1, abs(y))
                for x, y in zip(back.coefficients, p.coefficients)
            )

    def test_empty_rejected(self):
        with pytest.raises(PolynomialError):
            char_poly(np.zeros((0, 0)))


class TestDuality:
    def test_single_point(self):
        report = duality_check([2 + 0j], HURWITZ)
        assert report.proportional
        assert report.index_primal.as_tuple() == (0, 0, 1)
        assert report.indices_match

    def test_unit_circle_fixed(self):
        report = duality_check([1 + 0j, -1 + 0j], SCHUR)
        assert report.index_primal.as_tuple() == (0, 2, 0)
        assert report.index_dual.as_tuple() == (0, 2, 0)
        assert report.ok

    def test_random_points_residual(self):
        rng = random.Random(13)
        for _ in range(5):
            pts = [
                complex(rng.uniform(-2, 2), rng.uniform(-2, 2)) + 0.2 for _ in range(5)
            ]
            report = duality_check(pts, HURWITZ)
            assert report.residual < 1e-9

    def test_zero_point_rejected(self):
        with pytest.raises(PolynomialError):
            duality_check([0j, 1 + 0j], HURWITZ)
