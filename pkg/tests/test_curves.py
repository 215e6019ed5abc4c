import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dstrata.curves import (
    BivarPoly,
    classify_standard,
    conj_transform,
    inv_transform,
    invconj_transform,
    is_invariant,
    orbit_polynomial,
    palindrome_test,
    palindromic_family,
    radial_coefficients,
)

CIRCLE = BivarPoly.parse("x^2+y^2-1")
X = BivarPoly.x()
Y = BivarPoly.y()


def poly(text):
    return BivarPoly.parse(text)


class TestBivarPoly:
    def test_parse_format_roundtrip(self):
        for text in ("x^2+y^2-1", "3/4*x*y^2-2", "x-1", "-y", "2*x^3*y"):
            f = poly(text)
            assert BivarPoly.parse(str(f)) == f

    def test_map_roundtrip(self):
        f = poly("x^2+y^2-1/3")
        assert BivarPoly.from_map(f.to_map()) == f

    def test_arithmetic_exact(self):
        f = poly("x+y")
        g = poly("x-y")
        assert f * g == poly("x^2-y^2")
        assert f + g == poly("2*x")
        assert f.pow(2) == poly("x^2+2*x*y+y^2")

    def test_zero_coefficients_dropped(self):
        f = poly("x") - poly("x")
        assert f.is_zero()

    def test_evaluate(self):
        assert poly("x^2+y^2-1").evaluate(0.6, 0.8) == pytest.approx(0.0)


class TestConjTransform:
    def test_circle_fixed(self):
        assert conj_transform(CIRCLE) == CIRCLE

    def test_y_negated(self):
        assert conj_transform(Y) == -Y

    def test_line(self):
        assert conj_transform(poly("x+y-1")) == poly("x-y-1")


class TestInvTransform:
    def test_circle(self):
        g, tau = inv_transform(CIRCLE)
        assert tau == 1
        assert g == -CIRCLE

    def test_x(self):
        g, tau = inv_transform(X)
        assert (g, tau) == (X, 1)

    def test_shifted_line(self):
        g, tau = inv_transform(poly("x-1"))
        assert tau == 1
        assert g == poly("x-x^2-y^2")

    def test_twice_proportional_to_r2_power(self):
        rng = random.Random(3)
        r2 = BivarPoly.r_squared()
        for _ in range(30):
            f = _random_poly(rng, max_degree=3)
            if f.is_zero():
                continue
            g, _ = inv_transform(f)
            h, _ = inv_transform(g)
            # h should equal c * (x^2+y^2)^d * f for some d >= 0.
            for d in range(0, 4):
                candidate = r2.pow(d) * f
                key, lead = candidate.leading_term()
                c = h.coefficient(*key) / lead
                if c != 0 and h == candidate.scale(c):
                    break
            else:
                pytest.fail(f"inv o inv not proportional to r^2d * f for {f}")

    def test_zero_sets_agree_off_origin(self):
        # Zero sets of f and inv(inv(f)) agree away from x^2+y^2 = 0.
        f = poly("x^2+2*y^2-1")
        g, _ = inv_transform(f)
        h, _ = inv_transform(g)
        for phi in (0.3, 1.1, 2.0, 4.4):
            # Walk the ellipse: x = cos(phi), y = sin(phi)/sqrt(2).
            x, y = math.cos(phi), math.sin(phi) / math.sqrt(2)
            assert abs(f.evaluate(x, y)) < 1e-12
            assert abs(h.evaluate(x, y)) < 1e-9


class TestIsInvariant:
    def test_circle_inversion(self):
        assert is_invariant(CIRCLE, "inv") == (True, Fraction(-1))

    def test_shifted_line_not_inversion_invariant(self):
        ok, _ = is_invariant(poly("x-1"), "inv")
        assert not ok

    def test_y_conjugation(self):
        assert is_invariant(Y, "conj") == (True, Fraction(-1))

    def test_unknown_transform(self):
        with pytest.raises(ValueError):
            is_invariant(X, "rotate")


def _random_poly(rng, max_degree=2, scale=4):
    terms = {}
    for i in range(max_degree + 1):
        for j in range(max_degree + 1 - i):
            if rng.random() < 0.5:
                c = rng.randint(-scale, scale)
                if c:
                    terms[(i, j)] = Fraction(c)
    return BivarPoly(terms)


class TestOrbitPolynomial:
    def test_circle_power(self):
        F = orbit_polynomial(CIRCLE)
        assert F.normalized() == (CIRCLE * CIRCLE * CIRCLE * CIRCLE).normalized()

    def test_axis_power(self):
        assert orbit_polynomial(X).normalized() == BivarPoly.monomial(4, 0).normalized()

    def test_shifted_line_zero_set_is_orbit_union(self):
        f = poly("x-1")
        F = orbit_polynomial(f)
        # Points on the line x = 1 and on its inversion image, the circle
        # |z - 1/2| = 1/2, must lie in the zero set of F.
        for y in (-2.0, -0.3, 0.0, 1.7):
            assert abs(F.evaluate(1.0, y)) < 1e-9
        for phi in (0.2, 1.0, 2.8):
            x = 0.5 + 0.5 * math.cos(phi)
            y = 0.5 * math.sin(phi)
            assert abs(F.evaluate(x, y)) < 1e-9
        # A point on neither curve stays off the zero set.
        assert abs(F.evaluate(-1.0, 1.0)) > 1e-6

    def test_orbit_output_invariant(self):
        rng = random.Random(11)
        checked = 0
        while checked < 25:
            f = _random_poly(rng)
            if f.is_zero():
                continue
            F = orbit_polynomial(f)
            assert is_invariant(F, "conj")[0]
            assert is_invariant(F, "inv")[0]
            checked += 1


class TestClassifyStandard:
    def test_targets(self):
        assert classify_standard(CIRCLE)["kind"] == "unit-circle"
        assert classify_standard(CIRCLE)["theory"] == "schur"
        assert classify_standard(X)["kind"] == "vertical-axis"
        assert classify_standard(X)["theory"] == "hurwitz"
        assert classify_standard(Y)["kind"] == "real-axis"
        assert classify_standard(Y)["theory"] == "hyperbolicity"

    def test_scaled_targets_recognized(self):
        assert classify_standard(CIRCLE.scale(Fraction(-3, 7)))["kind"] == "unit-circle"

    def test_non_standard_flags(self):
        report = classify_standard(poly("x^2+y^2-2"))
        assert report["kind"] == "non-standard"
        assert report["conj_invariant"] is True
        assert report["inv_invariant"] is False

    def test_standard_label_requires_both_invariances(self):
        rng = random.Random(5)
        for _ in range(50):
            f = _random_poly(rng)
            if f.is_zero():
                continue
            report = classify_standard(f)
            if report["kind"] != "non-standard":
                assert report["conj_invariant"] and report["inv_invariant"]

    def test_sign_report(self):
        report = classify_standard(CIRCLE)["signs"]
        assert report["sign_at_zero"] == -1
        assert report["sign_at_infinity"] == 1
        assert report["verdict"] == "different-strata"


class TestRadialCoefficients:
    def test_circle_rotation_invariant(self):
        for phi in (0.0, 0.4, 2.2, 5.1):
            assert radial_coefficients(CIRCLE, phi) == pytest.approx([-1.0, 0.0, 1.0])

    def test_x_axis_direction(self):
        assert radial_coefficients(X, 0.0) == pytest.approx([0.0, 1.0])

    def test_direction_inside_zero_set(self):
        values = radial_coefficients(poly("x^2-y^2"), math.pi / 4)
        assert max(abs(v) for v in values) < 1e-12


class TestPalindromeTest:
    def test_examples(self):
        assert palindrome_test([-1.0, 0.0, 1.0]) == "antipalindromic"
        assert palindrome_test([1.0, 2.0, 1.0]) == "palindromic"
        assert palindrome_test([1.0, 2.0, 3.0]) == "neither"

    def test_trimming(self):
        assert palindrome_test([0.0, 1.0, 2.0, 1.0, 0.0, 0.0]) == "palindromic"

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            palindrome_test([0.0, 0.0])

    @given(st.lists(st.integers(min_value=-50, max_value=50), min_size=1, max_size=9))
    def test_reversal_symmetry(self, values):
        coeffs = [float(v) for v in values]
        if max(abs(v) for v in coeffs) == 0:
            return
        assert palindrome_test(coeffs) == palindrome_test(coeffs[::-1])


class TestPalindromicFamily:
    def test_degree_two_fig_family(self):
        assert palindromic_family({(0, 0): 1}, 2) == poly("x^2+y^2+1")
        assert palindromic_family({(0, 0): 1, (1, 0): -3}, 2) == poly("x^2+y^2-3*x+1")

    def test_index_range_enforced(self):
        with pytest.raises(ValueError):
            palindromic_family({(2, 0): 1}, 2)
        with pytest.raises(ValueError):
            palindromic_family({(0, 0): 1}, 3)

    def test_outputs_invariant(self):
        rng = random.Random(23)
        for _ in range(20):
            n = rng.choice([2, 4, 6])
            coeffs = {}
            for i in range(n // 2 + 1):
                for j in range(i // 2 + 1):
                    if rng.random() < 0.6:
                        coeffs[(i, j)] = rng.randint(-3, 3)
            if not any(coeffs.values()):
                coeffs[(0, 0)] = 1
            f = palindromic_family(coeffs, n)
            assert is_invariant(f, "conj")[0]
            assert is_invariant(f, "inv")[0]

    def test_radial_sections_palindromic(self):
        f = palindromic_family({(0, 0): 2, (1, 0): -1, (2, 1): 3}, 4)
        for k in range(16):
            phi = 2 * math.pi * k / 16 + 0.05
            assert palindrome_test(radial_coefficients(f, phi)) == "palindromic"

    def test_circle_sections_antipalindromic(self):
        for k in range(16):
            phi = 2 * math.pi * k / 16 + 0.03
            assert palindrome_test(radial_coefficients(CIRCLE, phi)) == "antipalindromic"
