"""Exact bivariate polynomial algebra for boundary curves.

Polynomials live in Q[x, y] with x = Re z and y = Im z.  Everything here is
exact rational arithmetic except :func:`radial_coefficients`, which samples a
polynomial along a floating-point direction.
"""
from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Mapping

Coeff = Fraction
Term = tuple[int, int]

_RAT = r"-?\d+(?:/\d+|\.\d+)?"


def _frac(value) -> Fraction:
    """Coerce ints, strings and floats to an exact Fraction.

    Floats go through their repr so that 0.6 becomes 3/5, not the binary
    expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


class BivarPoly:
    """Sparse bivariate polynomial over Q, keyed by exponent pairs (i, j)."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Term, object] | Iterable[tuple[Term, object]] = ()):
        data = dict(terms.items()) if isinstance(terms, Mapping) else dict(terms)
        self._terms: dict[Term, Fraction] = {}
        for (i, j), c in data.items():
            c = _frac(c)
            if c != 0:
                if i < 0 or j < 0:
                    raise ValueError("exponents must be nonnegative")
                self._terms[(int(i), int(j))] = c

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls) -> "BivarPoly":
        return cls()

    @classmethod
    def constant(cls, c) -> "BivarPoly":
        return cls({(0, 0): c})

    @classmethod
    def monomial(cls, i: int, j: int, c=1) -> "BivarPoly":
        return cls({(i, j): c})

    @classmethod
    def x(cls) -> "BivarPoly":
        return cls({(1, 0): 1})

    @classmethod
    def y(cls) -> "BivarPoly":
        return cls({(0, 1): 1})

    @classmethod
    def r_squared(cls) -> "BivarPoly":
        """x^2 + y^2, the squared distance to the origin."""
        return cls({(2, 0): 1, (0, 2): 1})

    # -- basic structure ----------------------------------------------

    @property
    def terms(self) -> dict[Term, Fraction]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def total_degree(self) -> int:
        if not self._terms:
            return -1
        return max(i + j for i, j in self._terms)

    def coefficient(self, i: int, j: int) -> Fraction:
        return self._terms.get((i, j), Fraction(0))

    def leading_term(self) -> tuple[Term, Fraction]:
        """Canonical leading term: max by (total degree, i, j)."""
        if not self._terms:
            raise ValueError("zero polynomial has no leading term")
        key = max(self._terms, key=lambda t: (t[0] + t[1], t[0], t[1]))
        return key, self._terms[key]

    def __eq__(self, other) -> bool:
        if not isinstance(other, BivarPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __bool__(self) -> bool:
        return bool(self._terms)

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other: "BivarPoly") -> "BivarPoly":
        out = dict(self._terms)
        for t, c in other._terms.items():
            s = out.get(t, Fraction(0)) + c
            if s == 0:
                out.pop(t, None)
            else:
                out[t] = s
        return BivarPoly(out)

    def __neg__(self) -> "BivarPoly":
        return BivarPoly({t: -c for t, c in self._terms.items()})

    def __sub__(self, other: "BivarPoly") -> "BivarPoly":
        return self + (-other)

    def __mul__(self, other: "BivarPoly") -> "BivarPoly":
        out: dict[Term, Fraction] = {}
        for (i1, j1), c1 in self._terms.items():
            for (i2, j2), c2 in other._terms.items():
                t = (i1 + i2, j1 + j2)
                s = out.get(t, Fraction(0)) + c1 * c2
                if s == 0:
                    out.pop(t, None)
                else:
                    out[t] = s
        return BivarPoly(out)

    def scale(self, c) -> "BivarPoly":
        c = _frac(c)
        if c == 0:
            return BivarPoly()
        return BivarPoly({t: cc * c for t, cc in self._terms.items()})

    def pow(self, n: int) -> "BivarPoly":
        if n < 0:
            raise ValueError("negative power")
        result = BivarPoly.constant(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- evaluation ----------------------------------------------------

    def evaluate(self, x, y):
        """Evaluate at numeric (possibly numpy array) arguments."""
        total = 0.0 * x * y if hasattr(x, "shape") or hasattr(y, "shape") else 0.0
        for (i, j), c in self._terms.items():
            total = total + float(c) * x**i * y**j
        return total

    def gradient(self) -> tuple["BivarPoly", "BivarPoly"]:
        fx: dict[Term, Fraction] = {}
        fy: dict[Term, Fraction] = {}
        for (i, j), c in self._terms.items():
            if i:
                fx[(i - 1, j)] = fx.get((i - 1, j), Fraction(0)) + c * i
            if j:
                fy[(i, j - 1)] = fy.get((i, j - 1), Fraction(0)) + c * j
        return BivarPoly(fx), BivarPoly(fy)

    def homogeneous_part(self, degree: int) -> "BivarPoly":
        return BivarPoly({t: c for t, c in self._terms.items() if t[0] + t[1] == degree})

    # -- canonical form -------------------------------------------------

    def normalized(self) -> "BivarPoly":
        """Divide by the canonical leading coefficient (monic-like form)."""
        if not self._terms:
            return self
        _, lead = self.leading_term()
        return self.scale(Fraction(1) / lead)

    def sorted_terms(self) -> list[tuple[Term, Fraction]]:
        return sorted(
            self._terms.items(),
            key=lambda kv: (-(kv[0][0] + kv[0][1]), -kv[0][0], -kv[0][1]),
        )

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for (i, j), c in self.sorted_terms():
            mono = "*".join(
                p
                for p in (
                    f"x^{i}" if i > 1 else ("x" if i == 1 else ""),
                    f"y^{j}" if j > 1 else ("y" if j == 1 else ""),
                )
                if p
            )
            if mono:
                if c == 1:
                    piece = mono
                elif c == -1:
                    piece = f"-{mono}"
                else:
                    piece = f"{c}*{mono}"
            else:
                piece = str(c)
            parts.append(piece)
        out = parts[0]
        for piece in parts[1:]:
            out += f" - {piece[1:]}" if piece.startswith("-") else f" + {piece}"
        return out

    def __repr__(self) -> str:
        return f"BivarPoly({self})"

    # -- serialization --------------------------------------------------

    def to_map(self) -> dict[str, str]:
        """Sparse map form used in theory config files: "i,j" -> rational."""
        return {f"{i},{j}": str(c) for (i, j), c in sorted(self._terms.items())}

    @classmethod
    def from_map(cls, mapping: Mapping[str, object]) -> "BivarPoly":
        terms = {}
        for key, val in mapping.items():
            i_s, j_s = key.split(",")
            terms[(int(i_s), int(j_s))] = Fraction(str(val))
        return cls(terms)

    @classmethod
    def parse(cls, text: str) -> "BivarPoly":
        """Parse polynomial text like "x^2+y^2-1" or "3/4*x*y^2 - 2"."""
        s = text.replace(" ", "").replace("**", "^")
        if not s:
            raise ValueError("empty polynomial text")
        # Split into signed terms.
        chunks = re.findall(r"[+-]?[^+-]+", s)
        terms: dict[Term, Fraction] = {}
        term_re = re.compile(
            rf"^([+-]?)({_RAT})?(?:\*?(x)(?:\^(\d+))?)?(?:\*?(y)(?:\^(\d+))?)?$"
        )
        for chunk in chunks:
            m = term_re.match(chunk)
            if not m or (m.group(2) is None and m.group(3) is None and m.group(5) is None):
                raise ValueError(f"cannot parse polynomial term {chunk!r}")
            sign, coeff, xs, xe, ys, ye = m.groups()
            c = _frac(coeff) if coeff is not None else Fraction(1)
            if sign == "-":
                c = -c
            i = (int(xe) if xe else 1) if xs else 0
            j = (int(ye) if ye else 1) if ys else 0
            terms[(i, j)] = terms.get((i, j), Fraction(0)) + c
        return cls(terms)


R2 = BivarPoly.r_squared()


def divide_by_r2(f: BivarPoly) -> BivarPoly | None:
    """Exact quotient f / (x^2 + y^2), or None if not divisible."""
    quotient: dict[Term, Fraction] = {}
    rem = dict(f.terms)
    # Reduce terms in decreasing x-degree; x^2 of the divisor is eliminated.
    while rem:
        (i, j) = max(rem, key=lambda t: (t[0], t[1]))
        c = rem.pop((i, j))
        if i < 2:
            return None
        t = (i - 2, j)
        quotient[t] = quotient.get(t, Fraction(0)) + c
        lower = (i - 2, j + 2)
        s = rem.get(lower, Fraction(0)) - c
        if s == 0:
            rem.pop(lower, None)
        else:
            rem[lower] = s
    return BivarPoly(quotient)


def _strip_r2(f: BivarPoly) -> tuple[BivarPoly, int]:
    """Remove all factors of x^2+y^2; returns (reduced poly, count removed)."""
    count = 0
    while True:
        q = divide_by_r2(f)
        if q is None:
            return f, count
        f = q
        count += 1


def conj_transform(f: BivarPoly) -> BivarPoly:
    """Pullback under complex conjugation: f(x, y) -> f(x, -y)."""
    return BivarPoly({(i, j): c if j % 2 == 0 else -c for (i, j), c in f.terms.items()})


def inv_transform(f: BivarPoly) -> tuple[BivarPoly, int]:
    """Pullback under x -> x/(x^2+y^2), y -> y/(x^2+y^2), cleared minimally.

    Returns (g, tau) where g = (x^2+y^2)^tau * f(x/(x^2+y^2), y/(x^2+y^2)) is
    a polynomial and tau is the least such exponent.
    """
    if f.is_zero():
        raise ValueError("inversion transform of the zero polynomial")
    d = f.total_degree()
    numerator = BivarPoly()
    for (i, j), c in f.terms.items():
        numerator = numerator + BivarPoly.monomial(i, j, c) * R2.pow(d - i - j)
    reduced, stripped = _strip_r2(numerator)
    return reduced, d - stripped


def invconj_transform(f: BivarPoly) -> tuple[BivarPoly, int]:
    """Pullback under x -> x/(x^2+y^2), y -> -y/(x^2+y^2), cleared minimally."""
    return inv_transform(conj_transform(f))


_TRANSFORMS = ("conj", "inv", "invconj")


def is_invariant(f: BivarPoly, transform: str) -> tuple[bool, Fraction | None]:
    """Whether transform(f) = c * f for a nonzero rational c; returns (flag, c).

    For the inversion transforms the comparison uses the minimally cleared
    polynomial form.
    """
    if transform not in _TRANSFORMS:
        raise ValueError(f"unknown transform {transform!r}")
    if f.is_zero():
        raise ValueError("invariance of the zero polynomial is undefined")
    if transform == "conj":
        g = conj_transform(f)
    elif transform == "inv":
        g, _ = inv_transform(f)
    else:
        g, _ = invconj_transform(f)
    key, lead = f.leading_term()
    c = g.coefficient(*key) / lead
    if c == 0:
        return False, None
    if g == f.scale(c):
        return True, c
    return False, None


def orbit_polynomial(f: BivarPoly) -> BivarPoly:
    """Product of f over the conjugation/inversion orbit, cleared minimally.

    The zero set of the result contains the zero sets of f, its conjugate and
    both inversion images, and is invariant (up to scalar) under conjugation
    and inversion.
    """
    if f.is_zero():
        raise ValueError("orbit of the zero polynomial")
    g1, _ = inv_transform(f)
    g2, _ = invconj_transform(f)
    product = f * conj_transform(f) * g1 * g2
    # The cleared factors may reintroduce common r^2 powers; strip them so
    # the result uses the minimal clearing exponent.
    reduced, _ = _strip_r2(product)
    return reduced


_STANDARD_TARGETS = (
    ("vertical-axis", "hurwitz", BivarPoly.x()),
    ("real-axis", "hyperbolicity", BivarPoly.y()),
    ("unit-circle", "schur", BivarPoly.r_squared() - BivarPoly.constant(1)),
)


def _sign_report(f: BivarPoly, n_dirs: int = 16) -> dict:
    """Signs of f near 0 and near infinity along sampled directions.

    Near zero the lowest-degree form dominates, near infinity the top form.
    """
    import math

    degrees = sorted({i + j for i, j in f.terms})
    low = f.homogeneous_part(degrees[0])
    high = f.homogeneous_part(degrees[-1])

    def form_sign(form: BivarPoly) -> int:
        signs = set()
        for k in range(n_dirs):
            phi = math.pi * (2 * k + 1) / n_dirs
            v = form.evaluate(math.cos(phi), math.sin(phi))
            if abs(v) > 1e-12:
                signs.add(1 if v > 0 else -1)
            else:
                signs.add(0)
        if signs == {1}:
            return 1
        if signs == {-1}:
            return -1
        return 0

    sign_zero = 0 if degrees[0] > 0 else (1 if low.coefficient(0, 0) > 0 else -1)
    sign_inf = form_sign(high)
    if sign_zero == 0 and sign_inf == 0:
        verdict = "both-on-curve"
    elif sign_zero == 0 or sign_inf == 0:
        verdict = "one-on-curve-or-mixed"
    elif sign_zero != sign_inf:
        verdict = "different-strata"
    else:
        verdict = "same-stratum"
    return {"sign_at_zero": sign_zero, "sign_at_infinity": sign_inf, "verdict": verdict}


def classify_standard(f: BivarPoly) -> dict:
    """Recognize the three rigid boundary curves, up to rational scalar.

    Returns a report with the matched kind (vertical-axis, real-axis,
    unit-circle or non-standard), the matching classical theory name, the
    conjugation/inversion invariance flags and a sign report at 0 and
    infinity.  Irreducibility of f is assumed, not checked.
    """
    if f.is_zero():
        raise ValueError("cannot classify the zero polynomial")
    conj_flag, conj_scale = is_invariant(f, "conj")
    inv_flag, inv_scale = is_invariant(f, "inv")
    kind = "non-standard"
    theory = None
    norm = f.normalized()
    for label, theory_name, target in _STANDARD_TARGETS:
        if norm == target.normalized():
            kind, theory = label, theory_name
            break
    return {
        "kind": kind,
        "theory": theory,
        "conj_invariant": conj_flag,
        "conj_scale": conj_scale,
        "inv_invariant": inv_flag,
        "inv_scale": inv_scale,
        "signs": _sign_report(f),
        "irreducibility_assumed": True,
    }


def radial_coefficients(f: BivarPoly, phi: float) -> list[float]:
    """Coefficients of r -> f(r cos phi, r sin phi), ascending in r."""
    import math

    c, s = math.cos(phi), math.sin(phi)
    deg = f.total_degree()
    if deg < 0:
        return [0.0]
    out = [0.0] * (deg + 1)
    for (i, j), coeff in f.terms.items():
        out[i + j] += float(coeff) * c**i * s**j
    return out


def palindrome_test(coeffs: list[float], rel_tol: float = 1e-9) -> str:
    """Classify a real coefficient list as palindromic, antipalindromic or neither.

    Leading and trailing (near-)zeros are trimmed relative to the largest
    magnitude before comparing against the reversal.
    """
    if not coeffs:
        raise ValueError("empty coefficient list")
    scale = max(abs(c) for c in coeffs)
    if scale == 0:
        raise ValueError("all-zero coefficient list")
    cut = rel_tol * scale
    lo = 0
    hi = len(coeffs)
    while lo < hi and abs(coeffs[lo]) <= cut:
        lo += 1
    while hi > lo and abs(coeffs[hi - 1]) <= cut:
        hi -= 1
    trimmed = coeffs[lo:hi]
    rev = trimmed[::-1]
    if all(abs(a - b) <= cut for a, b in zip(trimmed, rev)):
        return "palindromic"
    if all(abs(a + b) <= cut for a, b in zip(trimmed, rev)):
        return "antipalindromic"
    return "neither"


def palindromic_family(coeffs: Mapping[Term, object], n: int) -> BivarPoly:
    """Assemble the inversion- and conjugation-invariant family of degree n.

    Terms are a_{ij} x^(i-2j) (x^2+y^2)^j (1 + (x^2+y^2)^(n/2-i)) over
    0 <= i <= n/2, 0 <= j <= floor(i/2).  The i = n/2 terms are self-paired,
    so their (1 + ...) factor collapses to a single copy.  The output is
    checked to be invariant under both transforms.
    """
    if n % 2 != 0 or n < 0:
        raise ValueError("degree n must be even and nonnegative")
    half = n // 2
    result = BivarPoly()
    for (i, j), a in coeffs.items():
        if not (0 <= i <= half and 0 <= j <= i // 2):
            raise ValueError(f"index ({i},{j}) outside the family range for n={n}")
        a = _frac(a)
        if a == 0:
            continue
        base = BivarPoly.monomial(i - 2 * j, 0, a) * R2.pow(j)
        if i < half:
            base = base * (BivarPoly.constant(1) + R2.pow(half - i))
        result = result + base
    if result.is_zero():
        raise ValueError("all family coefficients are zero")
    ok_conj, _ = is_invariant(result, "conj")
    ok_inv, _ = is_invariant(result, "inv")
    if not (ok_conj and ok_inv):
        raise AssertionError("palindromic family output failed its invariance self-check")
    return result
