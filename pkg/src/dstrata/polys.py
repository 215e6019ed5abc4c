"""Complex polynomial arithmetic, root extraction and stability indices."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .regions import RegionError, StabilityTheory, StratumKind, classify_point_detail, dualize


class PolynomialError(ValueError):
    pass


class RootFindingError(RuntimeError):
    pass


@dataclass(frozen=True)
class ComplexPoly:
    """Dense univariate polynomial, coefficients ascending, leading nonzero."""

    coefficients: tuple[complex, ...]

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coefficients)
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        if not coeffs:
            raise PolynomialError("the zero polynomial is rejected")
        if len(coeffs) > 1 and coeffs[-1] == 0:
            raise PolynomialError("leading coefficient must be nonzero")
        if coeffs == (0j,):
            raise PolynomialError("the zero polynomial is rejected")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def leading(self) -> complex:
        return self.coefficients[-1]

    def __call__(self, z: complex) -> complex:
        result = 0j
        for c in reversed(self.coefficients):
            result = result * z + c
        return result

    def derivative(self) -> "ComplexPoly":
        if self.degree == 0:
            raise PolynomialError("derivative of a constant is zero")
        return ComplexPoly(tuple(k * c for k, c in enumerate(self.coefficients) if k))

    def __mul__(self, other: "ComplexPoly") -> "ComplexPoly":
        out = [0j] * (self.degree + other.degree + 1)
        for i, a in enumerate(self.coefficients):
            for j, b in enumerate(other.coefficients):
                out[i + j] += a * b
        return ComplexPoly(tuple(out))

    def scale(self, c: complex) -> "ComplexPoly":
        return ComplexPoly(tuple(c * a for a in self.coefficients))

    def norm_inf(self) -> float:
        return max(abs(c) for c in self.coefficients)

    def __str__(self) -> str:
        return ",".join(format_complex(c) for c in self.coefficients)


@dataclass(frozen=True)
class RootMultiset:
    """Finite roots with multiplicities, plus a count of roots at infinity."""

    finite: tuple[tuple[complex, int], ...]
    at_infinity: int = 0

    def __post_init__(self):
        if any(m <= 0 for _, m in self.finite) or self.at_infinity < 0:
            raise PolynomialError("multiplicities must be positive")

    @property
    def total(self) -> int:
        return sum(m for _, m in self.finite) + self.at_infinity

    def points(self) -> list[complex]:
        out = []
        for r, m in self.finite:
            out.extend([r] * m)
        return out

    @staticmethod
    def of(roots: Iterable[complex], at_infinity: int = 0) -> "RootMultiset":
        grouped: dict[complex, int] = {}
        for r in roots:
            r = complex(r)
            grouped[r] = grouped.get(r, 0) + 1
        ordered = tuple(sorted(grouped.items(), key=lambda kv: (kv[0].real, kv[0].imag)))
        return RootMultiset(ordered, at_infinity)

    def matches(self, other: "RootMultiset", tol: float = 1e-6) -> bool:
        if self.total != other.total or self.at_infinity != other.at_infinity:
            return False
        mine = self.points()
        theirs = other.points()
        used = [False] * len(theirs)
        for r in mine:
            best, best_d = -1, tol
            for i, q in enumerate(theirs):
                if not used[i] and abs(r - q) <= best_d:
                    best, best_d = i, abs(r - q)
            if best < 0:
                return False
            used[best] = True
        return True


@dataclass(frozen=True)
class StabilityIndex:
    stable: int
    semistable: int
    unstable: int

    def __post_init__(self):
        if min(self.stable, self.semistable, self.unstable) < 0:
            raise PolynomialError("index entries must be nonnegative")

    @property
    def ambient_degree(self) -> int:
        return self.stable + self.semistable + self.unstable

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.stable, self.semistable, self.unstable)

    def __add__(self, other: "StabilityIndex") -> "StabilityIndex":
        return StabilityIndex(
            self.stable + other.stable,
            self.semistable + other.semistable,
            self.unstable + other.unstable,
        )

    def __str__(self) -> str:
        return f"({self.stable},{self.semistable},{self.unstable})"


# ---------------------------------------------------------------------------
# Root finding
# ---------------------------------------------------------------------------


def _initial_guesses(p: ComplexPoly) -> list[complex]:
    n = p.degree
    lead = abs(p.leading)
    radius = 1.0 + max(abs(c) / lead for c in p.coefficients[:-1])
    return [
        radius * cmath.exp(2j * math.pi * (k / n) + 0.4j)
        for k in range(n)
    ]


def find_roots(p: ComplexPoly, cluster_tol: Optional[float] = None,
               max_iterations: int = 200) -> RootMultiset:
    """All finite roots via Aberth-Ehrlich simultaneous iteration.

    Roots are polished by Newton steps and near-coincident estimates merge
    into multiplicities.  Raises RootFindingError when the residual target
    |p(r)| <= 1e-8 * (1 + max|coeff|) is not met within the iteration cap.
    """
    if p.degree < 1:
        raise PolynomialError("root finding needs degree >= 1")
    n = p.degree
    dp = p.derivative()
    z = _initial_guesses(p)
    scale = p.norm_inf()
    for _ in range(max_iterations):
        offsets = []
        converged = True
        for i in range(n):
            pv = p(z[i])
            if abs(pv) <= 1e-14 * scale * max(1.0, abs(z[i])) ** n:
                offsets.append(0j)
                continue
            dv = dp(z[i])
            if dv == 0:
                dv = 1e-30
            newton = pv / dv
            s = sum(1.0 / (z[i] - z[j]) for j in range(n) if j != i and z[i] != z[j])
            denom = 1.0 - newton * s
            if denom == 0:
                denom = 1e-30
            w = newton / denom
            offsets.append(w)
            if abs(w) > 1e-13 * (1.0 + abs(z[i])):
                converged = False
        z = [zi - wi for zi, wi in zip(z, offsets)]
        if converged:
            break
    # Newton polish.
    for i in range(n):
        for _ in range(3):
            dv = dp(z[i])
            if dv == 0:
                break
            step = p(z[i]) / dv
            if abs(step) > 0.5 * (1.0 + abs(z[i])):
                break
            z[i] = z[i] - step
    residual_cap = 1e-8 * (1.0 + scale)
    for zi in z:
        if abs(p(zi)) > residual_cap * max(1.0, abs(zi)) ** n:
            raise RootFindingError(
                f"root iteration did not converge (residual {abs(p(zi)):.3e})"
            )
    return _cluster(z, cluster_tol)


def _cluster(points: Sequence[complex], tol: Optional[float]) -> RootMultiset:
    n = len(points)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def threshold(a: complex, b: complex) -> float:
        if tol is not None:
            return tol
        # Pairwise-local scale: a single huge root (degree-change escape)
        # must not inflate the merge radius of the small ones.
        return 1e-7 * (1.0 + max(abs(a), abs(b)))

    for i in range(n):
        for j in range(i + 1, n):
            if abs(points[i] - points[j]) < threshold(points[i], points[j]):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    groups: dict[int, list[complex]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(points[i])
    entries = []
    for members in groups.values():
        center = sum(members) / len(members)
        entries.append((center, len(members)))
    entries.sort(key=lambda kv: (kv[0].real, kv[0].imag))
    return RootMultiset(tuple(entries))


def roots_to_coeffs(roots: RootMultiset | Iterable[complex], leading: complex = 1.0) -> ComplexPoly:
    """Expand leading * prod (z - r); deterministic in the multiset order."""
    if leading == 0:
        raise PolynomialError("leading coefficient must be nonzero")
    if isinstance(roots, RootMultiset):
        if roots.at_infinity:
            raise PolynomialError("cannot expand roots at infinity")
        points = roots.points()
    else:
        points = [complex(r) for r in roots]
    points.sort(key=lambda r: (r.real, r.imag))
    coeffs = [complex(leading)]
    for r in points:
        coeffs = [0j] + coeffs
        for k in range(len(coeffs) - 1):
            coeffs[k] -= r * coeffs[k + 1]
    return ComplexPoly(tuple(coeffs))


# ---------------------------------------------------------------------------
# Stability indices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RootClassification:
    root: Optional[complex]  # None marks the point at infinity
    multiplicity: int
    stratum: StratumKind
    tolerance_limited: bool


def classify_roots(theory: StabilityTheory, p: ComplexPoly,
                   ambient_degree: Optional[int] = None) -> list[RootClassification]:
    if ambient_degree is None:
        ambient_degree = p.degree
    if ambient_degree < p.degree:
        raise PolynomialError("ambient degree below the actual degree")
    if theory.mode == "monic" and ambient_degree != p.degree:
        raise PolynomialError("monic theories admit no roots at infinity")
    out = []
    if p.degree >= 1:
        for root, mult in find_roots(p).finite:
            stratum, limited = classify_point_detail(theory, root)
            out.append(RootClassification(root, mult, stratum, limited))
    deficit = ambient_degree - p.degree
    if deficit:
        out.append(RootClassification(None, deficit, theory.infinity_stratum, False))
    return out


def stability_index(theory: StabilityTheory, p: ComplexPoly,
                    ambient_degree: Optional[int] = None) -> StabilityIndex:
    """Root counts of p in the stable / semistable / unstable strata.

    In projective mode a degree deficit against ambient_degree contributes
    roots at infinity, classified by the theory's infinity stratum.
    """
    counts = {StratumKind.STABLE: 0, StratumKind.SEMISTABLE: 0, StratumKind.UNSTABLE: 0}
    for rc in classify_roots(theory, p, ambient_degree):
        counts[rc.stratum] += rc.multiplicity
    return StabilityIndex(
        counts[StratumKind.STABLE], counts[StratumKind.SEMISTABLE], counts[StratumKind.UNSTABLE]
    )


def perturb_nonmonic(p: ComplexPoly, epsilon: complex) -> ComplexPoly:
    """epsilon * z^(deg p + 1) + p: the degree-raising perturbation."""
    if epsilon == 0:
        raise PolynomialError("nonmonic perturbation needs epsilon != 0")
    return ComplexPoly(p.coefficients + (complex(epsilon),))

def perturb_monic(p: ComplexPoly, epsilon: complex) -> ComplexPoly:
    """z * p + epsilon: the root-from-origin perturbation."""
    return ComplexPoly((complex(epsilon),) + p.coefficients)


# ---------------------------------------------------------------------------
# Matrices
# ---------------------------------------------------------------------------


def as_matrix(entries) -> np.ndarray:
    a = np.asarray(entries, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise PolynomialError("matrix must be square and nonempty")
    return a


def char_poly(matrix) -> ComplexPoly:
    """Monic characteristic polynomial via the Faddeev-LeVerrier recurrence."""
    a = as_matrix(matrix)
    n = a.shape[0]
    coeffs = [0j] * (n + 1)
    coeffs[n] = 1.0 + 0j
    m = np.zeros_like(a)
    c = 1.0 + 0j
    for k in range(1, n + 1):
        m = a @ m + c * np.eye(n, dtype=complex)
        am = a @ m
        c = -np.trace(am) / k
        coeffs[n - k] = complex(c)
    return ComplexPoly(tuple(coeffs))


def companion_matrix(p: ComplexPoly) -> np.ndarray:
    if p.degree < 1:
        raise PolynomialError("companion matrix needs degree >= 1")
    n = p.degree
    monic = [c / p.leading for c in p.coefficients]
    m = np.zeros((n, n), dtype=complex)
    m[1:, :-1] = np.eye(n - 1)
    m[:, -1] = [-monic[k] for k in range(n)]
    return m


# ---------------------------------------------------------------------------
# Matrix-polynomial duality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DualityReport:
    proportional: bool
    scalar: complex
    residual: float
    index_primal: StabilityIndex
    index_dual: StabilityIndex

    @property
    def indices_match(self) -> bool:
        return self.index_primal == self.index_dual

    @property
    def ok(self) -> bool:
        return self.proportional and self.indices_match


def duality_check(points: Sequence[complex], theory: StabilityTheory,
                  residual_cap: float = 1e-9) -> DualityReport:
    """Cross-check the two diagram paths of the matrix-polynomial duality.

    Path one expands prod (z - 1/s_i); path two takes the characteristic
    polynomial of diag(s) and reads its coefficients backwards as a binary
    form.  The two coefficient vectors must be proportional, and the index
    of the inverted roots under the theory must equal the index of the
    original roots under the dual theory.
    """
    s = [complex(v) for v in points]
    if any(v == 0 for v in s):
        raise PolynomialError("duality check requires nonzero points")
    n = len(s)
    inverted = roots_to_coeffs([1.0 / v for v in s], 1.0)
    chi = char_poly(np.diag(s))
    reversed_chi = list(reversed(chi.coefficients))
    c1 = np.array(inverted.coefficients)
    c2 = np.array(reversed_chi)
    pivot = int(np.argmax(np.abs(c2)))
    gamma = c2[pivot] / c1[pivot]
    residual = float(np.linalg.norm(c2 - gamma * c1) / np.linalg.norm(c2))
    primal = stability_index(theory, inverted, n)
    dual = stability_index(dualize(theory), roots_to_coeffs(s, 1.0), n)
    return DualityReport(
        proportional=residual < residual_cap,
        scalar=complex(gamma),
        residual=residual,
        index_primal=primal,
        index_dual=dual,
    )


# ---------------------------------------------------------------------------
# Parsing / formatting
# ---------------------------------------------------------------------------


def parse_complex(token: str) -> complex:
    """Parse "re", "re+imi", "imi" or "i" style complex scalars."""
    s = token.strip().replace(" ", "")
    if not s:
        raise PolynomialError("empty complex token")
    t = s.replace("i", "j") if "i" in s and "j" not in s else s
    # Bare or signed imaginary unit needs an explicit 1.
    t = t.replace("+j", "+1j").replace("-j", "-1j")
    if t == "j":
        t = "1j"
    try:
        return complex(t)
    except ValueError:
        raise PolynomialError(f"cannot parse complex number {token!r}") from None


def parse_poly(text: str) -> ComplexPoly:
    """Parse a comma-separated ascending coefficient list."""
    return ComplexPoly(tuple(parse_complex(tok) for tok in text.split(",")))


def format_complex(z: complex) -> str:
    if z.imag == 0:
        return f"{z.real:g}"
    if z.real == 0:
        return f"{z.imag:g}i"
    return f"{z.real:g}{z.imag:+g}i"
