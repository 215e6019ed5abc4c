"""Stability theories: semialgebraic regions stratified into stable,
semistable and unstable parts.

A region is a boolean tree of polynomial sign conditions on (x, y) = (Re z,
Im z).  The closure of the region is approximated by relaxing every strict
`<` leaf to `<=`; this is exact for all built-in theories and for regions cut
out by generic inequalities, and it is a documented semantic contract of the
config format.  Membership of the point at infinity cannot be expressed by
the tree and is declared separately.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .curves import BivarPoly, _frac, conj_transform, inv_transform

Window = tuple[float, float, float, float]

DEFAULT_WINDOW: Window = (-2.0, 2.0, -2.0, 2.0)
DEFAULT_TOLERANCE = 1e-9


class StratumKind(str, Enum):
    STABLE = "s"
    SEMISTABLE = "ss"
    UNSTABLE = "un"

    def __str__(self) -> str:
        return self.value


STRATA = (StratumKind.STABLE, StratumKind.SEMISTABLE, StratumKind.UNSTABLE)


class RegionError(ValueError):
    pass


@dataclass(frozen=True)
class RegionExpr:
    """Node of a region tree.

    kind is one of "leaf", "and", "or", "not".  Leaves carry an exact
    rational polynomial and a relation from {<, <=, =}; inner nodes carry
    children (exactly one for "not", at least one otherwise).
    """

    kind: str
    children: tuple["RegionExpr", ...] = ()
    poly: Optional[BivarPoly] = None
    rel: Optional[str] = None

    def __post_init__(self):
        if self.kind == "leaf":
            if self.poly is None or self.poly.is_zero():
                raise RegionError("leaf polynomial must be nonzero")
            if self.rel not in ("<", "<=", "="):
                raise RegionError(f"unknown relation {self.rel!r}")
            if self.children:
                raise RegionError("leaf cannot have children")
        elif self.kind == "not":
            if len(self.children) != 1:
                raise RegionError("'not' takes exactly one child")
        elif self.kind in ("and", "or"):
            if not self.children:
                raise RegionError(f"'{self.kind}' needs at least one child")
        else:
            raise RegionError(f"unknown node kind {self.kind!r}")

    # -- constructors ---------------------------------------------------

    @staticmethod
    def leaf(poly: BivarPoly, rel: str = "<") -> "RegionExpr":
        return RegionExpr("leaf", poly=poly, rel=rel)

    @staticmethod
    def all_of(*children: "RegionExpr") -> "RegionExpr":
        return RegionExpr("and", children=tuple(children))

    @staticmethod
    def any_of(*children: "RegionExpr") -> "RegionExpr":
        return RegionExpr("or", children=tuple(children))

    @staticmethod
    def negation(child: "RegionExpr") -> "RegionExpr":
        return RegionExpr("not", children=(child,))

    # -- normalization ----------------------------------------------------

    def normalized(self) -> "RegionExpr":
        """Negation-free form: push 'not' to the leaves via De Morgan.

        not(f < 0) = (-f <= 0), not(f <= 0) = (-f < 0), and not(f = 0)
        becomes (f < 0) or (-f < 0).  Relaxing strict leaves is only a valid
        closure surrogate on negation-free trees.
        """
        return _normalize(self, negate=False)

    def leaves(self) -> list["RegionExpr"]:
        if self.kind == "leaf":
            return [self]
        out = []
        for c in self.children:
            out.extend(c.leaves())
        return out

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        if self.kind == "leaf":
            return {"poly": self.poly.to_map(), "rel": self.rel}
        return {"op": self.kind, "children": [c.to_dict() for c in self.children]}

    @staticmethod
    def from_dict(node: dict) -> "RegionExpr":
        if "poly" in node:
            return RegionExpr.leaf(BivarPoly.from_map(node["poly"]), node.get("rel", "<"))
        op = node["op"]
        children = tuple(RegionExpr.from_dict(c) for c in node["children"])
        if op == "not":
            return RegionExpr.negation(children[0])
        return RegionExpr(op, children=children)


def _normalize(node: RegionExpr, negate: bool) -> RegionExpr:
    if node.kind == "leaf":
        if not negate:
            return node
        if node.rel == "<":
            return RegionExpr.leaf(-node.poly, "<=")
        if node.rel == "<=":
            return RegionExpr.leaf(-node.poly, "<")
        return RegionExpr.any_of(
            RegionExpr.leaf(node.poly, "<"), RegionExpr.leaf(-node.poly, "<")
        )
    if node.kind == "not":
        return _normalize(node.children[0], not negate)
    kind = node.kind
    if negate:
        kind = "or" if kind == "and" else "and"
    return RegionExpr(kind, children=tuple(_normalize(c, negate) for c in node.children))


def eval_membership(expr: RegionExpr, point: complex, relaxed: bool, tol: float) -> bool:
    """Evaluate the region tree at a finite point.

    Leaf values with |f| <= tol count as zero.  With relaxed=True every
    strict `<` is read as `<=` (the closure surrogate).
    """
    point = complex(point)
    if not (math.isfinite(point.real) and math.isfinite(point.imag)):
        raise RegionError("eval_membership requires a finite point")
    return _eval_scalar(expr.normalized(), point.real, point.imag, relaxed, tol)


def _eval_scalar(node: RegionExpr, x: float, y: float, relaxed: bool, tol: float) -> bool:
    if node.kind == "leaf":
        v = node.poly.evaluate(x, y)
        if node.rel == "=":
            return abs(v) <= tol
        if node.rel == "<=" or relaxed:
            return v <= tol
        return v < -tol
    if node.kind == "and":
        return all(_eval_scalar(c, x, y, relaxed, tol) for c in node.children)
    if node.kind == "or":
        return any(_eval_scalar(c, x, y, relaxed, tol) for c in node.children)
    raise RegionError("evaluate on the normalized tree")


def eval_membership_grid(expr: RegionExpr, x: np.ndarray, y: np.ndarray,
                         relaxed: bool, tol: float) -> np.ndarray:
    """Vectorized membership over numpy coordinate arrays."""
    return _eval_grid(expr.normalized(), x, y, relaxed, tol)


def _eval_grid(node, x, y, relaxed, tol):
    if node.kind == "leaf":
        v = node.poly.evaluate(x, y)
        if node.rel == "=":
            return np.abs(v) <= tol
        if node.rel == "<=" or relaxed:
            return v <= tol
        return v < -tol
    parts = [_eval_grid(c, x, y, relaxed, tol) for c in node.children]
    out = parts[0]
    for p in parts[1:]:
        out = (out & p) if node.kind == "and" else (out | p)
    return out


# ---------------------------------------------------------------------------
# Stratum topology data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StratumData:
    """Declared topology of one stratum: component count and first Betti number.

    component_b1 optionally refines b1 per connected component (length b0).
    observable=False marks strata the raster estimator cannot see on a finite
    window (measure-zero stable sets such as pole points or real rays).
    """

    b0: int
    b1: int = 0
    component_b1: Optional[tuple[int, ...]] = None
    observable: bool = True

    def __post_init__(self):
        if self.b0 < 0 or self.b1 < 0:
            raise RegionError("Betti numbers must be nonnegative")
        if self.b0 == 0 and self.component_b1:
            raise RegionError("empty stratum cannot carry a component list")
        if self.component_b1 is not None:
            if len(self.component_b1) != self.b0:
                raise RegionError("component b1 list length must equal b0")
            if sum(self.component_b1) != self.b1:
                raise RegionError("component b1 list must sum to the stratum b1")

    def components(self) -> tuple[int, ...]:
        """Per-component b1 values, defaulting to a single-component split."""
        if self.component_b1 is not None:
            return self.component_b1
        if self.b0 == 0:
            return ()
        if self.b0 == 1:
            return (self.b1,)
        raise RegionError(
            "per-component b1 data required for a stratum with several components"
        )


@dataclass(frozen=True)
class TopologyTriple:
    stable: StratumData
    semistable: StratumData
    unstable: StratumData

    def get(self, stratum: StratumKind) -> StratumData:
        return {
            StratumKind.STABLE: self.stable,
            StratumKind.SEMISTABLE: self.semistable,
            StratumKind.UNSTABLE: self.unstable,
        }[stratum]

    def b0(self) -> tuple[int, int, int]:
        return (self.stable.b0, self.semistable.b0, self.unstable.b0)

    def b1(self) -> tuple[int, int, int]:
        return (self.stable.b1, self.semistable.b1, self.unstable.b1)

    def to_dict(self) -> dict:
        out = {}
        for key, data in (("s", self.stable), ("ss", self.semistable), ("un", self.unstable)):
            entry: list = [data.b0, data.b1]
            if data.component_b1 is not None:
                entry.append(list(data.component_b1))
            out[key] = entry
        return out

    @staticmethod
    def from_dict(d: dict) -> "TopologyTriple":
        def parse(entry) -> StratumData:
            b0, b1 = int(entry[0]), int(entry[1])
            comps = tuple(int(v) for v in entry[2]) if len(entry) > 2 else None
            return StratumData(b0, b1, comps)

        return TopologyTriple(parse(d["s"]), parse(d["ss"]), parse(d["un"]))


# ---------------------------------------------------------------------------
# Stability theories
# ---------------------------------------------------------------------------

Edge = tuple[str, str]


@dataclass(frozen=True)
class StabilityTheory:
    """A stability region plus its declared stratification metadata.

    mode "projective" means the root space is the sphere C u {inf} and
    infinity_stratum assigns the marked point; mode "monic" means the root
    space is C.  stratum_topology describes the strata of the theory's own
    root space; monic_topology describes the affine strata (what a finite
    window can see) and feeds the local degree-change analysis.
    origin_stratum, when set, overrides region evaluation at z = 0; dual
    theories need it because denominator clearing loses the origin.
    """

    name: str
    region: RegionExpr
    mode: str = "projective"
    infinity_stratum: Optional[StratumKind] = None
    stratum_topology: Optional[TopologyTriple] = None
    monic_topology: Optional[TopologyTriple] = None
    boundary_tolerance: float = DEFAULT_TOLERANCE
    adjacency_edges: Optional[frozenset[Edge]] = None
    unbounded_strata: frozenset[StratumKind] = frozenset()
    origin_stratum: Optional[StratumKind] = None
    window: Window = DEFAULT_WINDOW

    def __post_init__(self):
        if self.mode not in ("projective", "monic"):
            raise RegionError(f"unknown mode {self.mode!r}")
        if self.mode == "projective" and self.infinity_stratum is None:
            raise RegionError("projective theory must declare an infinity stratum")
        if self.mode == "monic" and self.infinity_stratum is not None:
            raise RegionError("monic theory has no infinity stratum")
        if self.boundary_tolerance <= 0:
            raise RegionError("boundary tolerance must be positive")

    def own_topology(self) -> TopologyTriple:
        if self.stratum_topology is None:
            raise RegionError(f"theory {self.name!r} carries no topology data")
        return self.stratum_topology

    def affine_topology(self) -> TopologyTriple:
        """Topology of the finite-plane strata (the monic picture)."""
        if self.mode == "monic":
            return self.own_topology()
        if self.monic_topology is None:
            raise RegionError(f"theory {self.name!r} carries no monic topology data")
        return self.monic_topology

    def nonempty_strata(self) -> tuple[StratumKind, ...]:
        if self.stratum_topology is None:
            return STRATA
        return tuple(s for s in STRATA if self.stratum_topology.get(s).b0 > 0)

    # -- serialization ---------------------------------------------------

    def to_config(self) -> dict:
        cfg: dict = {
            "name": self.name,
            "mode": self.mode,
            "region": self.region.to_dict(),
            "boundary_tolerance": self.boundary_tolerance,
        }
        if self.infinity_stratum is not None:
            cfg["infinity_stratum"] = _STRATUM_NAMES[self.infinity_stratum]
        if self.stratum_topology is not None:
            cfg["topology"] = self.stratum_topology.to_dict()
        if self.monic_topology is not None:
            cfg["monic_topology"] = self.monic_topology.to_dict()
        if self.adjacency_edges is not None:
            cfg["adjacency"] = sorted([a, b] for a, b in self.adjacency_edges)
        if self.unbounded_strata:
            cfg["unbounded"] = sorted(s.value for s in self.unbounded_strata)
        if self.origin_stratum is not None:
            cfg["origin_stratum"] = _STRATUM_NAMES[self.origin_stratum]
        cfg["window"] = list(self.window)
        return cfg

    @staticmethod
    def from_config(cfg: dict) -> "StabilityTheory":
        mode = cfg.get("mode", "projective")
        inf = cfg.get("infinity_stratum")
        topo = cfg.get("topology")
        monic_topo = cfg.get("monic_topology")
        adjacency = cfg.get("adjacency")
        origin = cfg.get("origin_stratum")
        return StabilityTheory(
            name=cfg.get("name", "custom"),
            region=RegionExpr.from_dict(cfg["region"]),
            mode=mode,
            infinity_stratum=_parse_stratum(inf) if inf else None,
            stratum_topology=TopologyTriple.from_dict(topo) if topo else None,
            monic_topology=TopologyTriple.from_dict(monic_topo) if monic_topo else None,
            boundary_tolerance=float(cfg.get("boundary_tolerance", DEFAULT_TOLERANCE)),
            adjacency_edges=frozenset((a, b) for a, b in adjacency) if adjacency else None,
            unbounded_strata=frozenset(_parse_stratum(s) for s in cfg.get("unbounded", ())),
            origin_stratum=_parse_stratum(origin) if origin else None,
            window=tuple(cfg.get("window", DEFAULT_WINDOW)),
        )


_STRATUM_NAMES = {
    StratumKind.STABLE: "stable",
    StratumKind.SEMISTABLE: "semistable",
    StratumKind.UNSTABLE: "unstable",
}
_STRATUM_LOOKUP = {
    "stable": StratumKind.STABLE,
    "semistable": StratumKind.SEMISTABLE,
    "unstable": StratumKind.UNSTABLE,
    "s": StratumKind.STABLE,
    "ss": StratumKind.SEMISTABLE,
    "un": StratumKind.UNSTABLE,
}


def _parse_stratum(token) -> StratumKind:
    if isinstance(token, StratumKind):
        return token
    try:
        return _STRATUM_LOOKUP[str(token).lower()]
    except KeyError:
        raise RegionError(f"unknown stratum {token!r}") from None


def load_theory(path_or_name: str) -> StabilityTheory:
    """Resolve a theory by built-in name or JSON config file path."""
    import os

    if os.path.exists(path_or_name):
        with open(path_or_name, "r", encoding="utf-8") as fh:
            return StabilityTheory.from_config(json.load(fh))
    return builtin_theory(path_or_name)


def classify_point(theory: StabilityTheory, point) -> StratumKind:
    """Stratum of a single root location; point may be a complex number or
    None / math.inf for the point at infinity (projective mode only)."""
    kind, _ = classify_point_detail(theory, point)
    return kind


def classify_point_detail(theory: StabilityTheory, point) -> tuple[StratumKind, bool]:
    """Classification plus a tolerance-limited flag.

    The flag is set when some leaf value fell inside the boundary tolerance,
    i.e. the verdict would flip under a smaller tolerance.
    """
    if point is None or (isinstance(point, float) and math.isinf(point)):
        if theory.mode == "monic":
            raise RegionError("point at infinity is outside a monic theory's root space")
        return theory.infinity_stratum, False
    z = complex(point)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        if theory.mode == "monic":
            raise RegionError("point at infinity is outside a monic theory's root space")
        return theory.infinity_stratum, False
    tol = theory.boundary_tolerance
    if theory.origin_stratum is not None and abs(z) <= tol:
        return theory.origin_stratum, True
    limited = _tolerance_limited(theory.region.normalized(), z.real, z.imag, tol)
    if eval_membership(theory.region, z, relaxed=False, tol=tol):
        return StratumKind.STABLE, limited
    if eval_membership(theory.region, z, relaxed=True, tol=tol):
        return StratumKind.SEMISTABLE, limited
    return StratumKind.UNSTABLE, limited


def _tolerance_limited(node: RegionExpr, x: float, y: float, tol: float) -> bool:
    if node.kind == "leaf":
        return abs(node.poly.evaluate(x, y)) <= tol
    return any(_tolerance_limited(c, x, y, tol) for c in node.children)


def classify_grid(theory: StabilityTheory, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorized classification: 0 stable, 1 semistable, 2 unstable."""
    tol = theory.boundary_tolerance
    strict = eval_membership_grid(theory.region, x, y, relaxed=False, tol=tol)
    relaxed = eval_membership_grid(theory.region, x, y, relaxed=True, tol=tol)
    out = np.full(np.broadcast(x, y).shape, 2, dtype=np.int8)
    out[relaxed] = 1
    out[strict] = 0
    if theory.origin_stratum is not None:
        near0 = (np.abs(x) <= tol) & (np.abs(y) <= tol)
        if near0.any():
            out[near0] = {"s": 0, "ss": 1, "un": 2}[theory.origin_stratum.value]
    return out


# ---------------------------------------------------------------------------
# Built-in theories
# ---------------------------------------------------------------------------


def _leaf(text: str, rel: str = "<") -> RegionExpr:
    return RegionExpr.leaf(BivarPoly.parse(text), rel)


_FIG3_STANDARD = frozenset({("s", "ss"), ("un", "ss")})
_FIG3_POLES = frozenset({("un", "s")})
_FIG3_APERIODICITY = frozenset({("s", "ss"), ("un", "ss"), ("un", "s")})
_FIG3_FENICHEL = frozenset({("s", "ss")})


def _topo(s, ss, un) -> TopologyTriple:
    def mk(spec) -> StratumData:
        if isinstance(spec, StratumData):
            return spec
        return StratumData(*spec)

    return TopologyTriple(mk(s), mk(ss), mk(un))


def builtin_theory(name: str, params: Sequence = (), mode: str = "projective") -> StabilityTheory:
    """Construct a named classical theory.

    Names: hurwitz, schur, hyperbolicity, aperiodicity, fenichel,
    hurwitz_sector, schur_diamond, annulus (params r1 < r2), poles (params:
    the stable points), ride_quality.
    """
    if mode not in ("projective", "monic"):
        raise RegionError(f"unknown mode {mode!r}")
    key = name.lower().replace("-", "_")
    builder = _BUILTINS.get(key)
    if builder is None:
        raise RegionError(f"unknown built-in theory {name!r}")
    theory = builder(tuple(params))
    if mode == "monic":
        theory = replace(
            theory,
            mode="monic",
            infinity_stratum=None,
            stratum_topology=theory.monic_topology,
        )
    return theory


def _hurwitz(params) -> StabilityTheory:
    return StabilityTheory(
        name="hurwitz",
        region=_leaf("x"),
        infinity_stratum=StratumKind.SEMISTABLE,
        stratum_topology=_topo((1, 0), (1, 1), (1, 0)),
        monic_topology=_topo((1, 0), (1, 0), (1, 0)),
        adjacency_edges=_FIG3_STANDARD,
        unbounded_strata=frozenset(STRATA),
    )


def _schur(params) -> StabilityTheory:
    return StabilityTheory(
        name="schur",
        region=_leaf("x^2+y^2-1"),
        infinity_stratum=StratumKind.UNSTABLE,
        stratum_topology=_topo((1, 0), (1, 1), (1, 0)),
        monic_topology=_topo((1, 0), (1, 1), (1, 1)),
        adjacency_edges=_FIG3_STANDARD,
        unbounded_strata=frozenset({StratumKind.UNSTABLE}),
    )


def _hyperbolicity(params) -> StabilityTheory:
    # Lower half-plane; the semistable stratum is the real axis (the real
    # line plus infinity closes into a circle on the sphere).
    return StabilityTheory(
        name="hyperbolicity",
        region=_leaf("y"),
        infinity_stratum=StratumKind.SEMISTABLE,
        stratum_topology=_topo((1, 0), (1, 1), (1, 0)),
        monic_topology=_topo((1, 0), (1, 0), (1, 0)),
        adjacency_edges=_FIG3_STANDARD,
        unbounded_strata=frozenset(STRATA),
    )


def _aperiodicity(params) -> StabilityTheory:
    region = RegionExpr.all_of(_leaf("y", "="), _leaf("x"))
    return StabilityTheory(
        name="aperiodicity",
        region=region,
        infinity_stratum=StratumKind.SEMISTABLE,
        # Projective semistable stratum is {0, infinity}: two points.
        stratum_topology=_topo((1, 0), StratumData(2, 0, (0, 0), observable=False),
                               (1, 0)),
        monic_topology=_topo(StratumData(1, 0, observable=False),
                             StratumData(1, 0, observable=False), (1, 0)),
        adjacency_edges=_FIG3_APERIODICITY,
        unbounded_strata=frozenset({StratumKind.STABLE, StratumKind.UNSTABLE}),
    )


def _fenichel(params) -> StabilityTheory:
    region = RegionExpr.any_of(_leaf("x"), _leaf("-x"))
    return StabilityTheory(
        name="fenichel",
        region=region,
        infinity_stratum=StratumKind.SEMISTABLE,
        stratum_topology=_topo(StratumData(2, 0, (0, 0)), (1, 1), (0, 0)),
        monic_topology=_topo(StratumData(2, 0, (0, 0)), (1, 0), (0, 0)),
        adjacency_edges=_FIG3_FENICHEL,
        unbounded_strata=frozenset({StratumKind.STABLE, StratumKind.SEMISTABLE}),
    )


def _hurwitz_sector(params) -> StabilityTheory:
    # Re z + |Im z| < 0 rewritten without the absolute value.
    region = RegionExpr.all_of(_leaf("x+y"), _leaf("x-y"))
    return StabilityTheory(
        name="hurwitz_sector",
        region=region,
        infinity_stratum=StratumKind.SEMISTABLE,
        stratum_topology=_topo((1, 0), (1, 1), (1, 0)),
        monic_topology=_topo((1, 0), (1, 0), (1, 0)),
        adjacency_edges=_FIG3_STANDARD,
        unbounded_strata=frozenset(STRATA),
    )


def _schur_diamond(params) -> StabilityTheory:
    # |Re z| + |Im z| < 1 rewritten without absolute values.
    region = RegionExpr.all_of(
        _leaf("x+y-1"), _leaf("x-y-1"), _leaf("-x+y-1"), _leaf("-x-y-1")
    )
    return StabilityTheory(
        name="schur_diamond",
        region=region,
        infinity_stratum=StratumKind.UNSTABLE,
        stratum_topology=_topo((1, 0), (1, 1), (1, 0)),
        monic_topology=_topo((1, 0), (1, 1), (1, 1)),
        adjacency_edges=_FIG3_STANDARD,
        unbounded_strata=frozenset({StratumKind.UNSTABLE}),
    )


def _annulus(params) -> StabilityTheory:
    if len(params) != 2:
        raise RegionError("annulus takes parameters (r1, r2)")
    r1, r2 = _frac(params[0]), _frac(params[1])
    if not (0 < r1 < r2):
        raise RegionError("annulus requires 0 < r1 < r2")
    inner = BivarPoly({(0, 0): r1 * r1}) - BivarPoly.r_squared()
    outer = BivarPoly.r_squared() - BivarPoly({(0, 0): r2 * r2})
    region = RegionExpr.all_of(RegionExpr.leaf(inner), RegionExpr.leaf(outer))
    half_window = float(r2) * 1.5
    return StabilityTheory(
        name=f"annulus({r1},{r2})",
        region=region,
        infinity_stratum=StratumKind.UNSTABLE,
        stratum_topology=_topo((1, 1), StratumData(2, 2, (1, 1)),
                               StratumData(2, 0, (0, 0))),
        monic_topology=_topo((1, 1), StratumData(2, 2, (1, 1)),
                             StratumData(2, 1, (0, 1))),
        adjacency_edges=_FIG3_STANDARD,
        unbounded_strata=frozenset({StratumKind.UNSTABLE}),
        window=(-half_window, half_window, -half_window, half_window),
    )


def _poles(params) -> StabilityTheory:
    if not params:
        raise RegionError("poles takes at least one point")
    points = [complex(p) for p in params]
    leaves = []
    for p in points:
        a, b = _frac(p.real), _frac(p.imag)
        circle = (
            (BivarPoly.x() - BivarPoly.constant(a)).pow(2)
            + (BivarPoly.y() - BivarPoly.constant(b)).pow(2)
        )
        leaves.append(RegionExpr.leaf(circle, "="))
    region = leaves[0] if len(leaves) == 1 else RegionExpr.any_of(*leaves)
    r = len(points)
    reach = max([2.0] + [abs(p) + 1.0 for p in points])
    return StabilityTheory(
        name="poles(" + ",".join(_format_complex(p) for p in points) + ")",
        region=region,
        infinity_stratum=StratumKind.UNSTABLE,
        stratum_topology=_topo(
            StratumData(r, 0, tuple(0 for _ in range(r)), observable=False),
            (0, 0),
            StratumData(1, max(r - 1, 0), observable=False),
        ),
        monic_topology=_topo(
            StratumData(r, 0, tuple(0 for _ in range(r)), observable=False),
            (0, 0),
            StratumData(1, r, observable=False),
        ),
        adjacency_edges=_FIG3_POLES,
        unbounded_strata=frozenset({StratumKind.UNSTABLE}),
        window=(-reach, reach, -reach, reach),
    )


def _ride_quality(params) -> StabilityTheory:
    region = RegionExpr.all_of(
        RegionExpr.leaf(BivarPoly.constant(Fraction(3, 5)) - BivarPoly.r_squared()),
        _leaf("x^2+y^2-1"),
        RegionExpr.leaf(BivarPoly({(0, 1): -1, (0, 0): Fraction(-1, 2)})),  # -y - 1/2 < 0
        RegionExpr.leaf(BivarPoly({(0, 1): 1, (0, 0): Fraction(-1, 2)})),   # y - 1/2 < 0
        _leaf("x"),
    )
    return StabilityTheory(
        name="ride_quality",
        region=region,
        infinity_stratum=StratumKind.UNSTABLE,
        stratum_topology=_topo((1, 0), (1, 1), (1, 0)),
        monic_topology=_topo((1, 0), (1, 1), (1, 1)),
        adjacency_edges=_FIG3_STANDARD,
        unbounded_strata=frozenset({StratumKind.UNSTABLE}),
    )


_BUILTINS = {
    "hurwitz": _hurwitz,
    "schur": _schur,
    "hyperbolicity": _hyperbolicity,
    "aperiodicity": _aperiodicity,
    "fenichel": _fenichel,
    "hurwitz_sector": _hurwitz_sector,
    "schur_diamond": _schur_diamond,
    "annulus": _annulus,
    "poles": _poles,
    "ride_quality": _ride_quality,
}

BUILTIN_NAMES = tuple(sorted(_BUILTINS))


def _format_complex(z: complex) -> str:
    re_s = f"{z.real:g}"
    if z.imag == 0:
        return re_s
    return f"{re_s}{z.imag:+g}i"


# ---------------------------------------------------------------------------
# Duality
# ---------------------------------------------------------------------------


def _dual_leaf(leaf: RegionExpr) -> RegionExpr:
    """Pull a leaf back through z -> 1/z.

    In coordinates the inversion is (x, y) -> (x/(x^2+y^2), -y/(x^2+y^2));
    clearing denominators by a power of x^2+y^2 preserves every sign relation
    away from the origin, since x^2+y^2 > 0 there.
    """
    pulled, _tau = inv_transform(conj_transform(leaf.poly))
    if pulled.is_zero():
        raise RegionError("leaf polynomial vanished identically under inversion")
    return RegionExpr.leaf(pulled, leaf.rel)


def _map_region(node: RegionExpr) -> RegionExpr:
    if node.kind == "leaf":
        return _dual_leaf(node)
    return RegionExpr(node.kind, children=tuple(_map_region(c) for c in node.children))


def _limit_stratum_at_infinity(theory: StabilityTheory) -> StratumKind:
    """Closure-limit stratum along |z| -> inf, probed over radii/directions."""
    seen = set()
    for radius in (1e3, 1e5):
        for k in range(8):
            phi = math.pi * (2 * k + 1) / 8
            seen.add(classify_point(theory, radius * complex(math.cos(phi), math.sin(phi))))
    if seen == {StratumKind.UNSTABLE}:
        return StratumKind.UNSTABLE
    # The stable set never contains its own boundary point at infinity: the
    # dual origin is a limit, not a member, so anything else is semistable.
    return StratumKind.SEMISTABLE


def _adjust_puncture(data: StratumData, is_open: bool) -> StratumData:
    """Best-effort topology correction for removing one point of a stratum."""
    if data.b0 == 0:
        return data
    if is_open:
        return StratumData(data.b0, data.b1 + 1, None, data.observable)
    if data.b1 > 0:
        return StratumData(data.b0, data.b1 - 1, None, data.observable)
    return data


def _adjust_fill(data: StratumData, is_open: bool, unbounded: bool) -> StratumData:
    """Best-effort topology correction for adding one point to a stratum."""
    if is_open:
        if data.b1 > 0:
            return StratumData(data.b0, data.b1 - 1, None, data.observable)
        return data
    if unbounded:
        return StratumData(max(data.b0, 1), data.b1 + 1, None, data.observable)
    return StratumData(data.b0 + 1, data.b1, None, data.observable)


def dualize(theory: StabilityTheory) -> StabilityTheory:
    """The dual theory under z -> 1/z, toggling projective and monic modes.

    Strata map homeomorphically through the inversion; the marked points
    swap.  The dual origin stands for the primal point at infinity and the
    dual infinity stands for the primal origin, so their strata are the
    primal classifications at the swapped points (closure semantics for the
    added point of a projective dual).
    """
    region = _map_region(theory.region)
    topo = theory.stratum_topology
    if theory.mode == "projective":
        origin = theory.infinity_stratum
        new_topo = None
        if topo is not None:
            # The primal origin's image (the dual infinity) leaves the monic
            # root space: puncture that stratum.
            lost = classify_point(theory, 0)
            new = {s: topo.get(s) for s in STRATA}
            new[lost] = _adjust_puncture(new[lost], is_open=lost != StratumKind.SEMISTABLE)
            new_topo = TopologyTriple(
                new[StratumKind.STABLE], new[StratumKind.SEMISTABLE], new[StratumKind.UNSTABLE]
            )
        return StabilityTheory(
            name=f"dual({theory.name})",
            region=region,
            mode="monic",
            infinity_stratum=None,
            stratum_topology=new_topo,
            monic_topology=new_topo,
            boundary_tolerance=theory.boundary_tolerance,
            origin_stratum=origin,
            window=theory.window,
        )
    infinity = classify_point(theory, 0)
    origin = _limit_stratum_at_infinity(theory)
    new_topo = None
    if topo is not None:
        new = {s: topo.get(s) for s in STRATA}
        gained = origin
        new[gained] = _adjust_fill(
            new[gained],
            is_open=gained != StratumKind.SEMISTABLE,
            unbounded=gained in theory.unbounded_strata,
        )
        new_topo = TopologyTriple(
            new[StratumKind.STABLE], new[StratumKind.SEMISTABLE], new[StratumKind.UNSTABLE]
        )
    return StabilityTheory(
        name=f"dual({theory.name})",
        region=region,
        mode="projective",
        infinity_stratum=infinity,
        stratum_topology=new_topo,
        boundary_tolerance=theory.boundary_tolerance,
        origin_stratum=origin,
        window=theory.window,
    )


# ---------------------------------------------------------------------------
# Numeric stratum topology estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StratumTopologySample:
    stratum: StratumKind
    window: Window
    resolution: int
    b0_est: int
    b1_est: int
    component_labels: np.ndarray = field(compare=False)

    def pair(self) -> tuple[int, int]:
        return (self.b0_est, self.b1_est)


class _DisjointSet:
    __slots__ = ("parent",)

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        parent = self.parent
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def _corner_grid(window: Window, resolution: int):
    x0, x1, y0, y1 = window
    xs = np.linspace(x0, x1, resolution + 1)
    ys = np.linspace(y0, y1, resolution + 1)
    return np.meshgrid(xs, ys, indexing="ij")


def _label_pixels(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """4-connected component labels (1..count) for a boolean pixel mask."""
    n, m = mask.shape
    labels = np.zeros((n, m), dtype=np.int32)
    ds = _DisjointSet(n * m)
    idx = np.flatnonzero(mask.ravel())
    filled = set(idx.tolist())
    for flat in idx:
        i, j = divmod(int(flat), m)
        if j + 1 < m and (flat + 1) in filled:
            ds.union(flat, flat + 1)
        if i + 1 < n and (flat + m) in filled:
            ds.union(flat, flat + m)
    roots: dict[int, int] = {}
    flat_labels = labels.ravel()
    for flat in idx:
        root = ds.find(int(flat))
        if root not in roots:
            roots[root] = len(roots) + 1
        flat_labels[flat] = roots[root]
    return labels, len(roots)


def _euler_characteristic(mask: np.ndarray) -> int:
    """V - E + F of the filled-pixel cubical complex."""
    faces = int(mask.sum())
    padded = np.pad(mask, 1)
    corner = padded[:-1, :-1] | padded[:-1, 1:] | padded[1:, :-1] | padded[1:, 1:]
    vertices = int(corner.sum())
    h_edges = padded[:-1, 1:-1] | padded[1:, 1:-1]
    v_edges = padded[1:-1, :-1] | padded[1:-1, 1:]
    edges = int(h_edges.sum()) + int(v_edges.sum())
    return vertices - edges + faces


def _dedupe_leaves(expr: RegionExpr) -> list[BivarPoly]:
    seen = {}
    for leaf in expr.normalized().leaves():
        key = leaf.poly.normalized()
        if key not in seen:
            seen[key] = leaf.poly
    return list(seen.values())


def _marching_squares(values: np.ndarray):
    """Segments of the zero contour on a corner-value grid.

    Vertices are keyed by the grid edge they sit on so that neighboring cells
    share endpoints exactly.  Returns (segments, points) where segments are
    pairs of vertex keys and points maps keys to (s, t) grid coordinates.
    """
    pos = values >= 0
    n1, m1 = values.shape
    points: dict[tuple, tuple[float, float]] = {}

    def edge_point(i0, j0, i1, j1):
        key = ("h" if i0 != i1 else "v", min(i0, i1), min(j0, j1))
        if key not in points:
            v0, v1 = values[i0, j0], values[i1, j1]
            t = 0.5 if v0 == v1 else float(v0) / float(v0 - v1)
            t = min(max(t, 0.0), 1.0)
            points[key] = (i0 + t * (i1 - i0), j0 + t * (j1 - j0))
        return key

    segments = []
    for i in range(n1 - 1):
        for j in range(m1 - 1):
            corners = ((i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1))
            code = sum(1 << k for k, c in enumerate(corners) if pos[c])
            if code in (0, 15):
                continue
            cell_edges = (
                (corners[0], corners[1]),
                (corners[1], corners[2]),
                (corners[2], corners[3]),
                (corners[3], corners[0]),
            )
            crossing = [
                edge_point(*a, *b)
                for a, b in cell_edges
                if pos[a] != pos[b]
            ]
            if len(crossing) == 2:
                segments.append((crossing[0], crossing[1]))
            elif len(crossing) == 4:
                # Saddle: disambiguate with the cell center sign.
                center = (
                    values[i, j] + values[i + 1, j] + values[i, j + 1] + values[i + 1, j + 1]
                ) / 4.0
                if (center >= 0) == pos[corners[0]]:
                    segments.append((crossing[0], crossing[3]))
                    segments.append((crossing[1], crossing[2]))
                else:
                    segments.append((crossing[0], crossing[1]))
                    segments.append((crossing[2], crossing[3]))
    return segments, points


def _semistable_filter(theory: StabilityTheory, x: float, y: float, slack: float) -> bool:
    """Relaxed-minus-strict membership with a geometry-aware leaf tolerance.

    A leaf counts as zero when |f| <= max(boundary tolerance, slack * |grad
    f|): contour points are only first-order accurate, so the pure boundary
    tolerance would reject them.
    """
    normalized = theory.region.normalized()

    def leaf_tol(poly: BivarPoly) -> float:
        fx, fy = _GRAD_CACHE.setdefault(poly, poly.gradient())
        g = math.hypot(fx.evaluate(x, y), fy.evaluate(x, y))
        return max(theory.boundary_tolerance, slack * g)

    def ev(node, relaxed):
        if node.kind == "leaf":
            v = node.poly.evaluate(x, y)
            tol = leaf_tol(node.poly)
            if node.rel == "=":
                return abs(v) <= tol
            if node.rel == "<=" or relaxed:
                return v <= tol
            return v < -tol
        results = (ev(c, relaxed) for c in node.children)
        return all(results) if node.kind == "and" else any(results)

    return ev(normalized, True) and not ev(normalized, False)


_GRAD_CACHE: dict[BivarPoly, tuple[BivarPoly, BivarPoly]] = {}


def estimate_stratum_topology(
    theory: StabilityTheory,
    stratum: StratumKind,
    window: Optional[Window] = None,
    resolution: int = 256,
) -> StratumTopologySample:
    """Numeric (b0, b1) estimate of a stratum on a window.

    Open strata are rasterized conservatively (a pixel counts only if all
    four corners pass), components come from 4-connected union-find and b1 =
    b0 - Euler characteristic of the pixel complex.  The semistable stratum
    is extracted as a curve by marching squares on the region's leaf
    polynomials; then b0 is the number of segment-graph components and b1
    its cyclomatic number.  Both reductions are valid because planar
    semialgebraic sets are homotopy equivalent to graphs.
    """
    if resolution < 16:
        raise RegionError("resolution must be at least 16")
    window = window or theory.window
    x0, x1, y0, y1 = window
    if not (x1 > x0 and y1 > y0):
        raise RegionError("window must be a nondegenerate rectangle")
    tol = theory.boundary_tolerance
    cx, cy = _corner_grid(window, resolution)

    if stratum != StratumKind.SEMISTABLE:
        if stratum == StratumKind.STABLE:
            corner_ok = eval_membership_grid(theory.region, cx, cy, relaxed=False, tol=tol)
        else:
            corner_ok = ~eval_membership_grid(theory.region, cx, cy, relaxed=True, tol=tol)
        mask = corner_ok[:-1, :-1] & corner_ok[1:, :-1] & corner_ok[:-1, 1:] & corner_ok[1:, 1:]
        labels, b0 = _label_pixels(mask)
        if b0 == 0:
            return StratumTopologySample(stratum, window, resolution, 0, 0, labels)
        chi = _euler_characteristic(mask)
        return StratumTopologySample(stratum, window, resolution, b0, b0 - chi, labels)

    # Semistable: trace the candidate boundary curves.
    hx = (x1 - x0) / resolution
    hy = (y1 - y0) / resolution
    slack = math.hypot(hx, hy)
    vertex_ids: dict[tuple, int] = {}
    positions: list[tuple[float, float]] = []
    edges: list[tuple[int, int]] = []
    labels = np.zeros((resolution, resolution), dtype=np.int32)
    kept_cells: list[tuple[int, int, int]] = []
    for leaf_idx, poly in enumerate(_dedupe_leaves(theory.region)):
        values = poly.evaluate(cx, cy)
        if not (np.any(values > 0) and np.any(values < 0)):
            continue
        segments, points = _marching_squares(values)
        for a, b in segments:
            pa, pb = points[a], points[b]
            mid_s = (pa[0] + pb[0]) / 2.0
            mid_t = (pa[1] + pb[1]) / 2.0
            mx = x0 + mid_s * hx
            my = y0 + mid_t * hy
            if not _semistable_filter(theory, mx, my, slack):
                continue
            for key, pos in ((a, pa), (b, pb)):
                if (leaf_idx, key) not in vertex_ids:
                    vertex_ids[(leaf_idx, key)] = len(positions)
                    positions.append(pos)
            edges.append((vertex_ids[(leaf_idx, a)], vertex_ids[(leaf_idx, b)]))
            ci = min(int(mid_s), resolution - 1)
            cj = min(int(mid_t), resolution - 1)
            kept_cells.append((ci, cj, vertex_ids[(leaf_idx, a)]))
    n_vertices = len(positions)
    if n_vertices == 0:
        return StratumTopologySample(stratum, window, resolution, 0, 0, labels)
    edges.extend(_corner_gluing_edges(positions, edges))
    ds = _DisjointSet(n_vertices)
    for a, b in edges:
        ds.union(a, b)
    roots: dict[int, int] = {}
    for v in range(n_vertices):
        root = ds.find(v)
        if root not in roots:
            roots[root] = len(roots) + 1
    b0 = len(roots)
    b1 = len(edges) - n_vertices + b0
    for ci, cj, vid in kept_cells:
        labels[ci, cj] = roots[ds.find(vid)]
    return StratumTopologySample(stratum, window, resolution, b0, b1, labels)


def _corner_gluing_edges(positions, edges, radius: float = 2.5):
    """Zero-length edges joining loose chain ends across curve corners.

    Boundary curves made of several leaf polynomials break into per-leaf
    chains at their intersection corners.  Each degree-1 vertex is glued to
    the nearest vertex within `radius` grid cells that is at least four
    graph hops away; a gluing edge either joins two components (corner) or
    closes a loop, and the cyclomatic count handles both correctly.
    """
    neighbors: dict[int, set[int]] = {}
    degree: dict[int, int] = {}
    for a, b in edges:
        neighbors.setdefault(a, set()).add(b)
        neighbors.setdefault(b, set()).add(a)
        degree[a] = degree.get(a, 0) + 1
        degree[b] = degree.get(b, 0) + 1
    loose = sorted(v for v, d in degree.items() if d == 1)
    if not loose:
        return []
    loose_set = set(loose)
    glue = []
    used: set[int] = set()
    for v in loose:
        if v in used:
            continue
        near = {v}
        frontier = {v}
        for _ in range(3):
            frontier = {w for u in frontier for w in neighbors.get(u, ())} - near
            near |= frontier
        px, py = positions[v]
        best, best_d = None, radius
        best_loose, best_loose_d = None, radius
        for w in range(len(positions)):
            if w in near:
                continue
            qx, qy = positions[w]
            dist = math.hypot(px - qx, py - qy)
            if dist < best_d:
                best, best_d = w, dist
            if w in loose_set and w not in used and dist < best_loose_d:
                best_loose, best_loose_d = w, dist
        # A loose partner takes priority: gluing end-to-end at a corner keeps
        # the other chain's endpoint from gluing a second, spurious edge.
        partner = best_loose if best_loose is not None else best
        if partner is not None:
            used.add(v)
            used.add(partner)
            glue.append((min(v, partner), max(v, partner)))
    return glue


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return not self.errors and not self.warnings

    def __str__(self) -> str:
        lines = []
        for e in self.errors:
            lines.append(f"error: {e}")
        for w in self.warnings:
            lines.append(f"warning: {w}")
        for n in self.notes:
            lines.append(f"note: {n}")
        lines.append("consistent" if self.consistent else "inconsistent")
        return "\n".join(lines)


def validate_theory(theory: StabilityTheory, resolution: int = 128) -> ValidationReport:
    """Structural checks plus a numeric spot-check of the declared topology.

    Numeric disagreement is reported as a warning, never an error: the
    estimator sees only a finite window of the affine plane.
    """
    report = ValidationReport()
    topo = theory.stratum_topology
    if theory.mode == "projective" and theory.infinity_stratum is None:
        report.errors.append("projective theory must declare an infinity stratum")
    if topo is not None:
        for stratum in STRATA:
            data = topo.get(stratum)
            if data.b0 == 0 and data.b1 != 0:
                report.errors.append(f"stratum {stratum} declared empty but has b1 > 0")
    if theory.mode == "projective" and topo is not None and theory.infinity_stratum is not None:
        if topo.get(theory.infinity_stratum).b0 == 0:
            report.errors.append(
                "infinity is assigned to a stratum that is declared empty"
            )
    if report.errors:
        return report

    try:
        affine = theory.affine_topology()
    except RegionError:
        report.notes.append("no affine topology data; numeric spot-check skipped")
        return report
    for stratum in STRATA:
        declared = affine.get(stratum)
        if not declared.observable:
            report.notes.append(
                f"stratum {stratum} is not raster-observable; spot-check skipped"
            )
            continue
        sample = estimate_stratum_topology(theory, stratum, resolution=resolution)
        if sample.pair() != (declared.b0, declared.b1):
            report.warnings.append(
                f"stratum {stratum}: declared (b0,b1)=({declared.b0},{declared.b1}) "
                f"but the estimator found {sample.pair()} at resolution {resolution}"
            )
    return report
