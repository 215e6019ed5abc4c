"""Adjacency digraphs of strata and their symmetric products.

Vertices of a base digraph are the nonempty strata of a stability theory; an
edge (i, j) means the closure of stratum i meets stratum j.  Vertices of the
n-th symmetric product are size-n multisets of base vertices, and adjacency
between multisets reduces to an integer transportation problem solved by
max-flow.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .regions import (
    STRATA,
    RegionError,
    StabilityTheory,
    StratumKind,
    classify_grid,
    estimate_stratum_topology,
    eval_membership_grid,
)

INFINITY_VERTEX = "inf"

SYM_PRODUCT_CAP = 10**6


class AdjacencyError(ValueError):
    pass


@dataclass(frozen=True)
class Digraph:
    """Finite digraph with hashable vertex labels; edge set semantics, loops allowed."""

    vertices: tuple
    edges: frozenset

    def __post_init__(self):
        vs = set(self.vertices)
        if len(vs) != len(self.vertices):
            raise AdjacencyError("duplicate vertices")
        for a, b in self.edges:
            if a not in vs or b not in vs:
                raise AdjacencyError(f"edge ({a}, {b}) references a missing vertex")

    @staticmethod
    def of(vertices: Iterable, edges: Iterable) -> "Digraph":
        return Digraph(tuple(vertices), frozenset((a, b) for a, b in edges))

    def has_edge(self, a, b) -> bool:
        return (a, b) in self.edges

    def out_neighbors(self, v) -> list:
        return sorted((b for a, b in self.edges if a == v), key=str)

    def with_loops(self) -> "Digraph":
        return Digraph(self.vertices, self.edges | {(v, v) for v in self.vertices})

    def nonloop_edges(self) -> set:
        return {(a, b) for a, b in self.edges if a != b}

    def weakly_connected(self) -> bool:
        if not self.vertices:
            return True
        neighbors: dict = {v: set() for v in self.vertices}
        for a, b in self.edges:
            neighbors[a].add(b)
            neighbors[b].add(a)
        seen = {self.vertices[0]}
        queue = deque(seen)
        while queue:
            v = queue.popleft()
            for w in neighbors[v]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return len(seen) == len(self.vertices)

    def is_isomorphic_as_labeled(self, other: "Digraph") -> bool:
        return set(self.vertices) == set(other.vertices) and self.edges == other.edges


# ---------------------------------------------------------------------------
# Multiset vertices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MultisetVertex:
    """Size-n multiset over base labels, stored as sorted (label, count) pairs."""

    entries: tuple

    def __post_init__(self):
        if any(c <= 0 for _, c in self.entries):
            raise AdjacencyError("multiplicities must be positive")

    @staticmethod
    def of(counts: Mapping) -> "MultisetVertex":
        return MultisetVertex(tuple(sorted(((k, v) for k, v in counts.items() if v), key=lambda kv: str(kv[0]))))

    @staticmethod
    def from_items(items: Iterable) -> "MultisetVertex":
        counts: dict = {}
        for item in items:
            counts[item] = counts.get(item, 0) + 1
        return MultisetVertex.of(counts)

    @property
    def total(self) -> int:
        return sum(c for _, c in self.entries)

    def count(self, label) -> int:
        for k, v in self.entries:
            if k == label:
                return v
        return 0

    def items(self) -> list:
        out = []
        for k, v in self.entries:
            out.extend([k] * v)
        return out

    def __str__(self) -> str:
        return "{" + ",".join(str(k) for k in self.items()) + "}"


# ---------------------------------------------------------------------------
# Max-flow adjacency criterion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlowWitness:
    """Edge multiplicities mu realizing a stratum adjacency.

    Out-sums at each vertex equal the source multiset, in-sums the target
    multiset; loops count on both sides.
    """

    flows: tuple

    def as_dict(self) -> dict:
        return {edge: mu for edge, mu in self.flows}

    def __str__(self) -> str:
        return ", ".join(f"mu({a}->{b})={mu}" for (a, b), mu in self.flows)


def _max_flow(n_nodes: int, capacity: dict, source: int, sink: int) -> dict:
    """Edmonds-Karp on a small dense-ish graph; returns the flow dict."""
    flow = {edge: 0 for edge in capacity}
    adjacency: dict[int, set[int]] = {i: set() for i in range(n_nodes)}
    for a, b in capacity:
        adjacency[a].add(b)
        adjacency[b].add(a)

    def residual(a, b):
        return capacity.get((a, b), 0) - flow.get((a, b), 0) + flow.get((b, a), 0)

    while True:
        parent = {source: None}
        queue = deque([source])
        while queue and sink not in parent:
            v = queue.popleft()
            for w in sorted(adjacency[v]):
                if w not in parent and residual(v, w) > 0:
                    parent[w] = v
                    queue.append(w)
        if sink not in parent:
            return flow
        path = []
        node = sink
        while parent[node] is not None:
            path.append((parent[node], node))
            node = parent[node]
        bottleneck = min(residual(a, b) for a, b in path)
        for a, b in path:
            back = min(flow.get((b, a), 0), bottleneck)
            if back:
                flow[(b, a)] -= back
            remainder = bottleneck - back
            if remainder:
                flow[(a, b)] = flow.get((a, b), 0) + remainder


def adjacent_flow(graph: Digraph, source: MultisetVertex, target: MultisetVertex
                  ) -> tuple[bool, Optional[FlowWitness]]:
    """Integer feasibility of the adjacency system via max-flow.

    Feasible iff nonnegative integer edge multiplicities exist with
    out-sums = source counts and in-sums = target counts.  Max-flow on the
    bipartite expansion is exact here: the constraint matrix is totally
    unimodular, so the integral optimum needs no rounding.
    """
    n = source.total
    if n != target.total:
        raise AdjacencyError("source and target multisets must have equal totals")
    labels = sorted(set(graph.vertices), key=str)
    for label, _ in source.entries + target.entries:
        if label not in set(labels):
            raise AdjacencyError(f"multiset label {label!r} is not a vertex")
    if n == 0:
        return True, FlowWitness(())
    index = {label: i for i, label in enumerate(labels)}
    k = len(labels)
    src, snk = 2 * k, 2 * k + 1
    capacity: dict[tuple[int, int], int] = {}
    for label, count in source.entries:
        capacity[(src, index[label])] = count
    for label, count in target.entries:
        capacity[(k + index[label], snk)] = count
    for a, b in graph.edges:
        capacity[(index[a], k + index[b])] = n
    flow = _max_flow(2 * k + 2, capacity, src, snk)
    pushed = sum(flow.get((src, index[label]), 0) for label, _ in source.entries)
    if pushed != n:
        return False, None
    witness = []
    for a, b in sorted(graph.edges, key=lambda e: (str(e[0]), str(e[1]))):
        mu = flow.get((index[a], k + index[b]), 0)
        if mu:
            witness.append(((a, b), mu))
    return True, FlowWitness(tuple(witness))


def brute_force_adjacent(graph: Digraph, source: MultisetVertex,
                         target: MultisetVertex, cap: int = 6) -> bool:
    """Independent oracle: enumerate edge assignments for every source slot."""
    n = source.total
    if n != target.total:
        raise AdjacencyError("source and target multisets must have equal totals")
    if n > cap:
        raise AdjacencyError(f"brute force capped at n = {cap}")
    slots = source.items()
    choices = []
    for label in slots:
        outs = [b for a, b in graph.edges if a == label]
        if not outs:
            return False
        choices.append(sorted(outs, key=str))
    want: dict = {}
    for label, count in target.entries:
        want[label] = count
    for assignment in itertools.product(*choices):
        got: dict = {}
        for label in assignment:
            got[label] = got.get(label, 0) + 1
        if got == want:
            return True
    return False


def sym_product_digraph(graph: Digraph, n: int) -> Digraph:
    """The n-th symmetric product: multiset vertices, flow-criterion edges."""
    if n < 1:
        raise AdjacencyError("symmetric product needs n >= 1")
    count = math.comb(len(graph.vertices) + n - 1, n)
    if count > SYM_PRODUCT_CAP:
        raise AdjacencyError("symmetric product too large to enumerate")
    base = sorted(graph.vertices, key=str)
    vertices = [
        MultisetVertex.from_items(combo)
        for combo in itertools.combinations_with_replacement(base, n)
    ]
    edges = set()
    for a in vertices:
        for b in vertices:
            ok, _ = adjacent_flow(graph, a, b)
            if ok:
                edges.add((a, b))
    return Digraph(tuple(vertices), frozenset(edges))


# ---------------------------------------------------------------------------
# Base digraphs of stability theories
# ---------------------------------------------------------------------------


def base_adjacency(theory: StabilityTheory, numeric: bool = False,
                   samples: int = 100_000) -> Digraph:
    """Adjacency digraph of the theory's nonempty strata.

    Config-declared edges win when present; otherwise strata are sampled on
    the theory's window and an edge (i, j) is recorded when some sample of
    stratum j lies within twice the sampling pitch of stratum i's cloud.
    Loops are always present.
    """
    vertices = tuple(s.value for s in theory.nonempty_strata())
    if theory.adjacency_edges is not None and not numeric:
        edges = {(a, b) for a, b in theory.adjacency_edges if a in vertices and b in vertices}
        return Digraph(vertices, frozenset(edges)).with_loops()
    edges = _numeric_adjacency(theory, vertices, samples)
    return Digraph(vertices, frozenset(edges)).with_loops()


_PROBE_DIRECTIONS = 24
_PROBE_SCALES = (1e-3, 1e-5, 1e-7)  # relative to the window diagonal


def _numeric_adjacency(theory: StabilityTheory, vertices, samples: int) -> set:
    """Estimate closure adjacencies from sample clouds.

    Each stratum gets a cloud of quasi-random window samples plus
    Newton-polished points on the region's boundary curves (the only places
    closures can meet).  An edge (i, j) is recorded when some stratum-j
    sample lies within twice the sampling pitch of stratum i's cloud and,
    decisively, keeps stratum-i points on circles of shrinking radius around
    it: that limit-point probe separates touching closures from strata that
    are merely close at the sampling pitch.
    """
    x0, x1, y0, y1 = theory.window
    side = max(16, int(math.sqrt(samples)))
    pitch = max(x1 - x0, y1 - y0) / side
    diag = math.hypot(x1 - x0, y1 - y0)
    rng = np.random.default_rng(20240617)
    gx = np.linspace(x0, x1, side, endpoint=False) + (x1 - x0) / (2 * side)
    gy = np.linspace(y0, y1, side, endpoint=False) + (y1 - y0) / (2 * side)
    mx, my = np.meshgrid(gx, gy, indexing="ij")
    jitter = pitch / 4
    px = (mx + rng.uniform(-jitter, jitter, mx.shape)).ravel()
    py = (my + rng.uniform(-jitter, jitter, my.shape)).ravel()
    kinds = classify_grid(theory, px, py)
    clouds: dict[str, np.ndarray] = {}
    curve_clouds: dict[str, np.ndarray] = {}
    for stratum, code in ((StratumKind.STABLE, 0), (StratumKind.SEMISTABLE, 1),
                          (StratumKind.UNSTABLE, 2)):
        sel = kinds == code
        clouds[stratum.value] = np.column_stack([px[sel], py[sel]])
        curve_clouds[stratum.value] = np.empty((0, 2))
    for name, pts in _curve_cloud(theory, min(side, 512)).items():
        curve_clouds[name] = pts
        clouds[name] = np.concatenate([clouds[name], pts]) if len(clouds[name]) else pts
    for name in vertices:
        if len(clouds[name]) == 0:
            raise AdjacencyError(
                f"stratum {name} produced no samples (sub-resolution set); "
                "declare adjacency edges in the config"
            )
    code_of = {"s": 0, "ss": 1, "un": 2}
    edges = set()
    for a in vertices:
        hashed = _hash_cloud(clouds[a], 2 * pitch)
        for b in vertices:
            if a == b:
                continue
            candidates = _candidates(clouds[b], curve_clouds[b], hashed, 2 * pitch)
            if len(candidates) == 0:
                continue
            if _limit_probe(theory, candidates, code_of[a], diag):
                edges.add((a, b))
    return edges


def _hash_cloud(cloud: np.ndarray, cell: float) -> dict:
    buckets: dict[tuple[int, int], list[int]] = {}
    for idx, (x, y) in enumerate(cloud):
        buckets.setdefault((int(x // cell), int(y // cell)), []).append(idx)
    return {"cloud": cloud, "cell": cell, "buckets": buckets}


def _within(hashed: dict, x: float, y: float) -> bool:
    cell = hashed["cell"]
    cloud = hashed["cloud"]
    ci, cj = int(x // cell), int(y // cell)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            for idx in hashed["buckets"].get((ci + di, cj + dj), ()):
                xa, ya = cloud[idx]
                if (xa - x) ** 2 + (ya - y) ** 2 <= cell * cell:
                    return True
    return False


def _candidates(cloud: np.ndarray, curve_cloud: np.ndarray, hashed: dict,
                threshold: float, bulk_cap: int = 200) -> np.ndarray:
    """Curve samples first (true limit candidates), plus a few bulk samples."""
    del threshold
    picks = [p for p in curve_cloud if _within(hashed, p[0], p[1])]
    step = max(1, len(cloud) // bulk_cap)
    picks.extend(p for p in cloud[::step] if _within(hashed, p[0], p[1]))
    return np.array(picks) if picks else np.empty((0, 2))


def _limit_probe(theory: StabilityTheory, candidates: np.ndarray, want_code: int,
                 diag: float) -> bool:
    angles = np.linspace(0.0, 2 * math.pi, _PROBE_DIRECTIONS, endpoint=False) + 0.17
    cos, sin = np.cos(angles), np.sin(angles)
    alive = candidates
    for scale in _PROBE_SCALES:
        radius = scale * diag
        if len(alive) == 0:
            return False
        probe_x = alive[:, 0:1] + radius * cos[None, :]
        probe_y = alive[:, 1:2] + radius * sin[None, :]
        hit = (classify_grid(theory, probe_x, probe_y) == want_code).any(axis=1)
        alive = alive[hit]
    return len(alive) > 0


def _curve_cloud(theory: StabilityTheory, resolution: int) -> dict[str, np.ndarray]:
    """Classified, Newton-polished samples on the region's leaf curves."""
    from .regions import _corner_grid, _dedupe_leaves, _marching_squares

    x0, x1, y0, y1 = theory.window
    hx = (x1 - x0) / resolution
    hy = (y1 - y0) / resolution
    cx, cy = _corner_grid(theory.window, resolution)
    buckets: dict[str, list] = {"s": [], "ss": [], "un": []}
    for poly in _dedupe_leaves(theory.region):
        values = poly.evaluate(cx, cy)
        if not (np.any(values > 0) and np.any(values < 0)):
            continue
        fx, fy = poly.gradient()
        segments, coords = _marching_squares(values)
        for a, b in segments:
            pa, pb = coords[a], coords[b]
            qx = x0 + (pa[0] + pb[0]) / 2 * hx
            qy = y0 + (pa[1] + pb[1]) / 2 * hy
            for _ in range(3):  # Newton toward the leaf zero set
                v = poly.evaluate(qx, qy)
                gx_v, gy_v = fx.evaluate(qx, qy), fy.evaluate(qx, qy)
                norm2 = gx_v * gx_v + gy_v * gy_v
                if norm2 < 1e-30:
                    break
                qx -= v * gx_v / norm2
                qy -= v * gy_v / norm2
            try:
                from .regions import classify_point

                kind = classify_point(theory, complex(qx, qy))
            except Exception:
                continue
            buckets[kind.value].append((qx, qy))
    return {name: np.array(pts) for name, pts in buckets.items() if pts}


def local_base_digraph(theory: StabilityTheory) -> Digraph:
    """Base digraph refined by the degree filtration: an extra infinity vertex.

    The infinity vertex has a loop and receives edges from every declared
    unbounded stratum; it has no outgoing edges, since the closure of a point
    meets nothing else.
    """
    if theory.mode != "projective":
        raise AdjacencyError("local digraphs need a projective theory")
    base = base_adjacency(theory)
    vertices = base.vertices + (INFINITY_VERTEX,)
    edges = set(base.edges)
    edges.add((INFINITY_VERTEX, INFINITY_VERTEX))
    for s in theory.unbounded_strata:
        if s.value in base.vertices:
            edges.add((s.value, INFINITY_VERTEX))
    return Digraph(vertices, frozenset(edges))


def local_adjacency(theory: StabilityTheory, n: int) -> Digraph:
    """Symmetric product of the local base digraph: degree-change adjacency."""
    return sym_product_digraph(local_base_digraph(theory), n)


# ---------------------------------------------------------------------------
# Digraph shape validators
# ---------------------------------------------------------------------------

_THEORY_LABELS = ("s", "ss", "un")


def validate_theory_digraph(graph: Digraph) -> tuple[bool, list[str]]:
    """The five realizability conditions for a base adjacency digraph.

    Loops at every vertex; weak connectivity; no non-loop in-edges at un;
    edge (s, ss) whenever both exist; ss present implies s present.
    """
    reasons = []
    labels = set(graph.vertices)
    if not labels:
        reasons.append("digraph has no vertices")
        return False, reasons
    if not labels <= set(_THEORY_LABELS):
        reasons.append("vertices must be marked with s, ss, un")
    if len(labels) > 3:
        reasons.append("at most three vertices")
    for v in graph.vertices:
        if not graph.has_edge(v, v):
            reasons.append(f"missing loop at vertex {v}")
    if not graph.weakly_connected():
        reasons.append("digraph is not weakly connected")
    if "un" in labels:
        for a, b in graph.nonloop_edges():
            if b == "un":
                reasons.append("no ingoing edges at vertex un")
                break
    if {"s", "ss"} <= labels and not graph.has_edge("s", "ss"):
        reasons.append("edge (s, ss) required when both strata are present")
    if "ss" in labels and "s" not in labels:
        reasons.append("semistable stratum requires a stable stratum")
    return not reasons, reasons


def validate_local_digraph(graph: Digraph) -> tuple[bool, list[str]]:
    """The seven realizability conditions for a degree-filtered digraph."""
    reasons = []
    labels = set(graph.vertices)
    if not labels <= set(_THEORY_LABELS) | {INFINITY_VERTEX}:
        reasons.append("vertices must be marked with s, ss, un, inf")
    if len(labels) > 4:
        reasons.append("at most four vertices")
    for v in graph.vertices:
        if not graph.has_edge(v, v):
            reasons.append(f"missing loop at vertex {v}")
    if not graph.weakly_connected():
        reasons.append("digraph is not weakly connected")
    if "un" in labels:
        for a, b in graph.nonloop_edges():
            if b == "un":
                reasons.append("no ingoing edges at vertex un")
                break
    if {"s", "ss"} <= labels and not graph.has_edge("s", "ss"):
        reasons.append("edge (s, ss) required when both strata are present")
    if "ss" in labels and "s" not in labels:
        reasons.append("semistable stratum requires a stable stratum")
    if INFINITY_VERTEX not in labels:
        reasons.append("infinity vertex required")
    else:
        for a, b in graph.nonloop_edges():
            if a == INFINITY_VERTEX:
                reasons.append("no outgoing edges from infinity")
                break
    return not reasons, reasons


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def dot_export(graph: Digraph, name: str = "adjacency") -> str:
    """Deterministic DOT text: vertices and edges in sorted order."""
    def fmt(v) -> str:
        return f"\"{v}\""

    lines = [f"digraph {name} {{"]
    for v in sorted(graph.vertices, key=str):
        lines.append(f"  {fmt(v)};")
    for a, b in sorted(graph.edges, key=lambda e: (str(e[0]), str(e[1]))):
        lines.append(f"  {fmt(a)} -> {fmt(b)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def digraph_to_dict(graph: Digraph, witnesses: bool = False) -> dict:
    out = {
        "vertices": [str(v) for v in sorted(graph.vertices, key=str)],
        "edges": [[str(a), str(b)] for a, b in sorted(graph.edges, key=lambda e: (str(e[0]), str(e[1])))],
    }
    return out
