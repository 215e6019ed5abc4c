"""D-decomposition of one- and two-parameter affine families.

Each grid cell of the parameter window is classified by the stability index
of the family member at the cell center; maximal 4-connected runs of equal
index become the decomposition regions, and cells with semistable roots form
the decomposition border.
"""
from __future__ import annotations

import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .polys import ComplexPoly, PolynomialError, StabilityIndex, as_matrix
from .regions import StabilityTheory, StratumKind, eval_membership_grid

TRIM_RELATIVE = 1e-12
MAX_RESOLUTION = 4096


class FamilyError(ValueError):
    pass


def _pad(coeffs: Sequence[complex], width: int) -> np.ndarray:
    arr = np.zeros(width, dtype=complex)
    data = np.asarray(tuple(coeffs), dtype=complex)
    arr[: len(data)] = data
    return arr


@dataclass(frozen=True)
class AffineFamily:
    """f0 + sum h_i f_i with raw coefficient tuples, ascending degree.

    The base may be identically zero (the member then degenerates at h = 0),
    but at least one generator must be nonzero.
    """

    base: tuple[complex, ...]
    generators: tuple[tuple[complex, ...], ...]

    def __post_init__(self):
        if not (1 <= len(self.generators) <= 2):
            raise FamilyError("parameter dimension must be 1 or 2")
        if all(all(c == 0 for c in g) for g in self.generators):
            raise FamilyError("at least one generator must be nonzero")
        object.__setattr__(self, "base", tuple(complex(c) for c in self.base))
        object.__setattr__(
            self, "generators", tuple(tuple(complex(c) for c in g) for g in self.generators)
        )

    @property
    def parameter_dim(self) -> int:
        return len(self.generators)

    @property
    def ambient_degree(self) -> int:
        degree = 0
        for coeffs in (self.base,) + self.generators:
            for k, c in enumerate(coeffs):
                if c != 0:
                    degree = max(degree, k)
        return degree

    @staticmethod
    def from_polys(base: Optional[ComplexPoly], *generators: ComplexPoly) -> "AffineFamily":
        return AffineFamily(
            base.coefficients if base is not None else (0j,),
            tuple(g.coefficients for g in generators),
        )


@dataclass(frozen=True)
class MatrixFamily:
    """A0 + sum h_i A_i over equal-size square matrices."""

    base: np.ndarray
    generators: tuple[np.ndarray, ...]

    def __post_init__(self):
        base = as_matrix(self.base)
        gens = tuple(as_matrix(g) for g in self.generators)
        if not (1 <= len(gens) <= 2):
            raise FamilyError("parameter dimension must be 1 or 2")
        if any(g.shape != base.shape for g in gens):
            raise FamilyError("family matrices must share one size")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "generators", gens)

    @property
    def parameter_dim(self) -> int:
        return len(self.generators)

    @property
    def size(self) -> int:
        return self.base.shape[0]

    @property
    def ambient_degree(self) -> int:
        return self.size


def evaluate_family(fam: AffineFamily, h: Sequence[float]) -> Optional[ComplexPoly]:
    """The member polynomial at parameter h, or None when it degenerates.

    Trailing coefficients below 1e-12 of the member's own scale are trimmed
    (recording a degree drop); a member trimmed to nothing is degenerate.
    """
    if len(h) != fam.parameter_dim:
        raise FamilyError("parameter vector has the wrong dimension")
    width = fam.ambient_degree + 1
    coeffs = _pad(fam.base, width)
    for hi, gen in zip(h, fam.generators):
        coeffs = coeffs + float(hi) * _pad(gen, width)
    scale = float(np.max(np.abs(coeffs)))
    if scale == 0.0:
        return None
    keep = np.abs(coeffs) > TRIM_RELATIVE * scale
    top = int(np.max(np.nonzero(keep))) if keep.any() else -1
    if top < 0:
        return None
    return ComplexPoly(tuple(coeffs[: top + 1]))


# ---------------------------------------------------------------------------
# Scanning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecompositionMap:
    """Raster of stability indices over a parameter window.

    indices has shape (nx, ny, 3); degenerate cells carry (-1, -1, -1) and
    label 0.  Labels number the maximal 4-connected constant-index regions
    from 1 in row-major discovery order; border cells (semistable count > 0)
    form their own index classes.
    """

    theory_name: str
    family_kind: str
    window: tuple[float, float, float, float]
    shape: tuple[int, int]
    ambient_degree: int
    indices: np.ndarray
    labels: np.ndarray

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        x0, x1, y0, y1 = self.window
        nx, ny = self.shape
        return (x0 + (i + 0.5) * (x1 - x0) / nx, y0 + (j + 0.5) * (y1 - y0) / ny)

    def index_at(self, i: int, j: int) -> Optional[StabilityIndex]:
        k, l, m = (int(v) for v in self.indices[i, j])
        if k < 0:
            return None
        return StabilityIndex(k, l, m)

    def region_count(self) -> int:
        return int(self.labels.max())


def _classify_batch(theory: StabilityTheory, roots: np.ndarray) -> np.ndarray:
    """Counts (stable, semistable, unstable) per row of a roots matrix."""
    x = roots.real
    y = roots.imag
    tol = theory.boundary_tolerance
    strict = eval_membership_grid(theory.region, x, y, relaxed=False, tol=tol)
    relaxed = eval_membership_grid(theory.region, x, y, relaxed=True, tol=tol)
    if theory.origin_stratum is not None:
        near0 = (np.abs(x) <= tol) & (np.abs(y) <= tol)
        if near0.any():
            strict = strict.copy()
            relaxed = relaxed.copy()
            code = theory.origin_stratum
            strict[near0] = code == StratumKind.STABLE
            relaxed[near0] = code != StratumKind.UNSTABLE
    stable = strict.sum(axis=1)
    semi = (relaxed & ~strict).sum(axis=1)
    unstable = (~relaxed).sum(axis=1)
    return np.column_stack([stable, semi, unstable]).astype(np.int32)


def _batched_eigvals(matrices: np.ndarray, threads: Optional[int]) -> np.ndarray:
    if threads is None or threads <= 1 or matrices.shape[0] < 4096:
        return np.linalg.eigvals(matrices)
    chunks = np.array_split(matrices, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(np.linalg.eigvals, chunks))
    return np.concatenate(parts)


def _companion_batch(coeffs: np.ndarray) -> np.ndarray:
    """Companion matrices for monic-normalized coefficient rows (deg >= 1)."""
    g, width = coeffs.shape
    d = width - 1
    monic = coeffs / coeffs[:, -1:]
    mats = np.zeros((g, d, d), dtype=complex)
    if d > 1:
        idx = np.arange(d - 1)
        mats[:, idx + 1, idx] = 1.0
    mats[:, :, -1] = -monic[:, :d]
    return mats


def scan(
    theory: StabilityTheory,
    family: AffineFamily | MatrixFamily,
    window: Sequence[float],
    resolution: int | Sequence[int],
    threads: Optional[int] = None,
) -> DecompositionMap:
    """Classify every cell of the parameter window by stability index.

    One-parameter families scan a segment (shape (resolution, 1)); matrix
    families classify eigenvalues of the pencil member directly, which
    coincides with the characteristic polynomial route.  In projective mode
    a degree drop classifies the deficit at infinity; in monic mode a
    degree-dropped cell is degenerate.
    """
    r = family.parameter_dim
    if isinstance(resolution, int):
        shape = (resolution, resolution if r == 2 else 1)
    else:
        shape = tuple(resolution)
    nx, ny = shape
    if nx < 1 or ny < 1 or max(nx, ny) > MAX_RESOLUTION:
        raise FamilyError(f"resolution must be within 1..{MAX_RESOLUTION}")
    win = tuple(float(v) for v in window)
    if len(win) == 2:
        win = (win[0], win[1], 0.0, 1.0)
    x0, x1, y0, y1 = win
    if not (x1 > x0) or (r == 2 and not (y1 > y0)):
        raise FamilyError("window must be nondegenerate")

    hx = x0 + (np.arange(nx) + 0.5) * (x1 - x0) / nx
    hy = y0 + (np.arange(ny) + 0.5) * (y1 - y0) / ny if r == 2 else np.zeros(ny)
    h1 = np.repeat(hx, ny)
    h2 = np.tile(hy, nx)
    ncells = nx * ny

    indices = np.full((ncells, 3), -1, dtype=np.int32)
    ambient = family.ambient_degree

    if isinstance(family, MatrixFamily):
        mats = family.base[None, :, :] + h1[:, None, None] * family.generators[0]
        if r == 2:
            mats = mats + h2[:, None, None] * family.generators[1]
        roots = _batched_eigvals(mats, threads)
        indices[:, :] = _classify_batch(theory, roots)
    else:
        width = ambient + 1
        coeffs = _pad(family.base, width)[None, :] + h1[:, None] * _pad(family.generators[0], width)[None, :]
        if r == 2:
            coeffs = coeffs + h2[:, None] * _pad(family.generators[1], width)[None, :]
        mags = np.abs(coeffs)
        scale = mags.max(axis=1)
        live = scale > 0
        keep = mags > TRIM_RELATIVE * scale[:, None]
        degrees = np.where(
            keep.any(axis=1), width - 1 - np.argmax(keep[:, ::-1], axis=1), -1
        )
        degrees[~live] = -1
        inf_code = {
            StratumKind.STABLE: 0,
            StratumKind.SEMISTABLE: 1,
            StratumKind.UNSTABLE: 2,
        }.get(theory.infinity_stratum)
        for d in sorted(set(degrees.tolist())):
            sel = degrees == d
            if d < 0:
                continue
            if theory.mode == "monic" and d < ambient:
                continue  # stays degenerate
            counts = np.zeros((int(sel.sum()), 3), dtype=np.int32)
            if d >= 1:
                mats = _companion_batch(coeffs[sel][:, : d + 1])
                roots = _batched_eigvals(mats, threads)
                counts = _classify_batch(theory, roots)
            deficit = ambient - d
            if deficit:
                counts[:, inf_code] += deficit
            indices[sel] = counts

    indices = indices.reshape(nx, ny, 3)
    labels = _label_regions(indices)
    return DecompositionMap(
        theory_name=theory.name,
        family_kind="matrix" if isinstance(family, MatrixFamily) else "polynomial",
        window=win,
        shape=shape,
        ambient_degree=ambient,
        indices=indices,
        labels=labels,
    )


def _label_regions(indices: np.ndarray) -> np.ndarray:
    nx, ny, _ = indices.shape
    labels = np.zeros((nx, ny), dtype=np.int32)
    parent = list(range(nx * ny))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    flat = indices.reshape(-1, 3)
    valid = flat[:, 0] >= 0
    same_right = np.all(indices[:, :-1] == indices[:, 1:], axis=2)
    same_down = np.all(indices[:-1, :] == indices[1:, :], axis=2)
    for i in range(nx):
        base = i * ny
        for j in range(ny):
            cell = base + j
            if not valid[cell]:
                continue
            if j + 1 < ny and valid[cell + 1] and same_right[i, j]:
                ra, rb = find(cell), find(cell + 1)
                if ra != rb:
                    parent[rb] = ra
            if i + 1 < nx and valid[cell + ny] and same_down[i, j]:
                ra, rb = find(cell), find(cell + ny)
                if ra != rb:
                    parent[rb] = ra
    next_label = 1
    assigned: dict[int, int] = {}
    flat_labels = labels.reshape(-1)
    for cell in range(nx * ny):
        if not valid[cell]:
            continue
        root = find(cell)
        if root not in assigned:
            assigned[root] = next_label
            next_label += 1
        flat_labels[cell] = assigned[root]
    return labels


# ---------------------------------------------------------------------------
# Region tables and export
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegionRow:
    label: int
    index: tuple[int, int, int]
    cells: int
    bbox: tuple[float, float, float, float]


def extract_regions(decomposition: DecompositionMap) -> list[RegionRow]:
    """Table of (label, index, cell count, bounding box), largest first."""
    nx, ny = decomposition.shape
    rows: dict[int, dict] = {}
    for i in range(nx):
        for j in range(ny):
            label = int(decomposition.labels[i, j])
            if label == 0:
                continue
            h1, h2 = decomposition.cell_center(i, j)
            entry = rows.get(label)
            if entry is None:
                k, l, m = (int(v) for v in decomposition.indices[i, j])
                rows[label] = {
                    "index": (k, l, m),
                    "cells": 1,
                    "bbox": [h1, h1, h2, h2],
                }
            else:
                entry["cells"] += 1
                bbox = entry["bbox"]
                bbox[0] = min(bbox[0], h1)
                bbox[1] = max(bbox[1], h1)
                bbox[2] = min(bbox[2], h2)
                bbox[3] = max(bbox[3], h2)
    table = [
        RegionRow(label, data["index"], data["cells"], tuple(data["bbox"]))
        for label, data in rows.items()
    ]
    table.sort(key=lambda row: (-row.cells, row.label))
    return table


def export(decomposition: DecompositionMap, fmt: str) -> bytes:
    """Serialize a scanned map; output is byte-identical for fixed inputs.

    pgm: P2 grayscale, one gray level per region label, 0 for border and
    degenerate cells.  csv: one row (i, j, h1, h2, k, l, m, label) per cell.
    json: the full structured dump.
    """
    if fmt == "pgm":
        return _export_pgm(decomposition)
    if fmt == "csv":
        return _export_csv(decomposition)
    if fmt == "json":
        return _export_json(decomposition)
    raise FamilyError(f"unsupported export format {fmt!r}")


def _export_pgm(decomposition: DecompositionMap) -> bytes:
    nx, ny = decomposition.shape
    labels = decomposition.labels
    semistable = decomposition.indices[:, :, 1] > 0
    degenerate = decomposition.indices[:, :, 0] < 0
    gray = np.where(semistable | degenerate, 0, labels)
    maxval = max(int(gray.max()), 1)
    out = io.StringIO()
    out.write("P2\n")
    out.write(f"{nx} {ny}\n")
    out.write(f"{maxval}\n")
    # Rows top-to-bottom correspond to decreasing h2.
    for j in range(ny - 1, -1, -1):
        out.write(" ".join(str(int(gray[i, j])) for i in range(nx)))
        out.write("\n")
    return out.getvalue().encode("ascii")


def _export_csv(decomposition: DecompositionMap) -> bytes:
    nx, ny = decomposition.shape
    out = io.StringIO()
    for i in range(nx):
        for j in range(ny):
            h1, h2 = decomposition.cell_center(i, j)
            k, l, m = (int(v) for v in decomposition.indices[i, j])
            label = int(decomposition.labels[i, j])
            out.write(f"{i},{j},{h1:.12g},{h2:.12g},{k},{l},{m},{label}\n")
    return out.getvalue().encode("ascii")


def _export_json(decomposition: DecompositionMap) -> bytes:
    payload = {
        "theory": decomposition.theory_name,
        "family": decomposition.family_kind,
        "window": list(decomposition.window),
        "shape": list(decomposition.shape),
        "ambient_degree": decomposition.ambient_degree,
        "indices": decomposition.indices.tolist(),
        "labels": decomposition.labels.tolist(),
        "regions": [
            {
                "label": row.label,
                "index": list(row.index),
                "cells": row.cells,
                "bbox": list(row.bbox),
            }
            for row in extract_regions(decomposition)
        ],
    }
    return (json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n").encode("ascii")
