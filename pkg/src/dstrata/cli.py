"""Command-line surface.

Every subcommand writes deterministic text to stdout (or structured JSON
with --json), exits 0 on success, 2 on usage errors and 1 on domain errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import adjacency as adj
from . import curves, ddecomp, polys, topology
from . import regions as reg


class CliError(Exception):
    pass


def _emit(args, payload: dict, text: str):
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


def _theory(args) -> reg.StabilityTheory:
    name = args.theory
    params = []
    if "(" in name and name.endswith(")"):
        base, inner = name.split("(", 1)
        name = base
        for tok in inner[:-1].split(","):
            tok = tok.strip()
            if tok:
                params.append(polys.parse_complex(tok) if "i" in tok else float(tok))
    if getattr(args, "params", None):
        for tok in args.params.split(","):
            params.append(polys.parse_complex(tok) if "i" in tok else float(tok))
    if os.path.exists(args.theory):
        theory = reg.load_theory(args.theory)
    elif name.lower().replace("-", "_") in reg.BUILTIN_NAMES:
        mode = "monic" if getattr(args, "monic", False) else "projective"
        theory = reg.builtin_theory(name, params, mode=mode)
    else:
        raise CliError(f"unknown theory {args.theory!r} (not a built-in, not a file)")
    if getattr(args, "tol", None):
        from dataclasses import replace

        theory = replace(theory, boundary_tolerance=args.tol)
    return theory


def _parse_index(text: str) -> tuple[int, int, int]:
    parts = [int(v) for v in text.split(",")]
    if len(parts) != 3:
        raise CliError("index must be k,l,m")
    return tuple(parts)  # type: ignore[return-value]


def _parse_multiset(text: str) -> adj.MultisetVertex:
    # Either counts "k,l,m[,inf]" over (s, ss, un, inf) or labels "s,s,un".
    toks = [t.strip() for t in text.split(",")]
    if all(t.lstrip("-").isdigit() for t in toks):
        counts = [int(t) for t in toks]
        if len(counts) == 3:
            counts.append(0)
        if len(counts) != 4:
            raise CliError("multiset counts must be k,l,m or k,l,m,inf")
        return adj.MultisetVertex.of(
            {"s": counts[0], "ss": counts[1], "un": counts[2], "inf": counts[3]}
        )
    return adj.MultisetVertex.from_items(toks)


def _load_matrix(path: str) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rows.append([polys.parse_complex(tok) for tok in line.split(",")])
    return np.array(rows, dtype=complex)


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_classify(args) -> int:
    theory = _theory(args)
    if args.matrix:
        p = polys.char_poly(_load_matrix(args.matrix))
        ambient = args.ambient or p.degree
    else:
        p = polys.parse_poly(args.poly)
        ambient = args.ambient or p.degree
    index = polys.stability_index(theory, p, ambient)
    details = polys.classify_roots(theory, p, ambient)
    payload = {
        "theory": theory.name,
        "index": list(index.as_tuple()),
        "ambient_degree": ambient,
        "roots": [
            {
                "root": "inf" if rc.root is None else polys.format_complex(rc.root),
                "multiplicity": rc.multiplicity,
                "stratum": rc.stratum.value,
                "tolerance_limited": rc.tolerance_limited,
            }
            for rc in details
        ],
    }
    text = str(index)
    if args.verbose:
        lines = [text]
        for rc in details:
            where = "inf" if rc.root is None else polys.format_complex(rc.root)
            flag = " [tolerance-limited]" if rc.tolerance_limited else ""
            lines.append(f"  root {where} x{rc.multiplicity}: {rc.stratum.value}{flag}")
        text = "\n".join(lines)
    _emit(args, payload, text)
    return 0


def _cmd_theory_info(args) -> int:
    theory = _theory(args)
    payload = theory.to_config()
    lines = [f"theory: {theory.name}", f"mode: {theory.mode}"]
    if theory.infinity_stratum is not None:
        lines.append(f"infinity: {theory.infinity_stratum.value}")
    if theory.stratum_topology is not None:
        topo = theory.stratum_topology
        lines.append(f"b0: {topo.b0()}  b1: {topo.b1()}")
    if theory.adjacency_edges is not None:
        lines.append("adjacency: " + ", ".join(f"{a}->{b}" for a, b in sorted(theory.adjacency_edges)))
    _emit(args, payload, "\n".join(lines))
    return 0


def _cmd_validate(args) -> int:
    theory = _theory(args)
    report = reg.validate_theory(theory, resolution=args.res or 128)
    payload = {
        "errors": report.errors,
        "warnings": report.warnings,
        "notes": report.notes,
        "consistent": report.consistent,
    }
    _emit(args, payload, str(report))
    return 1 if report.errors else 0


def _cmd_strata(args) -> int:
    op = args.operation
    index = _parse_index(args.index) if args.index else None
    if op != "poset":
        if not args.theory:
            raise CliError(f"strata {op} requires --theory")
        theory = _theory(args)
    if op == "components":
        count = topology.component_count(theory.own_topology(), index)
        _emit(args, {"components": str(count)}, str(count))
    elif op == "betti":
        if args.u is None:
            values = [
                str(topology.betti(theory.own_topology(), index, u))
                for u in range(sum(index) + 1)
            ]
            _emit(args, {"betti": values}, ",".join(values))
        else:
            value = topology.betti(theory.own_topology(), index, args.u)
            _emit(args, {"betti": str(value), "u": args.u}, str(value))
    elif op in ("homotopy", "pi1"):
        specs = topology.enumerate_components(theory.own_topology(), index)
        rows = []
        for spec in specs:
            if op == "homotopy":
                rows.append((spec.label(), str(topology.homotopy_type(spec))))
            else:
                rows.append((spec.label(), str(topology.fundamental_group(spec))))
        payload = {"components": [{"factors": a, "value": b} for a, b in rows]}
        _emit(args, payload, "\n".join(f"{a}: {b}" for a, b in rows))
    elif op == "poset":
        poset = topology.pole_placement_poset(args.poles, args.ambient, args.min_card)
        payload = {
            "counts": {str(c): n for c, n in sorted(poset.counts.items())},
            "elements": ["".join(map(str, e)) for e in poset.elements],
            "covers": [
                ["".join(map(str, a)), "".join(map(str, b))] for a, b in poset.cover_edges
            ],
        }
        lines = [
            f"codim {c}: {n} subspaces" for c, n in sorted(poset.counts.items())
        ] + [f"cover: {''.join(map(str, a))} < {''.join(map(str, b))}" for a, b in poset.cover_edges]
        _emit(args, payload, "\n".join(lines))
    elif op == "local":
        info = topology.local_stratum_info(theory, index, args.ambient)
        payload = {
            "index": list(info.index),
            "ambient_degree": info.ambient_degree,
            "component_count": str(info.component_count),
            "betti": [str(b) for b in info.betti],
        }
        _emit(args, payload, str(info))
    else:
        raise CliError(f"unknown strata operation {op!r}")
    return 0


def _graph_output(args, graph: adj.Digraph) -> int:
    if args.json:
        print(json.dumps(adj.digraph_to_dict(graph), sort_keys=True))
    else:
        sys.stdout.write(adj.dot_export(graph))
    return 0


def _cmd_adjacency(args) -> int:
    theory = _theory(args)
    graph = adj.base_adjacency(theory, numeric=args.numeric)
    if args.power > 1:
        graph = adj.sym_product_digraph(graph, args.power)
    return _graph_output(args, graph)


def _cmd_local_adjacency(args) -> int:
    theory = _theory(args)
    graph = adj.local_adjacency(theory, args.power)
    return _graph_output(args, graph)


def _cmd_adjacent(args) -> int:
    theory = _theory(args)
    if args.local:
        graph = adj.local_base_digraph(theory)
    else:
        graph = adj.base_adjacency(theory)
    source = _parse_multiset(getattr(args, "from"))
    target = _parse_multiset(args.to)
    ok, witness = adj.adjacent_flow(graph, source, target)
    payload = {"adjacent": ok}
    if witness is not None:
        payload["witness"] = {f"{a}->{b}": mu for (a, b), mu in witness.flows}
    text = "yes" if ok else "no"
    if ok and witness is not None and witness.flows:
        text += "  " + str(witness)
    _emit(args, payload, text)
    return 0


def _cmd_ddecomp(args) -> int:
    theory = _theory(args)
    if args.matrix:
        mats = [_load_matrix(path) for path in args.matrix]
        if len(mats) < 2:
            raise CliError("matrix family needs a base and at least one generator")
        family: ddecomp.AffineFamily | ddecomp.MatrixFamily = ddecomp.MatrixFamily(
            mats[0], tuple(mats[1:])
        )
    else:
        if not args.base or not args.gen:
            raise CliError("polynomial family needs --base and at least one --gen")
        base = tuple(polys.parse_complex(tok) for tok in args.base.split(","))
        gens = tuple(
            tuple(polys.parse_complex(tok) for tok in g.split(",")) for g in args.gen
        )
        family = ddecomp.AffineFamily(base, gens)
    window = tuple(float(v) for v in args.window.split(","))
    result = ddecomp.scan(theory, family, window, args.res, threads=args.threads)
    fmt = args.format
    if fmt is None and args.out:
        fmt = os.path.splitext(args.out)[1].lstrip(".").lower() or "json"
    fmt = fmt or "json"
    blob = ddecomp.export(result, fmt)
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(blob)
        table = ddecomp.extract_regions(result)
        summary = {
            "out": args.out,
            "format": fmt,
            "regions": len(table),
            "largest": [
                {"label": r.label, "index": list(r.index), "cells": r.cells}
                for r in table[:5]
            ],
        }
        _emit(args, summary, f"wrote {args.out} ({fmt}); {len(table)} regions")
    else:
        sys.stdout.buffer.write(blob)
    return 0


def _cmd_curve(args) -> int:
    op = args.operation
    if op == "classify":
        f = curves.BivarPoly.parse(args.poly)
        report = curves.classify_standard(f)
        payload = {
            "kind": report["kind"],
            "theory": report["theory"],
            "conj_invariant": report["conj_invariant"],
            "inv_invariant": report["inv_invariant"],
            "signs": report["signs"],
        }
        text = report["kind"] + (f" ({report['theory']})" if report["theory"] else "")
        text += f"; conj={report['conj_invariant']} inv={report['inv_invariant']}"
        text += f"; signs 0:{report['signs']['sign_at_zero']} inf:{report['signs']['sign_at_infinity']}"
        _emit(args, payload, text)
    elif op == "orbit":
        f = curves.BivarPoly.parse(args.poly)
        result = curves.orbit_polynomial(f)
        _emit(args, {"orbit": result.to_map()}, str(result))
    elif op == "invariant":
        f = curves.BivarPoly.parse(args.poly)
        ok, scale = curves.is_invariant(f, args.transform)
        payload = {"invariant": ok, "scale": str(scale) if scale is not None else None}
        _emit(args, payload, f"{'yes' if ok else 'no'}" + (f" (scale {scale})" if ok else ""))
    elif op == "inv-transform":
        f = curves.BivarPoly.parse(args.poly)
        g, tau = curves.inv_transform(f)
        _emit(args, {"poly": g.to_map(), "tau": tau}, f"{g}  (tau={tau})")
    elif op == "palindromic":
        coeffs = {}
        for item in args.coeff or ():
            key, val = item.split("=")
            i, j = (int(t) for t in key.split(","))
            coeffs[(i, j)] = val
        result = curves.palindromic_family(coeffs, args.degree)
        _emit(args, {"poly": result.to_map()}, str(result))
    elif op == "radial":
        f = curves.BivarPoly.parse(args.poly)
        values = curves.radial_coefficients(f, args.angle)
        verdict = curves.palindrome_test(values)
        payload = {"coefficients": values, "palindrome": verdict}
        _emit(args, payload, ",".join(f"{v:.12g}" for v in values) + f"  ({verdict})")
    else:
        raise CliError(f"unknown curve operation {op!r}")
    return 0


def _cmd_duality(args) -> int:
    theory = _theory(args)
    points = [polys.parse_complex(tok) for tok in args.points.split(",")]
    report = polys.duality_check(points, theory)
    payload = {
        "proportional": report.proportional,
        "residual": report.residual,
        "scalar": polys.format_complex(report.scalar),
        "index_primal": list(report.index_primal.as_tuple()),
        "index_dual": list(report.index_dual.as_tuple()),
        "indices_match": report.indices_match,
        "ok": report.ok,
    }
    text = (
        f"proportional: {'yes' if report.proportional else 'no'} "
        f"(residual {report.residual:.3e}); "
        f"index {report.index_primal} vs dual {report.index_dual}: "
        f"{'match' if report.indices_match else 'MISMATCH'}"
    )
    _emit(args, payload, text)
    return 0 if report.ok else 1


def _cmd_estimate(args) -> int:
    theory = _theory(args)
    stratum = reg._parse_stratum(args.stratum)
    window = tuple(float(v) for v in args.window.split(",")) if args.window else None
    sample = reg.estimate_stratum_topology(theory, stratum, window, args.res)
    payload = {
        "stratum": stratum.value,
        "b0": sample.b0_est,
        "b1": sample.b1_est,
        "resolution": sample.resolution,
    }
    _emit(args, payload, f"b0={sample.b0_est} b1={sample.b1_est}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_theory_arg(p: argparse.ArgumentParser, required: bool = True):
    p.add_argument("--theory", required=required, help="built-in name or config file path")
    p.add_argument("--params", help="comma-separated theory parameters")
    p.add_argument("--monic", action="store_true", help="monic variant of a built-in")
    p.add_argument("--tol", type=float, help="boundary tolerance override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dstrata",
        description="Root clustering by semialgebraic stability regions",
    )
    parser.add_argument("--json", action="store_true", help="structured output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="stability index of a polynomial or matrix")
    _add_theory_arg(p)
    p.add_argument("--poly", help="ascending coefficients, e.g. 1,0,1")
    p.add_argument("--matrix", help="row-major CSV file")
    p.add_argument("--ambient", type=int, help="ambient degree (default: actual degree)")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("theory-info", help="show a theory's configuration")
    _add_theory_arg(p)
    p.set_defaults(func=_cmd_theory_info)

    p = sub.add_parser("validate", help="check a theory's declared data")
    _add_theory_arg(p)
    p.add_argument("--res", type=int, help="spot-check resolution")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("strata", help="stratum topology computations")
    p.add_argument("operation", choices=["components", "betti", "homotopy", "pi1", "poset", "local"])
    _add_theory_arg(p, required=False)
    p.add_argument("--index", help="stability index k,l,m")
    p.add_argument("--u", type=int, help="Betti degree")
    p.add_argument("--poles", type=int, help="pole count for poset")
    p.add_argument("--ambient", type=int, help="ambient degree")
    p.add_argument("--min-card", type=int, default=1, help="minimum cardinality for poset")
    p.set_defaults(func=_cmd_strata)

    p = sub.add_parser("adjacency", help="base or symmetric-product digraph (DOT)")
    _add_theory_arg(p)
    p.add_argument("--power", type=int, default=1, help="symmetric product order")
    p.add_argument("--numeric", action="store_true", help="ignore declared edges")
    p.set_defaults(func=_cmd_adjacency)

    p = sub.add_parser("local-adjacency", help="degree-filtered adjacency digraph")
    _add_theory_arg(p)
    p.add_argument("--power", type=int, default=1)
    p.set_defaults(func=_cmd_local_adjacency)

    p = sub.add_parser("adjacent", help="flow criterion between two strata")
    _add_theory_arg(p)
    p.add_argument("--from", required=True, help="source index k,l,m or labels")
    p.add_argument("--to", required=True, help="target index k,l,m or labels")
    p.add_argument("--local", action="store_true", help="include the infinity vertex")
    p.set_defaults(func=_cmd_adjacent)

    p = sub.add_parser("ddecomp", help="scan an affine family over a parameter window")
    _add_theory_arg(p)
    p.add_argument("--base", help="base polynomial coefficients")
    p.add_argument("--gen", action="append", help="generator coefficients (repeatable)")
    p.add_argument("--matrix", action="append", help="matrix CSV files: base then generators")
    p.add_argument("--window", default="-2,2,-2,2", help="x0,x1,y0,y1")
    p.add_argument("--res", type=int, default=256)
    p.add_argument("--out", help="output file (.pgm, .csv or .json)")
    p.add_argument("--format", choices=["pgm", "csv", "json"])
    p.add_argument("--threads", type=int, default=os.cpu_count())
    p.set_defaults(func=_cmd_ddecomp)

    p = sub.add_parser("curve", help="exact boundary-curve algebra")
    p.add_argument(
        "operation",
        choices=["classify", "orbit", "invariant", "inv-transform", "palindromic", "radial"],
    )
    p.add_argument("--poly", help="polynomial text, e.g. x^2+y^2-1")
    p.add_argument("--transform", choices=["conj", "inv", "invconj"], default="inv")
    p.add_argument("--degree", type=int, help="even family degree")
    p.add_argument("--coeff", action="append", help="family coefficient i,j=value")
    p.add_argument("--angle", type=float, default=0.0)
    p.set_defaults(func=_cmd_curve)

    p = sub.add_parser("duality", help="matrix-polynomial duality cross-check")
    _add_theory_arg(p)
    p.add_argument("--points", required=True, help="comma-separated nonzero scalars")
    p.set_defaults(func=_cmd_duality)

    p = sub.add_parser("poset", help="alias of strata poset")
    p.add_argument("--poles", type=int, required=True)
    p.add_argument("--ambient", type=int, required=True)
    p.add_argument("--min-card", type=int, default=1)
    p.set_defaults(func=_cmd_strata, operation="poset", index=None, u=None, theory=None)

    p = sub.add_parser("estimate", help="numeric stratum topology estimate")
    _add_theory_arg(p)
    p.add_argument("--stratum", required=True, choices=["s", "ss", "un"])
    p.add_argument("--window", help="x0,x1,y0,y1")
    p.add_argument("--res", type=int, default=256)
    p.set_defaults(func=_cmd_estimate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError, polys.RootFindingError, OSError) as exc:
        # Domain errors (all the package error types subclass ValueError).
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
