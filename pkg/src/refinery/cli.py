"""Command line front end: problem files in, reports and plot data out.

Three subcommands share one loader and one exit-code contract:

  analyze  write jordan.json, chain.json, accuracy.json, summary.txt
  eval     write CSV data (--what phi | basis | attractor)
  verify   run the named invariant suite, print one line per check

Exit codes: 0 success, 1 input error (bad file, bad values, budget),
2 model-assumption failure (digits do not tile, no usable start vector),
3 invariant failure (verify only, first failing check named).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .accuracy import accuracy_report
from .attractor import attractor_cloud, tile_multiplicity
from .errors import (BudgetExceeded, DegenerateEigenvalue, InvalidProblem,
                     RefineryError, ZeroEigenvalue)
from .grids import boundary_flags, evaluate_grid
from .homogeneous import homogeneous_basis, local_dimension, verify_class, \
    zero_eigen_check
from .lattice import order_key
from .problem import Problem, load_problem
from .scale import scale_matrix
from .spectral import eigen_jordan, extend_chain
from .verify import model_checks, run_invariants
from .windows import window_chain

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_MODEL = 2
EXIT_INVARIANT = 3


def _complex_pair(value) -> list:
    v = complex(value)
    return [v.real, v.imag]


def _vector_json(vec) -> dict:
    arr = np.asarray(vec, dtype=np.complex128).reshape(-1)
    return {"real": [float(v) for v in arr.real],
            "imag": [float(v) for v in arr.imag]}


def _points_json(points) -> list:
    return [[int(v) for v in p] for p in np.asarray(points)]


def _format_eigenvalue(value) -> str:
    v = complex(value)
    if abs(v.imag) <= 1e-12:
        return f"{v.real:.12g}"
    sign = "+" if v.imag >= 0 else "-"
    return f"{v.real:.12g}{sign}{abs(v.imag):.12g}j"


def _write_json(path, data) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load(args) -> Problem:
    problem = load_problem(args.problem)
    opts = problem.options
    if args.seed is not None:
        opts = replace(opts, seed=args.seed)
    if args.tol is not None:
        opts = replace(opts, tol=args.tol)
    if args.resolution is not None:
        opts = replace(opts, resolution=args.resolution)
    if args.n_extra is not None:
        opts = replace(opts, n_extra=args.n_extra)
    return replace(problem, options=opts)


def _grid(problem: Problem):
    return evaluate_grid(problem.mask, problem.digits,
                         problem.options.resolution,
                         start=problem.options.start)


def _address_order(addresses) -> list:
    return sorted(range(len(addresses)), key=lambda s: order_key(addresses[s]))


def _write_grid_csv(grid, path) -> None:
    """Grid samples, one row per point, sorted by address order."""
    pts = grid.points()
    flags = boundary_flags(grid)
    phi = grid.samples()
    d = pts.shape[1]
    head = [f"x_{j + 1}" for j in range(d)] + ["re_phi", "im_phi",
                                               "boundary_flag"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(head)
        for s in _address_order(grid.addresses):
            row = [f"{v:.17g}" for v in pts[s]]
            row += [f"{phi[s].real:.17g}", f"{phi[s].imag:.17g}"]
            row.append("1" if flags[s] else "0")
            writer.writerow(row)


def cmd_analyze(args) -> int:
    problem = _load(args)
    opts = problem.options
    out = args.out_dir
    os.makedirs(out, exist_ok=True)
    rng = np.random.default_rng(opts.seed)
    stats = tile_multiplicity(problem.digits, depth=opts.depth,
                              samples=opts.samples, rng=rng)
    tile_line = (f"tile multiplicity: mean {stats.mean:.4f}, range "
                 f"{stats.minimum}..{stats.maximum}, depth {stats.depth}, "
                 f"samples {stats.samples}")
    if not stats.is_tile:
        lines = [f"problem: {problem.name}", tile_line,
                 "model assumption failed: digit attractor does not tile "
                 "(mean covering multiplicity must be 1 within 0.1)"]
        with open(os.path.join(out, "summary.txt"), "w") as fh:
            fh.write("\n".join(lines) + "\n")
        print("\n".join(lines))
        return EXIT_MODEL

    try:
        grid = _grid(problem)
    except DegenerateEigenvalue as err:
        lines = [f"problem: {problem.name}", tile_line,
                 f"model assumption failed: {err} "
                 "(set options.start in the problem file)"]
        with open(os.path.join(out, "summary.txt"), "w") as fh:
            fh.write("\n".join(lines) + "\n")
        print("\n".join(lines))
        return EXIT_MODEL

    section = scale_matrix(problem.mask, grid.window)
    spectral = eigen_jordan(section)
    _write_json(os.path.join(out, "jordan.json"), {
        "window": _points_json(spectral.window),
        "size": int(section.size),
        "clusters": [{
            "eigenvalue": _complex_pair(cl.eigenvalue),
            "multiplicity": int(cl.multiplicity),
            "partition": [int(v) for v in cl.partition],
            "chains": [{
                "length": int(ch.length),
                "vectors": [_vector_json(v) for v in ch.vectors],
            } for ch in cl.chains],
        } for cl in spectral.clusters],
    })

    wchain = window_chain(problem.mask.points, problem.digits,
                          extra=opts.n_extra)
    extensions = []
    top = len(wchain) - 1
    for cluster in spectral.clusters:
        for ch in cluster.chains:
            try:
                ext = extend_chain(ch, wchain, problem.mask,
                                   wchain.base_index, top)
            except (ZeroEigenvalue, RefineryError):
                continue
            extensions.append({
                "eigenvalue": _complex_pair(ch.eigenvalue),
                "length": int(ch.length),
                "window_size": int(len(ext.window)),
                "vectors": [_vector_json(v) for v in ext.vectors],
            })
    _write_json(os.path.join(out, "chain.json"), {
        "support": _points_json(problem.mask.points),
        "base_index": int(wchain.base_index),
        "levels": len(wchain),
        "windows": [_points_json(w) for w in wchain.windows],
        "extensions": extensions,
    })

    report = accuracy_report(grid, spectral, s_max=opts.s_max, tol=opts.tol)
    _write_json(os.path.join(out, "accuracy.json"), {
        "s_max": opts.s_max,
        "necessary": int(report.necessary),
        "constructive": int(report.constructive),
        "consistent": bool(report.consistent),
        "spectral_evidence": [{
            "degree": int(ev.degree),
            "passed": bool(ev.passed),
            "blocks": [{
                "eigenvalue": _complex_pair(b.eigenvalue),
                "needed": int(b.needed),
                "matched": None if b.matched is None else int(b.matched),
            } for b in ev.blocks],
        } for ev in report.necessary_evidence],
        "fit_evidence": [{
            "degree": int(ev.degree),
            "passed": bool(ev.passed),
            "residual": float(ev.residual),
            "consistency": float(ev.consistency),
            "tol": float(ev.tol),
        } for ev in report.fit_evidence],
    })

    dim = local_dimension(grid)
    lines = [f"problem: {problem.name}",
             f"dimension: {problem.dimension}",
             f"lattice modulus: {problem.dilation.modulus}",
             f"value window: {len(grid.window)} translates",
             tile_line,
             "spectrum:"]
    for cl in spectral.clusters:
        chains = ",".join(str(ch.length) for ch in cl.chains)
        lines.append(f"  eigenvalue {_format_eigenvalue(cl.eigenvalue)}  "
                     f"multiplicity {cl.multiplicity}  chain lengths {chains}")
    lines += [f"local dimension: {dim}",
              f"accuracy spectral bound (kappa_nec): {report.necessary}",
              f"accuracy constructive (kappa_constructive): "
              f"{report.constructive}"]
    text = "\n".join(lines) + "\n"
    with open(os.path.join(out, "summary.txt"), "w") as fh:
        fh.write(text)
    print(text, end="")
    return EXIT_OK


def _eval_phi(problem: Problem, out: str) -> int:
    grid = _grid(problem)
    _write_grid_csv(grid, os.path.join(out, "phi.csv"))
    print(f"wrote {os.path.join(out, 'phi.csv')} "
          f"({grid.size} rows, resolution {grid.resolution})")
    return EXIT_OK


def _eval_basis(problem: Problem, out: str) -> int:
    grid = _grid(problem)
    spectral = eigen_jordan(scale_matrix(problem.mask, grid.window))
    basis = homogeneous_basis(grid, spectral)
    pts = grid.points()
    order = _address_order(grid.addresses)
    d = pts.shape[1]
    manifest = []
    for i, elem in enumerate(basis.elements):
        name = f"basis_{i:03d}.csv"
        head = [f"x_{j + 1}" for j in range(d)] + ["re_h", "im_h"]
        with open(os.path.join(out, name), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(head)
            for s in order:
                row = [f"{v:.17g}" for v in pts[s]]
                row += [f"{elem.values[s].real:.17g}",
                        f"{elem.values[s].imag:.17g}"]
                writer.writerow(row)
        try:
            if abs(elem.eigenvalue) > 1e-9:
                check = verify_class(grid, elem.values, elem.eigenvalue,
                                     elem.order, tol=problem.options.tol)
                residuals = [float(v) for v in check.residuals]
            else:
                residuals = [float(zero_eigen_check(grid, elem.vector))]
        except RefineryError:
            residuals = []
        manifest.append({
            "csv": name,
            "eigenvalue": _complex_pair(elem.eigenvalue),
            "order": int(elem.order),
            "vector": _vector_json(elem.vector),
            "residuals": residuals,
        })
    _write_json(os.path.join(out, "basis.json"),
                {"window": _points_json(grid.window),
                 "resolution": int(grid.resolution),
                 "elements": manifest})
    print(f"wrote {os.path.join(out, 'basis.json')} and "
          f"{len(manifest)} element files")
    return EXIT_OK


def _eval_attractor(problem: Problem, out: str) -> int:
    cloud = attractor_cloud(problem.digits.points, problem.dilation,
                            problem.options.depth)
    path = os.path.join(out, "cloud.csv")
    cloud.to_csv(path)
    print(f"wrote {path} ({len(cloud.points)} points, depth {cloud.depth})")
    return EXIT_OK


def cmd_eval(args) -> int:
    problem = _load(args)
    os.makedirs(args.out_dir, exist_ok=True)
    if args.what == "phi":
        return _eval_phi(problem, args.out_dir)
    if args.what == "basis":
        return _eval_basis(problem, args.out_dir)
    return _eval_attractor(problem, args.out_dir)


def cmd_verify(args) -> int:
    problem = _load(args)
    failed_model = None
    for res in model_checks(problem):
        print(f"{'PASS' if res.passed else 'FAIL'} {res.name}: {res.detail}")
        if not res.passed and failed_model is None:
            failed_model = res.name
    if failed_model is not None:
        print(f"model assumption failed: {failed_model}", file=sys.stderr)
        return EXIT_MODEL
    failed = None
    for res in run_invariants(problem):
        print(f"{'PASS' if res.passed else 'FAIL'} {res.name}: {res.detail}")
        if not res.passed and failed is None:
            failed = res.name
    if failed is not None:
        print(f"invariant failed: {failed}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="refinery",
        description="Spectral analysis of refinement masks on lattices.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, text in (
            ("analyze", cmd_analyze,
             "write spectral, chain, and accuracy reports"),
            ("eval", cmd_eval, "write grid, basis, or attractor CSV data"),
            ("verify", cmd_verify, "run the cross-check suite")):
        p = sub.add_parser(name, help=text)
        p.add_argument("problem", help="path to a problem JSON file")
        p.add_argument("--out-dir", default=".",
                       help="directory for output files")
        p.add_argument("--seed", type=int, default=None,
                       help="override the problem RNG seed")
        p.add_argument("--tol", type=float, default=None,
                       help="override the fit tolerance")
        p.add_argument("--resolution", type=int, default=None,
                       help="override the grid resolution")
        p.add_argument("--n-extra", type=int, default=None,
                       help="override the window enlargement count")
        if name == "eval":
            p.add_argument("--what", choices=("phi", "basis", "attractor"),
                           default="phi", help="which data set to write")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except DegenerateEigenvalue as err:
        print(f"error: {err} (set options.start in the problem file)",
              file=sys.stderr)
        return EXIT_MODEL
    except (InvalidProblem, BudgetExceeded, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except RefineryError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
