"""Cross-checks tying the pipelines to each other on one problem.

`model_checks` tests the standing assumptions a problem must satisfy before
any numbers mean anything (the digit attractor tiles, a usable start vector
exists). `run_invariants` then exercises identities that hold by
construction: transfer products against matrix powers, grid refinement and
partition sums, Jordan relations, homogeneous class residuals, shared
accuracy bounds, and the lifting calculus. Every check reports a named
pass/fail result with a one-line detail.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .accuracy import accuracy_report, lift_matrix, monomial_values
from .attractor import tile_multiplicity
from .errors import DegenerateEigenvalue, RefineryError, WindowError
from .grids import (GridFunction, boundary_flags, evaluate_grid,
                    partition_residual, refinement_residual)
from .homogeneous import (homogeneous_basis, local_dimension, value_rank,
                          verify_class, zero_eigen_check)
from .lattice import point_index
from .problem import Problem
from .scale import digit_matrices, scale_matrix
from .spectral import eigen_jordan
from .windows import window_chain

COSET_TOL = 1e-8
PRODUCT_TOL = 1e-12
REFINE_TOL = 1e-10
PARTITION_TOL = 1e-8
JORDAN_TOL = 1e-9
CLASS_TOL = 1e-6
ZERO_TOL = 1e-8
TRANSLATE_TOL = 1e-10
LIFT_TOL = 1e-10


@dataclass(frozen=True)
class InvariantResult:
    """Outcome of one named cross-check."""

    name: str
    passed: bool
    detail: str


def _result(name: str, passed, detail: str) -> InvariantResult:
    return InvariantResult(name=name, passed=bool(passed), detail=detail)


def coset_sums(problem: Problem) -> np.ndarray:
    """Mask coefficient totals per digit residue class, in digit order."""
    mask, digits = problem.mask, problem.digits
    dil = problem.dilation
    sums = np.zeros(digits.count, dtype=np.complex128)
    for p, c in zip(mask.points, mask.values):
        for code, dg in enumerate(digits.points):
            _, exact = dil.quotient(np.asarray(p) - dg)
            if bool(exact):
                sums[code] += c
                break
    return sums


def has_sum_rule(problem: Problem, tol: float = COSET_TOL) -> bool:
    return bool(np.abs(coset_sums(problem) - 1.0).max() <= tol)


def build_grid(problem: Problem, resolution=None) -> GridFunction:
    res = problem.options.resolution if resolution is None else resolution
    return evaluate_grid(problem.mask, problem.digits, res,
                         start=problem.options.start)


def model_checks(problem: Problem) -> list:
    """Standing assumptions: attractor tiles, start vector available."""
    out = []
    rng = np.random.default_rng(problem.options.seed)
    stats = tile_multiplicity(problem.digits, depth=problem.options.depth,
                              samples=problem.options.samples, rng=rng)
    out.append(_result(
        "tile-multiplicity", stats.is_tile,
        f"mean covering multiplicity {stats.mean:.4f} "
        f"(range {stats.minimum}..{stats.maximum}, tile needs 1 within 0.1)"))
    try:
        window = build_grid(problem, resolution=1).window
        detail = f"start vector fixed on a window of {len(window)} translates"
        ok = True
    except DegenerateEigenvalue as err:
        detail = f"no start vector: {err}"
        ok = False
    out.append(_result("value-start", ok, detail))
    return out


def _digit_product_check(problem: Problem) -> InvariantResult:
    """Digit-matrix products equal column-shifted transfer powers.

    A length-r product of digit-shifted sections, read on the rows of the
    base window inside a twice-enlarged window, matches the r-th power of
    the plain section with columns displaced by the digit expansion the
    product spells out.
    """
    mask, digits = problem.mask, problem.digits
    dil = problem.dilation
    chain = window_chain(mask.points, digits, extra=2)
    top = chain.window(min(chain.base_index + 2, len(chain) - 1))
    idx = point_index(top)
    base_rows = [idx[tuple(int(v) for v in p)] for p in chain.base]
    mats = digit_matrices(mask, top, digits)
    tmat = scale_matrix(mask, top).matrix
    m = digits.count
    worst = 0.0
    pairs = 0
    for r in (1, 2):
        power = np.linalg.matrix_power(tmat, r)
        scale = 1.0 + np.abs(power).max()
        for word in product(range(m), repeat=r):
            if pairs >= 64:
                break
            prod = mats[word[0]]
            gamma = np.array(digits.points[word[0]], dtype=np.int64)
            for code in word[1:]:
                prod = prod @ mats[code]
                gamma = dil.apply(gamma) + digits.points[code]
            for j, p in enumerate(top):
                jj = idx.get(tuple(int(v) for v in (p - gamma)))
                if jj is None:
                    continue
                diff = np.abs(prod[base_rows, j] - power[base_rows, jj]).max()
                worst = max(worst, float(diff) / scale)
            pairs += 1
    return _result("transfer-digit-product", worst <= PRODUCT_TOL,
                   f"max relative entry mismatch {worst:.3e} over {pairs} "
                   f"digit words (tol {PRODUCT_TOL:g})")


def _lift_check(problem: Problem) -> InvariantResult:
    rng = np.random.default_rng(problem.options.seed + 1)
    d = problem.dimension
    worst = 0.0
    for _ in range(10):
        z = rng.normal(size=(d, d))
        w = rng.normal(size=(d, d))
        for s in (1, 2, 3):
            lz, lw = lift_matrix(z, s), lift_matrix(w, s)
            lzw = lift_matrix(z @ w, s)
            scale = 1.0 + np.abs(lzw.matrix).max()
            worst = max(worst, float(
                np.abs(lz.matrix @ lw.matrix - lzw.matrix).max()) / scale)
            x = rng.normal(size=(5, d))
            left = monomial_values(x @ z.T, lz.exponents)
            right = monomial_values(x, lz.exponents) @ lz.matrix.T
            scale = 1.0 + np.abs(left).max()
            worst = max(worst, float(np.abs(left - right).max()) / scale)
    return _result("lift-calculus", worst <= LIFT_TOL,
                   f"max relative defect {worst:.3e} over 10 random pairs, "
                   f"degrees 1..3 (tol {LIFT_TOL:g})")


def run_invariants(problem: Problem) -> list:
    """All named cross-checks for one problem, in a fixed order.

    Raises the underlying error if the grid itself cannot be built (no
    start vector, budget); everything past that point reports pass/fail.
    """
    out = []
    sums = coset_sums(problem)
    dev = float(np.abs(sums - 1.0).max(initial=0.0))
    sum_rule = dev <= COSET_TOL
    out.append(_result("mask-coset-sums", sum_rule,
                       f"max |coset sum - 1| = {dev:.3e} over "
                       f"{problem.digits.count} classes (tol {COSET_TOL:g})"))
    out.append(_digit_product_check(problem))

    grid = build_grid(problem)
    flags = boundary_flags(grid)
    r_res = refinement_residual(grid)
    out.append(_result("grid-refinement", r_res <= REFINE_TOL,
                       f"max two-scale residual {r_res:.3e} at resolution "
                       f"{grid.resolution} (tol {REFINE_TOL:g})"))
    if sum_rule:
        p_res = partition_residual(grid, interior_only=True)
        out.append(_result("grid-partition", p_res <= PARTITION_TOL,
                           f"max interior |translate sum - 1| = {p_res:.3e} "
                           f"(tol {PARTITION_TOL:g})"))
    else:
        out.append(_result("grid-partition", True,
                           "skipped: mask does not satisfy the coset sum rule"))

    section = scale_matrix(problem.mask, grid.window)
    spectral = eigen_jordan(section)
    y = spectral.basis()
    j = spectral.jordan_matrix()
    scale = max(1.0, float(np.abs(section.matrix).max())) * \
        max(1.0, float(np.abs(y).max()))
    j_res = float(np.abs(y @ section.matrix - j @ y).max())
    full = np.linalg.matrix_rank(y) == section.size
    out.append(_result("jordan-basis-relation",
                       j_res <= JORDAN_TOL * scale and full,
                       f"|YT - JY| = {j_res:.3e} against scale {scale:.3g}, "
                       f"basis rank {np.linalg.matrix_rank(y)}/{section.size}"))
    if sum_rule:
        gap = min(abs(v - 1.0) for v in spectral.eigenvalues())
        out.append(_result("eigenvalue-one-present", gap <= 1e-8,
                           f"closest eigenvalue sits {gap:.3e} from 1"))
    else:
        out.append(_result("eigenvalue-one-present", True,
                           "skipped: mask does not satisfy the coset sum rule"))

    chain = window_chain(problem.mask.points, problem.digits, extra=2)
    try:
        basis = homogeneous_basis(grid, spectral, chain=chain)
        extended = True
    except WindowError:
        basis = homogeneous_basis(grid, spectral)
        extended = False
    out.extend(_basis_checks(grid, basis, flags, extended))

    report = accuracy_report(grid, spectral, s_max=problem.options.s_max,
                             tol=problem.options.tol)
    out.append(_result(
        "accuracy-order", report.consistent,
        f"constructive order {report.constructive}, spectral bound "
        f"{report.necessary} (constructive must not exceed the bound)"))
    out.append(_lift_check(problem))
    return out


def _basis_checks(grid: GridFunction, basis, flags, extended: bool) -> list:
    out = []
    live = [e for e in basis.elements if abs(e.eigenvalue) > 1e-9]
    nil = [e for e in basis.elements if abs(e.eigenvalue) <= 1e-9]

    worst, counted = 0.0, 0
    failure = None
    for e in live:
        try:
            check = verify_class(grid, e.values, e.eigenvalue, e.order,
                                 tol=CLASS_TOL)
        except RefineryError as err:
            failure = f"element at {e.eigenvalue:.4g}: {err}"
            break
        worst = max(worst, check.residual)
        counted += 1
    if failure is not None:
        out.append(_result("class-residuals", False, failure))
    elif counted == 0:
        out.append(_result("class-residuals", True,
                           "skipped: no nonzero-eigenvalue elements"))
    else:
        out.append(_result("class-residuals", worst <= CLASS_TOL,
                           f"max class residual {worst:.3e} over {counted} "
                           f"elements (tol {CLASS_TOL:g})"))

    if nil:
        z = max(zero_eigen_check(grid, e.vector) for e in nil)
        out.append(_result("zero-chains-vanish", z <= ZERO_TOL,
                           f"max interior |combination| = {z:.3e} over "
                           f"{len(nil)} kernel-chain vectors (tol {ZERO_TOL:g})"))
    else:
        out.append(_result("zero-chains-vanish", True,
                           "skipped: no eigenvalue-zero chains"))

    direct = basis.values_matrix()
    stacked = grid.values @ basis.matrix().T
    t_scale = 1.0 + float(np.abs(direct).max(initial=0.0))
    t_res = float(np.abs(direct - stacked).max(initial=0.0))
    out.append(_result("homog-translate-identity",
                       t_res <= TRANSLATE_TOL * t_scale,
                       f"max |element values - combined translates| = "
                       f"{t_res:.3e} (tol {TRANSLATE_TOL:g} relative)"))

    if extended and live:
        rows = np.array([e.extended for e in live])
        rank = value_rank(rows, tol=1e-8)
        out.append(_result("basis-independence", rank == len(live),
                           f"extended rows have rank {rank} of {len(live)}"))
    else:
        out.append(_result("basis-independence", True,
                           "skipped: no extended window available"))

    dim = local_dimension(grid)
    keep = ~flags
    brank = value_rank(basis.values_matrix()[keep]) if keep.any() else 0
    out.append(_result("local-dimension-agreement", dim == brank,
                       f"translate rank {dim}, basis value rank {brank}"))
    out.append(_result("local-dimension-vs-chain-count", True,
                       f"local dimension {dim}; nonzero-eigenvalue chain "
                       f"vectors {len(live)} (report only)"))
    return out
