"""Polynomial accuracy of a refinable mask.

Two independent detectors. The spectral one lifts the inverse dilation to
its action on degree-s monomials; reproducing degree-s polynomials forces
every Jordan block of that lifted matrix to appear in the transfer section
with at least the same order, so missing blocks bound the accuracy from
above. The constructive one solves for translate coefficients reproducing
each monomial on the tile and on its lattice neighbors and accepts a degree
only when the fits succeed and agree on overlaps, certifying one global
coefficient sequence. The constructive count never exceeds the spectral
bound; the gap between them is reported, not guessed away.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .grids import GridFunction, boundary_flags
from .lattice import Dilation, point_index
from .spectral import SpectralData, eigen_jordan

FIT_TOL = 1e-6
LIVE_RTOL = 1e-12


def monomial_exponents(dimension: int, degree: int) -> tuple:
    """All exponent vectors of total degree `degree`, lexicographic, x1 first."""
    if dimension == 1:
        return ((degree,),)
    out = []
    for first in range(degree, -1, -1):
        for rest in monomial_exponents(dimension - 1, degree - first):
            out.append((first,) + rest)
    return tuple(out)


def monomial_values(points, exponents) -> np.ndarray:
    """Evaluate each monomial at each point row: result[i, j] = x_i^alpha_j."""
    pts = np.atleast_2d(np.asarray(points))
    cols = [np.prod(pts ** np.asarray(alpha), axis=1) for alpha in exponents]
    return np.column_stack(cols)


@dataclass(frozen=True)
class LiftedMatrix:
    """Action of a linear map on the monomials of one total degree.

    matrix satisfies monomials(Z x) = matrix @ monomials(x) with the
    monomial order fixed by `exponents`.
    """

    degree: int
    exponents: tuple
    matrix: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def _poly_mul(a: dict, b: dict) -> dict:
    out = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            key = tuple(x + y for x, y in zip(ea, eb))
            out[key] = out.get(key, 0.0) + ca * cb
    return out


def lift_matrix(z, degree: int) -> LiftedMatrix:
    """Expand (Z x)^alpha over the degree-`degree` monomials, row per alpha."""
    if degree < 0:
        raise ValueError("degree must not be negative")
    zm = np.asarray(z)
    d = zm.shape[0]
    if zm.shape != (d, d):
        raise ValueError("square matrix required")
    expos = monomial_exponents(d, degree)
    col = {e: i for i, e in enumerate(expos)}
    one = tuple(0 for _ in range(d))
    rows = np.zeros((len(expos), len(expos)), dtype=complex)
    for r, alpha in enumerate(expos):
        poly = {one: 1.0 + 0j}
        for i, power in enumerate(alpha):
            lin = {}
            for j in range(d):
                if zm[i, j] != 0:
                    e = tuple(int(k == j) for k in range(d))
                    lin[e] = complex(zm[i, j])
            for _ in range(power):
                poly = _poly_mul(poly, lin)
        for e, c in poly.items():
            rows[r, col[e]] = c
    return LiftedMatrix(degree=degree, exponents=expos, matrix=rows)


def inverse_lift_jordan(dilation: Dilation, degree: int) -> SpectralData:
    """Jordan data of the inverse dilation acting on degree-s monomials.

    Its eigenvalues are the degree-s products of the reciprocals of the
    dilation's eigenvalues; these are exactly the transfer eigenvalues that
    degree-s polynomial reproduction requires.
    """
    lifted = lift_matrix(np.linalg.inv(dilation.matrix), degree)
    return eigen_jordan(lifted.matrix)


@dataclass(frozen=True)
class BlockMatch:
    """One required Jordan block and the transfer chain that hosts it."""

    eigenvalue: complex
    needed: int
    matched: int | None

    @property
    def ok(self) -> bool:
        return self.matched is not None and self.matched >= self.needed


@dataclass(frozen=True)
class DegreeEvidence:
    degree: int
    blocks: tuple

    @property
    def passed(self) -> bool:
        return all(b.ok for b in self.blocks)


def accuracy_necessary(spectral: SpectralData, dilation: Dilation,
                       s_max: int, match_tol: float = 1e-6):
    """Largest degree bound the transfer spectrum can support.

    Walks degrees upward; at each, every Jordan block of the lifted inverse
    dilation must claim its own transfer chain at the same eigenvalue with
    at least its order. Chains are consumed across degrees (each hosts one
    block), shortest adequate chain first. Returns (kappa, evidence) with
    kappa the first failing degree, capped at s_max + 1.
    """
    pool = []
    for cluster in spectral.clusters:
        for chain in cluster.chains:
            pool.append([cluster.eigenvalue, chain.length, False])
    evidence = []
    kappa = s_max + 1
    for s in range(s_max + 1):
        needed = []
        for cluster in inverse_lift_jordan(dilation, s).clusters:
            for chain in cluster.chains:
                needed.append((cluster.eigenvalue, chain.length))
        needed.sort(key=lambda b: -b[1])
        blocks = []
        for eta, length in needed:
            candidates = [p for p in pool
                          if not p[2] and p[1] >= length
                          and abs(p[0] - eta) <= match_tol * max(1.0, abs(eta))]
            if candidates:
                best = min(candidates, key=lambda p: p[1])
                best[2] = True
                blocks.append(BlockMatch(eta, length, best[1]))
            else:
                blocks.append(BlockMatch(eta, length, None))
        row = DegreeEvidence(degree=s, blocks=tuple(blocks))
        evidence.append(row)
        if not row.passed:
            kappa = s
            break
    return kappa, tuple(evidence)


@dataclass(frozen=True)
class FitEvidence:
    degree: int
    residual: float
    consistency: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol and self.consistency <= self.tol


def accuracy_constructive(grid: GridFunction, s_max: int,
                          tol: float = FIT_TOL):
    """Largest degree of polynomials the translates reproduce on the grid.

    For each degree and monomial, solves least squares for translate
    coefficients matching the monomial on the interior of the tile and of
    each lattice-neighbor copy, then checks that overlapping solutions
    agree, so the per-cell fits patch into one global coefficient sequence.
    Returns (kappa, evidence); kappa is the first failing degree, capped at
    s_max + 1.
    """
    keep = ~boundary_flags(grid)
    rows = grid.values[keep]
    pts = grid.points()[keep]
    d = grid.window.shape[1]
    norms = np.linalg.norm(rows, axis=0)
    live = np.flatnonzero(norms > LIVE_RTOL * max(norms.max(initial=0.0), 1.0))
    v = rows[:, live]
    translates = grid.window[live]
    lat = grid.mask.dilation.lattice
    cells = [np.zeros(d, dtype=np.int64)]
    cells += [np.eye(d, dtype=np.int64)[i] for i in range(d)]
    tindex = point_index(translates)
    evidence = []
    kappa = s_max + 1
    for s in range(s_max + 1):
        worst_fit = 0.0
        worst_gap = 0.0
        for alpha in monomial_exponents(d, s):
            sols = []
            for cell in cells:
                shifted = pts + lat.embed(cell)
                rhs = np.prod(shifted ** np.asarray(alpha), axis=1)
                sol = np.linalg.lstsq(v, rhs, rcond=None)[0]
                gap = np.abs(v @ sol - rhs).max(initial=0.0)
                worst_fit = max(worst_fit, gap / (1.0 + np.abs(rhs).max(initial=0.0)))
                sols.append(sol)
            base = sols[0]
            ref = 1.0 + float(np.abs(base).max(initial=0.0))
            for cell, sol in zip(cells[1:], sols[1:]):
                # the cell-c fit names its unknowns by window point t_j but
                # estimates the global coefficient at t_j - c, so its value
                # for translate t sits at index t + c when both cells see t
                for i, t in enumerate(translates):
                    j = tindex.get(tuple(int(x) + int(c) for x, c in zip(t, cell)))
                    if j is not None:
                        worst_gap = max(worst_gap, abs(sol[j] - base[i]) / ref)
        row = FitEvidence(degree=s, residual=float(worst_fit),
                          consistency=float(worst_gap), tol=tol)
        evidence.append(row)
        if not row.passed:
            kappa = s
            break
    return kappa, tuple(evidence)


@dataclass(frozen=True)
class AccuracyReport:
    """Both accuracy detectors with their per-degree evidence."""

    necessary: int
    constructive: int
    necessary_evidence: tuple
    fit_evidence: tuple

    @property
    def consistent(self) -> bool:
        return self.constructive <= self.necessary


def accuracy_report(grid: GridFunction, spectral: SpectralData,
                    s_max: int = 4, tol: float = FIT_TOL,
                    match_tol: float = 1e-6) -> AccuracyReport:
    """Run both detectors for one mask on one grid."""
    nec, nec_rows = accuracy_necessary(spectral, grid.mask.dilation, s_max,
                                       match_tol=match_tol)
    con, fit_rows = accuracy_constructive(grid, s_max, tol=tol)
    return AccuracyReport(necessary=nec, constructive=con,
                          necessary_evidence=nec_rows, fit_evidence=fit_rows)
