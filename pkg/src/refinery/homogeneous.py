"""Homogeneous-function local bases of a refinable shift-invariant space.

Each left Jordan chain row v of the transfer section defines a function
h(x) = sum_k v[k] phi(x + G k) on the digit tile. Composing with the
inverse dilation maps h through its Jordan block: an order-r chain row
satisfies the difference relation

    sum_{k=0..r} C(r, k) (-lam)^k h(A^{k-r} x) = 0,

which is the defining property of a homogeneous element of order r. The
module builds these elements on a value grid, verifies the relation on
dilation-nested grid points, propagates values between dilation shells,
measures the local dimension of the span over the tile, and rewrites
translate coefficient sequences in the homogeneous basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import NoTestPoints, SingularBasis, WindowError, ZeroEigenvalue
from .grids import GridFunction, boundary_flags
from .lattice import order_key
from .spectral import SpectralData, extend_chain
from .windows import WindowChain

CLASS_TOL = 1e-6
COND_CAP = 1e12


@dataclass(frozen=True)
class BasisElement:
    """One homogeneous element h = sum_k vector[k] phi(. + G k).

    order is the element's position in its chain plus one: the smallest r
    for which the order-r difference relation annihilates h. extended, when
    present, carries the same functional on a larger translate window.
    """

    eigenvalue: complex
    order: int
    chain: int
    vector: np.ndarray
    values: np.ndarray
    extended: np.ndarray | None = None


@dataclass(frozen=True)
class HomogeneousBasis:
    """All chain elements of one transfer section over one value grid."""

    grid: GridFunction
    spectral: SpectralData
    elements: tuple
    extended_window: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.elements)

    def matrix(self) -> np.ndarray:
        """Stacked coefficient rows, one element per row."""
        return np.array([e.vector for e in self.elements])

    def values_matrix(self) -> np.ndarray:
        """Element values at grid rows, one element per column."""
        return np.column_stack([e.values for e in self.elements])

    def at(self, value, tol: float = 1e-6) -> list:
        return [e for e in self.elements if abs(e.eigenvalue - value) <= tol]


def homogeneous_basis(grid: GridFunction, spectral: SpectralData,
                      chain: WindowChain | None = None,
                      top: int | None = None) -> HomogeneousBasis:
    """Build every chain element of `spectral` as a function on `grid`.

    The spectral data must come from the transfer section on the grid's own
    window. When a window chain is supplied, every nonzero-eigenvalue chain
    is also carried onto windows[top] (default: the last window) and the
    per-element extended rows are attached; zero chains stay unextended.
    """
    if not np.array_equal(np.asarray(spectral.window), np.asarray(grid.window)):
        raise WindowError("spectral data and grid use different windows")
    level = None
    ext_window = None
    if chain is not None:
        for n, win in enumerate(chain.windows):
            if np.array_equal(np.asarray(win), np.asarray(grid.window)):
                level = n
                break
        if level is None:
            raise WindowError("grid window is not a level of the window chain")
        top = len(chain) - 1 if top is None else top
        if not level <= top < len(chain):
            raise WindowError("extension target level is out of range")
        if top > level:
            ext_window = chain.window(top)
    elements = []
    for ci, jc in enumerate(spectral.chains()):
        rows = np.asarray(jc.vectors)
        ext_rows = None
        if ext_window is not None and abs(jc.eigenvalue) > 0.0:
            ext_rows = extend_chain(jc, chain, grid.mask, level, top).vectors
        for t in range(rows.shape[0]):
            elements.append(BasisElement(
                eigenvalue=jc.eigenvalue,
                order=t + 1,
                chain=ci,
                vector=rows[t],
                values=grid.values @ rows[t],
                extended=None if ext_rows is None else ext_rows[t]))
    return HomogeneousBasis(grid=grid, spectral=spectral,
                            elements=tuple(elements),
                            extended_window=ext_window)


def _term_rows(q: np.ndarray, k: int, count: int, zero_code: int) -> np.ndarray:
    """Grid rows of the k-fold dilation of the depth-limited addresses q.

    Dilating an address shifts its digit string up one scale and fills the
    vacated low scale with the zero digit, so in row numbers (little-endian
    base-`count` digit codes) it is multiply-and-fill.
    """
    fill = zero_code * (count ** k - 1) // (count - 1)
    return fill + q * count ** k


@dataclass(frozen=True)
class ClassCheck:
    """Residuals of the order-r difference relation for one element."""

    eigenvalue: complex
    order: int
    residuals: tuple
    points: int
    tol: float

    @property
    def residual(self) -> float:
        return self.residuals[-1]

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol

    @property
    def sharp_order(self):
        """Smallest order whose relation already passes, None if none do."""
        for r, value in enumerate(self.residuals, start=1):
            if value <= self.tol:
                return r
        return None


def verify_class(grid: GridFunction, values, eigenvalue, order: int,
                 tol: float = CLASS_TOL, min_points: int = 1,
                 interior_only: bool = True) -> ClassCheck:
    """Check the order-r difference relation of h on nested grid points.

    Test points are the grid addresses whose r-fold dilations stay on the
    grid; the relation couples an address with its dilation ladder, all of
    which the grid already holds. Residuals are relative to 1 + max |h| and
    are reported for every order from one up to `order`.
    """
    if order < 1:
        raise ValueError("order must be at least one")
    h = np.asarray(values).reshape(-1)
    if h.shape[0] != grid.size:
        raise ValueError("value vector does not match the grid size")
    m = grid.digits.count
    zc = grid.digits.zero_code
    lam = complex(eigenvalue)
    hmax = float(np.abs(h).max(initial=0.0))
    flags = boundary_flags(grid) if interior_only else None
    residuals = []
    points = 0
    for r in range(1, order + 1):
        if grid.resolution < r:
            raise NoTestPoints(
                f"resolution {grid.resolution} holds no order-{r} ladders")
        q = np.arange(m ** (grid.resolution - r), dtype=np.int64)
        rows = np.stack([_term_rows(q, k, m, zc) for k in range(r + 1)])
        if flags is not None:
            keep = ~flags[rows].any(axis=0)
            rows = rows[:, keep]
        if rows.shape[1] < min_points:
            raise NoTestPoints(
                f"{rows.shape[1]} interior test points at order {r}, "
                f"need {min_points}")
        coef = np.array([comb(r, k) * (-lam) ** k for k in range(r + 1)])
        mix = (coef[:, None] * h[rows]).sum(axis=0)
        residuals.append(float(np.abs(mix).max(initial=0.0)) / (1.0 + hmax))
        points = rows.shape[1]
    return ClassCheck(eigenvalue=lam, order=order, residuals=tuple(residuals),
                      points=points, tol=tol)


def verify_basis(basis: HomogeneousBasis, tol: float = CLASS_TOL,
                 min_points: int = 1, interior_only: bool = True) -> list:
    """Run the class check for every element at its recorded order."""
    return [verify_class(basis.grid, e.values, e.eigenvalue, e.order,
                         tol=tol, min_points=min_points,
                         interior_only=interior_only)
            for e in basis.elements]


def zero_eigen_check(grid: GridFunction, vector,
                     interior_only: bool = True) -> float:
    """Largest |sum_k v[k] phi(x + G k)| over (interior) grid points.

    A left null vector of the transfer section must combine the translates
    to zero on the whole tile; the return value is that combination's sup
    on the grid.
    """
    v = np.asarray(vector).reshape(-1)
    if v.shape[0] != grid.width:
        raise ValueError("vector does not match the grid window")
    h = np.abs(grid.values @ v)
    if interior_only:
        h = h[~boundary_flags(grid)]
    if h.size == 0:
        raise NoTestPoints("no interior grid points at this resolution")
    return float(h.max())


def value_rank(matrix, tol: float = 1e-6) -> int:
    """Numerical rank at the relative threshold tol * top singular value."""
    rows = np.asarray(matrix)
    if rows.size == 0:
        return 0
    s = np.linalg.svd(rows, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def local_dimension(grid: GridFunction, tol: float = 1e-6,
                    interior_only: bool = True) -> int:
    """Dimension of the translate span over the (interior of the) tile."""
    rows = grid.values
    if interior_only:
        rows = rows[~boundary_flags(grid)]
    if rows.shape[0] == 0:
        raise NoTestPoints("no interior grid points at this resolution")
    return value_rank(rows, tol)


def propagate_shell(grid: GridFunction, values, eigenvalue, order: int,
                    direction: str = "inward"):
    """Predict h on one dilation shell from the next `order` shells.

    The order-r difference relation determines h at a point from its values
    at the next r dilations (inward) or, after dividing by the eigenvalue,
    at the previous r contractions (outward). Returns (rows, predicted)
    with `rows` the grid rows the prediction targets, so agreement with the
    directly evaluated values[rows] is the consistency check.
    """
    h = np.asarray(values).reshape(-1)
    if h.shape[0] != grid.size:
        raise ValueError("value vector does not match the grid size")
    if order < 1:
        raise ValueError("order must be at least one")
    lam = complex(eigenvalue)
    m = grid.digits.count
    zc = grid.digits.zero_code
    r = order
    if grid.resolution < r:
        raise NoTestPoints(
            f"resolution {grid.resolution} holds no order-{r} ladders")
    q = np.arange(m ** (grid.resolution - r), dtype=np.int64)
    if direction == "inward":
        target = _term_rows(q, 0, m, zc)
        acc = np.zeros(q.shape[0], dtype=complex)
        for k in range(1, r + 1):
            acc += comb(r, k) * (-lam) ** k * h[_term_rows(q, k, m, zc)]
        return target, -acc
    if direction == "outward":
        if lam == 0:
            raise ZeroEigenvalue("outward propagation divides by the eigenvalue")
        target = _term_rows(q, r, m, zc)
        acc = np.zeros(q.shape[0], dtype=complex)
        for k in range(r):
            acc += comb(r, k) * (-lam) ** k * h[_term_rows(q, k, m, zc)]
        return target, -acc / (-lam) ** r
    raise ValueError("direction must be 'inward' or 'outward'")


def rebase_coefficients(coeffs: dict, basis: HomogeneousBasis,
                        cond_cap: float = COND_CAP) -> dict:
    """Rewrite translate coefficients cell by cell in the homogeneous basis.

    On the tile copy at lattice point g, the function sum_k alpha[k]
    phi(x + G k) equals a fixed window combination of the translates, so
    multiplying that window slice of alpha by the inverse stacked basis
    gives its coordinates in the chain elements. Returns one coefficient
    row per cell that meets the support of alpha.
    """
    y = basis.matrix()
    if y.shape[0] != y.shape[1]:
        raise SingularBasis(
            f"basis has {y.shape[0]} elements on a window of {y.shape[1]}")
    cond = float(np.linalg.cond(y))
    if not np.isfinite(cond) or cond > cond_cap:
        raise SingularBasis(f"basis condition number {cond:.3g} is over "
                            f"{cond_cap:.3g}")
    yinv = np.linalg.inv(y)
    win = basis.grid.window
    d = win.shape[1]
    amap = {}
    for key, val in coeffs.items():
        pt = tuple(int(v) for v in np.asarray(key).reshape(d))
        if val != 0:
            amap[pt] = complex(val)
    cells = {tuple(int(a) - int(b) for a, b in zip(w, omega))
             for w in amap for omega in win}
    out = {}
    for cell in sorted(cells, key=order_key):
        abar = np.array([amap.get(tuple(int(v) + c for v, c in zip(omega, cell)),
                                  0.0) for omega in win])
        if not abar.any():
            continue
        out[cell] = abar @ yinv
    return out


def reassembly_residual(coeffs: dict, basis: HomogeneousBasis) -> float:
    """Largest relative gap between the translate and basis forms of f.

    Evaluates f = sum_k alpha[k] phi(. + G k) over every touched tile copy
    twice, from the translates directly and from the rewritten homogeneous
    coefficients, and compares on the grid.
    """
    beta = rebase_coefficients(coeffs, basis)
    win = basis.grid.window
    d = win.shape[1]
    amap = {tuple(int(v) for v in np.asarray(k).reshape(d)): complex(val)
            for k, val in coeffs.items()}
    v = basis.grid.values
    h = basis.values_matrix()
    worst = 0.0
    peak = 0.0
    for cell, brow in beta.items():
        abar = np.array([amap.get(tuple(int(x) + c for x, c in zip(omega, cell)),
                                  0.0) for omega in win])
        direct = v @ abar
        rebuilt = h @ brow
        worst = max(worst, float(np.abs(direct - rebuilt).max(initial=0.0)))
        peak = max(peak, float(np.abs(direct).max(initial=0.0)))
    return worst / (1.0 + peak)
