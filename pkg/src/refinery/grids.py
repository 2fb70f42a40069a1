"""Values of a refinable function on dilation-refined grids.

A refinement mask pins down its solution on the grid A^{-t} G gamma, gamma
running over addresses with digits from the digit set, once the values on a
lattice window are known: appending one digit to an address multiplies the
window value vector by the digit-shifted transfer matrix. A grid level is
therefore one batched matrix application per digit, and the value rows are
exact wherever the window covers every translate that can be nonzero, which
the attractor window guarantees.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from scipy.spatial import cKDTree

from ._kernels import apply_digit_matrices, horner_compose
from .attractor import tail_radius
from .errors import BudgetExceeded, WindowTooSmall
from .lattice import DigitSet, point_index
from .masks import Mask
from .scale import digit_matrices, scale_matrix
from .spectral import right_vector_at_one
from .windows import lattice_points_in_attractor

DEFAULT_GRID_CAP = 1 << 24


def value_window(mask: Mask, digits: DigitSet) -> np.ndarray:
    """Lattice points whose translates can be nonzero over the digit tile."""
    d = mask.dilation.dimension
    diffs = (mask.points[:, None, :] - digits.points[None, :, :]).reshape(-1, d)
    return lattice_points_in_attractor(diffs, mask.dilation)


def overlap_shifts(digits: DigitSet) -> np.ndarray:
    """Nonzero lattice shifts whose tile translate can touch the tile.

    Differences of two tile points lie in the attractor of the pairwise
    digit differences, so its lattice points form a superset of the shifts
    with overlapping closed translates.
    """
    d = digits.dilation.dimension
    diffs = (digits.points[:, None, :] - digits.points[None, :, :]).reshape(-1, d)
    pts = lattice_points_in_attractor(diffs, digits.dilation)
    return pts[np.any(pts != 0, axis=1)]


def boundary_flags(grid: GridFunction) -> np.ndarray:
    """Mark grid rows on (or within a thin collar of) the tile boundary.

    A tile point is a boundary point exactly when some nonzero lattice
    translate of the closed tile also contains it. Membership is tested
    against the grid's own address cloud with its tail bound as collar, so
    every true boundary point is flagged; a band of near-boundary interior
    points of width about the tail may be flagged along with it.
    """
    dil = grid.digits.dilation
    lat = dil.lattice
    pts = grid.points()
    tree = cKDTree(pts)
    tau = tail_radius(dil, lat.embed(grid.digits.points), grid.resolution)
    tau += 1e-12 * (1.0 + tau)
    flags = np.zeros(grid.size, dtype=bool)
    for shift in overlap_shifts(grid.digits):
        dist, _ = tree.query(pts - lat.embed(shift))
        flags |= dist <= tau
    return flags


def thread_count() -> int:
    raw = os.environ.get("REFINERY_THREADS", "1").strip()
    try:
        n = int(raw)
    except ValueError:
        raise RuntimeError(
            f"REFINERY_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise RuntimeError(
            f"REFINERY_THREADS must be a positive integer, got {raw!r}")
    return n


@dataclass(frozen=True)
class GridFunction:
    """Window value vectors of a refinable function on one grid level.

    values[s, i] holds the function at A^{-resolution} G addresses[s] + G
    window[i]; start is the lattice value vector the recursion began from.
    """

    mask: Mask
    digits: DigitSet
    window: np.ndarray
    resolution: int
    addresses: np.ndarray
    values: np.ndarray
    start: np.ndarray

    @property
    def size(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def points(self) -> np.ndarray:
        """Embedded grid points A^{-resolution} G gamma, one row each."""
        emb = self.mask.dilation.lattice.embed(self.addresses)
        power = np.linalg.matrix_power(self.mask.dilation.matrix, self.resolution)
        return np.linalg.solve(power, emb.T).T

    def index(self) -> dict:
        return point_index(self.addresses)

    def samples(self, shift=None) -> np.ndarray:
        """Function values at grid points offset by the lattice point `shift`."""
        d = self.mask.dilation.dimension
        key = (0,) * d if shift is None else tuple(
            int(v) for v in np.asarray(shift).reshape(d))
        col = point_index(self.window).get(key)
        if col is None:
            return np.zeros(self.size, dtype=self.values.dtype)
        return self.values[:, col]

    def is_real(self, tol: float = 1e-12) -> bool:
        return bool(np.abs(self.values.imag).max(initial=0.0) <= tol)

    def to_csv(self, path, full: bool = False) -> None:
        """One row per grid point: position, value columns, boundary flag.

        Default columns are x_1..x_d, re(phi), im(phi), boundary_flag with
        phi the unshifted translate; full=True writes one re/im pair per
        window shift instead of the single pair.
        """
        pts = self.points()
        d = pts.shape[1]
        flags = boundary_flags(self)
        head = [f"x_{j + 1}" for j in range(d)]
        if full:
            for p in self.window:
                lab = "(" + ",".join(str(int(v)) for v in p) + ")"
                head += [f"re_phi{lab}", f"im_phi{lab}"]
            cols = self.values
        else:
            head += ["re_phi", "im_phi"]
            cols = self.samples()[:, None]
        head.append("boundary_flag")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(head)
            for s in range(self.size):
                row = [f"{v:.17g}" for v in pts[s]]
                for v in cols[s]:
                    row += [f"{v.real:.17g}", f"{v.imag:.17g}"]
                row.append("1" if flags[s] else "0")
                writer.writerow(row)


def _evolve(mats: np.ndarray, rows: np.ndarray, steps: int) -> np.ndarray:
    n = mats.shape[2]
    v = rows
    for _ in range(steps):
        v = np.asarray(apply_digit_matrices(mats, v)).reshape(-1, n)
    return v


def evaluate_grid(mask: Mask, digits: DigitSet, resolution: int,
                  start=None, window=None,
                  cap: int = DEFAULT_GRID_CAP) -> GridFunction:
    """Window value vectors on every depth-`resolution` address.

    `start` is the lattice value vector on the window; by default it is the
    fixed vector of the transfer section, which requires eigenvalue one to
    be simple there (DegenerateEigenvalue otherwise, and a convention such
    as one-sided continuity must supply `start` instead). Addresses come
    out in digit-ladder order: scale-t digit codes are digit t of the row
    number written in base m.
    """
    if resolution < 0:
        raise ValueError("resolution must not be negative")
    dil = mask.dilation
    if digits.dilation.dimension != dil.dimension or not np.array_equal(
            digits.dilation.lattice_matrix, dil.lattice_matrix):
        raise ValueError("digit set and mask use different dilations")
    m = digits.count
    base = value_window(mask, digits)
    if window is None:
        win = base
    else:
        win = np.asarray(window, dtype=np.int64).reshape(-1, dil.dimension)
        have = {tuple(int(v) for v in p) for p in win}
        missing = [tuple(int(v) for v in p) for p in base
                   if tuple(int(v) for v in p) not in have]
        if missing:
            raise WindowTooSmall(
                f"window misses translates that are nonzero on the tile: "
                f"{missing[:4]}")
    n = len(win)
    total = (m ** resolution) * max(n, 1)
    if total > cap:
        raise BudgetExceeded(
            f"grid holds {total} values, over the cap of {cap}")
    mats = digit_matrices(mask, win, digits).astype(np.complex128)
    if start is None:
        vec = right_vector_at_one(scale_matrix(mask, win)).astype(np.complex128)
    else:
        vec = np.asarray(start, dtype=np.complex128).reshape(-1)
        if vec.shape != (n,):
            raise ValueError(
                f"start vector has {vec.shape[0]} entries, window has {n}")
        if not np.isfinite(vec).all():
            raise ValueError("start vector must be finite")
    threads = thread_count()
    split = 0
    while m ** split < threads and split < resolution:
        split += 1
    seeds = _evolve(mats, vec[None, :], split)
    if split >= resolution or threads == 1:
        values = _evolve(mats, seeds, resolution - split)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            slabs = list(pool.map(
                lambda row: _evolve(mats, row[None, :], resolution - split),
                seeds))
        # slab s covers global rows s + len(seeds) * j, exactly as the
        # serial digit-major order lays them out
        values = np.stack(slabs, axis=1).reshape(-1, n)
    count = m ** resolution
    ladder = np.arange(count, dtype=np.int64)
    codes = np.empty((count, resolution), dtype=np.int64)
    for t in range(resolution):
        codes[:, t] = (ladder // m ** t) % m
    addresses = horner_compose(codes, digits.points, dil.lattice_matrix)
    return GridFunction(mask=mask, digits=digits, window=win,
                        resolution=resolution, addresses=np.asarray(addresses),
                        values=values, start=vec)


def refinement_residual(grid: GridFunction) -> float:
    """Largest mismatch of the two-scale relation across grid levels.

    Every depth-(r-1) grid point is also a depth-r point through a
    different digit path; the value vectors must agree.
    """
    if grid.resolution == 0:
        return 0.0
    low = evaluate_grid(grid.mask, grid.digits, grid.resolution - 1,
                        start=grid.start, window=grid.window)
    lifted = grid.digits.dilation.apply(low.addresses)
    idx = grid.index()
    rows = np.array([idx[tuple(int(v) for v in p)] for p in lifted])
    return float(np.abs(grid.values[rows] - low.values).max())


def partition_residual(grid: GridFunction, interior_only: bool = False) -> float:
    """Largest deviation of the translate sum from one over the grid.

    Meaningful for masks whose coset sums are one and a start vector
    summing to one; then the translates must sum to one everywhere.
    interior_only drops rows flagged as boundary before taking the max.
    """
    sums = np.abs(grid.values.sum(axis=1) - 1.0)
    if interior_only:
        sums = sums[~boundary_flags(grid)]
    return float(sums.max(initial=0.0))
