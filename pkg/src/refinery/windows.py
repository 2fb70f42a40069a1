"""Nested lattice windows adapted to a mask support.

A window is a finite set of lattice points carrying the translates of a
refinable function that can be nonzero over the tile. The chain of windows
is nested so that, one scale up, every point of a window draws only on
points of the window below it through the two-scale relation; that
containment is what lets vectors indexed by a small window be extended
outward ring by ring.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .attractor import scaled_norm
from .errors import WindowError
from .lattice import DigitSet, Dilation, order_points, point_index

MAX_DESCENT = 200


def _as_set(points) -> set:
    pts = np.asarray(points, dtype=np.int64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    return {tuple(int(v) for v in row) for row in pts}


def _as_window(pts_set, dimension) -> np.ndarray:
    if not pts_set:
        return np.zeros((0, dimension), dtype=np.int64)
    return order_points(np.array(sorted(pts_set), dtype=np.int64))


def two_scale_sources(points, support, dilation: Dilation) -> np.ndarray:
    """{q : Bq - s in `points` for some s in support}.

    These are the points whose two-scale expansion reaches into `points`;
    applying the map repeatedly walks the chain downward one window per step.
    """
    pts = np.asarray(points, dtype=np.int64).reshape(-1, dilation.dimension)
    sup = np.asarray(support, dtype=np.int64).reshape(-1, dilation.dimension)
    if pts.size == 0:
        return pts.copy()
    z = (pts[:, None, :] + sup[None, :, :]).reshape(-1, dilation.dimension)
    q, ok = dilation.quotient(z)
    return order_points(q[ok]) if ok.any() else np.zeros((0, dilation.dimension), np.int64)


def _source_sets(candidates, support, dilation: Dilation) -> list:
    """Per-candidate source sets {q : Bq in z + support}, as tuple sets."""
    cand = np.asarray(candidates, dtype=np.int64).reshape(-1, dilation.dimension)
    sup = np.asarray(support, dtype=np.int64).reshape(-1, dilation.dimension)
    nc, ns = len(cand), len(sup)
    z = (cand[:, None, :] + sup[None, :, :]).reshape(-1, dilation.dimension)
    q, ok = dilation.quotient(z)
    out = []
    for i in range(nc):
        rows = q[i * ns:(i + 1) * ns]
        good = ok[i * ns:(i + 1) * ns]
        out.append({tuple(int(v) for v in rows[j]) for j in range(ns) if good[j]})
    return out


def lattice_points_in_attractor(offsets, dilation: Dilation) -> np.ndarray:
    """All lattice points lying in the attractor of (A, offsets).

    Seeds with every lattice point inside the attractor's bounding ball in
    the contraction-adapted norm, then shrinks by keeping points whose image
    under A lands back in the set up to an offset; the limit is exact.
    """
    offs = order_points(offsets)
    if offs.size == 0:
        return offs
    d = dilation.dimension
    lat = dilation.lattice
    emb = lat.embed(offs)
    sn = scaled_norm(dilation)
    mean = emb.mean(axis=0)
    center = np.linalg.solve(dilation.matrix - np.eye(d), mean)
    spread = float(np.max(sn.of(emb - mean))) if len(offs) > 1 else 0.0
    radius = sn.theta * spread / (1.0 - sn.theta) + 1e-6
    # the adapted ball sits inside the euclidean ball of the same radius
    half = radius * np.linalg.norm(np.linalg.inv(lat.generators), 2)
    c0 = lat.to_coords(center)
    lo = np.floor(c0 - half).astype(int)
    hi = np.ceil(c0 + half).astype(int)
    seed = []
    for q in product(*[range(lo[i], hi[i] + 1) for i in range(d)]):
        if sn.of(lat.embed(np.array(q, dtype=np.int64)) - center) <= radius:
            seed.append(q)
    current = set(seed)
    for _ in range(MAX_DESCENT):
        arr = _as_window(current, d)
        kept = _as_set(two_scale_sources(arr, offs, dilation)) & current
        if kept == current:
            return _as_window(current, d)
        current = kept
    raise WindowError("attractor lattice-point iteration did not stabilize")


@dataclass(frozen=True)
class WindowChain:
    """Ascending windows with one-scale containment between neighbours.

    `windows[base_index]` covers every translate that can meet the tile;
    windows below it arise by applying the two-scale source map, windows
    above it by the maximal growth rule. For every n and every point z of
    windows[n+1], the sources {q : Bq in z + support} lie inside windows[n].
    """

    digits: DigitSet
    support: np.ndarray
    windows: tuple
    base_index: int

    def __len__(self) -> int:
        return len(self.windows)

    def window(self, n: int) -> np.ndarray:
        return self.windows[n]

    @property
    def base(self) -> np.ndarray:
        return self.windows[self.base_index]

    def ring(self, n: int) -> np.ndarray:
        """Points of windows[n] missing from windows[n-1]."""
        if n == 0:
            return self.windows[0]
        inner = _as_set(self.windows[n - 1])
        keep = [p for p in self.windows[n] if tuple(int(v) for v in p) not in inner]
        return np.array(keep, dtype=np.int64) if keep else np.zeros(
            (0, self.digits.dilation.dimension), dtype=np.int64)

    def index(self, n: int) -> dict:
        return point_index(self.windows[n])


def _grow_window(window, support, dilation: Dilation) -> np.ndarray:
    """Largest window whose new points draw only on the current one.

    Candidates are the one-scale targets B w - support together with the
    current points; a candidate survives when its source set is nonempty
    and contained in the current window, or it already belongs to it.
    """
    wset = _as_set(window)
    d = dilation.dimension
    targets = (dilation.apply(window)[:, None, :]
               - np.asarray(support, dtype=np.int64)[None, :, :]).reshape(-1, d)
    cand = _as_window(_as_set(targets) | wset, d)
    keep = set()
    for row, sources in zip(cand, _source_sets(cand, support, dilation)):
        z = tuple(int(v) for v in row)
        if (sources and sources <= wset) or z in wset:
            keep.add(z)
    return _as_window(keep, d)


def window_chain(support, digits: DigitSet, extra: int = 2) -> WindowChain:
    """Build the window chain of a mask support over a digit system.

    The base window collects the lattice points of the attractor of the
    difference set support - digits; source-map iterates descend from it to
    the fixed window, and `extra` growth steps extend the chain upward.
    """
    dil = digits.dilation
    sup = order_points(support)
    if sup.size == 0:
        raise WindowError("mask support is empty")
    diff = (sup[:, None, :] - digits.points[None, :, :]).reshape(-1, dil.dimension)
    base = lattice_points_in_attractor(order_points(diff), dil)
    if base.size == 0:
        raise WindowError("no lattice point lies in the support attractor")
    descent = [base]
    for _ in range(MAX_DESCENT):
        nxt = two_scale_sources(descent[-1], sup, dil)
        nset, pset = _as_set(nxt), _as_set(descent[-1])
        if not nset <= pset:
            raise WindowError("two-scale source map escaped the base window")
        if nset == pset:
            break
        descent.append(nxt)
    else:
        raise WindowError("window descent did not stabilize")
    chain = list(reversed(descent))
    if chain[0].size == 0:
        raise WindowError("the two-scale fixed window is empty")
    base_index = len(chain) - 1
    for _ in range(extra):
        chain.append(_grow_window(chain[-1], sup, dil))
    _check_chain(chain, sup, dil)
    return WindowChain(digits=digits, support=sup, windows=tuple(chain),
                       base_index=base_index)


def grow_chain(chain: WindowChain, extra: int = 1) -> WindowChain:
    """Extend a chain by `extra` further windows at the top."""
    dil = chain.digits.dilation
    windows = list(chain.windows)
    for _ in range(extra):
        windows.append(_grow_window(windows[-1], chain.support, dil))
    _check_chain(windows, chain.support, dil)
    return WindowChain(digits=chain.digits, support=chain.support,
                       windows=tuple(windows), base_index=chain.base_index)


def _check_chain(windows, support, dilation: Dilation) -> None:
    """Nesting plus exact one-step source equality between neighbours."""
    for n in range(len(windows) - 1):
        low, high = _as_set(windows[n]), _as_set(windows[n + 1])
        if not low <= high:
            raise WindowError(f"window {n + 1} does not contain window {n}")
        covered = set()
        for row, sources in zip(windows[n + 1],
                                _source_sets(windows[n + 1], support, dilation)):
            if not sources <= low:
                raise WindowError(
                    f"point {tuple(int(v) for v in row)} of window {n + 1} "
                    f"draws outside window {n}")
            covered |= sources
        if covered != low:
            raise WindowError(
                f"window {n + 1} does not map onto window {n} one scale up")
