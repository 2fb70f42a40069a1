"""Attractors of digit-driven iterated function systems and tiling statistics.

The attractor of (A, H) is the compact set of sums x = sum_{j>=1} A^{-j} h_j
with h_j drawn from the finite offset set H. Depth-r truncations are called
addresses; the cloud of all depth-r addresses approximates the attractor to
within a computable tail radius, which shrinks geometrically.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .errors import BudgetExceeded
from .lattice import DigitSet, Dilation, order_key, order_points

DEFAULT_CLOUD_CAP = 1 << 22


@dataclass(frozen=True)
class ScaledNorm:
    """Norm ||x|| = max_{0<=i<power} scale^i ||A^{-i} x||_2.

    `power` is the smallest p with ||A^{-p}||_2 < 1 and scale = theta^{-1}
    with theta = ||A^{-p}||_2^{1/p}, which makes the norm contract by at
    least theta under A^{-1}.
    """

    power: int
    scale: float
    theta: float
    mats: np.ndarray  # (power, d, d): scale^i A^{-i}

    def of(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == 1
        pts = x.reshape(-1, x.shape[-1])
        vals = np.einsum("pab,nb->pna", self.mats, pts)
        out = np.sqrt((vals.real**2 + vals.imag**2).sum(axis=2)
                      if np.iscomplexobj(vals) else (vals**2).sum(axis=2)).max(axis=0)
        return float(out[0]) if squeeze else out


def scaled_norm(dilation: Dilation, max_power: int = 64) -> ScaledNorm:
    ainv = np.linalg.inv(dilation.matrix)
    cur = np.eye(dilation.dimension)
    for p in range(1, max_power + 1):
        cur = cur @ ainv
        s = np.linalg.norm(cur, 2)
        if s < 1.0:
            theta = s ** (1.0 / p)
            scale = 1.0 / theta
            mats = np.stack([
                (scale**i) * np.linalg.matrix_power(ainv, i) for i in range(p)
            ])
            return ScaledNorm(power=p, scale=scale, theta=theta, mats=mats)
    raise RuntimeError("no contracting power found; dilation is not expansive")


def tail_radius(dilation: Dilation, offsets_embedded: np.ndarray, depth: int) -> float:
    """Upper bound on dist(x, depth-`depth` cloud) over attractor points x.

    Bound: eps * sum_{j>depth} ||A^{-j}||_2 with eps the largest offset norm;
    partial sums are taken exactly for a while, then a geometric bound based
    on the contracting power finishes the series.
    """
    eps = float(np.linalg.norm(offsets_embedded, axis=1).max()) if len(offsets_embedded) else 0.0
    if eps == 0.0:
        return 0.0
    ainv = np.linalg.inv(dilation.matrix)
    horizon = depth + 40
    cur = np.eye(dilation.dimension)
    norms = []
    for _ in range(horizon):
        cur = cur @ ainv
        norms.append(np.linalg.norm(cur, 2))
    sn = scaled_norm(dilation)
    # remainder after `horizon` terms: ||A^{-j}|| <= C theta^j
    c = max(np.linalg.norm(np.linalg.matrix_power(ainv, i), 2) * sn.scale**i
            for i in range(sn.power))
    rem = c * sn.theta ** (horizon + 1) / (1.0 - sn.theta)
    return eps * (sum(norms[depth:]) + rem)


@dataclass(frozen=True)
class AttractorCloud:
    """Depth-r address cloud of an attractor.

    `addresses` are exact integer sums sum_t B^t h (lattice coordinates at
    scale B^r); `points` are the embedded values A^{-r} G gamma. Every
    attractor point lies within `tail` (Euclidean) of the cloud, and the
    cloud lies inside the attractor's closure by construction.
    """

    dilation: Dilation
    offsets: np.ndarray
    depth: int
    addresses: np.ndarray
    points: np.ndarray
    tail: float
    pitch: float
    sampled: bool

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def to_csv(self, path) -> None:
        """One row per cloud point, columns x_1..x_d, in address order."""
        order = sorted(range(self.size),
                       key=lambda s: order_key(self.addresses[s]))
        d = self.points.shape[1]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x_{j + 1}" for j in range(d)])
            for s in order:
                writer.writerow([f"{v:.17g}" for v in self.points[s]])


def attractor_cloud(offsets, dilation: Dilation, depth: int, *,
                    cap: int = DEFAULT_CLOUD_CAP, sample: bool = False,
                    rng=None) -> AttractorCloud:
    """Enumerate (or sample) the depth-`depth` address cloud of (A, offsets).

    Full enumeration dedupes exactly on integer addresses level by level and
    then collapses points closer than the snap pitch theta^depth * diam/4,
    keeping the first representative in enumeration order. When the string
    count exceeds `cap`, either BudgetExceeded is raised or, with
    sample=True, `cap` uniformly random digit strings are drawn instead.
    """
    offs = order_points(offsets)
    dil = dilation
    d = dil.dimension
    b = dil.lattice_matrix
    mh = offs.shape[0]
    sn = scaled_norm(dil)
    emb = dil.lattice.embed(offs)
    tail = tail_radius(dil, emb, depth)
    if mh > 1:
        diam = max(np.linalg.norm(emb[i] - emb[j])
                   for i in range(mh) for j in range(i + 1, mh))
    else:
        diam = 1.0
    pitch = (sn.theta**depth) * diam / 4.0

    sampled = False
    if mh**depth > cap:
        if not sample:
            raise BudgetExceeded(
                f"{mh}^{depth} digit strings exceed cap {cap}; pass sample=True"
            )
        sampled = True
        gen = rng if rng is not None else np.random.default_rng(0)
        codes = gen.integers(0, mh, size=(cap, depth), dtype=np.int64)
        addr = _kernels.horner_compose(codes, offs, b)
        addr = np.unique(addr, axis=0)
    else:
        addr = np.zeros((1, d), dtype=np.int64)
        bp = np.eye(d, dtype=np.int64)
        for _ in range(depth):
            shifts = offs @ bp.T
            addr = (addr[None, :, :] + shifts[:, None, :]).reshape(-1, d)
            addr = np.unique(addr, axis=0)
            bp = b @ bp
    # embed: x = A^{-depth} G gamma
    ar = np.linalg.matrix_power(dil.matrix, depth)
    pts = np.linalg.solve(ar, dil.lattice.embed(addr).T).T
    # snap dedup at the pitch, keeping first representatives
    if pitch > 0:
        keys = np.round(pts / pitch).astype(np.int64)
        _, keep = np.unique(keys, axis=0, return_index=True)
        keep.sort()
        addr, pts = addr[keep], pts[keep]
    return AttractorCloud(dilation=dil, offsets=offs, depth=depth,
                          addresses=addr, points=pts, tail=tail,
                          pitch=pitch, sampled=sampled)


@dataclass(frozen=True)
class TileStats:
    """Covering-multiplicity statistics of the digit attractor over the lattice."""

    mean: float
    minimum: int
    maximum: int
    samples: int
    depth: int
    refine_levels: int
    tail: float

    @property
    def is_tile(self) -> bool:
        return abs(self.mean - 1.0) <= 0.1


def _membership(ctx, pts, level):
    """Set membership of embedded points in the attractor.

    Level 0 is the distance test dist(x, cloud) <= tau, which never misses a
    true member; each extra level applies the exact decomposition
    Q = A^{-r}(addresses + Q) once, shrinking the false-positive collar.
    """
    tree, addr_tree, emb_addr, ar, tau, r_cand = ctx
    dist, _ = tree.query(pts)
    near = dist <= tau
    if level <= 0 or not near.any():
        return near
    out = np.zeros(len(pts), dtype=bool)
    idx = np.nonzero(near)[0]
    # x in Q iff A^r x - G gamma in Q for some depth-r address gamma
    z = pts[idx] @ ar.T
    owners, rows = [], []
    for i, nb in enumerate(addr_tree.query_ball_point(z, r=r_cand)):
        owners.extend([i] * len(nb))
        rows.extend(nb)
    if not rows:
        return out
    owners = np.array(owners)
    w = z[owners] - emb_addr[np.array(rows)]
    hit = _membership(ctx, w, level - 1)
    np.logical_or.at(out, idx[owners], hit)
    return out


def tile_multiplicity(digits: DigitSet, depth: int = 12, samples: int = 10_000, *,
                      rng=None, refine_levels: int = 2,
                      cap: int = DEFAULT_CLOUD_CAP) -> TileStats:
    """Monte-Carlo covering multiplicity of the digit attractor.

    Draws points uniformly from the fundamental cell of the lattice and
    counts lattice translates of the attractor containing each; a tile has
    mean 1. Membership is the cloud distance test sharpened by
    `refine_levels` exact decomposition steps.
    """
    gen = rng if rng is not None else np.random.default_rng(0)
    cloud = attractor_cloud(digits.points, digits.dilation, depth,
                            cap=cap, sample=True, rng=gen)
    # decomposition refinement needs every depth-r address; an incomplete
    # sampled set would turn true members into misses
    if cloud.sampled:
        refine_levels = 0
    dil = digits.dilation
    lat = dil.lattice
    d = dil.dimension
    x = gen.random((samples, d)) @ lat.generators.T
    tree = cKDTree(cloud.points)
    emb_addr = lat.embed(cloud.addresses)
    addr_tree = cKDTree(emb_addr)
    tau = cloud.tail + cloud.pitch * np.sqrt(d)
    r_cand = float(np.linalg.norm(cloud.points, axis=1).max()) + tau + 1e-9
    ar = np.linalg.matrix_power(dil.matrix, depth)
    ctx = (tree, addr_tree, emb_addr, ar, tau, r_cand)
    # lattice translate window from the cloud bounding box
    xc = lat.to_coords(x)
    cc = lat.to_coords(cloud.points)
    lo = np.floor(xc.min(axis=0) - cc.max(axis=0) - 1).astype(int)
    hi = np.ceil(xc.max(axis=0) - cc.min(axis=0) + 1).astype(int)
    counts = np.zeros(samples, dtype=np.int64)
    for k in product(*[range(lo[i], hi[i] + 1) for i in range(d)]):
        shift = lat.embed(np.array(k, dtype=np.int64))
        hit = _membership(ctx, x - shift, refine_levels)
        counts += hit
    return TileStats(mean=float(counts.mean()), minimum=int(counts.min()),
                     maximum=int(counts.max()), samples=samples, depth=depth,
                     refine_levels=refine_levels, tail=cloud.tail)


def translate_fixed_point(dilation: Dilation, shift) -> np.ndarray:
    """Solve (A - I) x = G shift: translating offsets by `shift` moves the attractor by x."""
    rhs = dilation.lattice.embed(np.asarray(shift, dtype=np.float64))
    return np.linalg.solve(dilation.matrix - np.eye(dilation.dimension), rhs)
