"""Eigenstructure of transfer matrix sections and window-to-window extension.

Row convention throughout: a Jordan chain at eigenvalue lam is a list of row
vectors v_0, v_1, ... with v_0 (T - lam I) = 0 and v_{t+1} (T - lam I) = v_t.
Chains are stored ascending, so vectors[0] is the eigenvector row.

Clusters of computed eigenvalues are formed adaptively: a defective
eigenvalue of multiplicity k scatters numerically like eps**(1/k), far wider
than any fixed radius. Tight clusters are tried first; an under-merged
defective eigenvalue yields nearly parallel chain vectors, so whenever the
stacked Jordan basis is numerically rank deficient the two nearest cluster
centers are merged and the decomposition is retried. Eigenvalues closer
than about 1e-6 of the spectral radius are treated as equal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEigenvalue, IllConditioned, WindowError, ZeroEigenvalue
from .lattice import point_index
from .scale import ScaleMatrix, scale_matrix
from .windows import WindowChain, _source_sets

RANK_TOL = 1e-9
MAX_REPAIR = 60
BASIS_RTOL = 1e-6
MERGE_CAP = 1e-3


def numerical_rank(matrix, rtol: float = RANK_TOL) -> int:
    if matrix.size == 0:
        return 0
    s = np.linalg.svd(matrix, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def _nullity_staircase(m, cap: int, rtol: float) -> list:
    """Nullities of m^k for k = 1, 2, ... until they stabilize.

    A direction counts as null for m^k when its singular value is below
    rtol * ||m||^k, the noise floor of forming the power; judging against
    the power's own largest singular value would misread a uniformly tiny
    restriction as full rank. Eigenvalues closer to zero than about
    rtol**(1/k) of the spectral radius are beyond this discrimination.
    """
    n = m.shape[0]
    ref = float(np.linalg.norm(m, 2))
    if ref == 0.0:
        return [n]
    out = []
    power = np.eye(n, dtype=complex)
    for k in range(1, cap + 1):
        power = power @ m
        s = np.linalg.svd(power, compute_uv=False)
        out.append(int(np.count_nonzero(s <= rtol * ref**k)))
        if len(out) > 1 and out[-1] == out[-2]:
            break
        if out[-1] >= n:
            break
    return out


@dataclass(frozen=True)
class JordanChain:
    """Ascending left chain: vectors[t+1] (T - lam I) = vectors[t]."""

    eigenvalue: complex
    vectors: np.ndarray

    @property
    def length(self) -> int:
        return self.vectors.shape[0]

    @property
    def eigenvector(self) -> np.ndarray:
        return self.vectors[0]


@dataclass(frozen=True)
class EigenCluster:
    """One eigenvalue (a cluster of computed copies) with its chains."""

    eigenvalue: complex
    members: np.ndarray
    chains: tuple

    @property
    def multiplicity(self) -> int:
        return sum(c.length for c in self.chains)

    @property
    def partition(self) -> tuple:
        return tuple(sorted((c.length for c in self.chains), reverse=True))


@dataclass(frozen=True)
class SpectralData:
    """Complete left Jordan data of a transfer matrix section."""

    matrix: np.ndarray
    window: np.ndarray
    clusters: tuple

    def eigenvalues(self) -> np.ndarray:
        return np.array([c.eigenvalue for c in self.clusters])

    def cluster_at(self, value, tol: float = 1e-6):
        for c in self.clusters:
            if abs(c.eigenvalue - value) <= tol:
                return c
        return None

    def chains(self):
        return [ch for c in self.clusters for ch in c.chains]

    def basis(self) -> np.ndarray:
        """Rows stacked chain by chain, each chain top down."""
        rows = []
        for cluster in self.clusters:
            for chain in cluster.chains:
                rows.extend(chain.vectors[::-1])
        return np.array(rows)

    def jordan_matrix(self) -> np.ndarray:
        """J with basis() @ T = J @ basis(); upper bidiagonal blocks."""
        n = sum(c.multiplicity for c in self.clusters)
        j = np.zeros((n, n), dtype=complex)
        pos = 0
        for cluster in self.clusters:
            for chain in cluster.chains:
                r = chain.length
                for t in range(r):
                    j[pos + t, pos + t] = cluster.eigenvalue
                    if t + 1 < r:
                        j[pos + t, pos + t + 1] = 1.0
                pos += r
        return j


def _union_clusters(values, radius: float) -> list:
    """Indices grouped by transitive closeness within `radius`."""
    order = np.argsort(values.real * 2 + values.imag)  # deterministic seed order
    groups = []
    for i in order:
        placed = False
        for g in groups:
            if any(abs(values[i] - values[k]) <= radius for k in g):
                g.append(i)
                placed = True
                break
        if not placed:
            groups.append([int(i)])
    merged = True
    while merged:
        merged = False
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                if any(abs(values[i] - values[k]) <= radius
                       for i in groups[a] for k in groups[b]):
                    groups[a].extend(groups[b])
                    del groups[b]
                    merged = True
                    break
            if merged:
                break
    return groups


def _nilpotent_chains(c, ref: float, rtol: float, floor: float = 0.0) -> list:
    """Right Jordan chains (lists of column vectors) of a nilpotent matrix.

    `ref` is the norm of the matrix the restriction came from; null
    directions of c^k are judged against rtol * ref**k. `floor` is the
    eigenvalue scatter of the cluster the restriction belongs to: noise of
    that size in c grows like ||c||**(k-1) under powering, so anything
    below it carries no structure.
    """
    n = c.shape[0]
    if n == 0:
        return []
    if ref == 0.0:
        ref = 1.0
    cnorm = max(1.0, float(np.linalg.norm(c, 2)))
    kernels = []
    power = np.eye(n, dtype=complex)
    for k in range(1, n + 1):
        power = power @ c
        _, s, vh = np.linalg.svd(power)
        cut = max(rtol * ref**k, floor * (k + 1) * cnorm**(k - 1))
        null_dim = int(np.count_nonzero(s <= cut))
        kernels.append(vh[n - null_dim:].conj().T if null_dim else
                       np.zeros((n, 0), dtype=complex))
        if null_dim >= n or (len(kernels) > 1
                             and kernels[-1].shape[1] == kernels[-2].shape[1]):
            break
    kmax = len(kernels)
    nu = [0] + [k.shape[1] for k in kernels]
    if nu[-1] < n:
        raise IllConditioned("restriction to the cluster space is not nilpotent")
    chains = []
    level_vectors = {k: [] for k in range(1, kmax + 1)}
    for k in range(kmax, 0, -1):
        want = (nu[k] - nu[k - 1]) - (nu[k + 1] - nu[k] if k < kmax else 0)
        if want <= 0:
            continue
        # fresh directions of ker(c^k) modulo ker(c^{k-1}) and the level-k
        # vectors of chains already extracted
        used = [kernels[k - 2]] if k >= 2 else []
        used += [v.reshape(-1, 1) for v in level_vectors[k]]
        space = kernels[k - 1]
        if used:
            u = np.hstack(used)
            q, _ = np.linalg.qr(u)
            proj = space - q @ (q.conj().T @ space)
        else:
            proj = space
        uu, ss, _ = np.linalg.svd(proj, full_matrices=False)
        if want > len(ss) or ss[want - 1] <= 1e-6:
            raise IllConditioned("could not separate chain tops at one level")
        for col in range(want):
            vec = uu[:, col]
            chain = [vec]
            for _ in range(k - 1):
                vec = c @ vec
                chain.append(vec)
            for depth, v in enumerate(chain):
                level_vectors[k - depth].append(v)
            chains.append(chain[::-1])  # ascending: eigenvector first
    return chains


def _extract_cluster(matrix, lam, count, rtol, spread: float = 0.0) -> EigenCluster:
    """Chains of T at lam via the nilpotent part on the generalized eigenspace.

    `spread` is the radius of the cluster of computed eigenvalues around
    lam; singular values at that scale are scatter, not structure. The
    power of (T - lam I) is raised until exactly `count` directions fall
    below the noise cut, which both finds the generalized eigenspace and
    cross-checks the cluster size.
    """
    n = matrix.shape[0]
    m = matrix.T - lam * np.eye(n)
    ref = max(float(np.linalg.norm(m, 2)), abs(lam), 1e-300)
    floor = 4.0 * spread
    power = np.eye(n, dtype=complex)
    vh = None
    hits = 0
    for k in range(1, max(count, 1) + 1):
        power = power @ m
        _, s, vh = np.linalg.svd(power)
        cut = max(rtol * ref**k, floor * (k + 1) * max(1.0, ref)**(k - 1))
        hits = int(np.count_nonzero(s <= cut))
        if hits >= count:
            break
    if hits != count:
        raise IllConditioned(
            f"eigenspace at {lam:.6g} holds {hits} directions, cluster has {count}")
    w = vh[n - count:].conj().T
    small = w.conj().T @ m @ w
    raw = _nilpotent_chains(small, ref, rtol, floor=floor)
    chains = []
    for chain in raw:
        rows = np.array([(w @ u) for u in chain])  # columns of T.T -> rows of T
        scale = np.linalg.norm(rows[-1])
        pivot = rows[-1][np.argmax(np.abs(rows[-1]))]
        rows = rows / (scale * pivot / abs(pivot))
        chains.append(JordanChain(eigenvalue=lam, vectors=rows))
    chains.sort(key=lambda c: -c.length)
    return EigenCluster(eigenvalue=lam, members=np.full(count, lam), chains=tuple(chains))


def eigen_jordan(section, rtol: float = RANK_TOL) -> SpectralData:
    """Left Jordan decomposition of a transfer matrix section.

    Accepts a ScaleMatrix or a plain square array. Computed eigenvalue
    copies are clustered adaptively, merging nearest centers while the
    stacked chain basis stays rank deficient; the zero cluster is sized by
    the stable nullity of powers of the matrix itself.
    """
    if isinstance(section, ScaleMatrix):
        matrix, window = section.matrix, section.window
    else:
        matrix = np.asarray(section, dtype=complex)
        window = np.zeros((matrix.shape[0], 0), dtype=np.int64)
    n = matrix.shape[0]
    if n == 0 or matrix.shape != (n, n):
        raise IllConditioned("square nonempty matrix required")
    eigs = np.linalg.eigvals(matrix)
    scale = max(1.0, float(np.abs(eigs).max()))
    zero_mult = _nullity_staircase(matrix, n, rtol)[-1]
    by_mod = np.argsort(np.abs(eigs))
    nonzero = sorted(by_mod[zero_mult:], key=lambda i: (
        -abs(eigs[i]), round(np.angle(eigs[i]), 9)))
    values = eigs[nonzero]
    groups = _union_clusters(values, 1e-9 * scale) if len(values) else []
    clusters = None
    last_error = IllConditioned("eigenvalue clustering did not converge")
    for _ in range(MAX_REPAIR):
        try:
            trial = []
            for g in groups:
                lam = complex(np.mean(values[g]))
                spread = max((abs(values[i] - lam) for i in g), default=0.0)
                trial.append(
                    _extract_cluster(matrix, lam, len(g), rtol, spread=spread))
            if zero_mult:
                trial.append(_extract_cluster(matrix, 0j, zero_mult, rtol))
            rows = np.vstack([c.vectors for cl in trial for c in cl.chains])
            rows = rows / np.linalg.norm(rows, axis=1, keepdims=True)
            s = np.linalg.svd(rows, compute_uv=False)
            if s[-1] > BASIS_RTOL * s[0]:
                clusters = trial
                break
            last_error = IllConditioned(
                "jordan basis is numerically rank deficient")
        except IllConditioned as err:
            last_error = err
        # both failures are the signature of an under-merged defective
        # eigenvalue: pull the two nearest cluster centers together, retry
        if len(groups) < 2:
            raise last_error
        centers = [complex(np.mean(values[g])) for g in groups]
        a, b = min(((i, j) for i in range(len(groups))
                    for j in range(i + 1, len(groups))),
                   key=lambda ij: abs(centers[ij[0]] - centers[ij[1]]))
        if abs(centers[a] - centers[b]) > MERGE_CAP * scale:
            raise last_error
        groups = [g for j, g in enumerate(groups) if j not in (a, b)] + \
            [sorted(groups[a] + groups[b])]
    if clusters is None:
        raise IllConditioned("eigenvalue clustering did not converge")
    clusters.sort(key=lambda c: (-abs(c.eigenvalue),
                                 round(float(np.angle(c.eigenvalue)), 9)))
    total = sum(c.multiplicity for c in clusters)
    if total != n:
        raise IllConditioned(
            f"jordan multiplicities sum to {total}, expected {n}")
    return SpectralData(matrix=matrix, window=window, clusters=tuple(clusters))


def right_vector_at_one(section, tol: float = 1e-8) -> np.ndarray:
    """Right eigenvector of a transfer section at eigenvalue one, mean one.

    The value vector of a refinable function at lattice points is fixed by
    the transfer matrix, so eigenvalue one must be simple within `tol`;
    otherwise the point values are not determined and
    DegenerateEigenvalue is raised.
    """
    matrix = section.matrix if isinstance(section, ScaleMatrix) else np.asarray(section)
    n = matrix.shape[0]
    _, s, vh = np.linalg.svd(matrix - np.eye(n))
    ref = max(1.0, float(s[0]))
    null = int(np.count_nonzero(s <= tol * ref))
    if null == 0:
        raise DegenerateEigenvalue("one is not an eigenvalue of the section")
    if null > 1:
        raise DegenerateEigenvalue("eigenvalue one is not simple on this window")
    u = vh[-1].conj()
    total = u.sum()
    if abs(total) <= tol * np.linalg.norm(u):
        raise DegenerateEigenvalue("fixed vector has zero mean, cannot normalize")
    return u / total


@dataclass(frozen=True)
class ExtendedChain:
    """A left Jordan chain carried onto a larger window of the chain."""

    eigenvalue: complex
    window: np.ndarray
    vectors: np.ndarray
    source_size: int

    @property
    def length(self) -> int:
        return self.vectors.shape[0]


def extend_chain(chain: JordanChain, windows: WindowChain, mask,
                 start: int, stop: int) -> ExtendedChain:
    """Carry a left chain from windows[start] up to windows[stop].

    Every column of a window one step up is supported inside the current
    window, so the eigen equations determine the new entries directly:
    ring entries of vector t are (sum_i v_t[i] T[i,j] - v_{t-1}[j]) / lam.
    Zero eigenvalues admit no such division and are rejected.
    """
    lam = chain.eigenvalue
    if abs(lam) == 0.0:
        raise ZeroEigenvalue("chains at eigenvalue zero do not extend upward")
    if not 0 <= start < stop < len(windows.windows):
        raise WindowError("extension levels must satisfy 0 <= start < stop < length")
    cur = np.array(chain.vectors, dtype=complex)
    if cur.shape[1] != len(windows.window(start)):
        raise WindowError("chain vectors do not match the start window size")
    for n in range(start, stop):
        low = windows.window(n)
        high = windows.window(n + 1)
        t_high = scale_matrix(mask, high).matrix
        idx = point_index(high)
        old_pos = np.array([idx[tuple(int(v) for v in p)] for p in low])
        ring_pos = np.array([i for i in range(len(high)) if i not in set(old_pos)],
                            dtype=int)
        nxt = np.zeros((cur.shape[0], len(high)), dtype=complex)
        nxt[:, old_pos] = cur
        if len(ring_pos):
            feed = t_high[np.ix_(old_pos, ring_pos)]
            prev = np.zeros(len(ring_pos), dtype=complex)
            for t in range(cur.shape[0]):
                nxt[t, ring_pos] = (cur[t] @ feed - prev) / lam
                prev = nxt[t, ring_pos]
        cur = nxt
    return ExtendedChain(eigenvalue=lam, window=windows.window(stop),
                         vectors=cur, source_size=len(windows.window(start)))


def restrict_chain(extended: ExtendedChain, subwindow) -> np.ndarray:
    """Chain rows restricted to a subwindow, in the subwindow's order."""
    idx = point_index(extended.window)
    cols = [idx[tuple(int(v) for v in p)] for p in np.asarray(subwindow)]
    return extended.vectors[:, cols]


def extension_residual(extended: ExtendedChain, mask, support=None) -> float:
    """Largest violation of the chain equations on the extension window.

    Only columns whose coefficient support lies inside the window carry a
    complete equation; columns reaching outside are skipped.
    """
    win = extended.window
    t_mat = scale_matrix(mask, win).matrix
    inside = _as_point_set(win)
    sup = mask.points if support is None else support
    valid = [j for j, sources in enumerate(_source_sets(win, sup, mask.dilation))
             if all(s in inside for s in sources)]
    if not valid:
        return 0.0
    vecs = extended.vectors
    lam = extended.eigenvalue
    worst = 0.0
    prev = np.zeros(len(win), dtype=complex)
    for t in range(vecs.shape[0]):
        resid = vecs[t] @ t_mat - lam * vecs[t] - prev
        worst = max(worst, float(np.abs(resid[valid]).max()))
        prev = vecs[t]
    return worst


def _as_point_set(points) -> set:
    return {tuple(int(v) for v in p) for p in np.asarray(points)}
