"""Lattices, expansive dilations and digit sets.

Points of a lattice G Z^d are handled in integer lattice coordinates
throughout; the generator matrix G only enters when geometry (norms, clouds,
grids) needs embedded real coordinates. A dilation A acts on R^d and must map
the lattice into itself, so B = G^{-1} A G is an integer matrix; all digit
arithmetic happens on B via its adjugate, which keeps quotients exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .errors import InvalidDigits, InvalidDilation, InvalidLattice, NotExpansive, NotInTile

_EXPANSIVE_TOL = 1e-9


def _as_int_matrix(m, what):
    a = np.asarray(m, dtype=np.float64)
    r = np.rint(a)
    if not np.allclose(a, r, rtol=0.0, atol=1e-9):
        raise InvalidDilation(f"{what} must have integer entries, got {a!r}")
    return r.astype(np.int64)


def _fraction_inverse(b):
    """Exact inverse of an integer matrix as a Fraction array."""
    n = b.shape[0]
    aug = [[Fraction(int(b[i, j])) for j in range(n)] + [Fraction(int(i == j)) for j in range(n)]
           for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise InvalidDilation("dilation matrix is singular on the lattice")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = Fraction(1) / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [[aug[i][n + j] for j in range(n)] for i in range(n)]


def _int_det_adjugate(b):
    """Exact determinant and adjugate of an integer matrix (adj @ b = det * I)."""
    inv = _fraction_inverse(b)
    det = _fraction_det(b)
    n = b.shape[0]
    adj = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            v = inv[i][j] * det
            if v.denominator != 1:
                raise InvalidDilation("adjugate computation failed")
            adj[i, j] = int(v)
    return int(det), adj


def _fraction_det(b):
    n = b.shape[0]
    m = [[Fraction(int(b[i, j])) for j in range(n)] for i in range(n)]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        inv = Fraction(1) / m[col][col]
        for r in range(col + 1, n):
            if m[r][col] != 0:
                f = m[r][col] * inv
                for c in range(col, n):
                    m[r][c] -= f * m[col][c]
    return det


@dataclass(frozen=True)
class Lattice:
    """Full-rank lattice G Z^d given by the columns of `generators`."""

    generators: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.generators, dtype=np.float64)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise InvalidLattice("generator matrix must be square")
        if abs(np.linalg.det(g)) < 1e-12:
            raise InvalidLattice("generator matrix must be invertible")
        g = g.copy()
        g.flags.writeable = False
        object.__setattr__(self, "generators", g)

    @property
    def dimension(self) -> int:
        return self.generators.shape[0]

    @property
    def covolume(self) -> float:
        return abs(float(np.linalg.det(self.generators)))

    def embed(self, points) -> np.ndarray:
        """Real coordinates of lattice points given in integer coordinates."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.generators.T

    def to_coords(self, x) -> np.ndarray:
        """Integer-coordinate representation of embedded points (float result)."""
        x = np.asarray(x, dtype=np.float64)
        return np.linalg.solve(self.generators, x.T).T


def standard_lattice(dimension: int) -> Lattice:
    return Lattice(np.eye(dimension))


@dataclass(frozen=True)
class Dilation:
    """Expansive map A with A(lattice) inside the lattice.

    `matrix` is the action on R^d; `lattice_matrix` is the integer conjugate
    B = G^{-1} A G driving all digit arithmetic. Expansiveness (every
    eigenvalue strictly outside the unit circle) is checked numerically.
    """

    lattice: Lattice
    matrix: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=np.float64)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        d = self.lattice.dimension
        if a.shape != (d, d):
            raise InvalidDilation(f"dilation must be {d}x{d}, got {a.shape}")
        g = self.lattice.generators
        bf = np.linalg.solve(g, a @ g)
        b = np.rint(bf)
        if not np.allclose(bf, b, rtol=0.0, atol=1e-9):
            raise InvalidDilation("G^{-1} A G must have integer entries")
        b = b.astype(np.int64)
        eig = np.linalg.eigvals(a)
        if np.abs(eig).min() <= 1.0 + _EXPANSIVE_TOL:
            raise NotExpansive(f"eigenvalue moduli {np.abs(eig)} must all exceed 1")
        det, adj = _int_det_adjugate(b)
        if abs(det) < 2:
            raise InvalidDilation("dilation must expand lattice volume")
        a = a.copy()
        a.flags.writeable = False
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "_lattice_matrix", b)
        object.__setattr__(self, "_det", det)
        object.__setattr__(self, "_adjugate", adj)
        object.__setattr__(self, "_eigenvalues", eig)

    @property
    def dimension(self) -> int:
        return self.lattice.dimension

    @property
    def lattice_matrix(self) -> np.ndarray:
        return self._lattice_matrix

    @property
    def determinant(self) -> int:
        """det B (signed)."""
        return self._det

    @property
    def modulus(self) -> int:
        """Number of residue classes m = |det B|."""
        return abs(self._det)

    @property
    def adjugate(self) -> np.ndarray:
        return self._adjugate

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._eigenvalues

    def apply(self, points) -> np.ndarray:
        """B @ z for integer-coordinate points (int64, exact)."""
        pts = np.asarray(points, dtype=np.int64)
        return pts @ self._lattice_matrix.T

    def quotient(self, points):
        """(q, exact): q = B^{-1} z where exact marks points with integral quotient."""
        pts = np.asarray(points, dtype=np.int64)
        w = pts @ self._adjugate.T
        exact = (w % self._det == 0).all(axis=-1)
        return w // self._det, exact


def dilation_from_scalar(value, lattice=None) -> Dilation:
    lat = lattice if lattice is not None else standard_lattice(1)
    return Dilation(lat, np.array([[float(value)]]))


def order_key(point) -> tuple:
    """Sort key: sup-norm first, then lexicographic on coordinates."""
    t = tuple(int(v) for v in point)
    return (max(abs(v) for v in t), t)


def order_points(points) -> np.ndarray:
    """Canonically ordered, deduplicated int64 point array."""
    pts = np.asarray(points, dtype=np.int64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    uniq = {tuple(int(v) for v in p) for p in pts}
    ordered = sorted(uniq, key=order_key)
    if not ordered:
        return np.zeros((0, pts.shape[1]), dtype=np.int64)
    return np.array(ordered, dtype=np.int64)


def point_index(points) -> dict:
    """tuple(point) -> row index for an ordered window."""
    return {tuple(int(v) for v in p): i for i, p in enumerate(np.asarray(points))}


@dataclass(frozen=True)
class DigitSet:
    """Complete residue system for B with 0 among the digits.

    Digits are stored in canonical order; their row index is the digit code
    used by expansions, grids and digit matrices.
    """

    dilation: Dilation
    points: np.ndarray

    def __post_init__(self):
        pts = order_points(self.points)
        dil = self.dilation
        m = dil.modulus
        if pts.shape[1] != dil.dimension:
            raise InvalidDigits(f"digits must be {dil.dimension}-dimensional")
        if pts.shape[0] != m:
            raise InvalidDigits(f"need exactly {m} digits, got {pts.shape[0]}")
        if not (pts == 0).all(axis=1).any():
            raise InvalidDigits("digit set must contain the origin")
        # pairwise non-congruence mod B: differences must not be divisible
        for i in range(m):
            for j in range(i + 1, m):
                _, exact = dil.quotient(pts[i] - pts[j])
                if bool(exact):
                    raise InvalidDigits(
                        f"digits {pts[i]} and {pts[j]} are congruent mod the dilation"
                    )
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def count(self) -> int:
        return self.points.shape[0]

    @property
    def zero_code(self) -> int:
        return int((self.points == 0).all(axis=1).argmax())


def coset_split(points, digits: DigitSet, sign: str = "minus"):
    """Split k into digit and quotient: k = Bq - d ("minus") or k = Bq + d ("plus").

    Returns (codes, quotients); exactly one digit matches each point.
    """
    if sign not in {"minus", "plus"}:
        raise ValueError("sign must be 'minus' or 'plus'")
    pts = np.asarray(points, dtype=np.int64)
    squeeze = pts.ndim == 1
    if squeeze:
        pts = pts.reshape(1, -1)
    dil = digits.dilation
    s = 1 if sign == "minus" else -1
    # k = Bq - s*d  =>  q = B^{-1}(k + s*d)
    shifted = pts[None, :, :] + s * digits.points[:, None, :]
    w = np.einsum("ab,ijb->ija", dil.adjugate, shifted)
    good = (w % dil.determinant == 0).all(axis=2)
    counts = good.sum(axis=0)
    if not (counts == 1).all():
        raise InvalidDigits("digit set does not split the given points uniquely")
    codes = good.argmax(axis=0)
    q = w[codes, np.arange(pts.shape[0])] // dil.determinant
    if squeeze:
        return int(codes[0]), q[0]
    return codes, q


def digit_expansion(point, digits: DigitSet, depth: int) -> np.ndarray:
    """Scale-ordered digit codes of a point: point = sum_t B^t d[codes[t]].

    Raises NotInTile when the quotient has not reached zero after `depth`
    digits, i.e. the point is not a depth-`depth` address.
    """
    codes, ok = digit_expansion_batch(np.asarray(point, dtype=np.int64).reshape(1, -1),
                                      digits, depth)
    if not ok[0]:
        raise NotInTile(f"{point} has no digit expansion at depth {depth}")
    return codes[0]


def digit_expansion_batch(points, digits: DigitSet, depth: int):
    """Vectorized digit expansion; returns (codes (N, depth), ok (N,) uint8)."""
    dil = digits.dilation
    pts = np.asarray(points, dtype=np.int64)
    return _kernels.expand_digits(pts, dil.adjugate, dil.determinant,
                                  digits.points, depth)


def compose_digits(codes, digits: DigitSet) -> np.ndarray:
    """Inverse of digit expansion: addresses from scale-ordered codes."""
    codes = np.asarray(codes, dtype=np.int64)
    squeeze = codes.ndim == 1
    if squeeze:
        codes = codes.reshape(1, -1)
    out = _kernels.horner_compose(codes, digits.points,
                                  digits.dilation.lattice_matrix)
    return out[0] if squeeze else out
