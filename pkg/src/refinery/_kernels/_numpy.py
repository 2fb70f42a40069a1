"""NumPy reference implementations of the hot kernels.

The compiled lane in _core.pyx mirrors these signatures exactly; the two are
tested against each other. All integer work is int64 in lattice coordinates;
`adj` and `det` are the adjugate and determinant of the dilation's lattice
matrix, so quotients are exact divisions.
"""

import numpy as np


def expand_digits(points, adj, det, digits, depth):
    """Peel `depth` digits off each point, least significant first.

    points: int64 (N, d). Returns (codes, ok): codes int64 (N, depth) where
    codes[:, t] is the digit index at scale t, ok uint8 (N) flagging points
    whose quotient reaches zero, i.e. points equal to sum_t B^t d[codes[t]].
    """
    pts = np.array(points, dtype=np.int64, copy=True)
    if pts.ndim != 2:
        raise ValueError("points must be (N, d)")
    n = pts.shape[0]
    adj = np.asarray(adj, dtype=np.int64)
    digits = np.asarray(digits, dtype=np.int64)
    codes = np.zeros((n, depth), dtype=np.int64)
    for t in range(depth):
        # w[i, j] = adj @ (pts[j] - digits[i]); divisible by det for exactly
        # one digit index i when the digit set is a complete residue system
        diff = pts[None, :, :] - digits[:, None, :]
        w = np.einsum("ab,ijb->ija", adj, diff)
        good = (w % det == 0).all(axis=2)
        idx = good.argmax(axis=0)
        codes[:, t] = idx
        pts = w[idx, np.arange(n)] // det
    ok = (pts == 0).all(axis=1).astype(np.uint8)
    return codes, ok


def horner_compose(codes, digits, bmat):
    """Compose addresses from scale-ordered digit codes: sum_t B^t d[codes[t]]."""
    codes = np.asarray(codes, dtype=np.int64)
    digits = np.asarray(digits, dtype=np.int64)
    bmat = np.asarray(bmat, dtype=np.int64)
    n, r = codes.shape
    if r == 0:
        return np.zeros((n, digits.shape[1]), dtype=np.int64)
    acc = digits[codes[:, r - 1]].copy()
    for t in range(r - 2, -1, -1):
        acc = acc @ bmat.T + digits[codes[:, t]]
    return acc


def apply_digit_matrices(mats, values):
    """Apply every digit matrix to every row vector: out[i, s] = mats[i] @ values[s]."""
    mats = np.asarray(mats, dtype=np.complex128)
    values = np.asarray(values, dtype=np.complex128)
    return np.matmul(values, mats.transpose(0, 2, 1))
