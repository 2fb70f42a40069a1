# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: digit expansion, address composition, batched matvec.

Semantics mirror refinery._kernels._numpy exactly; see that module for the
contracts. Integer work is int64; divisibility tests are sign-agnostic, so a
negative determinant is fine.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def expand_digits(points, adj, long long det, digits, int depth):
    pts_arr = np.array(points, dtype=np.int64, copy=True, order="C")
    adj_arr = np.ascontiguousarray(adj, dtype=np.int64)
    dig_arr = np.ascontiguousarray(digits, dtype=np.int64)
    cdef Py_ssize_t n = pts_arr.shape[0]
    cdef Py_ssize_t d = pts_arr.shape[1]
    cdef Py_ssize_t m = dig_arr.shape[0]
    codes_arr = np.zeros((n, depth), dtype=np.int64)
    ok_arr = np.zeros(n, dtype=np.uint8)
    w_arr = np.zeros(d, dtype=np.int64)

    cdef cnp.int64_t[:, :] cur = pts_arr
    cdef const cnp.int64_t[:, :] am = adj_arr
    cdef const cnp.int64_t[:, :] dg = dig_arr
    cdef cnp.int64_t[:, :] codes = codes_arr
    cdef cnp.uint8_t[:] ok = ok_arr
    cdef cnp.int64_t[:] w = w_arr
    cdef Py_ssize_t i, t, j, a, b
    cdef long long acc
    cdef bint good, allzero

    for i in range(n):
        for t in range(depth):
            for j in range(m):
                good = True
                for a in range(d):
                    acc = 0
                    for b in range(d):
                        acc += am[a, b] * (cur[i, b] - dg[j, b])
                    if acc % det != 0:
                        good = False
                        break
                    w[a] = acc // det
                if good:
                    codes[i, t] = j
                    for a in range(d):
                        cur[i, a] = w[a]
                    break
        allzero = True
        for a in range(d):
            if cur[i, a] != 0:
                allzero = False
                break
        ok[i] = 1 if allzero else 0
    return codes_arr, ok_arr


def horner_compose(codes, digits, bmat):
    codes_arr = np.ascontiguousarray(codes, dtype=np.int64)
    dig_arr = np.ascontiguousarray(digits, dtype=np.int64)
    b_arr = np.ascontiguousarray(bmat, dtype=np.int64)
    cdef Py_ssize_t n = codes_arr.shape[0]
    cdef Py_ssize_t r = codes_arr.shape[1]
    cdef Py_ssize_t d = dig_arr.shape[1]
    out_arr = np.zeros((n, d), dtype=np.int64)
    tmp_arr = np.zeros(d, dtype=np.int64)

    cdef const cnp.int64_t[:, :] cd = codes_arr
    cdef const cnp.int64_t[:, :] dg = dig_arr
    cdef const cnp.int64_t[:, :] bm = b_arr
    cdef cnp.int64_t[:, :] out = out_arr
    cdef cnp.int64_t[:] tmp = tmp_arr
    cdef Py_ssize_t i, t, a, b
    cdef long long c, acc

    if r == 0:
        return out_arr
    for i in range(n):
        c = cd[i, r - 1]
        for a in range(d):
            out[i, a] = dg[c, a]
        for t in range(r - 2, -1, -1):
            c = cd[i, t]
            for a in range(d):
                acc = 0
                for b in range(d):
                    acc += bm[a, b] * out[i, b]
                tmp[a] = acc + dg[c, a]
            for a in range(d):
                out[i, a] = tmp[a]
    return out_arr


def apply_digit_matrices(mats, values):
    mats_arr = np.ascontiguousarray(mats, dtype=np.complex128)
    val_arr = np.ascontiguousarray(values, dtype=np.complex128)
    cdef Py_ssize_t m = mats_arr.shape[0]
    cdef Py_ssize_t n = mats_arr.shape[1]
    cdef Py_ssize_t c = val_arr.shape[0]
    out_arr = np.zeros((m, c, n), dtype=np.complex128)

    cdef const double complex[:, :, :] mt = mats_arr
    cdef const double complex[:, :] vl = val_arr
    cdef double complex[:, :, :] out = out_arr
    cdef Py_ssize_t i, s, a, b
    cdef double complex acc

    for i in range(m):
        for s in range(c):
            for a in range(n):
                acc = 0
                for b in range(n):
                    acc = acc + mt[i, a, b] * vl[s, b]
                out[i, s, a] = acc
    return out_arr
