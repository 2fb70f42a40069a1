"""Finite sections of the two-scale transfer operator.

On a window W the operator acts as the matrix T[i, j] = c(B i - j); column
j collects every coefficient through which translate j one scale down feeds
translate i. Shifting the lookup by a digit gives one matrix per digit, the
maps that push window values from a grid level to the next.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .lattice import DigitSet, point_index
from .masks import Mask


@dataclass(frozen=True)
class ScaleMatrix:
    """Transfer matrix of `mask` on `window` (rows and columns alike)."""

    mask: Mask
    window: np.ndarray
    matrix: np.ndarray

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def index(self) -> dict:
        return point_index(self.window)

    def restrict(self, subwindow) -> "ScaleMatrix":
        """Section on a subset of the window, in the subwindow's own order."""
        idx = self.index()
        rows = [idx[tuple(int(v) for v in p)] for p in np.asarray(subwindow)]
        sub = self.matrix[np.ix_(rows, rows)]
        return ScaleMatrix(mask=self.mask,
                           window=np.asarray(subwindow, dtype=np.int64),
                           matrix=sub)

    def to_csv(self, path) -> None:
        """Row-major matrix dump; the header labels columns by window point."""
        labels = ["(" + ",".join(str(int(v)) for v in p) + ")"
                  for p in self.window]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(labels)
            for row in np.asarray(self.matrix, dtype=np.complex128):
                writer.writerow([
                    f"{v.real:.17g}" if v.imag == 0.0 else
                    f"({v.real:.17g}{v.imag:+.17g}j)" for v in row])


def scale_matrix(mask: Mask, window, shift=None) -> ScaleMatrix:
    """Transfer matrix on `window`; `shift` displaces the coefficient lookup."""
    win = np.asarray(window, dtype=np.int64)
    if win.ndim == 1:
        win = win.reshape(-1, 1)
    d = mask.dilation.dimension
    off = np.zeros(d, dtype=np.int64) if shift is None else \
        np.asarray(shift, dtype=np.int64).reshape(d)
    bw = mask.dilation.apply(win)
    diff = bw[:, None, :] - win[None, :, :] + off
    flat = mask.coefficients(diff.reshape(-1, d))
    return ScaleMatrix(mask=mask, window=win,
                       matrix=flat.reshape(len(win), len(win)))


def digit_matrices(mask: Mask, window, digits: DigitSet) -> np.ndarray:
    """Stack of shifted transfer matrices, one per digit, in digit order."""
    mats = [scale_matrix(mask, window, shift=dg).matrix for dg in digits.points]
    return np.stack(mats)
