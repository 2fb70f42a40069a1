"""Refinement masks: finitely supported coefficient sequences on the lattice.

A mask drives the two-scale relation f(x) = sum_k c_k f(Ax - Gk). Its
coefficients must sum to the dilation modulus, the normalization under which
the refinement operator preserves integrals.
"""

from __future__ import annotations

import ast
import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidMask
from .lattice import DigitSet, Dilation, coset_split, order_key

SUM_TOL = 1e-8

_NAMES = {"pi": complex(math.pi), "i": 1j, "j": 1j}
_FUNCS = {"sqrt": cmath.sqrt}
_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: a ** b,
}


def parse_value(text) -> complex:
    """Evaluate an arithmetic constant expression like "(1+sqrt(3))/4".

    Accepts numbers, + - * / **, parentheses, sqrt, pi, and i/j for the
    imaginary unit. Anything else raises InvalidMask.
    """
    if isinstance(text, (int, float, complex)):
        return complex(text)

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
            return complex(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
            v = ev(node.operand)
            return v if isinstance(node.op, ast.UAdd) else -v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1
                and not node.keywords):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise InvalidMask(f"unsupported term in value expression: {ast.dump(node)}")

    try:
        tree = ast.parse(str(text), mode="eval")
    except SyntaxError as exc:
        raise InvalidMask(f"cannot parse value {text!r}") from exc
    return ev(tree)


@dataclass(frozen=True)
class Mask:
    """Coefficients `values` at lattice `points`, summing to the modulus."""

    dilation: Dilation
    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[1] != self.dilation.dimension:
            raise InvalidMask("mask points must match the lattice dimension")
        vals = np.asarray(self.values, dtype=np.complex128).reshape(-1)
        if vals.shape[0] != pts.shape[0]:
            raise InvalidMask("one value per support point is required")
        if not np.all(np.isfinite(vals.view(np.float64))):
            raise InvalidMask("mask values must be finite")
        order = sorted(range(len(pts)), key=lambda k: order_key(pts[k]))
        pts, vals = pts[order], vals[order]
        if len({tuple(int(v) for v in p) for p in pts}) != len(pts):
            raise InvalidMask("duplicate support points")
        total = vals.sum()
        if abs(total - self.dilation.modulus) > SUM_TOL:
            raise InvalidMask(
                f"mask sums to {total}, expected the modulus {self.dilation.modulus}")
        pts.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "_table",
                           {tuple(int(v) for v in p): c
                            for p, c in zip(pts, vals)})

    @property
    def support(self) -> np.ndarray:
        return self.points

    def coefficient(self, point) -> complex:
        key = tuple(int(v) for v in np.asarray(point).reshape(-1))
        return self._table.get(key, 0j)

    def coefficients(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.int64).reshape(-1, self.dilation.dimension)
        return np.array([self._table.get(tuple(int(v) for v in p), 0j) for p in pts])

    def is_real(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.values.imag) <= tol))


def mask_from_values(dilation: Dilation, entries) -> Mask:
    """Mask from {point tuple: value or expression string} pairs."""
    pts, vals = [], []
    for point, value in entries.items():
        pts.append(np.atleast_1d(np.asarray(point, dtype=np.int64)))
        vals.append(parse_value(value))
    return Mask(dilation, np.array(pts), np.array(vals))


def coset_sums(mask: Mask, digits: DigitSet) -> np.ndarray:
    """Sum of coefficients over each digit residue class, in digit order."""
    codes, _ = coset_split(mask.points, digits, sign="plus")
    out = np.zeros(digits.count, dtype=np.complex128)
    np.add.at(out, codes, mask.values)
    return out


def sum_rule_defect(mask: Mask, digits: DigitSet) -> float:
    """Largest deviation of a residue-class sum from one.

    Vanishes exactly when the mask weights every digit class equally, the
    first-order condition behind partition of unity of the translates.
    """
    return float(np.abs(coset_sums(mask, digits) - 1.0).max())
