"""Problem definition files: JSON in, validated mask setup out.

A problem file names a lattice, a dilation, a digit set, a mask (support
points plus coefficients, numeric or expression strings), and options for
the pipelines. Loading enforces every structural invariant the domain
types carry and rejects unknown fields by name; the original coefficient
text is kept so a load/serialize round trip is the identity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import InvalidProblem
from .lattice import DigitSet, Dilation, Lattice, standard_lattice
from .masks import Mask, parse_value

_OPTION_DEFAULTS = {
    "resolution": 8,
    "n_extra": 2,
    "tol": 1e-6,
    "seed": 0,
    "s_max": 4,
    "depth": 12,
    "samples": 10_000,
    "start": None,
}


@dataclass(frozen=True)
class Options:
    """Tunable knobs shared by the analysis pipelines."""

    resolution: int = 8
    n_extra: int = 2
    tol: float = 1e-6
    seed: int = 0
    s_max: int = 4
    depth: int = 12
    samples: int = 10_000
    start: tuple | None = None


@dataclass(frozen=True)
class Problem:
    """One validated mask setup plus options and verbatim coefficient text."""

    name: str
    lattice: Lattice
    dilation: Dilation
    digits: DigitSet
    mask: Mask
    coefficient_text: tuple
    options: Options
    explicit_lattice: bool = False

    @property
    def dimension(self) -> int:
        return self.dilation.dimension


def _reject_unknown(data: dict, allowed, where: str) -> None:
    for key in data:
        if key not in allowed:
            raise InvalidProblem(f"unknown field {key!r} in {where}")


def _as_number(value, where: str) -> complex:
    if isinstance(value, str):
        try:
            return parse_value(value)
        except Exception as err:
            raise InvalidProblem(f"bad expression {value!r} in {where}: {err}") \
                from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidProblem(f"{where} entries must be numbers or expression "
                             f"strings, got {value!r}")
    return complex(value)


def _as_points(value, where: str) -> list:
    if not isinstance(value, list) or not value:
        raise InvalidProblem(f"{where} must be a nonempty list of points")
    out = []
    for p in value:
        row = p if isinstance(p, list) else [p]
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in row):
            raise InvalidProblem(f"{where} points must be integer vectors, "
                                 f"got {p!r}")
        out.append(row)
    if len({len(r) for r in out}) != 1:
        raise InvalidProblem(f"{where} points have mixed dimensions")
    return out


def _as_matrix(value, where: str) -> np.ndarray:
    try:
        m = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise InvalidProblem(f"{where} must be a square numeric matrix") \
            from None
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise InvalidProblem(f"{where} must be a square numeric matrix")
    return m


def problem_from_dict(data: dict, name: str = "problem") -> Problem:
    """Validate one parsed problem description."""
    if not isinstance(data, dict):
        raise InvalidProblem("problem description must be a JSON object")
    _reject_unknown(data, {"name", "lattice", "dilation", "digits", "mask",
                           "options"}, "problem")
    for key in ("dilation", "digits", "mask"):
        if key not in data:
            raise InvalidProblem(f"missing required field {key!r}")
    label = data.get("name", name)
    if not isinstance(label, str) or not label:
        raise InvalidProblem("name must be a nonempty string")
    dmat = _as_matrix(data["dilation"], "dilation")
    d = dmat.shape[0]
    explicit_lattice = "lattice" in data
    if explicit_lattice:
        gen = _as_matrix(data["lattice"], "lattice")
        if gen.shape[0] != d:
            raise InvalidProblem("lattice and dilation dimensions differ")
        lattice = Lattice(gen)
    else:
        lattice = standard_lattice(d)
    dilation = Dilation(lattice, dmat)
    digit_pts = _as_points(data["digits"], "digits")
    if len(digit_pts[0]) != d:
        raise InvalidProblem("digit points do not match the dilation dimension")
    digits = DigitSet(dilation, digit_pts)
    mask_data = data["mask"]
    if not isinstance(mask_data, dict):
        raise InvalidProblem("mask must be an object")
    _reject_unknown(mask_data, {"support", "coefficients"}, "mask")
    for key in ("support", "coefficients"):
        if key not in mask_data:
            raise InvalidProblem(f"missing required field mask.{key}")
    support = _as_points(mask_data["support"], "mask.support")
    if len(support[0]) != d:
        raise InvalidProblem("mask support does not match the dilation "
                             "dimension")
    text = mask_data["coefficients"]
    if not isinstance(text, list) or len(text) != len(support):
        raise InvalidProblem("mask.coefficients must list one value per "
                             "support point")
    coeffs = [_as_number(v, "mask.coefficients") for v in text]
    mask = Mask(dilation, support, coeffs)
    opt_data = data.get("options", {})
    if not isinstance(opt_data, dict):
        raise InvalidProblem("options must be an object")
    _reject_unknown(opt_data, set(_OPTION_DEFAULTS), "options")
    kwargs = {}
    for key, default in _OPTION_DEFAULTS.items():
        value = opt_data.get(key, default)
        if key == "start":
            if value is not None:
                if not isinstance(value, list):
                    raise InvalidProblem("options.start must be a list")
                value = tuple(_as_number(v, "options.start") for v in value)
        elif key == "tol":
            if isinstance(value, bool) or not isinstance(value, (int, float)) \
                    or value <= 0:
                raise InvalidProblem("options.tol must be a positive number")
            value = float(value)
        else:
            if isinstance(value, bool) or not isinstance(value, int) or value < 0:
                raise InvalidProblem(f"options.{key} must be a nonnegative "
                                     f"integer")
        kwargs[key] = value
    return Problem(name=label, lattice=lattice, dilation=dilation,
                   digits=digits, mask=mask,
                   coefficient_text=tuple(text), options=Options(**kwargs),
                   explicit_lattice=explicit_lattice)


def problem_to_dict(problem: Problem) -> dict:
    """Serialize back to the JSON shape, coefficients verbatim."""
    out = {
        "name": problem.name,
        "dilation": [[float(v) for v in row] for row in problem.dilation.matrix],
        "digits": [[int(v) for v in p] for p in problem.digits.points],
        "mask": {
            "support": [[int(v) for v in p] for p in problem.mask.points],
            "coefficients": list(problem.coefficient_text),
        },
    }
    if problem.explicit_lattice:
        out["lattice"] = [[float(v) for v in row]
                          for row in problem.lattice.generators]
    opts = {}
    for f in fields(Options):
        value = getattr(problem.options, f.name)
        if value != _OPTION_DEFAULTS[f.name]:
            if f.name == "start":
                opts[f.name] = [v.real if v.imag == 0 else repr(v)
                                for v in value]
            else:
                opts[f.name] = value
    if opts:
        out["options"] = opts
    return out


def load_problem(path) -> Problem:
    """Read and validate a problem file."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as err:
            raise InvalidProblem(f"not valid JSON: {err}") from None
    import os
    stem = os.path.splitext(os.path.basename(str(path)))[0]
    return problem_from_dict(data, name=stem)


def save_problem(problem: Problem, path) -> None:
    with open(path, "w") as fh:
        json.dump(problem_to_dict(problem), fh, indent=2)
        fh.write("\n")
