import os
import subprocess
import sys

import numpy as np
import pytest

from refinery import _kernels
from refinery._kernels import _numpy as pylane

try:
    from refinery._kernels import _core as clane
except ImportError:
    clane = None

needs_compiled = pytest.mark.skipif(clane is None,
                                    reason="compiled lane not built")


def quincunx_setup():
    bmat = np.array([[1, 1], [-1, 1]], dtype=np.int64)
    det = int(round(np.linalg.det(bmat)))
    adj = np.rint(np.linalg.inv(bmat) * det).astype(np.int64)
    digits = np.array([[0, 0], [1, 0]], dtype=np.int64)
    return bmat, adj, det, digits


def dyadic_setup():
    bmat = np.array([[2]], dtype=np.int64)
    return bmat, np.array([[1]], dtype=np.int64), 2, \
        np.array([[0], [1]], dtype=np.int64)


@needs_compiled
def test_expand_digits_lanes_agree_bit_exact():
    rng = np.random.default_rng(3)
    for bmat, adj, det, digits in (dyadic_setup(), quincunx_setup()):
        d = bmat.shape[0]
        for depth in (1, 4, 9):
            pts = rng.integers(-200, 200, size=(40, d))
            c1, ok1 = pylane.expand_digits(pts, adj, det, digits, depth)
            c2, ok2 = clane.expand_digits(pts, adj, det, digits, depth)
            assert np.array_equal(c1, c2)
            assert np.array_equal(ok1, ok2)


@needs_compiled
def test_horner_compose_lanes_agree_bit_exact():
    rng = np.random.default_rng(4)
    for bmat, adj, det, digits in (dyadic_setup(), quincunx_setup()):
        m = digits.shape[0]
        for depth in (1, 5, 12):
            codes = rng.integers(0, m, size=(64, depth))
            a1 = pylane.horner_compose(codes, digits, bmat)
            a2 = clane.horner_compose(codes, digits, bmat)
            assert a1.dtype == a2.dtype == np.int64
            assert np.array_equal(a1, a2)


@needs_compiled
def test_apply_digit_matrices_lanes_agree():
    rng = np.random.default_rng(5)
    for n in (3, 7, 16):
        mats = rng.normal(size=(2, n, n)) + 1j * rng.normal(size=(2, n, n))
        vals = rng.normal(size=(9, n)) + 1j * rng.normal(size=(9, n))
        out1 = np.asarray(pylane.apply_digit_matrices(mats, vals))
        out2 = np.asarray(clane.apply_digit_matrices(mats, vals))
        assert out1.shape == out2.shape
        scale = np.abs(out1).max() + 1.0
        assert np.abs(out1 - out2).max() <= 1e-13 * scale


def test_expand_then_compose_round_trip():
    rng = np.random.default_rng(6)
    bmat, adj, det, digits = quincunx_setup()
    depth = 12
    codes = rng.integers(0, 2, size=(50, depth))
    pts = pylane.horner_compose(codes, digits, bmat)
    back, ok = _kernels.expand_digits(pts, adj, det, digits, depth)
    assert ok.all()
    assert np.array_equal(back, codes)


def test_backend_reports_a_known_lane():
    assert _kernels.backend in ("python", "compiled")
    assert _kernels.reference is pylane


def _run_with_env(value):
    env = dict(os.environ)
    env["REFINERY_KERNELS"] = value
    return subprocess.run(
        [sys.executable, "-c",
         "from refinery import _kernels; print(_kernels.backend)"],
        capture_output=True, text=True, env=env)


def test_env_var_selects_python_lane():
    proc = _run_with_env("python")
    assert proc.returncode == 0
    assert proc.stdout.strip() == "python"


@needs_compiled
def test_env_var_selects_compiled_lane():
    proc = _run_with_env("compiled")
    assert proc.returncode == 0
    assert proc.stdout.strip() == "compiled"


def test_env_var_rejects_unknown_lane():
    proc = _run_with_env("turbo")
    assert proc.returncode != 0
    assert "REFINERY_KERNELS" in proc.stderr


def test_grid_values_identical_across_lanes():
    script = (
        "import numpy as np\n"
        "from refinery.lattice import DigitSet, dilation_from_scalar\n"
        "from refinery.masks import Mask\n"
        "from refinery.grids import evaluate_grid\n"
        "sq3 = np.sqrt(3.0)\n"
        "mask = Mask(dilation_from_scalar(2.0), [[0], [1], [2], [3]],\n"
        "            np.array([1 + sq3, 3 + sq3, 3 - sq3, 1 - sq3]) / 4.0)\n"
        "digits = DigitSet(dilation_from_scalar(2.0), [[0], [1]])\n"
        "grid = evaluate_grid(mask, digits, 7)\n"
        "np.save('grid_lane.npy', grid.values)\n"
    )
    outputs = {}
    for lane in ("python", "auto"):
        env = dict(os.environ)
        env["REFINERY_KERNELS"] = lane
        proc = subprocess.run([sys.executable, "-c", script],
                              capture_output=True, text=True, env=env,
                              cwd=os.path.dirname(__file__))
        assert proc.returncode == 0, proc.stderr
        path = os.path.join(os.path.dirname(__file__), "grid_lane.npy")
        outputs[lane] = np.load(path)
        os.remove(path)
    scale = np.abs(outputs["python"]).max() + 1.0
    assert np.abs(outputs["python"] - outputs["auto"]).max() <= 1e-12 * scale
