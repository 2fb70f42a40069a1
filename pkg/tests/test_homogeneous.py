import numpy as np
import pytest

from refinery.errors import NoTestPoints, SingularBasis, ZeroEigenvalue
from refinery.grids import boundary_flags, evaluate_grid, value_window
from refinery.homogeneous import (
    homogeneous_basis,
    local_dimension,
    propagate_shell,
    reassembly_residual,
    rebase_coefficients,
    value_rank,
    verify_basis,
    verify_class,
    zero_eigen_check,
)
from refinery.lattice import DigitSet, dilation_from_scalar
from refinery.masks import Mask
from refinery.scale import scale_matrix
from refinery.spectral import eigen_jordan
from refinery.windows import window_chain

SQ3 = np.sqrt(3.0)


def dyadic_digits():
    return DigitSet(dilation_from_scalar(2.0), [[0], [1]])


def haar_mask():
    return Mask(dilation_from_scalar(2.0), [[0], [1]], [1.0, 1.0])


def four_tap_mask():
    vals = np.array([1 + SQ3, 3 + SQ3, 3 - SQ3, 1 - SQ3]) / 4.0
    return Mask(dilation_from_scalar(2.0), [[0], [1], [2], [3]], vals)


def thirds_mask():
    return Mask(dilation_from_scalar(2.0), [[0], [1], [2], [3]],
                [1 / 3, 2 / 3, 2 / 3, 1 / 3])


def haar_grid(resolution):
    # window in canonical order [0, -1, 1]; the box indicator pins values
    return evaluate_grid(haar_mask(), dyadic_digits(), resolution,
                         start=[1.0, 0.0, 0.0])


def four_tap_setup(resolution):
    mask = four_tap_mask()
    grid = evaluate_grid(mask, dyadic_digits(), resolution)
    spectral = eigen_jordan(scale_matrix(mask, grid.window))
    return mask, grid, spectral


def test_haar_step_element():
    grid = haar_grid(6)
    h = grid.values @ np.array([1.0, 1.0, 0.0])
    assert np.abs(h - 1.0).max() <= 1e-12
    check = verify_class(grid, h, 1.0, 1)
    assert check.residual <= 1e-12
    assert check.sharp_order == 1
    assert local_dimension(grid) == 1


def test_four_tap_elements_and_orders():
    mask, grid, spectral = four_tap_setup(8)
    basis = homogeneous_basis(grid, spectral)
    assert len(basis) == grid.width
    ones = basis.at(1.0)
    assert len(ones) == 1 and ones[0].order == 1
    h1 = ones[0].values
    assert np.abs(h1 - h1.mean()).max() <= 1e-9 * (1 + abs(h1.mean()))
    half = basis.at(0.5)[0]
    x = grid.points()[:, 0]
    slope = half.values[-1] / x[-1]
    assert np.abs(half.values - slope * x).max() <= 1e-8 * (1 + abs(slope))
    checks = verify_basis(basis, tol=1e-6)
    for element, check in zip(basis.elements, checks):
        if abs(element.eigenvalue) > 1e-9:
            assert check.residual <= 1e-6
    # zero at the origin for every eigenvalue but one
    origin = int(np.flatnonzero((grid.addresses == 0).all(axis=1))[0])
    for element in basis.elements:
        if abs(element.eigenvalue - 1.0) > 1e-6:
            assert abs(element.values[origin]) <= 1e-10


def test_thirds_second_order_element():
    mask = thirds_mask()
    grid = evaluate_grid(mask, dyadic_digits(), 8)
    spectral = eigen_jordan(scale_matrix(mask, grid.window))
    basis = homogeneous_basis(grid, spectral)
    deep = [e for e in basis.at(1 / 3, tol=1e-6) if e.order == 2]
    assert len(deep) == 1
    check = verify_class(grid, deep[0].values, deep[0].eigenvalue, 2)
    assert check.residual <= 1e-6
    assert check.residuals[0] >= 1e-2
    assert check.sharp_order == 2


def test_class_closure_under_combination():
    mask = thirds_mask()
    grid = evaluate_grid(mask, dyadic_digits(), 8)
    spectral = eigen_jordan(scale_matrix(mask, grid.window))
    basis = homogeneous_basis(grid, spectral)
    rng = np.random.default_rng(3)
    third = basis.at(1 / 3, tol=1e-6)
    lam = third[0].eigenvalue
    top = max(e.order for e in third)
    for _ in range(5):
        combo = sum(rng.standard_normal() * e.values for e in third)
        assert verify_class(grid, combo, lam, top).residual <= 1e-6


def test_local_dimensions_translate_vs_basis():
    expected = {"haar": 1, "four": 3, "thirds": 3}
    grids = {
        "haar": haar_grid(6),
        "four": evaluate_grid(four_tap_mask(), dyadic_digits(), 6),
        "thirds": evaluate_grid(thirds_mask(), dyadic_digits(), 6),
    }
    for name, grid in grids.items():
        assert local_dimension(grid) == expected[name]
        spectral = eigen_jordan(scale_matrix(grid.mask, grid.window))
        basis = homogeneous_basis(grid, spectral)
        keep = ~boundary_flags(grid)
        assert value_rank(basis.values_matrix()[keep]) == expected[name]


def test_zero_chain_vanishes_on_tile():
    rng = np.random.default_rng(11)
    dil = dilation_from_scalar(2.0)
    digits = DigitSet(dil, [[0], [1]])
    seen = 0
    for _ in range(4):
        c0, c2, c1 = rng.normal(size=3)
        coeffs = [c0, c1, c2, 1.0 - c1, 1.0 - c0 - c2]
        mask = Mask(dil, [[k] for k in range(5)], coeffs)
        grid = evaluate_grid(mask, digits, 8)
        spectral = eigen_jordan(scale_matrix(mask, grid.window))
        zero = spectral.cluster_at(0.0, tol=1e-9)
        if zero is None:
            continue
        for chain in zero.chains:
            for row in chain.vectors:
                assert zero_eigen_check(grid, row) <= 1e-8
                seen += 1
    assert seen >= 2


def test_homog_translate_identity():
    mask, grid, spectral = four_tap_setup(6)
    basis = homogeneous_basis(grid, spectral)
    direct = basis.values_matrix()
    stacked = grid.values @ basis.matrix().T
    assert np.abs(direct - stacked).max() <= 1e-12


def test_extended_rows_attached_and_independent():
    mask = four_tap_mask()
    chain = window_chain(mask.support, dyadic_digits(), extra=2)
    grid = evaluate_grid(mask, dyadic_digits(), 6)
    spectral = eigen_jordan(scale_matrix(mask, grid.window))
    basis = homogeneous_basis(grid, spectral, chain=chain)
    rows = [e.extended for e in basis.elements if abs(e.eigenvalue) > 1e-9]
    assert all(r is not None for r in rows)
    assert all(e.extended is None for e in basis.elements
               if abs(e.eigenvalue) <= 1e-9)
    stacked = np.array(rows)
    assert stacked.shape[1] == len(basis.extended_window)
    assert value_rank(stacked, tol=1e-8) == len(rows)


def test_shell_propagation_consistency():
    grid = haar_grid(6)
    h = grid.values @ np.array([1.0, 1.0, 0.0])
    rows, vals = propagate_shell(grid, h, 1.0, 1, direction="inward")
    assert np.abs(vals - h[rows]).max() <= 1e-12
    rows, vals = propagate_shell(grid, h, 1.0, 1, direction="outward")
    assert np.abs(vals - h[rows]).max() <= 1e-12

    mask = thirds_mask()
    tgrid = evaluate_grid(mask, dyadic_digits(), 10)
    spectral = eigen_jordan(scale_matrix(mask, tgrid.window))
    basis = homogeneous_basis(tgrid, spectral)
    deep = [e for e in basis.at(1 / 3, tol=1e-6) if e.order == 2][0]
    scale = 1.0 + np.abs(deep.values).max()
    for direction in ("inward", "outward"):
        rows, vals = propagate_shell(tgrid, deep.values, deep.eigenvalue, 2,
                                     direction=direction)
        assert np.abs(vals - deep.values[rows]).max() <= 1e-6 * scale

    with pytest.raises(ZeroEigenvalue):
        propagate_shell(grid, h, 0.0, 1, direction="outward")


def test_reconstruction_round_trip():
    mask, grid, spectral = four_tap_setup(6)
    basis = homogeneous_basis(grid, spectral)
    assert reassembly_residual({(0,): 1.0}, basis) <= 1e-10
    rng = np.random.default_rng(5)
    for _ in range(5):
        coeffs = {(k,): rng.standard_normal() for k in range(-2, 3)}
        assert reassembly_residual(coeffs, basis) <= 1e-8
    assert rebase_coefficients({(4,): 0.0}, basis) == {}


def test_singular_basis_guard():
    mask, grid, spectral = four_tap_setup(4)
    basis = homogeneous_basis(grid, spectral)
    with pytest.raises(SingularBasis):
        rebase_coefficients({(0,): 1.0}, basis, cond_cap=1.0)


def test_class_check_needs_depth():
    grid = haar_grid(2)
    h = grid.values @ np.array([1.0, 1.0, 0.0])
    with pytest.raises(NoTestPoints):
        verify_class(grid, h, 1.0, 3)
