import numpy as np
import pytest

from refinery.errors import DegenerateEigenvalue, ZeroEigenvalue
from refinery.lattice import (
    DigitSet,
    Dilation,
    dilation_from_scalar,
    point_index,
    standard_lattice,
)
from refinery.masks import Mask
from refinery.scale import scale_matrix
from refinery.spectral import (
    eigen_jordan,
    extend_chain,
    extension_residual,
    restrict_chain,
    right_vector_at_one,
)
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


def planted_matrix(rng, spec):
    """Similarity transform of Jordan blocks: spec = [(lam, length), ...]."""
    n = sum(length for _, length in spec)
    j = np.zeros((n, n), dtype=complex)
    pos = 0
    for lam, length in spec:
        for t in range(length):
            j[pos + t, pos + t] = lam
            if t + 1 < length:
                j[pos + t, pos + t + 1] = 1.0
        pos += length
    while True:
        s = rng.standard_normal((n, n))
        if np.linalg.cond(s) < 50:
            break
    return s @ j @ np.linalg.inv(s)


def test_identity_section_two_chains():
    sm = scale_matrix(haar_mask(), np.array([[0], [1]]))
    sd = eigen_jordan(sm)
    assert len(sd.clusters) == 1
    cluster = sd.clusters[0]
    assert cluster.eigenvalue == pytest.approx(1.0)
    assert cluster.partition == (1, 1)


def test_four_tap_spectrum():
    mask = four_tap_mask()
    chain = window_chain(mask.points, dyadic_digits(), extra=1)
    sd = eigen_jordan(scale_matrix(mask, chain.windows[0]))
    got = sorted(sd.eigenvalues().real)
    expect = sorted([1.0, 0.5, (1 + SQ3) / 4, (1 - SQ3) / 4])
    assert np.allclose(got, expect, atol=1e-9)
    assert all(c.partition == (1,) for c in sd.clusters)
    # the next window up only adds zero eigenvalues
    sd2 = eigen_jordan(scale_matrix(mask, chain.windows[1]))
    nonzero = sorted(v.real for v in sd2.eigenvalues() if abs(v) > 1e-9)
    assert np.allclose(nonzero, expect, atol=1e-9)
    zero = sd2.cluster_at(0.0)
    assert zero is not None and zero.multiplicity == 1


def test_thirds_defective_eigenvalue():
    mask = thirds_mask()
    chain = window_chain(mask.points, dyadic_digits(), extra=1)
    sd = eigen_jordan(scale_matrix(mask, chain.windows[0]))
    one = sd.cluster_at(1.0)
    third = sd.cluster_at(1 / 3)
    assert one is not None and one.partition == (1,)
    assert third is not None and third.partition == (2, 1)
    assert abs(third.eigenvalue - 1 / 3) <= 1e-7


def test_planted_jordan_structures():
    rng = np.random.default_rng(41)
    cases = [
        [(0.5, 2), (0.9, 1)],
        [(0.5, 3), (0.5, 1), (1.25, 1)],
        [(1.0, 1), (0.25, 2), (0.25, 2)],
        [(0.8, 1), (0.8, 1), (0.8, 1)],
        [(0.0, 2), (0.7, 1)],
    ]
    for spec in cases:
        t = planted_matrix(rng, spec)
        sd = eigen_jordan(t)
        want = {}
        for lam, length in spec:
            want.setdefault(lam, []).append(length)
        assert len(sd.clusters) == len(want)
        for lam, lengths in want.items():
            cluster = sd.cluster_at(lam, tol=1e-5)
            assert cluster is not None, f"missing eigenvalue {lam} in {spec}"
            assert cluster.partition == tuple(sorted(lengths, reverse=True))


def test_planted_with_noise():
    rng = np.random.default_rng(42)
    for _ in range(5):
        t = planted_matrix(rng, [(0.5, 2), (0.9, 1)])
        t = t + 1e-14 * rng.standard_normal(t.shape)
        sd = eigen_jordan(t)
        cluster = sd.cluster_at(0.5, tol=1e-5)
        assert cluster is not None
        assert cluster.partition == (2,)
        assert abs(cluster.eigenvalue - 0.5) < 1e-7


def test_basis_jordan_relation():
    rng = np.random.default_rng(43)
    mats = [
        scale_matrix(four_tap_mask(),
                     window_chain(four_tap_mask().points, dyadic_digits(),
                                  extra=1).windows[1]).matrix,
        scale_matrix(thirds_mask(),
                     window_chain(thirds_mask().points, dyadic_digits(),
                                  extra=1).windows[1]).matrix,
        planted_matrix(rng, [(0.5, 3), (0.9, 1), (0.0, 2)]),
    ]
    for t in mats:
        sd = eigen_jordan(t)
        y = sd.basis()
        j = sd.jordan_matrix()
        assert y.shape == t.shape
        resid = np.abs(y @ t - j @ y).max()
        scale = max(1.0, np.abs(t).max()) * max(1.0, np.abs(y).max())
        assert resid <= 1e-9 * scale
        # basis rows are independent
        assert np.linalg.matrix_rank(y) == t.shape[0]


def test_right_vector_at_one_four_tap():
    mask = four_tap_mask()
    u = right_vector_at_one(scale_matrix(mask, np.array([[0], [1], [2], [3]])))
    assert np.allclose(u, [0.0, (1 + SQ3) / 2, (1 - SQ3) / 2, 0.0], atol=1e-10)
    assert u.sum() == pytest.approx(1.0)


def test_right_vector_at_one_degenerate():
    with pytest.raises(DegenerateEigenvalue):
        right_vector_at_one(scale_matrix(haar_mask(), np.array([[0], [1]])))


def test_extension_roundtrip_and_residual():
    for mask in (four_tap_mask(), thirds_mask()):
        chain = window_chain(mask.points, dyadic_digits(), extra=2)
        start = chain.base_index
        sd = eigen_jordan(scale_matrix(mask, chain.windows[start]))
        for cluster in sd.clusters:
            if abs(cluster.eigenvalue) < 1e-9:
                continue
            for jc in cluster.chains:
                ext = extend_chain(jc, chain, mask, start, len(chain.windows) - 1)
                assert extension_residual(ext, mask) <= 1e-10
                back = restrict_chain(ext, chain.windows[start])
                assert np.array_equal(back, jc.vectors)


def test_extension_rejects_zero():
    mask = four_tap_mask()
    chain = window_chain(mask.points, dyadic_digits(), extra=2)
    sd = eigen_jordan(scale_matrix(mask, chain.windows[2]))
    zero = sd.cluster_at(0.0)
    assert zero is not None
    with pytest.raises(ZeroEigenvalue):
        extend_chain(zero.chains[0], chain, mask, 2, 3)


def test_quincunx_spectral_extension():
    dil = Dilation(standard_lattice(2), np.array([[1.0, -1.0], [1.0, 1.0]]))
    digits = DigitSet(dil, [[0, 0], [1, 0]])
    mask = Mask(dil, [[0, 0], [1, 0]], [1.0, 1.0])
    chain = window_chain(mask.points, digits, extra=2)
    sd = eigen_jordan(scale_matrix(mask, chain.base))
    assert sd.cluster_at(1.0) is not None
    for cluster in sd.clusters:
        if abs(cluster.eigenvalue) < 1e-9:
            continue
        for jc in cluster.chains:
            ext = extend_chain(jc, chain, mask, chain.base_index,
                               len(chain.windows) - 1)
            assert extension_residual(ext, mask) <= 1e-9


def test_scale_matrix_csv_export(tmp_path):
    sm = scale_matrix(four_tap_mask(), np.array([[0], [1], [2]]))
    out = tmp_path / "transfer.csv"
    sm.to_csv(out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "(0),(1),(2)"
    assert len(lines) == 4
    parsed = np.array([[complex(cell) for cell in line.split(",")]
                       for line in lines[1:]])
    assert np.array_equal(parsed, np.asarray(sm.matrix, dtype=np.complex128))
