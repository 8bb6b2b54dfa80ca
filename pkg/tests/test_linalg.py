from __future__ import annotations

import math

import numpy as np
import pytest

from schmidt_approx.errors import DimensionError, NotHermitianError
from schmidt_approx.generators import TfimSpec, tfim_hamiltonian
from schmidt_approx.linalg import eig_hermitian, mse_diff, norm2_diff, small_row_svd, unvec, vec

S2 = 1 / math.sqrt(2)


def _random_complex(rng, rows, cols):
    return rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))


def test_vec_row_major():
    assert vec([[1, 2], [3, 4]]).tolist() == [1, 2, 3, 4]
    assert vec(np.eye(2)).tolist() == [1, 0, 0, 1]
    assert vec([[0, 1], [0, 0]]).tolist() == [0, 1, 0, 0]


def test_unvec_inverts_vec():
    assert unvec([1, 2, 3, 4], 2, 2).tolist() == [[1, 2], [3, 4]]
    np.testing.assert_array_equal(unvec([1, 0, 0, 1], 2, 2), np.eye(2))
    with pytest.raises(DimensionError):
        unvec(np.arange(6), 2, 2)


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        vec([[np.nan, 1.0]])


def test_svd_bell_reshape():
    res = small_row_svd(S2 * np.eye(2))
    np.testing.assert_allclose(res.sigmas, [S2, S2], atol=1e-15)
    np.testing.assert_allclose(res.left[0], [1, 0], atol=1e-15)
    np.testing.assert_allclose(res.left[1], [0, 1], atol=1e-15)
    np.testing.assert_allclose(res.right[0], [1, 0], atol=1e-15)
    np.testing.assert_allclose(res.right[1], [0, 1], atol=1e-15)


def test_svd_rank_one_has_absent_right_vector():
    res = small_row_svd(0.5 * np.ones((2, 2)))
    np.testing.assert_allclose(res.sigmas, [1, 0], atol=1e-15)
    assert res.right[1] is None


def test_svd_hadamard():
    res = small_row_svd(0.5 * np.array([[1, 1], [1, -1]]))
    np.testing.assert_allclose(res.sigmas, [S2, S2], atol=1e-15)


def test_svd_zero_matrix():
    res = small_row_svd(np.zeros((2, 3)))
    assert res.sigmas.tolist() == [0.0, 0.0]
    np.testing.assert_array_equal(res.left[0], [1, 0])
    np.testing.assert_array_equal(res.left[1], [0, 1])
    assert res.right == (None, None)


def test_svd_rejects_other_row_counts():
    with pytest.raises(DimensionError):
        small_row_svd(np.ones((3, 3)))


@pytest.mark.parametrize("rows,cols", [(2, 1), (2, 2), (2, 7), (4, 1), (4, 3), (4, 16)])
def test_svd_matches_numpy(rows, cols):
    rng = np.random.default_rng(rows * 100 + cols)
    m = _random_complex(rng, rows, cols)
    res = small_row_svd(m)
    k = min(rows, cols)
    ref = np.linalg.svd(m, compute_uv=False)
    np.testing.assert_allclose(res.sigmas[:k], ref, rtol=1e-12, atol=1e-13)
    rebuilt = sum(
        s * np.outer(u, v) for s, u, v in zip(res.sigmas, res.left, res.right) if v is not None
    )
    assert np.linalg.norm(rebuilt - m) <= 1e-12 * np.linalg.norm(m)
    lefts = np.array(res.left)
    np.testing.assert_allclose(lefts @ lefts.conj().T, np.eye(rows), atol=1e-12)
    for u in res.left:
        first = u[np.argmax(np.abs(u) > 1e-12)]
        assert abs(first.imag) < 1e-15 and first.real > 0


def test_svd_is_byte_deterministic():
    rng = np.random.default_rng(5)
    m = _random_complex(rng, 2, 9)
    a, b = small_row_svd(m), small_row_svd(m.copy())
    assert a.sigmas.tobytes() == b.sigmas.tobytes()
    assert all(x.tobytes() == y.tobytes() for x, y in zip(a.right, b.right))


def test_eig_examples():
    vals, _ = eig_hermitian(np.diag([1.0, 3.0]))
    np.testing.assert_allclose(vals, [3, 1])
    vals, _ = eig_hermitian([[0, 1], [1, 0]])
    np.testing.assert_allclose(vals, [1, -1], atol=1e-14)
    vals, _ = eig_hermitian(tfim_hamiltonian(TfimSpec(2, 1.0, 0.0, 2)))
    np.testing.assert_allclose(vals, [2, 0, 0, -2], atol=1e-12)


@pytest.mark.parametrize("n", [2, 4, 5, 16, 33])
def test_eig_against_eigh(n):
    rng = np.random.default_rng(n)
    a = _random_complex(rng, n, n)
    h = a + a.conj().T
    vals, vecs = eig_hermitian(h)
    np.testing.assert_allclose(vals, np.linalg.eigvalsh(h)[::-1], atol=1e-10)
    resid = np.linalg.norm(h @ vecs - vecs * vals, axis=0)
    assert resid.max() <= 1e-8 * np.linalg.norm(h)
    np.testing.assert_allclose(vecs.conj().T @ vecs, np.eye(n), atol=1e-10)


def test_eig_two_by_two_characteristic_roots():
    rng = np.random.default_rng(2)
    for _ in range(20):
        a, d = rng.normal(size=2)
        b = complex(*rng.normal(size=2))
        h = np.array([[a, b], [b.conjugate(), d]])
        disc = math.sqrt((a - d) ** 2 + 4 * abs(b) ** 2)
        roots = [(a + d + disc) / 2, (a + d - disc) / 2]
        np.testing.assert_allclose(eig_hermitian(h)[0], roots, atol=1e-12)


def test_eig_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        eig_hermitian([[0, 1], [0, 0]])
    with pytest.raises(DimensionError):
        eig_hermitian(np.ones((2, 3)))


def test_norm2_diff():
    assert norm2_diff([1, 2], [1, 2]) == 0.0
    assert norm2_diff([1, 0], [0, 1]) == pytest.approx(math.sqrt(2))
    assert norm2_diff([1, 0, 0, 0], [0.5] * 4) == pytest.approx(1.0)
    assert mse_diff([1, 0, 0, 0], [0.5] * 4) == pytest.approx(0.25)
    with pytest.raises(DimensionError):
        norm2_diff([1, 0], [1, 0, 0])
