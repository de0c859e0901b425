import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_dct, dense_dft, dense_interleaver, dense_wht
from uscsim.transforms import (
    UnitaryKind,
    build_unitary,
    deinterleave,
    interleave,
    interleaver_permutation,
    precode_time,
    right_apply,
)

SIZES = (1, 2, 4, 8, 16, 32, 64)
ALL_KINDS = tuple(UnitaryKind)


@pytest.mark.parametrize("kind", ALL_KINDS)
@pytest.mark.parametrize("size", SIZES)
def test_unitarity(kind, size):
    u = build_unitary(kind, size).entries
    assert np.abs(u @ u.conj().T - np.eye(size)).max() < 1e-12


def test_dft_entries_match_definition():
    for size in (2, 3, 8):
        assert np.abs(build_unitary(UnitaryKind.DFT, size).entries - dense_dft(size)).max() < 1e-14


def test_dft_size_one_and_row():
    assert np.array_equal(build_unitary(UnitaryKind.DFT, 1).entries, [[1.0]])
    row1 = build_unitary(UnitaryKind.DFT, 4).entries[1]
    assert np.array_equal(row1, 0.5 * np.array([1, -1j, -1, 1j]))


def test_idft_is_adjoint_of_dft():
    f = build_unitary(UnitaryKind.DFT, 8).entries
    assert np.array_equal(build_unitary(UnitaryKind.IDFT, 8).entries, f.conj().T)


def test_wht_order2():
    w = build_unitary(UnitaryKind.WHT, 2).entries
    assert np.allclose(w, np.array([[1, 1], [1, -1]]) / np.sqrt(2), atol=0)


def test_dft2_equals_wht2_exactly():
    f2 = build_unitary(UnitaryKind.DFT, 2).entries
    w2 = build_unitary(UnitaryKind.WHT, 2).entries
    assert np.array_equal(f2, w2)


@pytest.mark.parametrize("size", (2, 8, 64))
def test_wht_entries_pm(size):
    w = build_unitary(UnitaryKind.WHT, size).entries
    assert np.abs(np.abs(w) - 1 / np.sqrt(size)).max() < 1e-15
    assert np.abs(w.imag).max() == 0.0
    assert np.abs(w - dense_wht(size)).max() == 0.0


def test_wht_requires_power_of_two():
    with pytest.raises(ValueError):
        build_unitary(UnitaryKind.WHT, 6)


def test_zero_size_rejected():
    with pytest.raises(ValueError):
        build_unitary(UnitaryKind.DFT, 0)


@pytest.mark.parametrize("size", (4, 16, 64))
def test_dct_orthonormal_type2(size):
    c = build_unitary(UnitaryKind.DCT, size).entries
    assert np.abs(c - dense_dct(size)).max() < 1e-14
    assert np.allclose(c[0, :], 1 / np.sqrt(size))


@pytest.mark.parametrize("kind", ALL_KINDS)
@pytest.mark.parametrize("size", (1, 2, 8, 32))
@pytest.mark.parametrize("adjoint", (False, True))
def test_right_apply_matches_dense(kind, size, adjoint, rng):
    x = rng.standard_normal((5, size)) + 1j * rng.standard_normal((5, size))
    u = build_unitary(kind, size).entries
    ref = x @ (u.conj().T if adjoint else u)
    assert np.abs(right_apply(x, kind, adjoint=adjoint) - ref).max() < 1e-12


def test_precode_time_identity_is_noop(rng):
    x = rng.standard_normal((6, 4))
    assert np.array_equal(precode_time(x, build_unitary(UnitaryKind.IDENTITY, 4)), x)


def test_precode_time_single_entry_wht():
    x = np.zeros((3, 2), dtype=complex)
    x[0, 0] = 1.0
    out = precode_time(x, build_unitary(UnitaryKind.WHT, 2))
    assert np.allclose(out[0], [1 / np.sqrt(2), 1 / np.sqrt(2)], atol=0)
    assert np.abs(out[1:]).max() == 0.0


def test_precode_time_round_trip(rng):
    x = rng.standard_normal((8, 16)) + 1j * rng.standard_normal((8, 16))
    f = build_unitary(UnitaryKind.DFT, 16)
    fh = build_unitary(UnitaryKind.IDFT, 16)
    assert np.abs(precode_time(precode_time(x, f), fh) - x).max() < 1e-12


def test_precode_time_dimension_mismatch(rng):
    with pytest.raises(ValueError):
        precode_time(rng.standard_normal((4, 5)), build_unitary(UnitaryKind.DFT, 4))


@given(
    data=st.data(),
    kind=st.sampled_from(ALL_KINDS),
    size=st.sampled_from((2, 4, 8, 16)),
)
@settings(max_examples=40, deadline=None)
def test_parseval(data, kind, size):
    rows = data.draw(st.integers(min_value=1, max_value=6))
    flat = data.draw(
        st.lists(
            st.floats(-10, 10, allow_nan=False, width=32),
            min_size=2 * rows * size,
            max_size=2 * rows * size,
        )
    )
    vals = np.asarray(flat, dtype=float).reshape(2, rows, size)
    x = vals[0] + 1j * vals[1]
    y = precode_time(x, build_unitary(kind, size))
    assert np.linalg.norm(y) == pytest.approx(np.linalg.norm(x), rel=1e-12, abs=1e-12)


def test_interleave_examples():
    grid = np.array([[1, 3], [2, 4]])
    assert np.array_equal(interleave(grid), [1, 2, 3, 4])
    row = np.array([[5, 6, 7]])
    assert np.array_equal(interleave(row), [5, 6, 7])


def test_deinterleave_example():
    assert np.array_equal(
        deinterleave(np.array([1, 2, 3, 4]), 2, 2), np.array([[1, 3], [2, 4]])
    )
    assert np.abs(deinterleave(np.zeros(6), 2, 3)).max() == 0.0


def test_interleaver_bijectivity_exhaustive():
    for m in range(1, 9):
        for n in range(1, 9):
            v = np.arange(m * n, dtype=complex) + 0.5j
            assert np.array_equal(interleave(deinterleave(v, m, n)), v)
            grid = v.reshape(m, n)
            assert np.array_equal(deinterleave(interleave(grid), m, n), grid)


def test_deinterleave_length_mismatch():
    with pytest.raises(ValueError):
        deinterleave(np.zeros(5), 2, 3)


@given(m=st.integers(1, 12), n=st.integers(1, 12))
@settings(max_examples=60, deadline=None)
def test_interleave_round_trip_property(m, n):
    v = np.arange(m * n, dtype=float)
    assert np.array_equal(interleave(deinterleave(v, m, n)), v)


@pytest.mark.parametrize("m,n", [(2, 3), (4, 4), (3, 5)])
def test_permutation_matches_dense_interleaver(m, n):
    p_idx = interleaver_permutation(m, n)
    p_dense = dense_interleaver(m, n)
    x = np.arange(m * n, dtype=complex)
    assert np.array_equal(x[p_idx], p_dense @ x)
    grid = x.reshape(m, n)
    x_t = grid.T.ravel(order="F")  # vec(X^T)
    assert np.array_equal(interleave(grid), x_t[p_idx])
