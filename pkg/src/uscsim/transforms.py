"""Unitary precoder matrices and the row-column interleaver.

The precoder family covers identity, DFT/IDFT, Walsh-Hadamard (Sylvester
order) and the orthonormal type-II DCT.  Dense matrices define correctness;
``right_apply`` provides O(N log N) fast paths used in the hot loops and is
tested against the dense definitions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft as sfft
from scipy.linalg import hadamard


class UnitaryKind(enum.Enum):
    IDENTITY = "identity"
    DFT = "dft"
    IDFT = "idft"
    WHT = "wht"
    DCT = "dct"


@dataclass(frozen=True)
class UnitaryMatrix:
    """Dense unitary precoder with read-only entries."""

    kind: UnitaryKind
    size: int
    entries: np.ndarray


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _dft_entries(size: int) -> np.ndarray:
    # roots[r] = exp(-2j*pi*r/size), with quadrant angles snapped to the
    # exact values {1, -1j, -1, 1j} so that e.g. DFT_2 == WHT_2 bitwise.
    r = np.arange(size)
    roots = np.exp(-2j * np.pi * r / size)
    for num, val in ((0, 1.0), (1, -1.0j), (2, -1.0), (3, 1.0j)):
        if (num * size) % 4 == 0:
            idx = num * size // 4
            if idx < size:
                roots[idx] = val
    ik = np.outer(r, r) % size
    return roots[ik] / np.sqrt(size)


def _dct_entries(size: int) -> np.ndarray:
    # Orthonormal DCT-II: row 0 constant, rows orthonormal.
    k = np.arange(size)[:, None]
    n = np.arange(size)[None, :]
    mat = np.cos(np.pi * (2 * n + 1) * k / (2 * size)) * np.sqrt(2.0 / size)
    mat[0, :] = 1.0 / np.sqrt(size)
    return mat.astype(complex)


@lru_cache(maxsize=64)
def _build_unitary_cached(kind: UnitaryKind, size: int) -> UnitaryMatrix:
    if size < 1:
        raise ValueError(f"unitary size must be >= 1, got {size}")
    if kind is UnitaryKind.IDENTITY:
        entries = np.eye(size, dtype=complex)
    elif kind is UnitaryKind.DFT:
        entries = _dft_entries(size)
    elif kind is UnitaryKind.IDFT:
        entries = _dft_entries(size).conj().T
    elif kind is UnitaryKind.WHT:
        if not _is_pow2(size):
            raise ValueError(f"WHT size must be a power of 2, got {size}")
        entries = hadamard(size).astype(complex) / np.sqrt(size)
    elif kind is UnitaryKind.DCT:
        entries = _dct_entries(size)
    else:  # pragma: no cover
        raise ValueError(f"unknown unitary kind {kind}")
    entries.flags.writeable = False
    return UnitaryMatrix(kind=kind, size=size, entries=entries)


def build_unitary(kind: UnitaryKind, size: int) -> UnitaryMatrix:
    """Return the dense unitary matrix of the given kind and size.

    Raises ValueError for size 0 or a non-power-of-2 WHT size.  Matrices are
    cached and immutable, so they can be shared freely across workers.
    """
    return _build_unitary_cached(kind, int(size))


def precode_time(x: np.ndarray, u_t: UnitaryMatrix) -> np.ndarray:
    """Precode the time (column) dimension of an M x N grid: returns x @ U_T."""
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[1] != u_t.size:
        raise ValueError(
            f"grid shape {x.shape} incompatible with precoder size {u_t.size}"
        )
    return x @ u_t.entries


def interleave(xt: np.ndarray) -> np.ndarray:
    """Serialize an M x N delay-time grid column-wise: s[m + k*M] = xt[m, k]."""
    xt = np.asarray(xt)
    if xt.ndim != 2:
        raise ValueError(f"expected a 2-D grid, got shape {xt.shape}")
    return np.ravel(xt, order="F")


def deinterleave(r: np.ndarray, m: int, n: int) -> np.ndarray:
    """Fold an NM vector column-wise into an M x N grid: yt[m, k] = r[m + k*M]."""
    r = np.asarray(r)
    if r.ndim != 1 or r.size != m * n:
        raise ValueError(f"expected a vector of length {m * n}, got shape {r.shape}")
    return r.reshape(n, m).T


def interleaver_permutation(m: int, n: int) -> np.ndarray:
    """Index map p with s = x_tilde[p]: p[m + k*M] = k + m*N.

    ``x_tilde`` is the row-major (time-major) vectorization of the grid and
    ``s`` its column-major one.  The dense permutation matrix, used only in
    validation tests, is ``np.eye(n*m)[p]`` applied from the left.
    """
    k, mm = np.meshgrid(np.arange(n), np.arange(m), indexing="ij")
    return (k + mm * n).T.reshape(-1, order="F")


def right_apply(x: np.ndarray, kind: UnitaryKind, adjoint: bool = False) -> np.ndarray:
    """Fast x @ U (or x @ U^H) along the last axis.

    Matches the dense product with ``build_unitary`` to machine precision.
    """
    x = np.asarray(x)
    if kind is UnitaryKind.IDENTITY:
        return x.copy()
    if kind is UnitaryKind.DFT:
        fwd = np.fft.fft if not adjoint else np.fft.ifft
        return fwd(x, axis=-1, norm="ortho")
    if kind is UnitaryKind.IDFT:
        fwd = np.fft.ifft if not adjoint else np.fft.fft
        return fwd(x, axis=-1, norm="ortho")
    if kind is UnitaryKind.WHT:
        return _fwht_last_axis(x) / np.sqrt(x.shape[-1])
    if kind is UnitaryKind.DCT:
        # x @ C is a DCT-III (inverse DCT-II) of the rows, x @ C^T a DCT-II.
        trans = sfft.dct if adjoint else sfft.idct
        if np.iscomplexobj(x):
            return trans(x.real, type=2, axis=-1, norm="ortho") + 1j * trans(
                x.imag, type=2, axis=-1, norm="ortho"
            )
        return trans(x, type=2, axis=-1, norm="ortho").astype(complex)
    raise ValueError(f"unknown unitary kind {kind}")  # pragma: no cover


def _fwht_last_axis(x: np.ndarray) -> np.ndarray:
    """Unnormalized Sylvester-ordered fast Walsh-Hadamard along the last axis."""
    n = x.shape[-1]
    if not _is_pow2(n):
        raise ValueError(f"WHT length must be a power of 2, got {n}")
    out = np.array(x, dtype=complex, copy=True)
    h = 1
    lead = x.shape[:-1]
    while h < n:
        out = out.reshape(lead + (n // (2 * h), 2, h))
        top = out[..., 0, :] + out[..., 1, :]
        bot = out[..., 0, :] - out[..., 1, :]
        out = np.stack((top, bot), axis=-2).reshape(lead + (n,))
        h *= 2
    return out


def fft_cols(x: np.ndarray) -> np.ndarray:
    """Normalized DFT of each column: F_M @ x."""
    return np.fft.fft(x, axis=0, norm="ortho")


def ifft_cols(x: np.ndarray) -> np.ndarray:
    """Normalized inverse DFT of each column: F_M^H @ x."""
    return np.fft.ifft(x, axis=0, norm="ortho")
