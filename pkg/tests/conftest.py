"""Shared fixtures and independent dense oracles.

The oracle constructions here (explicit DFT/WHT/DCT matrices, the dense
interleaver permutation, the full banded channel matrix, the end-to-end
channel matrix) are written from the defining formulas, independent of the
vectorized implementations they are used to check.
"""

import numpy as np
import pytest

from uscsim.channel import DelayTimeChannel, PathSet
from uscsim.config import FrameConfig, Scheme


# ---------------------------------------------------------------------------
# Dense reference transforms
# ---------------------------------------------------------------------------


def dense_dft(n: int) -> np.ndarray:
    i, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return np.exp(-2j * np.pi * i * k / n) / np.sqrt(n)


def dense_wht(n: int) -> np.ndarray:
    h = np.array([[1.0]])
    while h.shape[0] < n:
        h = np.block([[h, h], [h, -h]])
    return h / np.sqrt(n)


def dense_dct(n: int) -> np.ndarray:
    k, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    mat = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * j + 1) * k / (2 * n))
    mat[0, :] = np.sqrt(1.0 / n)
    return mat


def dense_time_precoder(scheme: Scheme, n: int) -> np.ndarray:
    if scheme is Scheme.OTFS:
        return dense_dft(n).conj().T
    if scheme is Scheme.OTSM:
        return dense_wht(n).astype(complex)
    if scheme is Scheme.DCT_USC:
        return dense_dct(n).astype(complex)
    return np.eye(n, dtype=complex)


def dense_interleaver(m: int, n: int) -> np.ndarray:
    """Permutation matrix P with s = P @ vec(X~^T): P[m + k*M, k + m*N] = 1."""
    p = np.zeros((m * n, m * n))
    for mm in range(m):
        for k in range(n):
            p[mm + k * m, k + mm * n] = 1.0
    return p


def dense_channel_matrix(chan: DelayTimeChannel) -> np.ndarray:
    """Full NM x NM banded G: G[q, q-l] = g_bar[l, q] for q >= l."""
    l_taps, nm = chan.taps.shape
    g = np.zeros((nm, nm), dtype=complex)
    for q in range(nm):
        for l in range(min(l_taps - 1, q) + 1):
            g[q, q - l] = chan.taps[l, q]
    return g


def dense_end_to_end(chan: DelayTimeChannel, cfg: FrameConfig) -> np.ndarray:
    """End-to-end symbol-domain channel acting on x = vec(X^T).

    The vec(X^T) stacking puts grid rows into the Kronecker blocks, so the
    row-wise precoder X @ U_T appears transposed: H =
    (I_M x conj(U_T)) P^T G P (I_M x U_T^T).  For the symmetric DFT/WHT
    precoders this is the textbook (I x U_T^H) ... (I x U_T) form.
    """
    u_t = dense_time_precoder(cfg.scheme, cfg.N)
    p = dense_interleaver(cfg.M, cfg.N)
    g = dense_channel_matrix(chan)
    kron = np.kron(np.eye(cfg.M), u_t.T)
    kron_h = np.kron(np.eye(cfg.M), u_t.conj())
    return kron_h @ p.T @ g @ p @ kron


# ---------------------------------------------------------------------------
# Channel helpers
# ---------------------------------------------------------------------------


def decaying_pathset(cfg, rng, kappa_scale=2.0):
    """Random multipath with geometrically decaying tap powers; keeps the
    per-block systems well conditioned, like physical profiles."""
    delays = np.arange(cfg.l_max + 1)
    powers = 10.0 ** (-0.6 * delays)
    powers = powers / powers.sum()
    gains = np.sqrt(powers / 2.0) * (
        rng.standard_normal(delays.size) + 1j * rng.standard_normal(delays.size)
    )
    kappa = rng.uniform(-kappa_scale, kappa_scale, size=delays.size)
    return PathSet(gains=gains, delays=delays, dopplers=kappa)


def dominant_pathset(cfg, rng, kappa_scale=2.0):
    """Random multipath with a unit-magnitude delay-0 tap and weak higher
    taps, making every G_n strictly diagonally dominant.  Gauss-Seidel on
    the normal equations then converges at a draw-independent rate."""
    delays = np.arange(cfg.l_max + 1)
    mags = np.concatenate(([1.0], 0.35 / np.maximum(delays[1:], 1)))
    phases = rng.uniform(-np.pi, np.pi, size=delays.size)
    gains = mags * np.exp(1j * phases)
    kappa = rng.uniform(-kappa_scale, kappa_scale, size=delays.size)
    return PathSet(gains=gains, delays=delays, dopplers=kappa)


def single_path(gain=1.0 + 0j, delay=0, kappa=0.0) -> PathSet:
    return PathSet(
        gains=np.array([gain], dtype=complex),
        delays=np.array([delay]),
        dopplers=np.array([float(kappa)]),
    )


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_cfg():
    """Small frame for dense-oracle comparisons."""
    return FrameConfig(
        M=8, N=4, delta_f=15e3, f_c=4e9, L_G=3, l_max=1, scheme=Scheme.OTFS
    )


@pytest.fixture
def ref_cfg():
    """The reference frame geometry: M = N = 64, 15 kHz, 4 GHz, ZP 16."""
    return FrameConfig(
        M=64, N=64, delta_f=15e3, f_c=4e9, L_G=16, l_max=3, scheme=Scheme.OTFS
    )


def random_grid(cfg, rng):
    return rng.standard_normal((cfg.M, cfg.N)) + 1j * rng.standard_normal((cfg.M, cfg.N))
