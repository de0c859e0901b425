"""QAM mapping, frame construction and the modulation/demodulation chains."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .config import FrameConfig, Scheme
from .transforms import (
    UnitaryMatrix,
    deinterleave,
    fft_cols,
    ifft_cols,
    interleave,
    right_apply,
)


class CellRole(enum.IntEnum):
    DATA = 0
    PILOT = 1
    GUARD = 2


@dataclass(frozen=True)
class SymbolGrid:
    """M x N symbol grid plus the role of every cell."""

    values: np.ndarray
    mask: np.ndarray


def role_mask(cfg: FrameConfig) -> np.ndarray:
    """Cell roles: pilot at (m_p, n_p), guard on all other rows >= M - L_G."""
    mask = np.full((cfg.M, cfg.N), CellRole.DATA, dtype=np.uint8)
    mask[cfg.M - cfg.L_G :, :] = CellRole.GUARD
    mask[cfg.pilot.m_p, cfg.pilot.n_p] = CellRole.PILOT
    return mask


def pilot_symbol(cfg: FrameConfig) -> complex:
    return complex(cfg.pilot.amplitude)


# ---------------------------------------------------------------------------
# Gray-mapped square QAM, unit average symbol energy.
#
# Bits are MSB-first per symbol; the first half labels the I axis, the second
# half the Q axis.  Per axis the bit group is read as a Gray code g and the
# amplitude is (2^b - 1) - 2*graydecode(g), so for QPSK bit 0 -> +1 and
# bits (0,0) -> (1+1j)/sqrt(2).
# ---------------------------------------------------------------------------


def _gray_decode(g: np.ndarray) -> np.ndarray:
    out = g.copy()
    shift = 1
    while np.any(out >> shift):
        out ^= out >> shift
        shift *= 2
    return out


@lru_cache(maxsize=8)
def qam_constellation(order: int) -> np.ndarray:
    """Constellation indexed by the symbol's bit pattern (MSB first)."""
    if order not in (4, 16, 64):
        raise ValueError(f"unsupported QAM order {order}")
    k = int(np.log2(order))
    b = k // 2
    idx = np.arange(order)
    gi = idx >> b
    gq = idx & ((1 << b) - 1)
    amp_i = (2**b - 1) - 2 * _gray_decode(gi)
    amp_q = (2**b - 1) - 2 * _gray_decode(gq)
    const = amp_i + 1j * amp_q
    const = const / np.sqrt(np.mean(np.abs(const) ** 2))
    const.flags.writeable = False
    return const


def qam_map(bits: np.ndarray, order: int) -> np.ndarray:
    """Map a bit vector to Gray-coded unit-average-energy QAM symbols."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    k = int(np.log2(order))
    if bits.size % k:
        raise ValueError(f"bit count {bits.size} not divisible by log2(order)={k}")
    weights = 1 << np.arange(k)[::-1]
    idx = bits.reshape(-1, k) @ weights
    return qam_constellation(order)[idx]


def qam_slice(symbols: np.ndarray, order: int) -> np.ndarray:
    """Nearest constellation point per entry; ties go to the lowest bit label."""
    const = qam_constellation(order)
    return const[_nearest_index(symbols, const)]


def qam_hard_bits(symbols: np.ndarray, order: int) -> np.ndarray:
    """Hard-demap symbols to bits (inverse of qam_map after slicing)."""
    const = qam_constellation(order)
    idx = _nearest_index(symbols, const)
    k = int(np.log2(order))
    shifts = np.arange(k)[::-1]
    return ((idx[:, None] >> shifts) & 1).astype(np.int64).ravel()


def _nearest_index(symbols: np.ndarray, const: np.ndarray) -> np.ndarray:
    symbols = np.asarray(symbols).ravel()
    d2 = np.abs(symbols[:, None] - const[None, :]) ** 2
    return d2.argmin(axis=1)


# ---------------------------------------------------------------------------
# Frame construction
# ---------------------------------------------------------------------------


def build_frame(data_bits: np.ndarray, cfg: FrameConfig) -> SymbolGrid:
    """Place QAM data, the pilot and guard zeros on the grid.

    Data cells are filled in C order over the grid (row-major: delay row by
    delay row), which fixes the bit-to-cell order used for BER counting.
    """
    data_bits = np.asarray(data_bits).ravel()
    if data_bits.size != cfg.data_bits_per_frame:
        raise ValueError(
            f"expected {cfg.data_bits_per_frame} data bits, got {data_bits.size}"
        )
    mask = role_mask(cfg)
    values = np.zeros((cfg.M, cfg.N), dtype=complex)
    values[mask == CellRole.DATA] = qam_map(data_bits, cfg.qam_order)
    values[cfg.pilot.m_p, cfg.pilot.n_p] = pilot_symbol(cfg)
    return SymbolGrid(values=values, mask=mask)


# ---------------------------------------------------------------------------
# Modulation / demodulation
# ---------------------------------------------------------------------------


def usc_modulate(grid: SymbolGrid | np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Single-carrier path: s = interleave(X @ U_T)."""
    if cfg.scheme is Scheme.OFDM:
        raise ValueError("usc_modulate requires a single-carrier scheme, not OFDM")
    x = grid.values if isinstance(grid, SymbolGrid) else np.asarray(grid)
    _check_grid(x, cfg)
    return interleave(right_apply(x, cfg.scheme.time_precoder))


def usc_demodulate(r: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Receiver fold + time de-precoding: Y = deinterleave(r) @ U_T^H."""
    yt = deinterleave(np.asarray(r), cfg.M, cfg.N)
    return right_apply(yt, cfg.scheme.time_precoder, adjoint=True)


def multicarrier_modulate(
    grid: SymbolGrid | np.ndarray,
    u_f: UnitaryMatrix,
    u_t: UnitaryMatrix,
    cfg: FrameConfig,
) -> np.ndarray:
    """General 2-D precoded transmitter with rectangular pulses.

    s = vec(F_M^H . U_F . X . U_T); reduces to usc_modulate when U_F = F_M.
    """
    x = grid.values if isinstance(grid, SymbolGrid) else np.asarray(grid)
    _check_grid(x, cfg)
    if u_f.size != cfg.M or u_t.size != cfg.N:
        raise ValueError("precoder sizes must match the frame dimensions")
    x_ft = u_f.entries @ x @ u_t.entries
    return interleave(ifft_cols(x_ft))


def modulate(grid: SymbolGrid | np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Scheme dispatch: USC index path, or the general path for OFDM."""
    if cfg.scheme.is_usc:
        return usc_modulate(grid, cfg)
    x = grid.values if isinstance(grid, SymbolGrid) else np.asarray(grid)
    _check_grid(x, cfg)
    return interleave(ifft_cols(right_apply(x, cfg.scheme.time_precoder)))


def demodulate(r: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Inverse of ``modulate`` over an identity channel."""
    if cfg.scheme.is_usc:
        return usc_demodulate(r, cfg)
    yt = deinterleave(np.asarray(r), cfg.M, cfg.N)
    return right_apply(fft_cols(yt), cfg.scheme.time_precoder, adjoint=True)


def _check_grid(x: np.ndarray, cfg: FrameConfig) -> None:
    if x.shape != (cfg.M, cfg.N):
        raise ValueError(f"grid shape {x.shape} != ({cfg.M}, {cfg.N})")
