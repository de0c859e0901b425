"""Delay-Doppler multipath generation and the discrete delay-time channel.

The EVA power-delay profile constants are the 3GPP Extended Vehicular A
model (tap delays 0..2510 ns, tap powers 0..-16.9 dB).  Every profile path
keeps its own complex Gaussian gain and its own Jakes-drawn Doppler shift;
only the delays are rounded to integer taps at the sampling rate M*delta_f,
so paths landing on the same tap superpose as distinct Doppler tones.
That superposition is what makes the per-tap gains fade over the frame and
gives time-spreading waveforms their Doppler diversity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import FrameConfig

C_LIGHT = 299_792_458.0

EVA_DELAYS_NS = (0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0)
EVA_POWERS_DB = (0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9)


@dataclass(frozen=True)
class PathSet:
    """Sparse delay-Doppler channel: complex gains, integer delay taps and
    real normalized Doppler shifts kappa = nu * N * T."""

    gains: np.ndarray
    delays: np.ndarray
    dopplers: np.ndarray

    def __post_init__(self):
        if not (len(self.gains) == len(self.delays) == len(self.dopplers)):
            raise ValueError("gains, delays and dopplers must have equal length")


@dataclass(frozen=True)
class DelayTimeChannel:
    """Dense discrete channel taps[l, q] = g_bar[l, q], shape (l_max+1, N*M)."""

    taps: np.ndarray


@dataclass(frozen=True)
class BlockChannelMatrix:
    """Per-block banded channel matrices.

    bands[l, q, n] = G_n[q, q-l] = g_bar[l, n*M + q] for q >= l, zero for
    q < l (the cross-block reach that zero padding suppresses).
    """

    bands: np.ndarray

    @property
    def l_max(self) -> int:
        return self.bands.shape[0] - 1

    def dense(self) -> np.ndarray:
        """Materialize G_n as an (N, M, M) stack (tests and MMSE oracle)."""
        l_taps, m, n = self.bands.shape
        out = np.zeros((n, m, m), dtype=complex)
        for l in range(l_taps):
            rows = np.arange(l, m)
            out[:, rows, rows - l] = self.bands[l, l:, :].T
        return out


def max_doppler_hz(speed_kmh: float, f_c_hz: float) -> float:
    """nu_max = v * f_c / c."""
    return speed_kmh / 3.6 * f_c_hz / C_LIGHT


def gen_paths_eva(nu_max_hz: float, cfg: FrameConfig, rng: np.random.Generator) -> PathSet:
    """Random EVA realization with one gain and one Doppler per profile path.

    Gains are complex Gaussian with the profile powers (unit total mean
    power); delays round to integer taps and clip to l_max.  Draw order
    (fixed for reproducibility): one standard-normal pair per path for the
    gains, then one uniform angle per path for the Dopplers.
    """
    if nu_max_hz < 0:
        raise ValueError("nu_max_hz must be nonnegative")
    delays_s = np.asarray(EVA_DELAYS_NS) * 1e-9
    taps = np.rint(delays_s * cfg.sample_rate).astype(int)
    taps = np.minimum(taps, cfg.l_max)
    powers = 10.0 ** (np.asarray(EVA_POWERS_DB) / 10.0)
    powers = powers / powers.sum()
    p = len(taps)
    gauss = rng.standard_normal((p, 2))
    gains = np.sqrt(powers / 2.0) * (gauss[:, 0] + 1j * gauss[:, 1])
    theta = rng.uniform(-np.pi, np.pi, size=p)
    nu = nu_max_hz * np.cos(theta)
    kappa = nu * cfg.N / cfg.delta_f
    return PathSet(gains=gains, delays=taps, dopplers=kappa)


def discrete_channel(paths: PathSet, cfg: FrameConfig) -> DelayTimeChannel:
    """Exact evaluation of g_bar[l, q] = sum_i h_i z^(kappa_i (q - l_i)) delta[l - l_i]."""
    if np.any(paths.delays < 0) or np.any(paths.delays > cfg.l_max):
        raise ValueError(f"path delays must lie in [0, {cfg.l_max}]")
    nm = cfg.frame_samples
    q = np.arange(nm)
    taps = np.zeros((cfg.l_max + 1, nm), dtype=complex)
    for h, l, kappa in zip(paths.gains, paths.delays, paths.dopplers):
        taps[int(l)] += h * np.exp(2j * np.pi * kappa * (q - int(l)) / nm)
    return DelayTimeChannel(taps=taps)


def apply_channel(
    s: np.ndarray,
    chan: DelayTimeChannel,
    sigma_w: float,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """r[q] = sum_l g_bar[l, q] s[q-l] + w[q], with s[q] = 0 for q < 0.

    w is circularly-symmetric complex Gaussian with variance sigma_w**2 per
    sample; no noise is drawn when sigma_w == 0.
    """
    s = np.asarray(s)
    l_taps, nm = chan.taps.shape
    if s.shape != (nm,):
        raise ValueError(f"signal length {s.shape} != ({nm},)")
    if sigma_w < 0:
        raise ValueError("sigma_w must be nonnegative")
    r = chan.taps[0] * s
    for l in range(1, l_taps):
        r[l:] += chan.taps[l, l:] * s[: nm - l]
    if sigma_w > 0:
        if rng is None:
            raise ValueError("rng required when sigma_w > 0")
        w = rng.standard_normal((nm, 2))
        r = r + sigma_w / np.sqrt(2.0) * (w[:, 0] + 1j * w[:, 1])
    return r


def block_matrices(chan: DelayTimeChannel, cfg: FrameConfig) -> BlockChannelMatrix:
    """Split the frame channel into the N independent per-block matrices."""
    l_taps = chan.taps.shape[0]
    bands = chan.taps.reshape(l_taps, cfg.N, cfg.M).transpose(0, 2, 1).copy()
    for l in range(1, l_taps):
        bands[l, :l, :] = 0.0
    return BlockChannelMatrix(bands=bands)


def unit_noise(nm: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-variance circularly-symmetric complex Gaussian vector."""
    w = rng.standard_normal((nm, 2))
    return (w[:, 0] + 1j * w[:, 1]) / np.sqrt(2.0)
