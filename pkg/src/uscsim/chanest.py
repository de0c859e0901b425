"""Embedded-pilot channel estimation and delay-time interpolation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .channel import BlockChannelMatrix, DelayTimeChannel, block_matrices
from .config import FrameConfig

INTERP_METHODS = ("linear", "spline")


@dataclass(frozen=True)
class PilotObservations:
    """Raw tap estimates on the pilot grid: samples[l, n] = g_hat[l, m_p + n*M + l]."""

    samples: np.ndarray


@dataclass(frozen=True)
class EstimatedChannel:
    """Full-frame channel taps with their provenance ('perfect' or 'estimated')."""

    taps: np.ndarray
    provenance: str


def perfect_csi(chan: DelayTimeChannel) -> EstimatedChannel:
    return EstimatedChannel(taps=chan.taps, provenance="perfect")


def estimate_taps(r: np.ndarray, cfg: FrameConfig) -> PilotObservations:
    """Least-squares tap estimates at the pilot sampling grid.

    samples[l, n] = r[m_p + n*M + l] / (x_p * U_T[n_p, n]); requires every
    per-block pilot sample to be nonzero.
    """
    r = np.asarray(r).ravel()
    if r.size != cfg.frame_samples:
        raise ValueError(f"received length {r.size} != {cfg.frame_samples}")
    denom = cfg.pilot_row_values()
    if np.min(np.abs(denom)) <= 1e-12:
        raise ValueError(
            f"scheme {cfg.scheme.value}: pilot precoder row {cfg.pilot.n_p} has "
            "(near-)zero entries; embedded-pilot estimation is undefined"
        )
    l_idx = np.arange(cfg.l_max + 1)[:, None]
    n_idx = np.arange(cfg.N)[None, :]
    q = cfg.pilot.m_p + n_idx * cfg.M + l_idx
    return PilotObservations(samples=r[q] / denom[None, :])


def interpolate(
    obs: PilotObservations,
    cfg: FrameConfig,
    method: str = "spline",
    amp_threshold: float | None = None,
) -> EstimatedChannel:
    """Interpolate each delay row from its N pilot samples to the whole frame.

    Real and imaginary parts are interpolated independently.  Linear uses
    nearest-sample hold outside the sampled span; the natural cubic spline is
    evaluated beyond its knots.  ``amp_threshold`` optionally zeroes samples
    with magnitude below that value before interpolating (default off).
    """
    if method not in INTERP_METHODS:
        raise ValueError(f"method must be one of {INTERP_METHODS}")
    if method == "linear" and cfg.N < 2:
        raise ValueError("linear interpolation needs N >= 2")
    if method == "spline" and cfg.N < 4:
        raise ValueError("spline interpolation needs N >= 4")
    samples = obs.samples
    if samples.shape != (cfg.l_max + 1, cfg.N):
        raise ValueError(f"observations shape {samples.shape} != ({cfg.l_max + 1}, {cfg.N})")
    if amp_threshold is not None:
        samples = np.where(np.abs(samples) < amp_threshold, 0.0, samples)
    q_all = np.arange(cfg.frame_samples)
    taps = np.empty((cfg.l_max + 1, cfg.frame_samples), dtype=complex)
    for l in range(cfg.l_max + 1):
        knots = cfg.pilot.m_p + np.arange(cfg.N) * cfg.M + l
        vals = samples[l]
        if method == "linear":
            taps[l] = np.interp(q_all, knots, vals.real) + 1j * np.interp(
                q_all, knots, vals.imag
            )
        else:
            sp_re = CubicSpline(knots, vals.real, bc_type="natural")
            sp_im = CubicSpline(knots, vals.imag, bc_type="natural")
            taps[l] = sp_re(q_all) + 1j * sp_im(q_all)
    return EstimatedChannel(taps=taps, provenance="estimated")


def reconstruct_blocks(est: EstimatedChannel, cfg: FrameConfig) -> BlockChannelMatrix:
    """Per-block matrices from estimated (or perfect) taps."""
    return block_matrices(DelayTimeChannel(taps=est.taps), cfg)


def interpolation_span(cfg: FrameConfig, l: int = 0) -> tuple[int, int]:
    """Inclusive sample range [first knot, last knot] covered by interpolation
    for delay row l; samples outside it are extrapolated."""
    return cfg.pilot.m_p + l, cfg.pilot.m_p + (cfg.N - 1) * cfg.M + l
