"""Built-in invariant suite behind the ``uscsim validate`` subcommand.

Each check prints one PASS/FAIL line.  The dense reference constructions
here are deliberately independent of the vectorized production paths.
"""

from __future__ import annotations

import numpy as np

from . import bench, chanest, modem, transforms
from .channel import DelayTimeChannel, PathSet, apply_channel, block_matrices, discrete_channel
from .config import FrameConfig, Scheme
from .detect import DetectorKind, EqualizerSpec, block_mmse, mf_gs
from .transforms import UnitaryKind, build_unitary


def dense_channel_matrix(chan: DelayTimeChannel) -> np.ndarray:
    """Full banded G with G[q, q-l] = g_bar[l, q]."""
    l_taps, nm = chan.taps.shape
    g = np.zeros((nm, nm), dtype=complex)
    for q in range(nm):
        for l in range(min(l_taps - 1, q) + 1):
            g[q, q - l] = chan.taps[l, q]
    return g


def random_pathset(cfg: FrameConfig, rng: np.random.Generator, kappa_scale: float = 2.0) -> PathSet:
    """Random multipath with EVA-like decaying tap powers (keeps the
    per-block systems well conditioned, as physical profiles do)."""
    delays = np.arange(cfg.l_max + 1)
    powers = 10.0 ** (-0.6 * delays)
    powers = powers / powers.sum()
    gains = np.sqrt(powers / 2.0) * (
        rng.standard_normal(delays.size) + 1j * rng.standard_normal(delays.size)
    )
    kappa = rng.uniform(-kappa_scale, kappa_scale, size=delays.size)
    return PathSet(gains=gains, delays=delays, dopplers=kappa)


def _checks():
    rng = np.random.default_rng(2024)

    def check_unitarity():
        worst = 0.0
        for kind in UnitaryKind:
            for size in (1, 2, 4, 8, 16, 32, 64):
                u = build_unitary(kind, size).entries
                worst = max(worst, np.abs(u @ u.conj().T - np.eye(size)).max())
        return worst < 1e-12, f"max |U U^H - I| = {worst:.2e}"

    def check_interleaver():
        for m in range(1, 9):
            for n in range(1, 9):
                v = np.arange(m * n) + 1j
                grid = transforms.deinterleave(v, m, n)
                if not np.array_equal(transforms.interleave(grid), v):
                    return False, f"round trip failed at M={m}, N={n}"
        return True, "exhaustive M,N <= 8"

    def check_roundtrip():
        worst = 0.0
        for scheme in Scheme:
            cfg = FrameConfig(M=64, N=64, delta_f=15e3, f_c=4e9, L_G=16, l_max=3, scheme=scheme)
            x = rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64))
            err = np.abs(modem.demodulate(modem.modulate(x, cfg), cfg) - x).max()
            worst = max(worst, err)
        return worst < 1e-10, f"max round-trip error = {worst:.2e}"

    def check_apply_channel():
        cfg = FrameConfig(M=16, N=8, delta_f=15e3, f_c=4e9, L_G=7, l_max=3, scheme=Scheme.OTFS)
        paths = random_pathset(cfg, rng)
        chan = discrete_channel(paths, cfg)
        s = rng.standard_normal(cfg.frame_samples) + 1j * rng.standard_normal(cfg.frame_samples)
        err = np.abs(apply_channel(s, chan, 0.0) - dense_channel_matrix(chan) @ s).max()
        return err < 1e-10, f"max |pipeline - G s| = {err:.2e}"

    def check_mmse():
        cfg = FrameConfig(M=16, N=4, delta_f=15e3, f_c=4e9, L_G=7, l_max=3, scheme=Scheme.OTSM)
        paths = random_pathset(cfg, rng)
        g_blocks = block_matrices(discrete_channel(paths, cfg), cfg)
        r_grid = rng.standard_normal((cfg.M, cfg.N)) + 1j * rng.standard_normal((cfg.M, cfg.N))
        sigma2 = 0.05
        res = block_mmse(r_grid, g_blocks, sigma2, cfg)
        dense = g_blocks.dense()
        s_ref = np.stack(
            [
                np.linalg.solve(
                    dense[n].conj().T @ dense[n] + sigma2 * np.eye(cfg.M),
                    dense[n].conj().T @ r_grid[:, n],
                )
                for n in range(cfg.N)
            ],
            axis=1,
        )
        u_t = build_unitary(cfg.scheme.time_precoder, cfg.N).entries
        err = np.abs(res.symbols - s_ref @ u_t.conj().T).max()
        return err < 1e-9, f"max |mmse - dense| = {err:.2e}"

    def check_gs():
        cfg = FrameConfig(M=16, N=4, delta_f=15e3, f_c=4e9, L_G=7, l_max=3, scheme=Scheme.OTFS)
        # unit-magnitude main tap keeps G_n diagonally dominant, so the GS
        # convergence rate is draw-independent
        delays = np.arange(cfg.l_max + 1)
        mags = np.concatenate(([1.0], 0.35 / np.maximum(delays[1:], 1)))
        paths = PathSet(
            gains=mags * np.exp(1j * rng.uniform(-np.pi, np.pi, delays.size)),
            delays=delays,
            dopplers=rng.uniform(-2.0, 2.0, delays.size),
        )
        g_blocks = block_matrices(discrete_channel(paths, cfg), cfg)
        r_grid = rng.standard_normal((cfg.M, cfg.N)) + 1j * rng.standard_normal((cfg.M, cfg.N))
        spec = EqualizerSpec(kind=DetectorKind.MF_GS, max_iters=400)
        res = mf_gs(r_grid, g_blocks, 0.0, spec, cfg, slice_update=False)
        dense = g_blocks.dense()
        s_ref = np.stack(
            [np.linalg.lstsq(dense[n], r_grid[:, n], rcond=None)[0] for n in range(cfg.N)],
            axis=1,
        )
        u_t = build_unitary(cfg.scheme.time_precoder, cfg.N).entries
        err = np.abs(res.symbols - s_ref @ u_t.conj().T).max()
        return err < 1e-6, f"max |gs - lstsq| = {err:.2e}"

    def check_estimation():
        cfg = FrameConfig(M=32, N=16, delta_f=15e3, f_c=4e9, L_G=10, l_max=2, scheme=Scheme.OTFS)
        paths = PathSet(
            gains=np.array([0.8, 0.5j]), delays=np.array([0, 2]), dopplers=np.array([1.3, -0.7])
        )
        chan = discrete_channel(paths, cfg)
        grid = modem.build_frame(
            rng.integers(0, 2, cfg.data_bits_per_frame), cfg
        )
        r = apply_channel(modem.modulate(grid, cfg), chan, 0.0)
        obs = chanest.estimate_taps(r, cfg)
        est = chanest.interpolate(obs, cfg, method="spline")
        l_idx = np.arange(cfg.l_max + 1)[:, None]
        q = cfg.pilot.m_p + np.arange(cfg.N)[None, :] * cfg.M + l_idx
        err = np.abs(np.take_along_axis(est.taps, q, axis=1) - obs.samples).max()
        truth_err = np.abs(obs.samples - np.take_along_axis(chan.taps, q, axis=1)).max()
        return err < 1e-12 and truth_err < 1e-10, (
            f"sample-point error {err:.2e}, obs vs truth {truth_err:.2e}"
        )

    def check_determinism():
        plan = bench.parse_plan_text(
            "schemes = otfs\ndetectors = mf_gs\nsnr_db = 12\nspeed_kmh = 120\n"
            "frames_per_point = 3\nseed = 7\n"
        )
        a = bench.run_point(plan, 0, 0, 0, 0)
        b = bench.run_point(plan, 0, 0, 0, 0)
        same = (a.bit_errors, a.frame_errors) == (b.bit_errors, b.frame_errors)
        return same, f"bit_errors = {a.bit_errors} vs {b.bit_errors}"

    return [
        ("unitarity", check_unitarity),
        ("interleaver-bijectivity", check_interleaver),
        ("modem-round-trip", check_roundtrip),
        ("apply-channel-vs-dense", check_apply_channel),
        ("block-mmse-vs-dense", check_mmse),
        ("gs-vs-least-squares", check_gs),
        ("pilot-estimation-exactness", check_estimation),
        ("run-point-determinism", check_determinism),
    ]


def run_selfcheck(verbose: bool = True) -> bool:
    ok = True
    for name, fn in _checks():
        try:
            passed, detail = fn()
        except Exception as exc:  # surface, keep going
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        ok &= passed
        if verbose:
            print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    return ok
