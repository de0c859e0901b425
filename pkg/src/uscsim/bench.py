"""Seeded Monte-Carlo BER experiments over scheme x detector x SNR x speed.

Reproducibility contract: every frame draws from its own RNG stream
``SeedSequence(seed, spawn_key=(snr_idx, speed_idx, frame_idx))`` in a fixed
order (paths, data bits, unit noise).  Streams do not depend on the scheme
or detector, so all schemes/detectors of a grid point share channel, bits
and noise (paired comparisons), and results are byte-identical across
worker counts.  The CSV is fully deterministic; wall-clock timings live in
the run manifest instead (the CSV elapsed_ms column is fixed at 0).
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import chanest
from .channel import (
    apply_channel,
    block_matrices,
    discrete_channel,
    gen_paths_eva,
    max_doppler_hz,
    unit_noise,
)
from .config import FrameConfig, PilotConfig, Scheme, default_pilot
from .detect import (
    DegenerateEqualizationError,
    DetectorKind,
    EqualizerSpec,
    GsInit,
    default_delta,
    detect,
)
from .modem import CellRole, build_frame, modulate, qam_hard_bits, role_mask
from .transforms import deinterleave

CSV_HEADER = "scheme,detector,snr_db,speed_kmh,bit_errors,bits,frame_errors,frames,ber,fer,seed,elapsed_ms"

LOW_CONFIDENCE_ERRORS = 10


@dataclass(frozen=True)
class ExperimentPlan:
    frame: FrameConfig
    schemes: tuple[Scheme, ...]
    detectors: tuple[EqualizerSpec, ...]
    snr_db_grid: tuple[float, ...]
    speed_kmh_grid: tuple[float, ...]
    frames_per_point: int
    seed: int
    csi: str = "perfect"
    interpolation: str = "spline"
    est_threshold_sigma: float | None = None

    def __post_init__(self):
        if self.frames_per_point < 1:
            raise ValueError("frames_per_point must be >= 1")
        if not (self.schemes and self.detectors and self.snr_db_grid and self.speed_kmh_grid):
            raise ValueError("schemes, detectors and grids must be non-empty")
        if self.csi not in ("perfect", "estimated"):
            raise ValueError("csi must be 'perfect' or 'estimated'")
        if self.interpolation not in chanest.INTERP_METHODS:
            raise ValueError(f"interpolation must be one of {chanest.INTERP_METHODS}")
        if self.csi == "estimated":
            for scheme in self.schemes:
                if not self.frame.with_scheme(scheme).supports_pilot_estimation():
                    raise ValueError(
                        f"scheme {scheme.value} cannot use embedded-pilot estimation "
                        "(zero entries in the pilot precoder row)"
                    )

    def detector_labels(self) -> tuple[str, ...]:
        labels, seen = [], {}
        for spec in self.detectors:
            base = spec.kind.value
            seen[base] = seen.get(base, 0) + 1
            labels.append(base if seen[base] == 1 else f"{base}#{seen[base]}")
        return tuple(labels)

    def point_keys(self):
        """Canonical CSV row order: scheme, detector, snr, speed."""
        labels = self.detector_labels()
        for s_i, scheme in enumerate(self.schemes):
            for d_i, _ in enumerate(self.detectors):
                for snr_i, _ in enumerate(self.snr_db_grid):
                    for v_i, _ in enumerate(self.speed_kmh_grid):
                        yield s_i, d_i, snr_i, v_i, labels[d_i]


@dataclass
class BerRecord:
    scheme: str
    detector: str
    snr_db: float
    speed_kmh: float
    bit_errors: int
    bits: int
    frame_errors: int
    frames: int
    seed: int
    elapsed_ms: float = 0.0
    anomalies: int = 0

    def __post_init__(self):
        if self.bit_errors > self.bits or self.frame_errors > self.frames:
            raise ValueError("error counts exceed totals")

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else 0.0

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0

    @property
    def low_confidence(self) -> bool:
        return 0 < self.bit_errors < LOW_CONFIDENCE_ERRORS


def snr_to_noise_var(snr_db: float, cfg: FrameConfig) -> float:
    """Data-referenced per-sample noise variance.

    The reference energy is the average per-sample energy contributed by the
    unit-energy data symbols alone (pilot boost does not change it):
    E_avg = n_data / (N*M), sigma_w^2 = E_avg * 10^(-snr/10).
    """
    return cfg.data_cell_fraction * 10.0 ** (-snr_db / 10.0)


def frame_rng(seed: int, snr_idx: int, speed_idx: int, frame_idx: int) -> np.random.Generator:
    """Per-frame stream; independent of scheme and detector by design."""
    ss = np.random.SeedSequence(seed, spawn_key=(snr_idx, speed_idx, frame_idx))
    return np.random.default_rng(ss)


# ---------------------------------------------------------------------------
# Frame simulation
# ---------------------------------------------------------------------------


def _simulate_frame_group(
    plan: ExperimentPlan,
    snr_idx: int,
    speed_idx: int,
    frame_idx: int,
    scheme_subset: tuple[int, ...] | None = None,
    detector_subset: tuple[int, ...] | None = None,
):
    """Simulate one frame for all (or a subset of) scheme x detector combos.

    Returns {(scheme_idx, det_idx): (bit_errors, frame_error, anomaly,
    detect_seconds)}.
    """
    cfg0 = plan.frame
    snr_db = plan.snr_db_grid[snr_idx]
    speed = plan.speed_kmh_grid[speed_idx]
    rng = frame_rng(plan.seed, snr_idx, speed_idx, frame_idx)
    nu_max = max_doppler_hz(speed, cfg0.f_c)
    paths = gen_paths_eva(nu_max, cfg0, rng)
    bits = rng.integers(0, 2, size=cfg0.data_bits_per_frame)
    w = unit_noise(cfg0.frame_samples, rng)

    chan = discrete_channel(paths, cfg0)
    noise_var = snr_to_noise_var(snr_db, cfg0)
    sigma_w = float(np.sqrt(noise_var))
    g_true = block_matrices(chan, cfg0)
    data_sel = role_mask(cfg0) == CellRole.DATA

    scheme_ids = scheme_subset if scheme_subset is not None else range(len(plan.schemes))
    det_ids = detector_subset if detector_subset is not None else range(len(plan.detectors))

    out = {}
    for s_i in scheme_ids:
        cfg = cfg0.with_scheme(plan.schemes[s_i])
        grid = build_frame(bits, cfg)
        s = modulate(grid, cfg)
        r = apply_channel(s, chan, 0.0) + sigma_w * w
        r_grid = deinterleave(r, cfg.M, cfg.N)
        if plan.csi == "estimated":
            obs = chanest.estimate_taps(r, cfg)
            thr = None
            if plan.est_threshold_sigma is not None:
                sigma_obs = sigma_w / float(np.min(np.abs(cfg.pilot_row_values())))
                thr = plan.est_threshold_sigma * sigma_obs
            est = chanest.interpolate(obs, cfg, method=plan.interpolation, amp_threshold=thr)
            g_blocks = chanest.reconstruct_blocks(est, cfg)
        else:
            g_blocks = g_true
        for d_i in det_ids:
            t0 = time.perf_counter()
            try:
                result = detect(r_grid, g_blocks, noise_var, plan.detectors[d_i], cfg)
                hard_bits = qam_hard_bits(result.hard[data_sel], cfg.qam_order)
                errs = int(np.count_nonzero(hard_bits != bits))
                anomaly = 0
            except DegenerateEqualizationError:
                errs = cfg.data_bits_per_frame
                anomaly = 1
            dt = time.perf_counter() - t0
            out[(s_i, d_i)] = (errs, int(errs > 0), anomaly, dt)
    return out


def _group_worker(args):
    plan, snr_idx, speed_idx, start, stop = args
    totals = {}
    for f in range(start, stop):
        res = _simulate_frame_group(plan, snr_idx, speed_idx, f)
        for key, (errs, ferr, anom, dt) in res.items():
            acc = totals.get(key, (0, 0, 0, 0.0))
            totals[key] = (acc[0] + errs, acc[1] + ferr, acc[2] + anom, acc[3] + dt)
    return totals


def run_point(
    plan: ExperimentPlan,
    scheme_idx: int,
    detector_idx: int,
    snr_idx: int,
    speed_idx: int,
) -> BerRecord:
    """Run one grid point standalone; matches the grouped path exactly."""
    t0 = time.perf_counter()
    bit_errors = frame_errors = anomalies = 0
    for f in range(plan.frames_per_point):
        res = _simulate_frame_group(
            plan, snr_idx, speed_idx, f, scheme_subset=(scheme_idx,), detector_subset=(detector_idx,)
        )
        errs, ferr, anom, _ = res[(scheme_idx, detector_idx)]
        bit_errors += errs
        frame_errors += ferr
        anomalies += anom
    elapsed_ms = (time.perf_counter() - t0) * 1e3
    return BerRecord(
        scheme=plan.schemes[scheme_idx].value,
        detector=plan.detector_labels()[detector_idx],
        snr_db=plan.snr_db_grid[snr_idx],
        speed_kmh=plan.speed_kmh_grid[speed_idx],
        bit_errors=bit_errors,
        bits=plan.frames_per_point * plan.frame.data_bits_per_frame,
        frame_errors=frame_errors,
        frames=plan.frames_per_point,
        seed=plan.seed,
        elapsed_ms=elapsed_ms,
        anomalies=anomalies,
    )


# ---------------------------------------------------------------------------
# Plan execution with manifest journaling
# ---------------------------------------------------------------------------


def run_plan(
    plan: ExperimentPlan,
    out_csv: str,
    workers: int = 1,
    resume: bool = True,
    manifest_path: str | None = None,
) -> list[BerRecord]:
    """Run every grid point, journal to the manifest, write the CSV.

    Completed (snr, speed) groups recorded in an existing manifest for the
    same plan are skipped, so interrupted runs resume and still produce a
    byte-identical CSV.
    """
    manifest_path = manifest_path or out_csv + ".manifest.json"
    canon = plan_to_text(plan)
    phash = hashlib.sha256(canon.encode()).hexdigest()
    manifest = _load_manifest(manifest_path) if resume else None
    if manifest is None or manifest.get("plan_hash") != phash:
        from . import __version__

        manifest = {
            "format": 1,
            "library_version": __version__,
            "plan_hash": phash,
            "plan": canon,
            "seed": plan.seed,
            "data_cell_fraction": plan.frame.data_cell_fraction,
            "notes": "all schemes share the ZP/pilot grid layout (equal data-cell fraction)",
            "groups": {},
        }

    n_frames = plan.frames_per_point
    for snr_i, _ in enumerate(plan.snr_db_grid):
        for v_i, _ in enumerate(plan.speed_kmh_grid):
            gkey = f"{snr_i},{v_i}"
            if gkey in manifest["groups"]:
                continue
            t0 = time.perf_counter()
            totals = _run_group(plan, snr_i, v_i, workers)
            group = {
                "rng_spawn_key": [snr_i, v_i],
                "elapsed_ms": (time.perf_counter() - t0) * 1e3,
                "points": {},
            }
            for (s_i, d_i), (errs, ferrs, anoms, dt) in sorted(totals.items()):
                group["points"][f"{s_i},{d_i}"] = {
                    "bit_errors": errs,
                    "frame_errors": ferrs,
                    "anomalies": anoms,
                    "detect_ms": dt * 1e3,
                    "low_confidence": 0 < errs < LOW_CONFIDENCE_ERRORS,
                }
            manifest["groups"][gkey] = group
            _save_manifest(manifest_path, manifest)

    records = _records_from_manifest(plan, manifest)
    write_csv(records, out_csv)
    return records


def _run_group(plan: ExperimentPlan, snr_idx: int, speed_idx: int, workers: int):
    n = plan.frames_per_point
    if workers <= 1:
        return _group_worker((plan, snr_idx, speed_idx, 0, n))
    chunk = max(1, (n + workers * 4 - 1) // (workers * 4))
    tasks = [
        (plan, snr_idx, speed_idx, start, min(start + chunk, n))
        for start in range(0, n, chunk)
    ]
    totals = {}
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_group_worker, tasks):
            for key, (errs, ferr, anom, dt) in part.items():
                acc = totals.get(key, (0, 0, 0, 0.0))
                totals[key] = (acc[0] + errs, acc[1] + ferr, acc[2] + anom, acc[3] + dt)
    return totals


def _records_from_manifest(plan: ExperimentPlan, manifest) -> list[BerRecord]:
    bits_per_point = plan.frames_per_point * plan.frame.data_bits_per_frame
    records = []
    for s_i, d_i, snr_i, v_i, label in plan.point_keys():
        point = manifest["groups"][f"{snr_i},{v_i}"]["points"][f"{s_i},{d_i}"]
        records.append(
            BerRecord(
                scheme=plan.schemes[s_i].value,
                detector=label,
                snr_db=plan.snr_db_grid[snr_i],
                speed_kmh=plan.speed_kmh_grid[v_i],
                bit_errors=point["bit_errors"],
                bits=bits_per_point,
                frame_errors=point["frame_errors"],
                frames=plan.frames_per_point,
                seed=plan.seed,
                elapsed_ms=point["detect_ms"],
                anomalies=point["anomalies"],
            )
        )
    return records


def write_csv(records: list[BerRecord], path: str) -> None:
    """Frozen column order; elapsed_ms is written as 0 to keep result files
    byte-reproducible (real timings are in the manifest)."""
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            f"{r.scheme},{r.detector},{r.snr_db:g},{r.speed_kmh:g},"
            f"{r.bit_errors},{r.bits},{r.frame_errors},{r.frames},"
            f"{r.ber:.12g},{r.fer:.12g},{r.seed},0"
        )
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def _load_manifest(path: str):
    if not os.path.exists(path):
        return None
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError):
        return None


def _save_manifest(path: str, manifest) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# Plan files and presets
# ---------------------------------------------------------------------------

_SCHEME_TOKENS = {s.value: s for s in Scheme}
_DETECTOR_TOKENS = {k.value: k for k in DetectorKind}

_PLAN_KEYS = {
    "m", "n", "delta_f_hz", "f_c_hz", "l_g", "l_max", "qam_order",
    "pilot_boost_db", "pilot_m_p", "pilot_n_p",
    "schemes", "detectors",
    "mf_gs_max_iters", "mf_gs_delta", "mf_gs_init",
    "snr_db", "speed_kmh", "frames_per_point", "seed",
    "csi", "interpolation", "est_threshold_sigma",
}

_PLAN_DEFAULTS = {
    "m": "64", "n": "64", "delta_f_hz": "15000", "f_c_hz": "4e9",
    "l_g": "16", "l_max": "3", "qam_order": "4", "pilot_boost_db": "0",
    "mf_gs_max_iters": "15", "mf_gs_init": "single_tap",
    "csi": "perfect", "interpolation": "spline",
    "frames_per_point": "2000", "seed": "1",
}


def parse_plan_text(text: str) -> ExperimentPlan:
    """Parse the flat key = value plan format; unknown keys are rejected."""
    kv = dict(_PLAN_DEFAULTS)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"plan line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _PLAN_KEYS:
            raise ValueError(f"plan line {lineno}: unknown key {key!r}")
        kv[key] = value
    for required in ("schemes", "detectors", "snr_db", "speed_kmh"):
        if required not in kv:
            raise ValueError(f"plan is missing required key {required!r}")
    return _plan_from_kv(kv)


def parse_plan_file(path: str) -> ExperimentPlan:
    with open(path) as fh:
        return parse_plan_text(fh.read())


def _plan_from_kv(kv: dict) -> ExperimentPlan:
    m, n = int(kv["m"]), int(kv["n"])
    l_g, l_max = int(kv["l_g"]), int(kv["l_max"])
    boost = float(kv["pilot_boost_db"])
    pilot = default_pilot(m, n, l_g, l_max, boost_db=boost)
    if "pilot_m_p" in kv or "pilot_n_p" in kv:
        pilot = PilotConfig(
            m_p=int(kv.get("pilot_m_p", pilot.m_p)),
            n_p=int(kv.get("pilot_n_p", pilot.n_p)),
            amplitude=pilot.amplitude,
        )
    try:
        schemes = tuple(_SCHEME_TOKENS[tok] for tok in _split_tokens(kv["schemes"]))
    except KeyError as exc:
        raise ValueError(f"unknown scheme token {exc.args[0]!r}") from None
    qam_order = int(kv["qam_order"])
    frame = FrameConfig(
        M=m, N=n, delta_f=float(kv["delta_f_hz"]), f_c=float(kv["f_c_hz"]),
        L_G=l_g, l_max=l_max, scheme=schemes[0], qam_order=qam_order, pilot=pilot,
    )
    detectors = []
    for tok in _split_tokens(kv["detectors"]):
        if tok not in _DETECTOR_TOKENS:
            raise ValueError(f"unknown detector token {tok!r}")
        kind = _DETECTOR_TOKENS[tok]
        if kind is DetectorKind.MF_GS:
            delta = float(kv.get("mf_gs_delta", default_delta(qam_order)))
            detectors.append(
                EqualizerSpec(
                    kind=kind,
                    max_iters=int(kv["mf_gs_max_iters"]),
                    delta=delta,
                    init=GsInit(kv["mf_gs_init"]),
                )
            )
        else:
            detectors.append(EqualizerSpec(kind=kind))
    thr = kv.get("est_threshold_sigma")
    return ExperimentPlan(
        frame=frame,
        schemes=schemes,
        detectors=tuple(detectors),
        snr_db_grid=tuple(float(x) for x in _split_tokens(kv["snr_db"])),
        speed_kmh_grid=tuple(float(x) for x in _split_tokens(kv["speed_kmh"])),
        frames_per_point=int(kv["frames_per_point"]),
        seed=int(kv["seed"]),
        csi=kv["csi"],
        interpolation=kv["interpolation"],
        est_threshold_sigma=float(thr) if thr is not None else None,
    )


def _split_tokens(value: str) -> list[str]:
    toks = [tok.strip() for tok in value.split(",") if tok.strip()]
    if not toks:
        raise ValueError(f"empty list value {value!r}")
    return toks


def plan_to_text(plan: ExperimentPlan) -> str:
    """Canonical plan serialization (also the hash input)."""
    f = plan.frame
    lines = [
        f"m = {f.M}",
        f"n = {f.N}",
        f"delta_f_hz = {f.delta_f:g}",
        f"f_c_hz = {f.f_c:g}",
        f"l_g = {f.L_G}",
        f"l_max = {f.l_max}",
        f"qam_order = {f.qam_order}",
        f"pilot_m_p = {f.pilot.m_p}",
        f"pilot_n_p = {f.pilot.n_p}",
        f"pilot_boost_db = {20.0 * np.log10(f.pilot.amplitude / np.sqrt(f.N)):g}",
        "schemes = " + ",".join(s.value for s in plan.schemes),
        "detectors = " + ",".join(d.kind.value for d in plan.detectors),
    ]
    for d in plan.detectors:
        if d.kind is DetectorKind.MF_GS:
            lines += [
                f"mf_gs_max_iters = {d.max_iters}",
                f"mf_gs_delta = {d.delta:g}",
                f"mf_gs_init = {d.init.value}",
            ]
            break
    lines += [
        "snr_db = " + ",".join(f"{x:g}" for x in plan.snr_db_grid),
        "speed_kmh = " + ",".join(f"{x:g}" for x in plan.speed_kmh_grid),
        f"frames_per_point = {plan.frames_per_point}",
        f"seed = {plan.seed}",
        f"csi = {plan.csi}",
        f"interpolation = {plan.interpolation}",
    ]
    if plan.est_threshold_sigma is not None:
        lines.append(f"est_threshold_sigma = {plan.est_threshold_sigma:g}")
    return "\n".join(lines) + "\n"


PRESETS = {
    # Single-tap comparison of all schemes across speeds at 20 dB.
    "fig1-desk": {
        "schemes": "otfs,otsm,dct,sc,ofdm",
        "detectors": "single_tap",
        "snr_db": "20",
        "speed_kmh": "30,120,250,500",
    },
    # MMSE vs iterative detection across speeds at 20 dB.
    "fig2-desk": {
        "schemes": "otfs,otsm,dct,sc",
        "detectors": "block_mmse,mf_gs",
        "snr_db": "20",
        "speed_kmh": "30,120,250,500",
    },
    # SNR sweep at 500 km/h with the iterative detector.
    "fig3-desk": {
        "schemes": "otfs,otsm,dct,sc",
        "detectors": "mf_gs",
        "snr_db": "8,11,14,17,20",
        "speed_kmh": "500",
    },
}


def preset_plan(name: str, seed: int | None = None) -> ExperimentPlan:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    kv = dict(_PLAN_DEFAULTS)
    kv.update(PRESETS[name])
    if seed is not None:
        kv["seed"] = str(seed)
    return _plan_from_kv(kv)
