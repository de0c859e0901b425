"""Baseband simulation of unitary-precoded single-carrier waveforms.

Modulation/demodulation chains for OTFS, OTSM, DCT-precoded and plain SC
waveforms plus an OFDM baseline, a delay-Doppler multipath channel with an
EVA profile, embedded-pilot channel estimation, three block equalizers and
a seeded Monte-Carlo BER benchmark harness.
"""

__version__ = "0.1.0"

from .bench import BerRecord, ExperimentPlan, preset_plan, run_plan, run_point, snr_to_noise_var
from .chanest import EstimatedChannel, PilotObservations, estimate_taps, interpolate, reconstruct_blocks
from .channel import (
    BlockChannelMatrix,
    DelayTimeChannel,
    PathSet,
    apply_channel,
    block_matrices,
    discrete_channel,
    gen_paths_eva,
    max_doppler_hz,
)
from .config import FrameConfig, PilotConfig, Scheme, default_pilot
from .detect import (
    DegenerateEqualizationError,
    DetectionResult,
    DetectorKind,
    EqualizerSpec,
    GsInit,
    block_mmse,
    detect,
    mf_gs,
    single_tap,
)
from .modem import (
    CellRole,
    SymbolGrid,
    build_frame,
    demodulate,
    modulate,
    multicarrier_modulate,
    qam_map,
    qam_slice,
    usc_demodulate,
    usc_modulate,
)
from .transforms import UnitaryKind, UnitaryMatrix, build_unitary, deinterleave, interleave, precode_time
