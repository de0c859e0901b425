"""Frame, scheme and pilot configuration."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .transforms import UnitaryKind, build_unitary


class Scheme(enum.Enum):
    """Modulation scheme, mapping to the (U_F, U_T) precoder pair."""

    OTFS = "otfs"
    OTSM = "otsm"
    DCT_USC = "dct"
    SC = "sc"
    OFDM = "ofdm"

    @property
    def freq_precoder(self) -> UnitaryKind:
        return UnitaryKind.IDENTITY if self is Scheme.OFDM else UnitaryKind.DFT

    @property
    def time_precoder(self) -> UnitaryKind:
        return _TIME_PRECODER[self]

    @property
    def is_usc(self) -> bool:
        """True when the frequency precoder is the DFT (single-carrier family)."""
        return self is not Scheme.OFDM


_TIME_PRECODER = {
    Scheme.OTFS: UnitaryKind.IDFT,
    Scheme.OTSM: UnitaryKind.WHT,
    Scheme.DCT_USC: UnitaryKind.DCT,
    Scheme.SC: UnitaryKind.IDENTITY,
    Scheme.OFDM: UnitaryKind.IDENTITY,
}

QAM_ORDERS = (4, 16, 64)


@dataclass(frozen=True)
class PilotConfig:
    """Embedded pilot placement and amplitude.

    m_p: delay row of the pilot inside the guard region.
    n_p: precoder-row index spreading the pilot across blocks.
    amplitude: |x_p|; the pilot symbol is real positive.
    """

    m_p: int
    n_p: int
    amplitude: float


def default_pilot(m: int, n: int, l_g: int, l_max: int, boost_db: float = 0.0) -> PilotConfig:
    """Pilot at the first protected guard row with |x_p| = sqrt(N) * boost."""
    return PilotConfig(
        m_p=m - l_g + l_max,
        n_p=0,
        amplitude=float(np.sqrt(n) * 10.0 ** (boost_db / 20.0)),
    )


@dataclass(frozen=True)
class FrameConfig:
    """All frame dimensions, scheme selection, pilot layout and physics.

    M delay bins per block, N blocks; critically sampled at M*delta_f with
    symbol time T = 1/delta_f.  The guard occupies the last L_G delay rows
    of the symbol grid, hosting the pilot and the zero tail that suppresses
    inter-block interference.
    """

    M: int
    N: int
    delta_f: float
    f_c: float
    L_G: int
    l_max: int
    scheme: Scheme
    qam_order: int = 4
    pilot: PilotConfig = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ValueError("M and N must be positive")
        if self.delta_f <= 0:
            raise ValueError("delta_f must be positive")
        if self.l_max < 0:
            raise ValueError("l_max must be nonnegative")
        if self.L_G < 2 * self.l_max + 1:
            raise ValueError(
                f"guard length L_G={self.L_G} must be >= 2*l_max+1={2 * self.l_max + 1}"
            )
        if self.M <= self.L_G:
            raise ValueError(f"M={self.M} must exceed the guard length L_G={self.L_G}")
        if self.qam_order not in QAM_ORDERS:
            raise ValueError(f"qam_order must be one of {QAM_ORDERS}")
        if self.scheme.time_precoder is UnitaryKind.WHT and self.N & (self.N - 1):
            raise ValueError(f"scheme {self.scheme.value} requires N to be a power of 2")
        if self.pilot is None:
            object.__setattr__(
                self, "pilot", default_pilot(self.M, self.N, self.L_G, self.l_max)
            )
        p = self.pilot
        if not (self.M - self.L_G + self.l_max <= p.m_p <= self.M - 1 - self.l_max):
            raise ValueError(
                f"pilot row m_p={p.m_p} outside "
                f"[{self.M - self.L_G + self.l_max}, {self.M - 1 - self.l_max}]"
            )
        if not 0 <= p.n_p < self.N:
            raise ValueError(f"pilot precoder row n_p={p.n_p} outside [0, {self.N})")
        if p.amplitude <= 0:
            raise ValueError("pilot amplitude must be positive")

    @property
    def sample_rate(self) -> float:
        return self.M * self.delta_f

    @property
    def symbol_time(self) -> float:
        return 1.0 / self.delta_f

    @property
    def frame_samples(self) -> int:
        return self.M * self.N

    @property
    def n_data_cells(self) -> int:
        return (self.M - self.L_G) * self.N

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.qam_order))

    @property
    def data_bits_per_frame(self) -> int:
        return self.n_data_cells * self.bits_per_symbol

    @property
    def data_cell_fraction(self) -> float:
        """Spectral-efficiency accounting: data cells over the full grid."""
        return self.n_data_cells / self.frame_samples

    def with_scheme(self, scheme: Scheme) -> "FrameConfig":
        return replace(self, scheme=scheme)

    def pilot_row_values(self) -> np.ndarray:
        """Per-block transmitted pilot samples x_p * U_T[n_p, n]."""
        u_t = build_unitary(self.scheme.time_precoder, self.N)
        return self.pilot.amplitude * u_t.entries[self.pilot.n_p, :]

    def supports_pilot_estimation(self) -> bool:
        """True when every per-block pilot sample is nonzero (estimation divides by it)."""
        return bool(np.min(np.abs(self.pilot_row_values())) > 1e-12)
