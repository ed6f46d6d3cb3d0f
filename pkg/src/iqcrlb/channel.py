"""Tapped-delay-line channels: realization, power normalization, filtering, frequency response."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.linalg import circulant, toeplitz
from scipy.signal import lfilter

from .waveform import AllocationPattern, TimeDomainFrame

FADING_KINDS = ("rayleigh", "fixed")


@dataclass(frozen=True)
class Tap:
    delay: float  # seconds
    power_db: float
    fading: str = "rayleigh"


@dataclass(frozen=True)
class DelayProfile:
    taps: tuple[Tap, ...]
    name: str = "custom"

    def __post_init__(self):
        if not self.taps:
            raise ValueError("delay profile needs at least one tap")
        delays = np.array([t.delay for t in self.taps])
        if np.any(delays < 0) or np.any(np.diff(delays) <= 0):
            raise ValueError("tap delays must be non-negative and strictly increasing")
        for t in self.taps:
            if t.fading not in FADING_KINDS:
                raise ValueError(f"unknown fading kind {t.fading!r}")


def parse_profile(text: str, name: str = "custom") -> DelayProfile:
    """Parse a ``delay_ns, power_db, fading`` table; ``#`` lines are comments."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.DictReader(io.StringIO("\n".join(lines)), skipinitialspace=True)
    taps = []
    for row in reader:
        row = {k.strip(): v.strip() for k, v in row.items()}
        taps.append(Tap(float(row["delay_ns"]) * 1e-9, float(row["power_db"]),
                        row.get("fading", "rayleigh") or "rayleigh"))
    return DelayProfile(tuple(taps), name=name)


def load_profile(name_or_path: str | Path) -> DelayProfile:
    if str(name_or_path).lower() == "tdlb100":
        text = resources.files("iqcrlb").joinpath("data/tdlb100.csv").read_text()
        return parse_profile(text, name="tdlb100")
    path = Path(name_or_path)
    return parse_profile(path.read_text(), name=path.stem)


def exponential_profile(n_taps: int, decay_db_per_tap: float = 3.0, spacing: float = 1.0,
                        name: str = "exponential") -> DelayProfile:
    """Synthetic exponential power-delay profile; ``spacing`` is the tap distance in seconds."""
    taps = tuple(Tap(i * spacing, -decay_db_per_tap * i) for i in range(n_taps))
    return DelayProfile(taps, name=name)


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray
    sample_rate: float | None = None

    @property
    def n_taps(self) -> int:
        return self.h.size


def _as_taps(h) -> np.ndarray:
    if isinstance(h, ChannelRealization):
        h = h.h
    h = np.atleast_1d(np.asarray(h, dtype=complex))
    if h.ndim != 1 or h.size == 0:
        raise ValueError("channel must be a non-empty 1-D tap vector")
    return h


def realize_tdl(profile: DelayProfile, sample_rate: float,
                rng: np.random.Generator) -> ChannelRealization:
    """Draw one realization; delays are rounded to the nearest sample and colliding taps add."""
    if sample_rate <= 0:
        raise ValueError("sample_rate must be positive")
    idx = np.array([int(round(t.delay * sample_rate)) for t in profile.taps])
    h = np.zeros(idx.max() + 1, dtype=complex)
    for k, tap in zip(idx, profile.taps):
        amp = np.sqrt(10.0 ** (tap.power_db / 10.0))
        if tap.fading == "rayleigh":
            g = (rng.standard_normal() + 1j * rng.standard_normal()) / np.sqrt(2.0)
        else:
            g = 1.0
        h[k] += amp * g
    return ChannelRealization(h, sample_rate)


def frequency_response(h, n_dft: int) -> np.ndarray:
    """Per-bin transfer values.

    Plain (non-unitary) DFT of the zero-padded taps: these are exactly the
    eigenvalues of the circular channel matrix in the unitary DFT basis.
    """
    h = _as_taps(h)
    if h.size > n_dft:
        raise ValueError(f"{h.size} taps do not fit into {n_dft} bins")
    return np.fft.fft(h, n_dft)


def circular_channel_matrix(h, n_dft: int) -> np.ndarray:
    h = _as_taps(h)
    col = np.zeros(n_dft, dtype=complex)
    col[:h.size] = h
    return circulant(col)


def linear_channel_matrix(h, n: int) -> np.ndarray:
    """N x N lower-triangular Toeplitz convolution matrix."""
    h = _as_taps(h)
    col = np.zeros(n, dtype=complex)
    col[:min(n, h.size)] = h[:n]
    return toeplitz(col, np.zeros(n, dtype=complex))


def normalize_power(h, alloc: AllocationPattern) -> ChannelRealization:
    """Scale h so that the allocated-band power gain sum(|H_f|^2 psi) / L_s is exactly one."""
    rate = h.sample_rate if isinstance(h, ChannelRealization) else None
    taps = _as_taps(h)
    if not np.any(taps):
        raise ValueError("cannot normalize an all-zero channel")
    if alloc.l_s == 0:
        raise ValueError("allocation has no active subcarriers")
    gain = np.sum(np.abs(frequency_response(taps, alloc.n_dft)) ** 2 * alloc.mask) / alloc.l_s
    if gain == 0:
        raise ValueError("channel has no gain on the allocated band")
    return ChannelRealization(taps / np.sqrt(gain), rate)


def apply_linear(h, frame):
    """Causal linear convolution truncated to the frame length."""
    taps = _as_taps(h)
    if isinstance(frame, TimeDomainFrame):
        cfg = frame.config
        if cfg.l_cp > 0 and taps.size >= cfg.l_cp:
            raise ValueError(f"channel with {taps.size} taps needs Q < L_CP={cfg.l_cp}")
        return TimeDomainFrame(lfilter(taps, [1.0], frame.samples), cfg)
    return lfilter(taps, [1.0], np.asarray(frame, dtype=complex))
