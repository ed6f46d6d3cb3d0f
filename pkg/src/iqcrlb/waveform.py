"""QAM alphabets, subcarrier allocations and CP-OFDM frame synthesis."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

SUPPORTED_ORDERS = (4, 16, 64, 256, 1024)


@dataclass(frozen=True)
class ModulationAlphabet:
    order: int
    points: np.ndarray = field(repr=False)

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))


def _gray_positions(n_bits: int) -> np.ndarray:
    # position of each bit pattern on a reflected-binary axis
    codes = np.arange(1 << n_bits)
    gray = codes ^ (codes >> 1)
    pos = np.empty_like(codes)
    pos[gray] = codes
    return pos


def qam_alphabet(order: int) -> ModulationAlphabet:
    """Gray-coded square QAM with unit average power.

    ``points[i]`` is the symbol carrying bit pattern ``i``; the upper half of
    the bits selects the in-phase level, the lower half the quadrature level.
    """
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported QAM order {order}; expected one of {SUPPORTED_ORDERS}")
    side = int(round(np.sqrt(order)))
    half_bits = int(np.log2(side))
    levels = 2.0 * np.arange(side) - (side - 1)
    pos = _gray_positions(half_bits)
    idx = np.arange(order)
    i_level = levels[pos[idx >> half_bits]]
    q_level = levels[pos[idx & (side - 1)]]
    points = (i_level + 1j * q_level) / np.sqrt(2.0 * (order - 1) / 3.0)
    points.flags.writeable = False
    return ModulationAlphabet(order=order, points=points)


def mirror_index(n_dft: int) -> np.ndarray:
    """Index map k -> (N - k) mod N, i.e. the permutation of the mirroring matrix."""
    return (-np.arange(n_dft)) % n_dft


@dataclass(frozen=True)
class AllocationPattern:
    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=np.int8)
        if mask.ndim != 1 or mask.size == 0:
            raise ValueError("allocation mask must be a non-empty 1-D vector")
        if np.any((mask != 0) & (mask != 1)):
            raise ValueError("allocation mask must be binary")
        mask = mask.copy()
        mask.flags.writeable = False
        object.__setattr__(self, "mask", mask)

    @property
    def n_dft(self) -> int:
        return self.mask.size

    @property
    def l_s(self) -> int:
        return int(self.mask.sum())

    @property
    def mirrored(self) -> np.ndarray:
        return self.mask[mirror_index(self.n_dft)]

    @property
    def sym_mask(self) -> np.ndarray:
        return self.mask * self.mirrored

    @property
    def asym_mask(self) -> np.ndarray:
        return self.mask * (1 - self.mirrored)

    def classify(self) -> Literal["asymmetric", "symmetric", "mixed", "empty"]:
        n_sym = int(self.sym_mask.sum())
        if self.l_s == 0:
            return "empty"
        if n_sym == 0:
            return "asymmetric"
        if n_sym == self.l_s:
            return "symmetric"
        return "mixed"


def make_allocation(kind: str, l_s: int | None = None, n_dft: int | None = None,
                    mask=None) -> AllocationPattern:
    """Build an allocation pattern.

    ``contiguous_low`` fills bins 1..l_s, ``symmetric_dc`` fills l_s/2 bins on
    each side of DC. Neither touches bin 0 (DC is its own mirror image).
    ``custom`` takes an explicit ``mask`` and may include DC.
    """
    if kind == "custom":
        if mask is None:
            raise ValueError("custom allocation requires a mask")
        return AllocationPattern(np.asarray(mask))
    if l_s is None or n_dft is None:
        raise ValueError(f"{kind} allocation requires l_s and n_dft")
    if n_dft < 1 or l_s < 1:
        raise ValueError("l_s and n_dft must be positive")
    out = np.zeros(n_dft, dtype=np.int8)
    if kind == "contiguous_low":
        if l_s > n_dft - 1:
            raise ValueError(f"contiguous_low needs l_s <= n_dft - 1, got l_s={l_s}, n_dft={n_dft}")
        out[1:l_s + 1] = 1
    elif kind == "symmetric_dc":
        if l_s % 2:
            raise ValueError("symmetric_dc needs an even l_s")
        half = l_s // 2
        if half > (n_dft - 1) // 2:
            raise ValueError(f"symmetric_dc with l_s={l_s} does not fit into n_dft={n_dft}")
        out[1:half + 1] = 1
        out[n_dft - half:] = 1
    else:
        raise ValueError(f"unknown allocation kind {kind!r}")
    return AllocationPattern(out)


@dataclass(frozen=True)
class OfdmConfig:
    n_dft: int
    l_cp: int = 0
    n_ofdm: int = 1
    sigma_d_sq: float = 1.0

    def __post_init__(self):
        if self.n_dft < 1:
            raise ValueError("n_dft must be positive")
        if not 0 <= self.l_cp < self.n_dft:
            raise ValueError("need 0 <= l_cp < n_dft")
        if self.n_ofdm < 1:
            raise ValueError("n_ofdm must be >= 1")
        if self.sigma_d_sq < 0:
            raise ValueError("sigma_d_sq must be non-negative")

    @property
    def n_sym(self) -> int:
        return self.l_cp + self.n_dft

    @property
    def n_samples(self) -> int:
        return self.n_ofdm * self.n_sym


@dataclass(frozen=True)
class TimeDomainFrame:
    samples: np.ndarray
    config: OfdmConfig

    def __post_init__(self):
        if self.samples.shape != (self.config.n_samples,):
            raise ValueError(
                f"frame has {self.samples.shape} samples, config expects {self.config.n_samples}")

    def symbols(self, drop_cp: bool = True) -> np.ndarray:
        """Per-symbol view, shape (n_ofdm, n_dft) or (n_ofdm, n_sym)."""
        blocks = self.samples.reshape(self.config.n_ofdm, self.config.n_sym)
        return blocks[:, self.config.l_cp:] if drop_cp else blocks


def draw_symbols(alloc: AllocationPattern, alphabet: ModulationAlphabet, sigma_d_sq: float,
                 rng: np.random.Generator, n_ofdm: int | None = None) -> np.ndarray:
    """Random data symbols with per-bin power sigma_d_sq / L_s on allocated bins.

    Returns shape (n_dft,) or, if ``n_ofdm`` is given, (n_ofdm, n_dft).
    """
    if alloc.l_s == 0:
        raise ValueError("allocation has no active subcarriers")
    shape = (alloc.n_dft,) if n_ofdm is None else (n_ofdm, alloc.n_dft)
    idx = rng.integers(0, alphabet.order, size=shape)
    scale = np.sqrt(sigma_d_sq / alloc.l_s)
    return alphabet.points[idx] * scale * alloc.mask


def ofdm_modulate(d, config: OfdmConfig) -> np.ndarray:
    """Unitary inverse DFT plus cyclic prefix; works on (..., n_dft) arrays."""
    d = np.asarray(d)
    if d.shape[-1] != config.n_dft:
        raise ValueError(f"expected {config.n_dft} bins, got {d.shape[-1]}")
    x = np.fft.ifft(d, axis=-1, norm="ortho")
    if config.l_cp:
        x = np.concatenate([x[..., -config.l_cp:], x], axis=-1)
    return x


def generate_frame(config: OfdmConfig, alloc: AllocationPattern, alphabet: ModulationAlphabet,
                   rng: np.random.Generator) -> TimeDomainFrame:
    if alloc.n_dft != config.n_dft:
        raise ValueError("allocation and config disagree on n_dft")
    d = draw_symbols(alloc, alphabet, config.sigma_d_sq, rng, n_ofdm=config.n_ofdm)
    return TimeDomainFrame(ofdm_modulate(d, config).reshape(-1), config)


def alphabet_kurtosis(alphabet: ModulationAlphabet) -> float:
    p = alphabet.points
    m2 = np.mean(np.abs(p) ** 2)
    m4 = np.mean(np.abs(p) ** 4)
    return float(m4 / m2 ** 2 - 2.0)


def predicted_kurtosis(order: int, l_s: int) -> float:
    """Normalized kurtosis of an OFDM sample built from ``l_s`` i.i.d. QAM symbols.

    Equals -(3/5)(M+1)/(M-1)/L_s for square M-QAM.
    """
    if l_s < 1:
        raise ValueError("l_s must be >= 1")
    return alphabet_kurtosis(qam_alphabet(order)) / l_s


def empirical_kurtosis(samples) -> float:
    """Sample estimate of E|x|^4 / (E|x|^2)^2 - 2."""
    x = np.asarray(samples).ravel()
    if x.size == 0:
        raise ValueError("empty input")
    p = np.abs(x) ** 2
    return float(np.mean(p ** 2) / np.mean(p) ** 2 - 2.0)
