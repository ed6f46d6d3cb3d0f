"""Second-order statistics of the received signal.

Two representations are provided: dense augmented matrices over the whole
frame (a small-size oracle) and per-bin spectral vectors, which hold the
eigenvalues of every CP-free covariance block in the unitary DFT basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import dft

from .channel import (circular_channel_matrix, frequency_response, linear_channel_matrix,
                      _as_taps)
from .impairment import ImbalanceParams, NoiseSpec
from .waveform import AllocationPattern, OfdmConfig, mirror_index

MAX_DENSE_SAMPLES = 2048


@dataclass(frozen=True)
class ModelSpec:
    config: OfdmConfig
    alloc: AllocationPattern
    h: np.ndarray = field(default_factory=lambda: np.ones(1, dtype=complex))
    noise: NoiseSpec = NoiseSpec()
    params: ImbalanceParams = ImbalanceParams(0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "h", _as_taps(self.h))
        if self.alloc.n_dft != self.config.n_dft:
            raise ValueError("allocation and config disagree on n_dft")
        if self.h.size > self.config.n_dft:
            raise ValueError("channel longer than the DFT size")

    @property
    def h_f(self) -> np.ndarray:
        return frequency_response(self.h, self.config.n_dft)


@dataclass(frozen=True)
class AugmentedCovariance:
    c: np.ndarray
    gamma: np.ndarray

    @property
    def n(self) -> int:
        return self.c.shape[0]

    def assembled(self) -> np.ndarray:
        return np.block([[self.c, self.gamma], [self.gamma.conj(), self.c.conj()]])


@dataclass(frozen=True)
class SpectralCovariances:
    sigma_s_f_sq: np.ndarray
    sigma_s_f_img_sq: np.ndarray
    sigma_r_f_sq: np.ndarray
    sigma_r_f_img_sq: np.ndarray
    gamma_r_f: np.ndarray
    k1: complex
    alpha: complex
    sigma_eta_s_sq: float
    sigma_eta_r_sq: float

    @property
    def k1_abs_sq(self) -> float:
        return abs(self.k1) ** 2

    @property
    def n_dft(self) -> int:
        return self.sigma_s_f_sq.size


def cov_data(alloc: AllocationPattern, sigma_d_sq: float) -> np.ndarray:
    """Diagonal of the per-symbol data covariance, (sigma_d^2 / L_s) psi."""
    if alloc.l_s == 0:
        raise ValueError("allocation has no active subcarriers")
    return sigma_d_sq / alloc.l_s * alloc.mask.astype(float)


def data_indices(config: OfdmConfig) -> np.ndarray:
    """Frame sample indices that survive CP removal."""
    starts = np.arange(config.n_ofdm) * config.n_sym + config.l_cp
    return (starts[:, None] + np.arange(config.n_dft)).ravel()


def cp_matrix(config: OfdmConfig) -> np.ndarray:
    n, l = config.n_dft, config.l_cp
    d = np.zeros((config.n_sym, n))
    d[:l, n - l:] = np.eye(l)
    d[l:, :] = np.eye(n)
    return d


def _resolve_drop_cp(config: OfdmConfig, drop_cp: bool | None) -> bool:
    # without a prefix there is nothing to keep: the zero-length-CP model is the circular one
    return config.l_cp == 0 if drop_cp is None else drop_cp


def cov_s_full(model: ModelSpec, drop_cp: bool | None = None) -> np.ndarray:
    """Dense covariance of the pre-imbalance signal s over the whole frame.

    With ``drop_cp`` each symbol is reduced to its CP-free part and the channel
    acts circularly (the CP absorbs the transient). Otherwise the full frame
    including prefixes passes a linear Toeplitz channel.
    """
    cfg = model.config
    drop = _resolve_drop_cp(cfg, drop_cp)
    n_total = cfg.n_ofdm * (cfg.n_dft if drop else cfg.n_sym)
    if n_total > MAX_DENSE_SAMPLES:
        raise MemoryError(f"dense path limited to {MAX_DENSE_SAMPLES} samples, model needs {n_total}")
    f = dft(cfg.n_dft, scale="sqrtn")
    c_xn = f.conj().T @ np.diag(cov_data(model.alloc, cfg.sigma_d_sq)) @ f
    eye_sym = np.eye(cfg.n_ofdm)
    if drop:
        hc = circular_channel_matrix(model.h, cfg.n_dft)
        c_check_s = np.kron(eye_sym, hc @ c_xn @ hc.conj().T)
    else:
        d_cp = cp_matrix(cfg)
        c_x = np.kron(eye_sym, d_cp @ c_xn @ d_cp.T)
        h = linear_channel_matrix(model.h, n_total)
        c_check_s = h @ c_x @ h.conj().T
    return c_check_s + model.noise.sigma_eta_s_sq * np.eye(n_total)


def cov_r_augmented_full(model: ModelSpec, drop_cp: bool | None = None) -> AugmentedCovariance:
    """Dense augmented covariance of the received signal r (oracle path, small frames only)."""
    c_s = cov_s_full(model, drop_cp)
    k1_sq = abs(model.params.k1) ** 2
    a = model.params.alpha
    n = c_s.shape[0]
    c = k1_sq * (c_s + abs(a) ** 2 * c_s.conj()) + model.noise.sigma_eta_r_sq * np.eye(n)
    gamma = 2.0 * a * k1_sq * c_s.real
    return AugmentedCovariance(c, gamma)


def spectral_covariances(model: ModelSpec) -> SpectralCovariances:
    """Per-bin variances and pseudo-variances of the CP-free received symbol, O(N_DFT)."""
    cfg = model.config
    mirror = mirror_index(cfg.n_dft)
    s_check = np.abs(model.h_f) ** 2 * cov_data(model.alloc, cfg.sigma_d_sq)
    s = s_check + model.noise.sigma_eta_s_sq
    s_img = s[mirror]
    k1 = model.params.k1
    a = model.params.alpha
    k1_sq = abs(k1) ** 2
    r = k1_sq * (s + abs(a) ** 2 * s_img) + model.noise.sigma_eta_r_sq
    r_img = r[mirror]
    gamma = a * k1_sq * (s + s_img)
    return SpectralCovariances(
        sigma_s_f_sq=s, sigma_s_f_img_sq=s_img, sigma_r_f_sq=r, sigma_r_f_img_sq=r_img,
        gamma_r_f=gamma, k1=k1, alpha=a,
        sigma_eta_s_sq=model.noise.sigma_eta_s_sq, sigma_eta_r_sq=model.noise.sigma_eta_r_sq)
