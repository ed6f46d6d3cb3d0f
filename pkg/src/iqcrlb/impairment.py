"""Receiver I/Q imbalance model, white noise, compensation and image-leakage metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .waveform import TimeDomainFrame

DB_FLOOR = -300.0


@dataclass(frozen=True)
class ImbalanceParams:
    """Frequency-independent imbalance with gain mismatch ``epsilon`` and phase mismatch ``phi`` (rad)."""

    epsilon: float
    phi: float

    @property
    def k1(self) -> complex:
        return complex(np.cos(self.phi / 2), -self.epsilon * np.sin(self.phi / 2))

    @property
    def k2(self) -> complex:
        return complex(self.epsilon * np.cos(self.phi / 2), np.sin(self.phi / 2))

    @property
    def alpha(self) -> complex:
        return self.k2 / self.k1.conjugate()

    @property
    def ilr_db(self) -> float:
        return to_db(abs(self.alpha) ** 2)


@dataclass(frozen=True)
class NoiseSpec:
    sigma_eta_s_sq: float = 0.0
    sigma_eta_r_sq: float = 0.0

    def __post_init__(self):
        if self.sigma_eta_s_sq < 0 or self.sigma_eta_r_sq < 0:
            raise ValueError("noise variances must be non-negative")


def to_db(x) -> float | np.ndarray:
    """10 log10 with zeros clamped to DB_FLOOR so reports stay numeric."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.where(x > 0, 10.0 * np.log10(np.where(x > 0, x, 1.0)), DB_FLOOR)
    out = np.maximum(out, DB_FLOOR)
    return float(out) if out.ndim == 0 else out


def from_gain_phase(epsilon: float, phi: float) -> ImbalanceParams:
    return ImbalanceParams(float(epsilon), float(phi))


def from_alpha(alpha: complex) -> ImbalanceParams:
    """Exact (epsilon, phi) realizing a given alpha with |alpha| < 1.

    Solving alpha * conj(K1) = K2 for the two real unknowns gives
    tan(phi) = 2 Im(alpha) / (1 - |alpha|^2) and
    epsilon = Re(alpha) cos(phi/2) / (cos(phi/2) + Im(alpha) sin(phi/2)).
    """
    alpha = complex(alpha)
    mag2 = abs(alpha) ** 2
    if mag2 >= 1.0:
        raise ValueError(f"|alpha| must be < 1 (image weaker than signal), got {abs(alpha):.3g}")
    phi = np.arctan2(2.0 * alpha.imag, 1.0 - mag2)
    c, s = np.cos(phi / 2), np.sin(phi / 2)
    eps = alpha.real * c / (c + alpha.imag * s)
    return ImbalanceParams(float(eps), float(phi))


def from_target_ilr(ilr_db: float, rng: np.random.Generator) -> ImbalanceParams:
    """Random imbalance with |alpha|^2 = ILR and arg(alpha) uniform on [0, 2 pi)."""
    mag = 10.0 ** (ilr_db / 20.0)
    if not mag < 1.0:
        raise ValueError(f"ILR of {ilr_db} dB is not realizable (needs ILR < 0 dB)")
    return from_alpha(mag * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi)))


def _map(frame, fn):
    if isinstance(frame, TimeDomainFrame):
        return TimeDomainFrame(fn(frame.samples), frame.config)
    return fn(np.asarray(frame, dtype=complex))


def apply_imbalance(frame, params: ImbalanceParams):
    k1, k2 = params.k1, params.k2
    return _map(frame, lambda s: k1 * s + k2 * np.conj(s))


def add_noise(frame, sigma_sq: float, rng: np.random.Generator):
    """Add circular white Gaussian noise with total complex variance ``sigma_sq``."""
    if sigma_sq < 0:
        raise ValueError("noise variance must be non-negative")
    if sigma_sq == 0:
        return frame

    def noisy(s):
        w = rng.standard_normal((2,) + s.shape)
        return s + np.sqrt(sigma_sq / 2.0) * (w[0] + 1j * w[1])

    return _map(frame, noisy)


def compensate(frame, alpha_hat: complex):
    return _map(frame, lambda r: r - alpha_hat * np.conj(r))


def residual_ilr_db(alpha: complex, alpha_hat: complex, exact: bool = True) -> float:
    """Image leakage left after compensating with ``alpha_hat``."""
    num = abs(alpha - alpha_hat) ** 2
    if exact:
        den = abs(1.0 - alpha_hat * np.conj(alpha)) ** 2
        return to_db(num / den)
    return to_db(num)
