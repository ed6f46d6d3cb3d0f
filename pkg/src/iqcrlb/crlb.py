"""Fisher information and Cramer-Rao bounds for the imbalance parameter alpha.

Parameter vector is [K1, alpha]; K1 is a nuisance parameter. Three routes:

* ``fim_full``: dense 2N x 2N augmented covariance over the whole frame, O(N^3).
* ``fim_fast``: per-bin 2x2 matrices in the DFT eigenbasis, O(N_DFT).
* ``crlb_simplified`` and the two closed forms: small-imbalance operating point
  |K1| = 1, alpha = 0 where the FIM becomes diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .covariance import ModelSpec, SpectralCovariances, cov_s_full, spectral_covariances
from .impairment import to_db

Path = Literal["full", "fast", "simplified", "closed"]

# relative determinant below which a per-bin or dense covariance counts as singular
SINGULAR_RTOL = 1e-12


class SingularCovarianceError(np.linalg.LinAlgError):
    def __init__(self, cond: float):
        super().__init__(f"augmented covariance is singular (condition number {cond:.3g}); "
                         "alpha is exactly identifiable and the bound is zero")
        self.cond = cond


@dataclass(frozen=True)
class Fim2x2:
    j: np.ndarray
    path: Path
    singular: bool = False

    @property
    def j11(self) -> float:
        return float(self.j[0, 0].real)

    @property
    def j22(self) -> float:
        return float(self.j[1, 1].real)

    @property
    def j12(self) -> complex:
        return complex(self.j[0, 1])


@dataclass(frozen=True)
class CrlbResult:
    var_alpha: float
    path: Path
    fim: Fim2x2 | None = None
    zero_bound: bool = False

    @property
    def var_db(self) -> float:
        return to_db(self.var_alpha)


def _derivatives(c_s, c_s_img, s_sum, k1: complex, a: complex):
    """Blocks (NW, NE, SW, SE) of dC/dK1, dC/dK1*, dC/dalpha, dC/dalpha*.

    ``c_s``/``c_s_img`` are C_s and C_s* (or their eigenvalues), ``s_sum`` is
    2 Re{C_s}. Works for dense matrices and for per-bin vectors alike.
    """
    zero = np.zeros_like(s_sum)
    k1_sq = abs(k1) ** 2
    a_sq = abs(a) ** 2
    base = (c_s + a_sq * c_s_img, a * s_sum, np.conj(a) * s_sum, a_sq * c_s + c_s_img)
    d_k1 = tuple(np.conj(k1) * b for b in base)
    d_k1c = tuple(k1 * b for b in base)
    d_a = (k1_sq * np.conj(a) * c_s_img, k1_sq * s_sum, zero, k1_sq * np.conj(a) * c_s)
    d_ac = (k1_sq * a * c_s_img, zero, k1_sq * s_sum, k1_sq * a * c_s)
    return d_k1, d_k1c, d_a, d_ac


def fim_full(model: ModelSpec, drop_cp: bool | None = None) -> Fim2x2:
    """Classical 2x2 FIM from the dense augmented covariance of the whole frame."""
    c_s = cov_s_full(model, drop_cp)
    n = c_s.shape[0]
    k1 = model.params.k1
    a = model.params.alpha
    k1_sq = abs(k1) ** 2
    eye = np.eye(n)
    c = k1_sq * (c_s + abs(a) ** 2 * c_s.conj()) + model.noise.sigma_eta_r_sq * eye
    g = 2.0 * a * k1_sq * c_s.real
    c_aug = np.block([[c, g], [g.conj(), c.conj()]])
    cond = np.linalg.cond(c_aug)
    if not np.isfinite(cond) or cond > 1.0 / SINGULAR_RTOL:
        raise SingularCovarianceError(cond)
    c_inv = np.linalg.inv(c_aug)

    d_k1, d_k1c, d_a, d_ac = _derivatives(c_s, c_s.conj(), 2.0 * c_s.real, k1, a)
    blocks = lambda d: np.block([[d[0], d[1]], [d[2], d[3]]])
    left = [c_inv @ blocks(d_k1), c_inv @ blocks(d_a)]
    right = [c_inv @ blocks(d_k1c), c_inv @ blocks(d_ac)]
    j = np.empty((2, 2), dtype=complex)
    for k in range(2):
        for l in range(2):
            # tr(A B) = sum(A * B^T)
            j[k, l] = 0.5 * np.sum(left[k] * right[l].T)
    return Fim2x2(j, "full")


def _inv2(a, b, c, d):
    det = a * d - b * c
    return d / det, -b / det, -c / det, a / det


def _mul2(x, y):
    return (x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3],
            x[2] * y[0] + x[3] * y[2], x[2] * y[1] + x[3] * y[3])


def fim_fast(spectral: SpectralCovariances, n_ofdm: int) -> Fim2x2:
    """2x2 FIM from per-bin 2x2 augmented matrices; linear in N_DFT.

    Every covariance and derivative block is diagonal in the unitary DFT basis,
    so the trace over the augmented 2N_DFT space splits into a sum of 2x2
    traces, one per bin. Bins carrying no power are skipped. A bin whose 2x2
    matrix is singular but non-zero makes alpha exactly identifiable; the
    returned FIM is then flagged ``singular``.
    """
    sp = spectral
    r, r_img, g = sp.sigma_r_f_sq, sp.sigma_r_f_img_sq, sp.gamma_r_f
    det = r * r_img - np.abs(g) ** 2
    scale = np.maximum(r * r_img, np.finfo(float).tiny)
    power = r + r_img
    active = power > 0
    singular_bins = active & (det <= SINGULAR_RTOL * scale)
    use = active & ~singular_bins

    s, s_img = sp.sigma_s_f_sq[use], sp.sigma_s_f_img_sq[use]
    c_inv = _inv2(r[use], g[use], np.conj(g[use]), r_img[use])
    d_k1, d_k1c, d_a, d_ac = _derivatives(s, s_img, s + s_img, sp.k1, sp.alpha)
    left = [_mul2(c_inv, d_k1), _mul2(c_inv, d_a)]
    right = [_mul2(c_inv, d_k1c), _mul2(c_inv, d_ac)]
    j = np.empty((2, 2), dtype=complex)
    for k in range(2):
        for l in range(2):
            x, y = left[k], right[l]
            tr = x[0] * y[0] + x[1] * y[2] + x[2] * y[1] + x[3] * y[3]
            j[k, l] = 0.5 * n_ofdm * np.sum(tr)
    return Fim2x2(j, "fast", singular=bool(np.any(singular_bins)))


def crlb_alpha(fim: Fim2x2) -> CrlbResult:
    """Bound on Var(alpha_hat) with K1 as nuisance: J11 / (J11 J22 - |J12|^2)."""
    if fim.singular:
        return CrlbResult(0.0, fim.path, fim, zero_bound=True)
    j11, j22, j12 = fim.j11, fim.j22, fim.j12
    det = j11 * j22 - abs(j12) ** 2
    if abs(j12) ** 2 > j11 * j22 * (1 + 1e-10) or det <= 0:
        raise np.linalg.LinAlgError(
            f"FIM is not positive definite (J11={j11:.4g}, J22={j22:.4g}, |J12|^2={abs(j12)**2:.4g})")
    return CrlbResult(j11 / det, fim.path, fim)


def crlb_exact(model: ModelSpec) -> CrlbResult:
    """Bound at the model's actual imbalance via the per-bin route."""
    return crlb_alpha(fim_fast(spectral_covariances(model), model.config.n_ofdm))


def crlb_simplified(spectral: SpectralCovariances, n_ofdm: int) -> CrlbResult:
    """Small-imbalance bound (2 / N_OFDM) / sum_n (s_n + s_img_n)^2 / (r_n r_img_n).

    The receive variances are taken at |K1| = 1, alpha = 0, i.e. s + sigma_eta_r^2.
    """
    s, s_img = spectral.sigma_s_f_sq, spectral.sigma_s_f_img_sq
    num = (s + s_img) ** 2
    den = (s + spectral.sigma_eta_r_sq) * (s_img + spectral.sigma_eta_r_sq)
    info = num > 0
    if np.any(info & (den <= SINGULAR_RTOL * num)):
        return CrlbResult(0.0, "simplified", zero_bound=True)
    total = np.sum(num[info] / den[info])
    if total == 0:
        raise ValueError("model carries no signal power")
    return CrlbResult(2.0 / (n_ofdm * total), "simplified")


def crlb_symmetric_closed(l_s: int, n_dft: int, n_ofdm: int, xi_r: float) -> float:
    """Symmetric allocation, flat channel, no pre-imbalance noise; ``xi_r`` may be inf."""
    inv = 0.0 if np.isinf(xi_r) else 1.0 / xi_r
    return (1.0 + inv * l_s / n_dft) ** 2 / (2.0 * l_s * n_ofdm)


def crlb_asymmetric_closed(l_s: int, n_dft: int, n_ofdm: int, xi_r: float) -> float:
    """Asymmetric allocation, flat channel, no pre-imbalance noise; zero for ``xi_r`` = inf."""
    inv = 0.0 if np.isinf(xi_r) else 1.0 / xi_r
    return inv / (n_ofdm * n_dft) * (1.0 + inv * l_s / n_dft)


def signal_power_r(model: ModelSpec) -> float:
    """Per-sample power of the imbalanced signal component, excluding post-imbalance noise.

    sigma_d^2 / N_DFT scaled by |K1|^2 (1 + |alpha|^2); this is the signal
    power that makes the closed forms coincide with ``crlb_simplified``
    (which fixes |K1| = 1, alpha = 0).
    """
    p = model.params
    return model.config.sigma_d_sq / model.config.n_dft * abs(p.k1) ** 2 * (1 + abs(p.alpha) ** 2)


def post_imbalance_snr(model: ModelSpec, operating_point: bool = True) -> float:
    """xi_r = sigma_r^2 / sigma_eta_r^2; with ``operating_point`` the imbalance factor is 1."""
    if operating_point:
        sig = model.config.sigma_d_sq / model.config.n_dft
    else:
        sig = signal_power_r(model)
    noise = model.noise.sigma_eta_r_sq
    return np.inf if noise == 0 else sig / noise
