"""Quick oracle-equivalence and closed-form identity checks, runnable from the CLI."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import ModelSpec, cov_s_full, data_indices, spectral_covariances
from .crlb import (crlb_asymmetric_closed, crlb_simplified, crlb_symmetric_closed,
                   fim_fast, fim_full)
from .impairment import NoiseSpec, from_alpha, from_target_ilr
from .waveform import AllocationPattern, OfdmConfig, make_allocation


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def random_model(rng: np.random.Generator, n_dft: int, n_ofdm: int = 2, l_cp: int = 0,
                 ilr_db: float | None = None, max_taps: int = 4) -> ModelSpec:
    """Random channel, allocation, noise and imbalance; used by the self-test and the test suite."""
    mask = rng.integers(0, 2, n_dft)
    if not mask.any():
        mask[rng.integers(n_dft)] = 1
    q_max = max_taps if l_cp == 0 else min(max_taps, l_cp - 1)
    q = int(rng.integers(1, q_max + 1))
    h = (rng.standard_normal(q) + 1j * rng.standard_normal(q)) / np.sqrt(2 * q)
    noise = NoiseSpec(float(10 ** rng.uniform(-3, -1)), float(10 ** rng.uniform(-3, -1)))
    ilr = rng.uniform(-40, -10) if ilr_db is None else ilr_db
    cfg = OfdmConfig(n_dft, l_cp, n_ofdm, float(rng.uniform(0.5, 2.0)))
    return ModelSpec(cfg, AllocationPattern(mask), h, noise, from_target_ilr(ilr, rng))


def check_fast_vs_full(n_models: int = 30, seed: int = 1) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n_models):
        m = random_model(rng, (8, 16, 32)[i % 3])
        a = fim_full(m).j
        b = fim_fast(spectral_covariances(m), m.config.n_ofdm).j
        worst = max(worst, float(np.max(np.abs(a - b) / np.abs(a))))
    return CheckResult("fast_vs_full", worst < 1e-8, f"max relative entry error {worst:.2e}")


def closed_form_models(rng: np.random.Generator, symmetric: bool):
    n_dft = int(rng.choice([16, 32, 64, 128]))
    half = int(rng.integers(1, n_dft // 2 - 1))
    if symmetric:
        alloc = make_allocation("symmetric_dc", 2 * half, n_dft)
    else:
        alloc = make_allocation("contiguous_low", half, n_dft)
    cfg = OfdmConfig(n_dft, 0, int(rng.integers(1, 20)), float(rng.uniform(0.5, 4.0)))
    noise = NoiseSpec(0.0, float(10 ** rng.uniform(-4, -1)))
    return ModelSpec(cfg, alloc, np.ones(1), noise, from_alpha(0.01 * np.exp(2j * np.pi * rng.random())))


def check_closed_forms(n_draws: int = 50, seed: int = 2, sigma_r_scale: float = 1.0) -> CheckResult:
    """Closed forms vs the simplified bound; ``sigma_r_scale`` perturbs the SNR convention."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for symmetric in (True, False):
        closed = crlb_symmetric_closed if symmetric else crlb_asymmetric_closed
        for _ in range(n_draws):
            m = closed_form_models(rng, symmetric)
            cfg = m.config
            sigma_r = sigma_r_scale * cfg.sigma_d_sq / cfg.n_dft
            xi_r = sigma_r / m.noise.sigma_eta_r_sq
            ref = crlb_simplified(spectral_covariances(m), cfg.n_ofdm).var_alpha
            val = closed(m.alloc.l_s, cfg.n_dft, cfg.n_ofdm, xi_r)
            worst = max(worst, abs(val - ref) / ref)
    return CheckResult("closed_forms", worst < 1e-10, f"max relative error {worst:.2e}")


def check_zero_noise_symmetric() -> CheckResult:
    worst = 0.0
    for n_dft, l_s, n_ofdm in ((16, 8, 3), (64, 20, 10), (4096, 3300, 10)):
        m = ModelSpec(OfdmConfig(n_dft, 0, n_ofdm), make_allocation("symmetric_dc", l_s, n_dft))
        val = crlb_simplified(spectral_covariances(m), n_ofdm).var_alpha
        worst = max(worst, abs(val * 2 * l_s * n_ofdm - 1.0))
    return CheckResult("zero_noise_symmetric", worst < 1e-12, f"max relative error {worst:.2e}")


def check_cp_submatrix(n_models: int = 5, seed: int = 3) -> CheckResult:
    """Dropping CP rows/columns of the with-CP covariance gives the circular per-symbol model."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_models):
        m = random_model(rng, 16, n_ofdm=2, l_cp=4)
        keep = cov_s_full(m, drop_cp=False)
        idx = data_indices(m.config)
        worst = max(worst, float(np.max(np.abs(keep[np.ix_(idx, idx)] - cov_s_full(m, drop_cp=True)))))
    return CheckResult("cp_submatrix", worst < 1e-12, f"max abs difference {worst:.2e}")


def run_all(sigma_r_scale: float = 1.0) -> list[CheckResult]:
    return [
        check_fast_vs_full(),
        check_closed_forms(sigma_r_scale=sigma_r_scale),
        check_zero_noise_symmetric(),
        check_cp_submatrix(),
    ]
