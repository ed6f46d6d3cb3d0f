"""Blind moment-based estimation of alpha and symmetric-subcarrier pre-filtering."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .waveform import AllocationPattern, OfdmConfig, TimeDomainFrame

Policy = Literal["plain", "prefiltered"]
POLICIES: tuple[Policy, ...] = ("plain", "prefiltered")


class EmptySignalWarning(UserWarning):
    """Pre-filtering removed every data-bearing bin."""


@dataclass(frozen=True)
class EstimationReport:
    alpha_hat: complex
    n_samples_used: int
    prefiltered: bool = False


def mbe_estimate(frame) -> EstimationReport:
    """Circularity-restoring moment estimator.

    With c2 = mean(r^2) and p = mean(|r|^2),
    alpha_hat = c2 / (p + sqrt(p^2 - |c2|^2)), which is exact for
    r = K1 s + K2 s* with proper s in the population limit.
    """
    r = frame.samples if isinstance(frame, TimeDomainFrame) else np.asarray(frame)
    r = r.ravel()
    if r.size < 2:
        raise ValueError("need at least two samples")
    p = float(np.mean(np.abs(r) ** 2))
    if p == 0:
        raise ValueError("all-zero input")
    c2 = complex(np.mean(r * r))
    root = np.sqrt(max(p * p - abs(c2) ** 2, 0.0))
    return EstimationReport(c2 / (p + root), r.size)


def prefilter_symmetric(frame, alloc: AllocationPattern, config: OfdmConfig | None = None) -> np.ndarray:
    """Zero the symmetrically allocated bins of every CP-free symbol.

    Returns the concatenated filtered symbols (length n_ofdm * n_dft); the
    prefix samples are discarded.
    """
    if isinstance(frame, TimeDomainFrame):
        config = config or frame.config
    if config is None:
        raise ValueError("config is required for raw sample arrays")
    if alloc.n_dft != config.n_dft:
        raise ValueError("allocation and config disagree on n_dft")
    if alloc.l_s and np.array_equal(alloc.sym_mask, alloc.mask):
        warnings.warn("allocation is purely symmetric; pre-filtering leaves no data-bearing bins",
                      EmptySignalWarning, stacklevel=2)
    blocks = strip_cp(frame, config).reshape(config.n_ofdm, config.n_dft)
    spec = np.fft.fft(blocks, axis=-1, norm="ortho")
    spec[:, alloc.sym_mask.astype(bool)] = 0.0
    return np.fft.ifft(spec, axis=-1, norm="ortho").ravel()


def strip_cp(frame, config: OfdmConfig | None = None) -> np.ndarray:
    """CP-free samples of every symbol, concatenated.

    The prefix repeats the symbol tail; keeping it breaks the per-symbol
    cancellation of sum(s^2) that makes the moment estimator exact for
    asymmetric allocations.
    """
    if isinstance(frame, TimeDomainFrame):
        config = config or frame.config
        samples = frame.samples
    else:
        samples = np.asarray(frame)
        if config is None:
            raise ValueError("config is required for raw sample arrays")
    if samples.size != config.n_samples:
        raise ValueError(f"frame has {samples.size} samples, config expects {config.n_samples}")
    return samples.reshape(config.n_ofdm, config.n_sym)[:, config.l_cp:].ravel()


def estimate_with_policy(frame, alloc: AllocationPattern, config: OfdmConfig | None = None,
                         policy: Policy = "plain") -> EstimationReport:
    if policy == "plain":
        return mbe_estimate(strip_cp(frame, config))
    if policy == "prefiltered":
        rep = mbe_estimate(prefilter_symmetric(frame, alloc, config))
        return EstimationReport(rep.alpha_hat, rep.n_samples_used, prefiltered=True)
    raise ValueError(f"unknown policy {policy!r}")
