"""Randomized benchmark runs: estimator MSE against averaged bounds over a sweep axis."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .channel import load_profile, normalize_power, realize_tdl
from .covariance import ModelSpec, spectral_covariances
from .crlb import crlb_alpha, crlb_simplified, fim_fast
from .estimators import estimate_with_policy
from .impairment import NoiseSpec, add_noise, apply_imbalance, from_target_ilr, to_db
from .channel import apply_linear
from .waveform import OfdmConfig, generate_frame, make_allocation, qam_alphabet

BOUNDS = ("exact", "flat", "simplified")
AXES = ("alloc", "snr-db", "ilr-db")
CSV_COLUMNS = ("sweep_value", "policy_or_bound", "mean_db", "stderr_db", "runs", "mean_linear")


@dataclass(frozen=True)
class RunConfig:
    """One Monte Carlo scenario.

    ``signal_power`` is the mean per-sample power of the transmitted time
    signal; the library's per-symbol data power is ``signal_power * n_dft``.
    Noise variances are absolute, so ``signal_power / sigma_eta_s_sq`` is the
    pre-imbalance SNR.
    """

    n_dft: int = 256
    l_cp: int = 18
    n_ofdm: int = 10
    signal_power: float = 1.0
    modulation: int = 1024
    alloc_kind: str = "contiguous_low"
    l_s: int = 120
    channel: str = "tdlb100"
    sample_rate: float | None = 7.68e6
    sigma_eta_s_sq: float = 1e-2
    sigma_eta_r_sq: float = 1e-3
    ilr_db: float = -20.0
    policies: tuple[str, ...] = ("plain", "prefiltered")
    bounds: tuple[str, ...] = BOUNDS
    runs: int = 1000
    seed: int = 0
    axis: str | None = None
    axis_values: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.axis is not None and self.axis not in AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}; expected one of {AXES}")
        for b in self.bounds:
            if b not in BOUNDS:
                raise ValueError(f"unknown bound {b!r}")
        if self.channel not in ("flat",) and self.sample_rate is None:
            raise ValueError(f"channel {self.channel!r} needs a sample_rate")

    @property
    def ofdm(self) -> OfdmConfig:
        return OfdmConfig(self.n_dft, self.l_cp, self.n_ofdm, self.signal_power * self.n_dft)

    @property
    def xi_s_db(self) -> float:
        return to_db(self.signal_power / self.sigma_eta_s_sq) if self.sigma_eta_s_sq else np.inf

    def at(self, value: float) -> "RunConfig":
        """Scenario at one point of the sweep axis."""
        if self.axis == "alloc":
            return replace(self, l_s=int(value))
        if self.axis == "snr-db":
            return replace(self, sigma_eta_s_sq=self.signal_power / 10.0 ** (value / 10.0))
        if self.axis == "ilr-db":
            return replace(self, ilr_db=float(value))
        return self

    def points(self) -> tuple[float, ...]:
        if self.axis is None:
            return (float("nan"),)
        return tuple(self.axis_values)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, default=str)

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


@dataclass
class RunRecord:
    alpha: complex
    alpha_hat: dict[str, complex]
    var_alpha: dict[str, float]
    zero_bound: dict[str, bool]

    @property
    def sq_error(self) -> dict[str, float]:
        return {p: abs(self.alpha - a) ** 2 for p, a in self.alpha_hat.items()}


def run_rng(seed: int, run_index: int) -> np.random.Generator:
    # one counter-based stream per (seed, run); shared across sweep points
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, run_index])))


def _draw_channel(cfg: RunConfig, rng: np.random.Generator, alloc):
    if cfg.channel == "flat":
        return np.ones(1, dtype=complex)
    profile = load_profile(cfg.channel)
    return normalize_power(realize_tdl(profile, cfg.sample_rate, rng), alloc).h


def run_once(cfg: RunConfig, run_index: int) -> RunRecord:
    """One realization: channel, imbalance, data and noise; estimators and bounds on the same draw."""
    rng = run_rng(cfg.seed, run_index)
    ofdm = cfg.ofdm
    alloc = make_allocation(cfg.alloc_kind, cfg.l_s, cfg.n_dft)
    h = _draw_channel(cfg, rng, alloc)
    params = from_target_ilr(cfg.ilr_db, rng)
    noise = NoiseSpec(cfg.sigma_eta_s_sq, cfg.sigma_eta_r_sq)

    frame = generate_frame(ofdm, alloc, qam_alphabet(cfg.modulation), rng)
    s = add_noise(apply_linear(h, frame), noise.sigma_eta_s_sq, rng)
    r = add_noise(apply_imbalance(s, params), noise.sigma_eta_r_sq, rng)
    alpha_hat = {p: estimate_with_policy(r, alloc, ofdm, p).alpha_hat for p in cfg.policies}

    var, zero = {}, {}
    model = ModelSpec(ofdm, alloc, h, noise, params)
    for b in cfg.bounds:
        if b == "exact":
            res = crlb_alpha(fim_fast(spectral_covariances(model), cfg.n_ofdm))
        elif b == "flat":
            flat = replace(model, h=np.ones(1, dtype=complex))
            res = crlb_alpha(fim_fast(spectral_covariances(flat), cfg.n_ofdm))
        else:
            res = crlb_simplified(spectral_covariances(model), cfg.n_ofdm)
        var[b], zero[b] = res.var_alpha, res.zero_bound
    return RunRecord(params.alpha, alpha_hat, var, zero)


def _run_block(cfg: RunConfig, start: int, stop: int) -> dict[str, np.ndarray]:
    recs = [run_once(cfg, i) for i in range(start, stop)]
    out = {p: np.array([r.sq_error[p] for r in recs]) for p in cfg.policies}
    out.update({b: np.array([r.var_alpha[b] for r in recs]) for b in cfg.bounds})
    return out


@dataclass(frozen=True)
class AggregateRow:
    sweep_value: float
    name: str
    mean_linear: float
    stderr_linear: float
    runs: int

    @property
    def mean_db(self) -> float:
        return to_db(self.mean_linear)

    @property
    def stderr_db(self) -> float:
        # delta method on 10 log10(m)
        if self.mean_linear <= 0:
            return 0.0
        return 10.0 / np.log(10.0) * self.stderr_linear / self.mean_linear


@dataclass
class AggregateResult:
    config: RunConfig
    rows: list[AggregateRow]

    def get(self, name: str, sweep_value: float | None = None) -> AggregateRow:
        for row in self.rows:
            same = (sweep_value is None or row.sweep_value == sweep_value
                    or (np.isnan(row.sweep_value) and np.isnan(sweep_value)))
            if row.name == name and same:
                return row
        raise KeyError((name, sweep_value))

    def series(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        rows = [r for r in self.rows if r.name == name]
        return np.array([r.sweep_value for r in rows]), np.array([r.mean_db for r in rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# iqcrlb {__version__} sweep\n")
        buf.write(f"# seed: {self.config.seed}\n")
        buf.write(f"# config_hash: {self.config.config_hash()}\n")
        buf.write(f"# config: {self.config.to_json()}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([f"{r.sweep_value:.10g}", r.name, f"{r.mean_db:.6f}", f"{r.stderr_db:.6f}",
                        r.runs, f"{r.mean_linear:.10e}"])
        return buf.getvalue()


def aggregate(values: np.ndarray, sweep_value: float, name: str) -> AggregateRow:
    """Mean in the linear domain; dB is taken of the mean, never averaged."""
    values = np.asarray(values, dtype=float)
    se = float(np.std(values, ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    return AggregateRow(sweep_value, name, float(np.mean(values)), se, values.size)


def _blocks(runs: int, workers: int) -> list[tuple[int, int]]:
    size = max(1, -(-runs // max(1, 4 * workers)))
    return [(a, min(a + size, runs)) for a in range(0, runs, size)]


def default_workers() -> int:
    return int(os.environ.get("IQCRLB_WORKERS", "1"))


def sweep(cfg: RunConfig, workers: int | None = None, progress=None) -> AggregateResult:
    """Evaluate every sweep point; the result does not depend on ``workers``."""
    workers = default_workers() if workers is None else workers
    rows: list[AggregateRow] = []
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for value in cfg.points():
            point = cfg.at(value)
            blocks = _blocks(cfg.runs, workers)
            if pool is None:
                parts = [_run_block(point, a, b) for a, b in blocks]
            else:
                parts = list(pool.map(_run_block, [point] * len(blocks),
                                      [a for a, _ in blocks], [b for _, b in blocks]))
            for name in (*cfg.policies, *cfg.bounds):
                rows.append(aggregate(np.concatenate([p[name] for p in parts]), value, name))
            if progress is not None:
                progress(value)
    finally:
        if pool is not None:
            pool.shutdown()
    return AggregateResult(cfg, rows)


def write_csv(result: AggregateResult, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(result.to_csv())


def read_csv(path) -> list[dict[str, str]]:
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))
