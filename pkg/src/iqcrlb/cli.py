"""Command-line front end: ``iqcrlb crlb | sweep | selftest``.

Precedence for every parameter: built-in default < ``--preset`` < ``--config``
file < explicit flag. Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .channel import load_profile, normalize_power, realize_tdl
from .covariance import MAX_DENSE_SAMPLES, ModelSpec, spectral_covariances
from .crlb import (SingularCovarianceError, crlb_alpha, crlb_simplified, fim_fast, fim_full)
from .impairment import NoiseSpec, from_alpha, to_db
from .montecarlo import AXES, RunConfig, sweep
from .selftest import run_all
from .waveform import OfdmConfig, make_allocation

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

DESK = dict(n_dft=256, l_cp=18, sample_rate=7.68e6, runs=1000)
LARGE = dict(n_dft=4096, l_cp=288, sample_rate=122.88e6, runs=100_000)
COMMON = dict(n_ofdm=10, signal_power=1.0, sigma_eta_s_sq=1e-2, sigma_eta_r_sq=1e-3,
              ilr_db=-20.0, modulation=1024, channel="tdlb100")

# half-band and full-band allocation sizes scale with the 3300-of-4096 NR maximum;
# purely symmetric allocations leave nothing for the pre-filter, so those run plain only
SWEEP_PRESETS: dict[str, dict] = {
    "fig3a": dict(**DESK, alloc="contiguous:12", axis="alloc:12..204:12"),
    "fig3b": dict(**DESK, alloc="symmetric:12", axis="alloc:12..204:12", policies="plain"),
    "fig4a": dict(**DESK, alloc="contiguous:101", axis="snr-db:-10..50:5"),
    "fig4b": dict(**DESK, alloc="symmetric:204", axis="snr-db:-10..50:5", policies="plain"),
    "fig5a": dict(**DESK, alloc="contiguous:101", axis="ilr-db:-60..-3:3"),
    "fig5b": dict(**DESK, alloc="symmetric:204", axis="ilr-db:-60..-3:3", policies="plain"),
    "large-fig3a": dict(**LARGE, alloc="contiguous:12", axis="alloc:12..3300:12"),
    "large-fig3b": dict(**LARGE, alloc="symmetric:12", axis="alloc:12..3300:12", policies="plain"),
    "large-fig4a": dict(**LARGE, alloc="contiguous:1649", axis="snr-db:-10..50:5"),
    "large-fig4b": dict(**LARGE, alloc="symmetric:3300", axis="snr-db:-10..50:5", policies="plain"),
    "large-fig5a": dict(**LARGE, alloc="contiguous:1649", axis="ilr-db:-60..-3:3"),
    "large-fig5b": dict(**LARGE, alloc="symmetric:3300", axis="ilr-db:-60..-3:3", policies="plain"),
}
for _p in SWEEP_PRESETS.values():
    for _k, _v in COMMON.items():
        _p.setdefault(_k, _v)

CRLB_PRESETS: dict[str, dict] = {
    "large-fig3": dict(COMMON, n_dft=4096, l_cp=288, sample_rate=122.88e6, alloc="contiguous:1649"),
    "desk": dict(COMMON, n_dft=256, l_cp=18, sample_rate=7.68e6, alloc="contiguous:101"),
}

RUN_FIELD_TYPES = {
    "n_dft": int, "l_cp": int, "n_ofdm": int, "signal_power": float, "modulation": int,
    "channel": str, "sample_rate": float, "sigma_eta_s_sq": float, "sigma_eta_r_sq": float,
    "ilr_db": float, "runs": int, "seed": int,
}

FILE_ALIASES = {"ilr": "ilr_db"}

DEFAULT_STEPS = {"alloc": 12.0, "snr-db": 5.0, "ilr-db": 5.0}


class UsageError(ValueError):
    pass


@dataclass
class CliConfig:
    """Effective parameters of one invocation, after merging preset, file and flags."""

    subcommand: str
    params: dict = field(default_factory=dict)
    config_file: str | None = None
    output: str | None = None
    seed: int = 0
    workers: int | None = None


def parse_alloc(spec: str, n_dft: int):
    """``contiguous:N``, ``symmetric:N`` or ``mask:0110...`` (one digit per bin)."""
    kind, _, arg = str(spec).partition(":")
    try:
        if kind == "contiguous":
            return make_allocation("contiguous_low", int(arg), n_dft)
        if kind == "symmetric":
            return make_allocation("symmetric_dc", int(arg), n_dft)
        if kind == "mask":
            if len(arg) != n_dft or set(arg) - {"0", "1"}:
                raise ValueError(f"mask needs {n_dft} binary digits")
            return make_allocation("custom", mask=[int(c) for c in arg])
    except ValueError as exc:
        raise UsageError(f"invalid allocation {spec!r}: {exc}") from None
    raise UsageError(f"invalid allocation {spec!r}; use contiguous:N, symmetric:N or mask:0101..")


def alloc_kind(spec: str) -> tuple[str, int]:
    kind, _, arg = str(spec).partition(":")
    kinds = {"contiguous": "contiguous_low", "symmetric": "symmetric_dc"}
    if kind not in kinds or not arg.isdigit():
        raise UsageError(f"sweeps need contiguous:N or symmetric:N, got {spec!r}")
    return kinds[kind], int(arg)


def parse_axis(spec: str) -> tuple[str, tuple[float, ...]]:
    """``name:start..stop[:step]`` with the stop value included when on the grid."""
    name, _, rng = str(spec).partition(":")
    if name not in AXES:
        raise UsageError(f"unknown axis {name!r}; expected one of {AXES}")
    try:
        bounds, _, step = rng.partition(":")
        lo, hi = (float(x) for x in bounds.split(".."))
        step_v = float(step) if step else DEFAULT_STEPS[name]
    except ValueError:
        raise UsageError(f"invalid axis range {spec!r}; use {name}:start..stop[:step]") from None
    if step_v <= 0 or hi < lo:
        raise UsageError(f"axis range {spec!r} is empty")
    n = int(np.floor((hi - lo) / step_v + 1e-9)) + 1
    return name, tuple(float(lo + i * step_v) for i in range(n))


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment. Keys use flag names."""
    out = {}
    try:
        text = open(path).read()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{n}: expected key = value")
        out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--n-dft", type=int)
    g.add_argument("--l-cp", type=int)
    g.add_argument("--n-ofdm", type=int)
    g.add_argument("--signal-power", type=float, help="mean per-sample transmit power")
    g.add_argument("--alloc", help="contiguous:N | symmetric:N | mask:0101..")
    g.add_argument("--channel", help="tdlb100, a delay-profile file, or flat")
    g.add_argument("--flat", action="store_const", const="flat", dest="channel",
                   help="frequency-flat channel (single unit tap)")
    g.add_argument("--sample-rate", type=float, help="Hz; maps profile delays to taps")
    g.add_argument("--sigma-eta-s-sq", type=float, help="noise variance before the imbalance")
    g.add_argument("--sigma-eta-r-sq", type=float, help="noise variance after the imbalance")
    g.add_argument("--no-noise", action="store_true", default=None, help="set both noise variances to 0")
    g.add_argument("--ilr", type=float, dest="ilr_db", help="image leakage ratio in dB")
    g.add_argument("--modulation", type=int)


def _add_common(p: argparse.ArgumentParser, presets) -> None:
    p.add_argument("--preset", choices=sorted(presets))
    p.add_argument("--config", dest="config_file", help="flat key = value file")
    p.add_argument("--output", "-o", help="write CSV here instead of stdout")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iqcrlb", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("crlb", help="bound for one model via the full, fast and simplified paths")
    _add_common(p, CRLB_PRESETS)
    _add_model_flags(p)
    p.add_argument("--alpha-phase", type=float, help="arg(alpha) in degrees; random when omitted")
    p.add_argument("--keep-cp", action="store_true", default=None,
                   help="dense path models prefixes and the linear channel explicitly")

    p = sub.add_parser("sweep", help="Monte Carlo benchmark over one axis, CSV out")
    _add_common(p, SWEEP_PRESETS)
    _add_model_flags(p)
    p.add_argument("--axis", help="alloc:12..204[:step] | snr-db:-10..50 | ilr-db:-60..-3")
    p.add_argument("--runs", type=int)
    p.add_argument("--workers", type=int, help="process count (default: $IQCRLB_WORKERS or 1)")
    p.add_argument("--policies", help="comma list of plain, prefiltered")
    p.add_argument("--bounds", help="comma list of exact, flat, simplified")
    p.add_argument("--quiet", action="store_true", default=None)

    p = sub.add_parser("selftest", help="oracle-equivalence and closed-form identity checks")
    p.add_argument("--perturb-sigma-r", type=float, default=1.0, help=argparse.SUPPRESS)
    return parser


def merge_config(args: argparse.Namespace, presets: dict) -> CliConfig:
    params: dict = {}
    if getattr(args, "preset", None):
        params.update(presets[args.preset])
    if getattr(args, "config_file", None):
        known = set(vars(args)) - {"subcommand", "preset", "config_file", "output"}
        for key, value in read_config_file(args.config_file).items():
            key = FILE_ALIASES.get(key, key)
            if key not in known:
                raise UsageError(f"{args.config_file}: unknown key {key!r}")
            params[key] = value
    skip = {"subcommand", "preset", "config_file", "output", "perturb_sigma_r"}
    for key, value in vars(args).items():
        if key not in skip and value is not None:
            params[key] = value
    if _truthy(params.pop("no_noise", False)):
        params["sigma_eta_s_sq"] = params["sigma_eta_r_sq"] = 0.0
    return CliConfig(args.subcommand, params, getattr(args, "config_file", None),
                     getattr(args, "output", None), int(params.get("seed", 0)),
                     _opt_int(params.get("workers")))


def _truthy(v) -> bool:
    return str(v).lower() in ("1", "true", "yes", "on")


def _opt_int(v):
    return None if v is None else int(v)


def _typed(params: dict, key: str, cast, default):
    v = params.get(key, default)
    if v is None:
        return None
    try:
        return cast(v)
    except (TypeError, ValueError):
        raise UsageError(f"invalid value for {key}: {v!r}") from None


def _channel_taps(name: str, sample_rate, alloc, rng) -> np.ndarray:
    if name == "flat":
        return np.ones(1, dtype=complex)
    if sample_rate is None:
        raise UsageError(f"channel {name!r} needs --sample-rate")
    try:
        profile = load_profile(name)
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot load channel profile {name!r}: {exc}") from None
    return normalize_power(realize_tdl(profile, sample_rate, rng), alloc).h


def build_model(cfg: CliConfig) -> ModelSpec:
    p = cfg.params
    n_dft = _typed(p, "n_dft", int, 64)
    rng = np.random.default_rng(cfg.seed)
    try:
        ofdm = OfdmConfig(n_dft, _typed(p, "l_cp", int, 0), _typed(p, "n_ofdm", int, 1),
                          _typed(p, "signal_power", float, 1.0) * n_dft)
        alloc = parse_alloc(p.get("alloc", f"contiguous:{n_dft // 2 - 1}"), n_dft)
        h = _channel_taps(str(p.get("channel", "flat")), _typed(p, "sample_rate", float, None), alloc, rng)
        noise = NoiseSpec(_typed(p, "sigma_eta_s_sq", float, 1e-2), _typed(p, "sigma_eta_r_sq", float, 1e-3))
        mag = 10.0 ** (_typed(p, "ilr_db", float, -20.0) / 20.0)
        phase = _typed(p, "alpha_phase", float, None)
        phase = rng.uniform(0, 2 * np.pi) if phase is None else np.deg2rad(phase)
        params = from_alpha(mag * np.exp(1j * phase))
        return ModelSpec(ofdm, alloc, h, noise, params)
    except UsageError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None


@dataclass
class CrlbRow:
    path: str
    var_alpha: float | None
    note: str = ""

    @property
    def var_db(self) -> float | None:
        return None if self.var_alpha is None else to_db(self.var_alpha)


def crlb_rows(model: ModelSpec, keep_cp: bool = False) -> list[CrlbRow]:
    """Bound via each path. A singular covariance means alpha is exactly identifiable: bound 0."""
    cfg = model.config
    rows = []
    n_dense = cfg.n_ofdm * (cfg.n_sym if keep_cp else cfg.n_dft)
    if n_dense > MAX_DENSE_SAMPLES:
        rows.append(CrlbRow("full", None, f"skipped: {n_dense} samples exceed {MAX_DENSE_SAMPLES}"))
    else:
        try:
            res = crlb_alpha(fim_full(model, drop_cp=not keep_cp))
            rows.append(CrlbRow("full", res.var_alpha))
        except SingularCovarianceError as exc:
            rows.append(CrlbRow("full", 0.0, f"singular covariance (cond {exc.cond:.2g})"))
    spectral = spectral_covariances(model)
    fast = crlb_alpha(fim_fast(spectral, cfg.n_ofdm))
    rows.append(CrlbRow("fast", fast.var_alpha, "singular bins" if fast.zero_bound else ""))
    simp = crlb_simplified(spectral, cfg.n_ofdm)
    rows.append(CrlbRow("simplified", simp.var_alpha, "singular bins" if simp.zero_bound else ""))
    return rows


def _fmt_db(v) -> str:
    if v is None:
        return "n/a"
    return "-inf" if v <= -300 else f"{v:.4f}"


def crlb_report(cfg: CliConfig, model: ModelSpec, rows: list[CrlbRow]) -> str:
    m = model
    meta = {
        "n_dft": m.config.n_dft, "l_cp": m.config.l_cp, "n_ofdm": m.config.n_ofdm,
        "signal_power": m.config.sigma_d_sq / m.config.n_dft, "sigma_d_sq": m.config.sigma_d_sq,
        "l_s": m.alloc.l_s, "allocation": m.alloc.classify(), "n_taps": m.h.size,
        "sigma_eta_s_sq": m.noise.sigma_eta_s_sq, "sigma_eta_r_sq": m.noise.sigma_eta_r_sq,
        "ilr_db": m.params.ilr_db, "alpha": f"{m.params.alpha:.6g}",
    }
    buf = io.StringIO()
    buf.write(f"# iqcrlb {__version__} crlb\n")
    buf.write(f"# seed: {cfg.seed}\n")
    buf.write(f"# config: {json.dumps(cfg.params, sort_keys=True, default=str)}\n")
    buf.write(f"# model: {json.dumps(meta, default=str)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("path", "var_db", "var_linear", "note"))
    for r in rows:
        lin = "" if r.var_alpha is None else f"{r.var_alpha:.10e}"
        w.writerow((r.path, _fmt_db(r.var_db), lin, r.note))
    return buf.getvalue()


def cmd_crlb(cfg: CliConfig) -> int:
    model = build_model(cfg)
    rows = crlb_rows(model, keep_cp=_truthy(cfg.params.get("keep_cp", False)))
    _emit(crlb_report(cfg, model, rows), cfg.output)
    return EXIT_OK


def run_config(cfg: CliConfig) -> RunConfig:
    p = cfg.params
    kwargs = {key: _typed(p, key, cast, None) for key, cast in RUN_FIELD_TYPES.items() if key in p}
    if "alloc" in p:
        kwargs["alloc_kind"], kwargs["l_s"] = alloc_kind(p["alloc"])
    if p.get("channel") == "flat":
        kwargs["sample_rate"] = None
    for key in ("policies", "bounds"):
        if key in p:
            v = p[key]
            kwargs[key] = tuple(x.strip() for x in v.split(",")) if isinstance(v, str) else tuple(v)
    if "axis" in p:
        kwargs["axis"], kwargs["axis_values"] = parse_axis(p["axis"])
    try:
        rc = RunConfig(**kwargs)
        for v in rc.points():
            point = rc.at(v)
            make_allocation(point.alloc_kind, point.l_s, point.n_dft)
            OfdmConfig(point.n_dft, point.l_cp, point.n_ofdm)
            _check_channel_span(point)
            if not point.ilr_db < 0:
                raise ValueError(f"ILR of {point.ilr_db} dB is not realizable (needs ILR < 0 dB)")
        for pol in rc.policies:
            if pol not in ("plain", "prefiltered"):
                raise ValueError(f"unknown policy {pol!r}")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return rc


def _check_channel_span(rc: RunConfig) -> None:
    if rc.channel == "flat":
        return
    try:
        profile = load_profile(rc.channel)
    except (OSError, KeyError) as exc:
        raise ValueError(f"cannot load channel profile {rc.channel!r}: {exc}") from None
    n_taps = int(round(max(t.delay for t in profile.taps) * rc.sample_rate)) + 1
    limit = rc.l_cp - 1 if rc.l_cp > 0 else rc.n_dft
    if n_taps > limit:
        raise ValueError(f"{rc.channel} spans {n_taps} taps at {rc.sample_rate:g} Hz; "
                         f"needs at most {limit} (l_cp - 1, or n_dft without a prefix)")


def cmd_sweep(cfg: CliConfig) -> int:
    rc = run_config(cfg)
    quiet = _truthy(cfg.params.get("quiet", False))
    progress = None if quiet else (lambda v: print(f"done {v:g}", file=sys.stderr, flush=True))
    result = sweep(rc, workers=cfg.workers, progress=progress)
    _emit(result.to_csv(), cfg.output)
    return EXIT_OK


def cmd_selftest(perturb_sigma_r: float = 1.0) -> int:
    results = run_all(sigma_r_scale=perturb_sigma_r)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<22} {r.detail}")
    ok = all(r.passed for r in results)
    print(f"{sum(bool(r.passed) for r in results)}/{len(results)} checks passed")
    return EXIT_OK if ok else EXIT_NUMERIC


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.subcommand == "selftest":
            return cmd_selftest(args.perturb_sigma_r)
        presets = CRLB_PRESETS if args.subcommand == "crlb" else SWEEP_PRESETS
        cfg = merge_config(args, presets)
        return cmd_crlb(cfg) if args.subcommand == "crlb" else cmd_sweep(cfg)
    except ValueError as exc:
        print(f"iqcrlb: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (np.linalg.LinAlgError, FloatingPointError, MemoryError) as exc:
        print(f"iqcrlb: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
