"""Shared argument handling for the experiment scripts."""

import argparse
from pathlib import Path

from iqcrlb.montecarlo import AggregateResult, default_workers, write_csv


def parser(description: str, runs: int = 1000) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--runs", type=int, default=runs)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=default_workers())
    p.add_argument("--large-scale", action="store_true",
                   help="N_DFT=4096, 3300-subcarrier grid (slow)")
    p.add_argument("--out", type=Path, default=Path("results"))
    return p


def save(result: AggregateResult, out: Path, name: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.csv"
    write_csv(result, path)
    return path


def table(result: AggregateResult, names) -> str:
    lines = ["value  " + "  ".join(f"{n:>12}" for n in names)]
    for v in result.config.points():
        cells = [f"{result.get(n, v).mean_db:12.2f}" for n in names]
        lines.append(f"{v:5g}  " + "  ".join(cells))
    return "\n".join(lines)


def scale(large: bool) -> dict:
    if large:
        return dict(n_dft=4096, l_cp=288, sample_rate=122.88e6)
    return dict(n_dft=256, l_cp=18, sample_rate=7.68e6)
