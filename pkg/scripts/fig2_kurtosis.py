"""Kurtosis of generated OFDM samples versus the number of allocated subcarriers."""

import argparse
import csv
import sys

import numpy as np

from iqcrlb.waveform import (OfdmConfig, empirical_kurtosis, generate_frame, make_allocation,
                             predicted_kurtosis, qam_alphabet)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--symbols", type=int, default=2000)
    p.add_argument("--n-dft", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["order", "l_s", "empirical", "predicted"])
    for order in (4, 16, 64, 1024):
        for l_s in (1, 2, 4, 8, 16, 32, 64, 128):
            cfg = OfdmConfig(args.n_dft, 0, args.symbols, float(args.n_dft))
            frame = generate_frame(cfg, make_allocation("contiguous_low", l_s, args.n_dft),
                                   qam_alphabet(order), rng)
            w.writerow([order, l_s, f"{empirical_kurtosis(frame.samples):.5f}",
                        f"{predicted_kurtosis(order, l_s):.5f}"])


if __name__ == "__main__":
    main()
