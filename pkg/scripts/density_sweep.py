#!/usr/bin/env python3
"""Path density against window radius for the uniform and hairs sets."""
from _common import parser, setup, show

from mobile_sampling.cli import fmt_human
from mobile_sampling.reports import density_sweep, write_csv

if __name__ == "__main__":
    cfg, out = setup(parser(__doc__).parse_args())
    header, rows = density_sweep(cfg)
    show(header, rows, fmt_human)
    print("wrote", write_csv(out / "density_sweep.csv", header, rows))
