#!/usr/bin/env python3
"""Density, frame bounds and condition number of the hairs family."""
from _common import parser, setup, show

from mobile_sampling.cli import fmt_human
from mobile_sampling.reports import counterexample_table, write_csv

if __name__ == "__main__":
    cfg, out = setup(parser(__doc__).parse_args())
    header, rows = counterexample_table(cfg)
    show(header, rows, fmt_human)
    print("wrote", write_csv(out / "counterexample_table.csv", header, rows))
