#!/usr/bin/env python3
"""Central sections and shadows against angle for the planar reference bodies."""
from _common import parser, setup

from mobile_sampling.reports import section_plots, write_csv

if __name__ == "__main__":
    cfg, out = setup(parser(__doc__).parse_args())
    header, rows = section_plots()
    print("wrote", write_csv(out / "section_profiles.csv", header, rows), f"({len(rows)} rows)")
