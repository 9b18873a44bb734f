#!/usr/bin/env python3
"""Run the full acceptance battery and write verdicts plus plot tables."""
import sys

from mobile_sampling.cli import main

if __name__ == "__main__":
    args = sys.argv[1:] or ["--out", "results"]
    sys.exit(main(["suite", "--emit-plot-data"] + args))
