"""Shared argument handling for the scripts."""
import argparse
from pathlib import Path

from mobile_sampling.config import ExperimentConfig


def parser(description):
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--config", help="experiment config (JSON file)")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--seed", type=int, help="override the config seed")
    return p


def setup(args):
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out


def show(header, rows, fmt):
    print("  ".join(header))
    for r in rows:
        print("  ".join(fmt(v) if isinstance(v, float) else str(v) for v in r))
