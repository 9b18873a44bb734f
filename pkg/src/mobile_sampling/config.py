"""Tolerance policy and experiment configuration.

Every numerical threshold used by a verdict lives in ``Tolerances``; the
checks take it as an argument instead of hard-coding numbers.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path


@dataclass(frozen=True)
class Tolerances:
    delta_abs: float = 1e-3  # shadow maximum vs exact value
    section_abs: float = 1e-3  # minimal central section vs exact value
    density_abs: float = 1e-3  # achieved vs prescribed path density
    truncation_drift: float = 0.05  # relative change of A, B between T and 2T
    lower_bound_rel: float = 1e-6  # cross-section density vs section volume
    density_rel: float = 0.05  # finite-radius density estimates vs limits
    gap_formula_abs: float = 1e-9
    ball_tightness_rel: float = 0.02
    covering_slack: float = 0.10
    positive_density_slack: float = 0.10
    infab_slack: float = 0.10
    eta_fraction: float = 0.99  # eta as a fraction of |Omega| in the positivity check
    mc_sigmas: float = 3.0
    slide_exact_abs: float = 1e-3
    frame_rel: float = 1e-9
    c2_final_ratio: float = 0.05

    @classmethod
    def from_dict(cls, doc: dict) -> "Tolerances":
        _reject_unknown(cls, doc, "tolerances")
        return cls(**{k: float(v) for k, v in doc.items()})


CRITERIA = (
    "delta-exact-square",
    "parallel-optimal-density",
    "parallel-lower-bound",
    "hairs-ill-posed",
    "gap-law-square",
    "covering-density",
    "density-vs-stability",
    "slide-lemmas",
    "frame-normalization",
    "connector-overhead",
)


class ConfigError(ValueError):
    pass


def _reject_unknown(cls, doc, where):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be a JSON object")
    known = {f.name for f in fields(cls)}
    extra = sorted(set(doc) - known)
    if extra:
        raise ConfigError(f"unknown keys in {where}: {', '.join(extra)}")


@dataclass
class ExperimentConfig:
    claims: list = field(default_factory=lambda: list(CRITERIA))
    T: float = 32.0
    radii: list = field(default_factory=lambda: [25.0, 50.0, 100.0, 200.0])
    centers_per_radius: int = 8
    seed: int = 0
    mc_samples: int = 1_000_000
    mc_seeds: int = 20
    covering_trials: int = 20
    hairs_n: list = field(default_factory=lambda: [1, 2, 4, 8])
    t_factor: int = 4
    body: object = None  # shorthand "cube:0.5", an inline body document, or a file path
    trajectory: object = None  # shorthand "hairs:4" / "uniform:0.5", inline document, or file path
    samples: object = None  # inline point-set document or file path
    dim: int = 2
    out_dir: str | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        unknown = sorted(set(self.claims) - set(CRITERIA))
        if unknown:
            raise ConfigError(f"unknown claim ids: {', '.join(unknown)}")
        if not self.T > 0:
            raise ConfigError("T must be positive")
        r = [float(x) for x in self.radii]
        if not r or any(b <= a for a, b in zip(r, r[1:])) or r[0] <= 0:
            raise ConfigError("radii must be positive and increasing")
        self.radii = r
        for name in ("centers_per_radius", "mc_samples", "mc_seeds", "covering_trials", "t_factor"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.dim not in (1, 2, 3):
            raise ConfigError("dim must be 1, 2 or 3")
        if any(int(n) < 1 for n in self.hairs_n):
            raise ConfigError("hairs_n must be positive integers")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        _reject_unknown(cls, doc, "config")
        doc = dict(doc)
        try:
            if "tolerances" in doc:
                doc["tolerances"] = Tolerances.from_dict(doc["tolerances"])
            return cls(**doc)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:  # wrong value types surface here
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return asdict(self)
