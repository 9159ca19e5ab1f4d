"""Experiment configuration: one flat record, explicit defaults, exact
JSON round-tripping."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field

EXPERIMENT_KINDS = ("arms", "corrlen", "invade", "chemdist", "exit-scan",
                    "backbone-stats", "kappa", "iic")


def default_out_dir() -> str:
    return os.environ.get("PERCLAB_OUTDIR", ".")


@dataclass
class ExperimentConfig:
    """Everything a run needs; unused fields keep their defaults so the
    manifest echo always shows the full picture."""

    kind: str
    seed: int = 1
    out_dir: str = ""
    workers: int = 1
    plots: bool = True

    # Monte Carlo volume
    replicas: int = 2000
    envs: int = 20
    walks: int = 50

    # geometry scans
    radii: list[int] = field(default_factory=lambda: [4, 8, 16, 32])
    p_values: list[float] = field(default_factory=lambda: [0.5])
    n_grid: list[int] = field(default_factory=lambda: [2, 4, 8, 16, 32, 64])
    arm_kinds: list[str] = field(default_factory=lambda: ["one_arm_box",
                                                          "two_arm_box"])
    eps: float = 0.02
    box_factor: int = 2

    # invasion growth
    n: int = 48
    radius_factor: int = 2
    delta: float = 0.05
    budget: int = 0            # 0 -> derive from radius
    count: int = 1

    # walks and tiling
    host: str = "ipc"
    q_values: list[int] = field(default_factory=lambda: [4, 8, 16])
    step_cap_factor: int = 64

    # exponent arithmetic (strings parsed as exact fractions)
    eta1: str = "5/48"
    eta2: str = "17/48"
    s1: str = "1"
    s2: str = ""
    variant: str = "hexagonal"

    # conditioned-cluster sampling
    l: int = 0                 # 0 -> 3 * n
    max_rejections: int = 1000
    min_separation: int = 3

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if not self.out_dir:
            self.out_dir = default_out_dir()

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "ExperimentConfig":
        data = json.loads(text)
        names = {f.name for f in dataclasses.fields(ExperimentConfig)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return ExperimentConfig(**data)
