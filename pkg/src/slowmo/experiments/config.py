"""Experiment configuration: nested dataclasses mirrored by a JSON file."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..core.params import Modulation, Params, RecoilModel, SpontaneousSettings


@dataclass(frozen=True)
class PhysicsConfig:
    kappa: float = 1.2
    epsilon: float = 0.2
    kbar: float = 0.25
    modulation: str = "cos"

    def params(self, **changes) -> Params:
        base = Params(self.kappa, self.epsilon, self.kbar, Modulation(self.modulation))
        return base.with_(**changes) if changes else base


@dataclass(frozen=True)
class SpontaneousConfig:
    rate: float = 0.0
    recoil_model: str = "off"
    include_stimulated: bool = False

    def settings(self) -> SpontaneousSettings:
        return SpontaneousSettings(self.rate, RecoilModel(self.recoil_model), self.include_stimulated)


@dataclass(frozen=True)
class GridConfig:
    n: int = 1024
    wells: int = 4


@dataclass(frozen=True)
class PacketConfig:
    xi: float | str = "auto"
    resonance_xi: float = 1.0
    guess_q: float = 0.0
    guess_p: float = 1.0


@dataclass(frozen=True)
class PortraitConfig:
    seeds_q: int = 24
    seeds_p: int = 24
    p_min: float = -2.0
    p_max: float = 2.0
    cycles: int = 300
    kbars: tuple[float, ...] = (0.25, 0.35)


@dataclass(frozen=True)
class TunnelingConfig:
    cycles: int = 20
    steps_per_cycle: int = 2048
    validate: bool = True
    kbars: tuple[float, ...] = (0.15, 0.2, 0.25, 0.3)
    scan_cycles: int = 5


@dataclass(frozen=True)
class ComparisonConfig:
    kappa: float = 1.2
    epsilon: float = 0.2
    kbar: float = 0.35
    modulation: str = "sin"
    t_start: float = 0.0
    snapshot_cycle: int = 2
    n_packets: int = 64
    n_particles: int = 100_000
    sigma_p: float = 0.3
    grid_n: int = 1024
    grid_wells: int = 16
    steps_per_cycle: int = 2048
    classical_substeps: int = 2048
    bins: int = 256
    p_min: float = -3.0
    p_max: float = 3.0
    member_half_q: float = 1.0
    member_half_p: float = 0.35
    smoothing: int = 5
    threshold: float = 0.1
    side_min_p: float = 0.3
    control: bool = True

    def params(self, epsilon: float | None = None) -> Params:
        eps = self.epsilon if epsilon is None else epsilon
        return Params(self.kappa, eps, self.kbar, Modulation(self.modulation))


@dataclass(frozen=True)
class ExperimentConfig:
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    spontaneous: SpontaneousConfig = field(default_factory=SpontaneousConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    packet: PacketConfig = field(default_factory=PacketConfig)
    portrait: PortraitConfig = field(default_factory=PortraitConfig)
    tunneling: TunnelingConfig = field(default_factory=TunnelingConfig)
    comparison: ComparisonConfig = field(default_factory=ComparisonConfig)
    classical_substeps: int = 2048
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        # validate eagerly so a bad file fails before any work starts
        self.physics.params()
        self.spontaneous.settings()
        self.comparison.params()
        if self.workers < 0:
            raise ValueError("workers must be >= 0 (0 = all cores)")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def with_overrides(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return _build(cls, data, "config")

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _build(kind, data, where):
    if not isinstance(data, dict):
        raise ValueError(f"{where}: expected an object")
    fields = {f.name: f for f in dataclasses.fields(kind)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ValueError(f"{where}: unknown keys {unknown}")
    kwargs = {}
    for name, value in data.items():
        default = fields[name].default_factory() if fields[name].default_factory is not dataclasses.MISSING else None
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value, f"{where}.{name}")
        elif isinstance(value, list):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    return kind(**kwargs)


def dump(config: ExperimentConfig, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
