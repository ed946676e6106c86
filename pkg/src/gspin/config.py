"""Declarative experiment configuration.

Configs are YAML documents with five blocks: ``defect``, ``drive``,
``photodynamics``, ``sequence`` and ``run``.  Every physical key carries its
unit in the name (``d_mhz``, ``b_mt``, ``t2star_us``).  Unknown keys are
rejected and the physical invariants of the built objects are re-checked at
load time.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from pathlib import Path
from typing import Annotated, Literal, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .geometry import N_SITES, OrientationEnsemble, SitePerturbation, perturbations_from_lines
from .photodynamics import PhotoDynamics
from .sequences import (
    COUPLING_WINDOW_MHZ,
    DEFAULT_DELAY_NS,
    DEFAULT_LASER_NS,
    DEFAULT_WINDOW_NS,
    Defect,
    Drive,
    SpinSystem,
)
from .spin import GAMMA_E, ZfsParameters


class ConfigError(ValueError):
    """Invalid configuration; ``str()`` carries one diagnostic per line."""


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Perturbation(_Block):
    delta_d_mhz: float = 0.0
    delta_e_mhz: float = 0.0


class FineLines(_Block):
    """Per-site transition frequencies; converted to (dD, dE) shifts."""

    nu_plus_mhz: tuple[float, float, float, float, float, float]
    nu_minus_mhz: tuple[float, float, float, float, float, float]


class DefectBlock(_Block):
    d_mhz: float = -1205.0
    e_mhz: float = 516.0
    gamma_mhz_per_mt: float = Field(GAMMA_E, gt=0)
    t2star_plus_us: float = Field(0.8, gt=0)
    t2star_minus_us: float = Field(1.1, gt=0)
    occupancy: tuple[float, float, float, float, float, float] = (1.0,) * N_SITES
    perturbations: tuple[Perturbation, ...] | None = None
    fine_lines: FineLines | None = None

    @model_validator(mode="after")
    def _one_source(self):
        if self.perturbations is not None and self.fine_lines is not None:
            raise ValueError("give either perturbations or fine_lines, not both")
        if self.perturbations is not None and len(self.perturbations) != N_SITES:
            raise ValueError(f"perturbations needs {N_SITES} entries")
        return self


class DriveBlock(_Block):
    b_mt: float = Field(0.1, ge=0)
    direction: tuple[float, float, float] = (0.0, 0.0, 1.0)
    calibration: tuple[tuple[float, float], ...] = ()
    coupling_window_mhz: float = Field(COUPLING_WINDOW_MHZ, gt=0)

    @field_validator("direction")
    @classmethod
    def _nonzero(cls, v):
        if np.linalg.norm(v) == 0:
            raise ValueError("direction must be a non-zero vector")
        return v


class PhotoBlock(_Block):
    pump_rate_mhz: float = 2.5
    radiative_rate_mhz: float = 80.0
    isc_rate0_mhz: float = 1.0
    isc_rate_pm_mhz: float = 1.0
    decay0_mhz: float = 1.5
    decay_pm_mhz: float = 0.05
    collection_efficiency: float = 0.135
    background_cps: float = 0.0
    pump_per_uw_mhz: float = 0.25
    background_per_uw_cps: float = 0.0


class Grid(_Block):
    start: float
    stop: float
    step: float = Field(gt=0)

    def values(self) -> np.ndarray:
        n = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        if n < 1:
            raise ValueError("empty grid: stop lies below start")
        return self.start + self.step * np.arange(n)


class _Pulsed(_Block):
    laser_ns: float = Field(DEFAULT_LASER_NS, gt=0)
    delay_ns: float = Field(DEFAULT_DELAY_NS, gt=0)
    window_ns: float = Field(DEFAULT_WINDOW_NS, gt=0)


class OdmrSequence(_Pulsed):
    kind: Literal["odmr"]
    pi_pulse_ns: float = Field(gt=0)
    sweep_mhz: Grid


class RabiSequence(_Pulsed):
    kind: Literal["rabi"]
    mw_mhz: float = Field(gt=0)
    sweep_ns: Grid


class RamseySequence(_Pulsed):
    kind: Literal["ramsey"]
    mw_mhz: float = Field(gt=0)
    half_pi_ns: float = Field(gt=0)
    sweep_ns: Grid


class G2Sequence(_Block):
    kind: Literal["g2"]
    power_uw: float | None = Field(None, gt=0)
    sweep_ns: Grid
    jitter_ns: float = Field(0.0, ge=0)
    pairs_per_bin: float = Field(1000.0, gt=0)


class SaturationSequence(_Block):
    kind: Literal["saturation"]
    sweep_uw: Grid
    integration_s: float = Field(1.0, gt=0)


Sequence = Annotated[
    Union[OdmrSequence, RabiSequence, RamseySequence, G2Sequence, SaturationSequence],
    Field(discriminator="kind"),
]


class RunBlock(_Block):
    repetitions: int = Field(1, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    shot_noise: bool = False
    sample_sites: bool = False
    unit_contrast: bool = False
    output: str | None = None


class ExperimentConfig(_Block):
    defect: DefectBlock = DefectBlock()
    drive: DriveBlock = DriveBlock()
    photodynamics: PhotoBlock = PhotoBlock()
    sequence: Sequence
    run: RunBlock = RunBlock()

    def build_system(self) -> SpinSystem:
        """Domain objects described by the config; raises on physical violations."""
        d = self.defect
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            zfs = ZfsParameters(d.d_mhz, d.e_mhz)
        if d.fine_lines is not None:
            perts = perturbations_from_lines(zfs, d.fine_lines.nu_plus_mhz, d.fine_lines.nu_minus_mhz)
        elif d.perturbations is not None:
            perts = [SitePerturbation(p.delta_d_mhz, p.delta_e_mhz) for p in d.perturbations]
        else:
            perts = [SitePerturbation()] * N_SITES
        defect = Defect(zfs, tuple(perts), d.t2star_plus_us, d.t2star_minus_us, d.gamma_mhz_per_mt)
        v = np.asarray(self.drive.direction, dtype=float)
        b = tuple(self.drive.b_mt * v / np.linalg.norm(v))
        drive = Drive(b, self.drive.calibration, self.drive.coupling_window_mhz)
        p = self.photodynamics
        dyn = PhotoDynamics(
            pump_rate=p.pump_rate_mhz,
            radiative_rate=p.radiative_rate_mhz,
            isc_rate0=p.isc_rate0_mhz,
            isc_rate_pm=p.isc_rate_pm_mhz,
            decay0=p.decay0_mhz,
            decay_pm=p.decay_pm_mhz,
            collection_efficiency=p.collection_efficiency,
            background=p.background_cps,
            pump_per_uw=p.pump_per_uw_mhz,
            background_per_uw=p.background_per_uw_cps,
        )
        return SpinSystem(defect, drive, dyn, OrientationEnsemble(d.occupancy))

    def canonical(self) -> dict:
        """Fully resolved config as plain data, defaults filled in."""
        return self.model_dump(mode="json")

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form; identifies the producing config."""
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _key_lines(node, path=()) -> dict:
    """Map key paths to 1-based source lines of a composed YAML node tree."""
    out = {}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            p = path + (k.value,)
            out[p] = k.start_mark.line + 1
            out.update(_key_lines(v, p))
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            p = path + (i,)
            out[p] = v.start_mark.line + 1
            out.update(_key_lines(v, p))
    return out


def _format_errors(err: ValidationError, lines: dict, source: str) -> str:
    msgs = []
    for e in err.errors():
        loc = tuple(x for x in e["loc"] if not (isinstance(x, str) and x in _SEQUENCE_TAGS))
        line = next((lines[loc[:k]] for k in range(len(loc), 0, -1) if loc[:k] in lines), None)
        where = f"{source}:{line}" if line else source
        field = ".".join(str(x) for x in loc) or "<root>"
        msgs.append(f"{where}: {field}: {e['msg']}")
    return "\n".join(msgs)


_SEQUENCE_TAGS = {"odmr", "rabi", "ramsey", "g2", "saturation"}


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Validate YAML text; errors name the offending line and field."""
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    lines = _key_lines(node)
    try:
        cfg = ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc, lines, source)) from None
    try:
        cfg.build_system()
        _grid(cfg)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return cfg


def _grid(cfg: ExperimentConfig) -> np.ndarray:
    s = cfg.sequence
    grid = (getattr(s, "sweep_mhz", None) or getattr(s, "sweep_ns", None) or s.sweep_uw).values()
    if s.kind == "saturation" and grid[0] <= 0:
        raise ValueError("saturation powers must be positive")
    if s.kind == "ramsey" and grid[0] < 0:
        raise ValueError("free evolution times must be non-negative")
    if s.kind == "rabi" and grid[0] < 0:
        raise ValueError("pulse durations must be non-negative")
    return grid


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config(text, str(path))


def bundled_config_path(name: str) -> Path:
    return Path(__file__).parent / "configs" / f"{name}.yaml"


def sweep_grid(cfg: ExperimentConfig) -> np.ndarray:
    return _grid(cfg)
