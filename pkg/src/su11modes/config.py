"""Run configuration: an INI document with one section per block.

Example::

    [source]
    mu = 0.6765
    waist = 7e-3

    [synthesis]
    n_frames = 5000
    seed = 7

Unknown sections or keys are errors, and validation reports every bad
field at once.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields, replace
from typing import List, Optional, Tuple

from .errors import ConfigurationError


@dataclass(frozen=True)
class SourceBlock:
    mu: float = 0.6765
    waist: float = 7e-3
    l_max: int = 20
    p_max: int = 10
    order_max: Optional[int] = 20
    n_x: int = 64
    n_y: int = 64
    pitch: float = 1e-3


@dataclass(frozen=True)
class InterferometerBlock:
    G1: float = 2.1
    G2: float = 3.3
    phi: float = 3.82


@dataclass(frozen=True)
class SynthesisBlock:
    n_frames: int = 500
    seed: int = 0
    twin: bool = False
    noise_sigma: float = 0.0
    background: float = 0.0
    temporal_modes: int = 1


@dataclass(frozen=True)
class AnalysisBlock:
    azimuthal_halfwidth: float = 1.1e-3
    azimuthal_bins: int = 128
    theta0: Tuple[float, ...] = ()
    correct_pixels: bool = True
    radial_halfwidth: float = 0.08
    radial_phi0: float = 0.0
    radial_bins: int = 64
    radial_modes: int = 5
    n_phases: int = 64
    tv_tolerance: float = 0.05
    count_tolerance: float = 0.10


@dataclass(frozen=True)
class OutputBlock:
    dir: str = "out"
    format: str = "csv"
    stack: str = "stack.fstk"


@dataclass(frozen=True)
class RunConfig:
    source: SourceBlock = field(default_factory=SourceBlock)
    interferometer: InterferometerBlock = field(default_factory=InterferometerBlock)
    synthesis: SynthesisBlock = field(default_factory=SynthesisBlock)
    analysis: AnalysisBlock = field(default_factory=AnalysisBlock)
    output: OutputBlock = field(default_factory=OutputBlock)

    def with_overrides(self, seed=None, frames=None, out=None, fmt=None) -> "RunConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, synthesis=replace(cfg.synthesis, seed=seed))
        if frames is not None:
            cfg = replace(cfg, synthesis=replace(cfg.synthesis, n_frames=frames))
        if out is not None:
            cfg = replace(cfg, output=replace(cfg.output, dir=out))
        if fmt is not None:
            cfg = replace(cfg, output=replace(cfg.output, format=fmt))
        return cfg

    def validate(self) -> "RunConfig":
        problems = _problems(self)
        if problems:
            raise ConfigurationError("invalid configuration:\n  " + "\n  ".join(problems))
        return self


_BLOCKS = {f.name: f.default_factory for f in fields(RunConfig)}


def _parse_value(raw: str, typ):
    raw = raw.strip()
    if typ in ("bool", bool):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if typ in ("int", int):
        return int(raw)
    if typ in ("float", float):
        return float(raw)
    if typ in ("Optional[int]",):
        return None if raw.lower() in ("", "none") else int(raw)
    if typ in ("Tuple[float, ...]",):
        return tuple(float(x) for x in raw.replace(",", " ").split())
    return raw


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"cannot parse configuration: {exc}") from exc
    problems: List[str] = []
    blocks = {}
    for section in cp.sections():
        if section not in _BLOCKS:
            problems.append(f"[{section}]: unknown section")
            continue
        default = _BLOCKS[section]()
        types = {f.name: f.type for f in fields(default)}
        values = {}
        for key, raw in cp.items(section):
            if key not in types:
                problems.append(f"{section}.{key}: unknown key")
                continue
            try:
                values[key] = _parse_value(raw, types[key])
            except ValueError as exc:
                problems.append(f"{section}.{key}: {exc}")
        blocks[section] = replace(default, **values)
    cfg = RunConfig(**blocks)
    problems.extend(_problems(cfg))
    if problems:
        raise ConfigurationError("invalid configuration:\n  " + "\n  ".join(problems))
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read configuration {path}: {exc}") from exc
    return parse_config(text)


def _problems(cfg: RunConfig) -> List[str]:
    p: List[str] = []
    s, i, y, a, o = cfg.source, cfg.interferometer, cfg.synthesis, cfg.analysis, cfg.output
    if not 0 < s.mu < 1:
        p.append(f"source.mu: must lie in (0, 1), got {s.mu}")
    if not s.waist > 0:
        p.append(f"source.waist: must be positive, got {s.waist}")
    if s.l_max < 0:
        p.append(f"source.l_max: must be >= 0, got {s.l_max}")
    if s.p_max < 0:
        p.append(f"source.p_max: must be >= 0, got {s.p_max}")
    if s.order_max is not None and s.order_max < 0:
        p.append(f"source.order_max: must be >= 0, got {s.order_max}")
    if s.n_x < 8 or s.n_y < 8:
        p.append(f"source.n_x/n_y: frames must be at least 8x8, got {s.n_x}x{s.n_y}")
    if not s.pitch > 0:
        p.append(f"source.pitch: must be positive, got {s.pitch}")
    if s.pitch > 0 and s.waist > 0 and s.waist / s.pitch < 2:
        p.append(f"source.waist: {s.waist} spans fewer than 2 pixels of pitch {s.pitch}")
    if i.G1 < 0 or i.G2 < 0:
        p.append(f"interferometer.G1/G2: gains must be >= 0, got {i.G1}, {i.G2}")
    if not math.isfinite(i.phi):
        p.append(f"interferometer.phi: must be finite, got {i.phi}")
    if y.n_frames < 2:
        p.append(f"synthesis.n_frames: need at least 2 frames, got {y.n_frames}")
    if not 0 <= y.seed < 2**64:
        p.append(f"synthesis.seed: must be an unsigned 64-bit integer, got {y.seed}")
    if y.noise_sigma < 0 or y.background < 0:
        p.append("synthesis.noise_sigma/background: must be >= 0")
    if y.temporal_modes < 1:
        p.append(f"synthesis.temporal_modes: must be >= 1, got {y.temporal_modes}")
    if not a.azimuthal_halfwidth > 0:
        p.append(f"analysis.azimuthal_halfwidth: must be positive, got {a.azimuthal_halfwidth}")
    if not a.radial_halfwidth > 0:
        p.append(f"analysis.radial_halfwidth: must be positive, got {a.radial_halfwidth}")
    if a.azimuthal_bins < 8:
        p.append(f"analysis.azimuthal_bins: must be >= 8, got {a.azimuthal_bins}")
    if a.radial_bins < 8:
        p.append(f"analysis.radial_bins: must be >= 8, got {a.radial_bins}")
    if a.radial_modes < 1:
        p.append(f"analysis.radial_modes: must be >= 1, got {a.radial_modes}")
    if any(t <= 0 for t in a.theta0):
        p.append("analysis.theta0: slice centers must be positive")
    if a.n_phases < 2:
        p.append(f"analysis.n_phases: must be >= 2, got {a.n_phases}")
    if not a.tv_tolerance > 0 or not a.count_tolerance > 0:
        p.append("analysis.tv_tolerance/count_tolerance: must be positive")
    if o.format not in ("csv", "svg", "both"):
        p.append(f"output.format: must be csv, svg or both, got {o.format!r}")
    return p
