"""YAML experiment configuration for the command-line runner.

Every section is optional and falls back to the demo experiment: the two-mass
plant at 240 Hz closed by the lead/PI controller at 80 Hz, ``N = 10800``.
Errors carry the file name and line of the offending entry.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from mrpfg.errors import InvalidInputError
from mrpfg.localmodel import LocalModelConfig
from mrpfg.lti import (
    GeneralizedPlant,
    MultirateLoop,
    StateSpaceModel,
    make_demo_controller,
    make_demo_plant,
)
from mrpfg.signals import SLOW, RateConfig


class ConfigError(InvalidInputError):
    """Malformed or inconsistent configuration file."""


@dataclass(frozen=True)
class Excitation:
    band: tuple[int, int] | None = None
    amplitude: float = 1.0
    seed: int = 0


@dataclass(frozen=True)
class Simulation:
    n_settle_periods: int = 2
    divergence_threshold: float = 1e9


@dataclass(frozen=True)
class Welch:
    segment_len: int | None = None
    overlap_frac: float = 0.5
    window: str = "hann"


@dataclass(frozen=True)
class CpsRun:
    excitation_hz: float = 60.0
    amplitude: float = 1.0


@dataclass(frozen=True)
class Tolerances:
    median_rel: float = 0.01
    p95_rel: float = 0.05
    max_flagged_frac: float = 0.02


@dataclass(frozen=True)
class ExperimentConfig:
    rate: RateConfig = field(default_factory=lambda: RateConfig.from_frequencies(240.0, 3, 10800))
    plant: dict = field(default_factory=lambda: {"kind": "two_mass"})
    controller: dict = field(default_factory=lambda: {"kind": "demo"})
    excitation: Excitation = Excitation()
    simulation: Simulation = Simulation()
    local_model: LocalModelConfig = LocalModelConfig()
    welch: Welch = Welch()
    cps: CpsRun = CpsRun()
    tolerances: Tolerances = Tolerances()
    base_dir: Path = Path(".")

    def plant_id(self) -> str:
        p = self.plant
        return p.get("kind", "statespace:" + str(p.get("statespace")))

    def build_loop(self) -> MultirateLoop:
        return MultirateLoop(self._build_plant(), self._build_controller(), self.rate)

    def _path(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    def _build_plant(self) -> GeneralizedPlant:
        from mrpfg.io import read_statespace

        if "statespace" in self.plant:
            sys = read_statespace(self._path(self.plant["statespace"]))
            if not np.isclose(sys.ts, self.rate.tsh, rtol=1e-12):
                raise ConfigError(f"plant ts={sys.ts} does not match 1/fsh={self.rate.tsh}")
            return GeneralizedPlant.output_disturbance(sys)
        return make_demo_plant(self.plant.get("kind", "two_mass"), self.rate.tsh)

    def _build_controller(self) -> StateSpaceModel:
        from mrpfg.io import read_statespace

        c = dict(self.controller)
        kind = c.pop("kind", "demo")
        tsl = self.rate.tsl
        if kind == "demo":
            return make_demo_controller(tsl, **c)
        if kind == "tf":
            return StateSpaceModel.from_tf(c["num"], c["den"], tsl, SLOW)
        if kind == "statespace":
            sys = read_statespace(self._path(c["path"]))
            if not np.isclose(sys.ts, tsl, rtol=1e-12):
                raise ConfigError(f"controller ts={sys.ts} does not match 1/fsl={tsl}")
            return StateSpaceModel(sys.A, sys.B, sys.C, sys.D, tsl, SLOW)
        raise ConfigError(f"unknown controller kind {kind!r}")


_SECTIONS = {
    "rates": {"fsh", "fac", "n_fast"},
    "plant": {"kind", "statespace"},
    "controller": {"kind", "f_c", "lead_ratio", "integrator_ratio", "num", "den", "path"},
    "excitation": {f.name for f in fields(Excitation)},
    "simulation": {f.name for f in fields(Simulation)},
    "local_model": {f.name for f in fields(LocalModelConfig)} - {"chunk"},
    "welch": {f.name for f in fields(Welch)},
    "cps": {f.name for f in fields(CpsRun)},
    "tolerances": {f.name for f in fields(Tolerances)},
}


def _line_map(node, prefix=()) -> dict:
    """Map key paths to 1-based source lines."""
    out = {}
    if isinstance(node, yaml.MappingNode):
        for key, val in node.value:
            path = prefix + (key.value,)
            out[path] = key.start_mark.line + 1
            out.update(_line_map(val, path))
    return out


def parse_config(text: str, source: str = "<config>", base_dir: Path = Path(".")) -> ExperimentConfig:
    """Build an ``ExperimentConfig`` from YAML text."""
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        line = mark.line + 1 if mark else "?"
        raise ConfigError(f"{source}:{line}: {exc.problem}") from None
    lines = _line_map(root) if root is not None else {}
    data = data or {}

    def where(*path):
        return f"{source}:{lines.get(path, '?')}"

    if not isinstance(data, dict):
        raise ConfigError(f"{source}:1: top level must be a mapping")
    for sec, body in data.items():
        if sec not in _SECTIONS:
            raise ConfigError(f"{where(sec)}: unknown section {sec!r}")
        if not isinstance(body, dict):
            raise ConfigError(f"{where(sec)}: section {sec!r} must be a mapping")
        for key in body:
            if key not in _SECTIONS[sec]:
                raise ConfigError(f"{where(sec, key)}: unknown key {sec}.{key}")

    def build(sec, cls):
        body = dict(data.get(sec, {}))
        defaults = {f.name: f.default for f in fields(cls)}
        for key, val in body.items():
            kind = type(defaults.get(key))
            if kind in (int, float) and val is not None and not isinstance(val, bool):
                try:
                    body[key] = kind(val)
                except (TypeError, ValueError):
                    raise ConfigError(
                        f"{where(sec, key)}: {sec}.{key} must be a number, got {val!r}"
                    ) from None
        try:
            return cls(**body)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where(sec)}: {sec}: {exc}") from None

    rates = data.get("rates", {})
    try:
        rate = RateConfig.from_frequencies(
            float(rates.get("fsh", 240.0)), int(rates.get("fac", 3)), int(rates.get("n_fast", 10800))
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where('rates')}: rates: {exc}") from None

    exc_body = dict(data.get("excitation", {}))
    if exc_body.get("band") is not None:
        band = exc_body["band"]
        if not (isinstance(band, list) and len(band) == 2):
            raise ConfigError(f"{where('excitation', 'band')}: band must be [k_min, k_max]")
        exc_body["band"] = (int(band[0]), int(band[1]))
    try:
        excitation = Excitation(**exc_body)
    except TypeError as exc:
        raise ConfigError(f"{where('excitation')}: excitation: {exc}") from None

    local_model = build("local_model", LocalModelConfig)
    try:
        local_model.check(rate.fac, rate.n_fast)
    except InvalidInputError as exc:
        raise ConfigError(f"{where('local_model')}: local_model: {exc}") from None

    return ExperimentConfig(
        rate=rate,
        plant=dict(data.get("plant", {"kind": "two_mass"})),
        controller=dict(data.get("controller", {"kind": "demo"})),
        excitation=excitation,
        simulation=build("simulation", Simulation),
        local_model=local_model,
        welch=build("welch", Welch),
        cps=build("cps", CpsRun),
        tolerances=build("tolerances", Tolerances),
        base_dir=base_dir,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    return parse_config(path.read_text(), str(path), path.parent)
