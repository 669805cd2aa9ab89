"""
Declarative run configs. Each subcommand has a `RunConfig` subclass whose
option descriptors name the accepted YAML keys:

    class CurvesConfig(RunConfig):
        mu_plus = IntListOption("mu_plus", required=True)

        class Meta:
            command = "curves"
"""

from __future__ import annotations

import inspect
import logging
from pathlib import Path
from typing import Mapping

import numpy as np
import yaml
from typing_extensions import Self

from ghostlab.cli.options import (
    AmplitudesOption,
    FloatOption,
    GridOption,
    InitialState,
    InitialStateOption,
    IntListOption,
    IntOption,
    Option,
    PathOption,
    ShellsOption,
)
from ghostlab.core.document import read_field
from ghostlab.core.field import ScalarAmplitudeField, SpectralField, from_scalar
from ghostlab.core.lattice import is_eigenvalue
from ghostlab.core.operators import EigenforceSpec, make_eigenforce, norm_As, random_field
from ghostlab.dynamics.galerkin import GalerkinSpec, GalerkinSystem
from ghostlab.errors import ConfigError, InvalidConfigValue, MissingParamError
from ghostlab.geometry.curves import default_e_grid
from ghostlab.geometry.diagnostics import stationary_state

logger = logging.getLogger(__name__)

DEFAULT_SHELLS = frozenset({1, 2, 5})

_registry: dict[str, type[RunConfig]] = {}


def _has_contribute_to_class(value):
    return not inspect.isclass(value) and hasattr(value, "contribute_to_class")


class ConfigOptions:
    # Options that a config class can set in its 'class Meta'
    OPTIONS = {"command"}

    def __init__(self, meta):
        self.command: str | None = None

        self.options: list[Option] = []
        self._keys: set[str] = set()

        self.meta = meta
        self.config: type[RunConfig] = None  # type: ignore

    def contribute_to_class(self, cls, name):
        cls._meta = self
        self.config = cls

        if self.meta:
            for name, value in self.meta.__dict__.items():
                if name.startswith("_"):
                    continue
                if name not in ConfigOptions.OPTIONS:
                    raise TypeError(f"'class Meta' got an invalid attribute {name}")
                setattr(self, name, value)

    def add_option(self, option: Option):
        if option.key in self._keys:
            raise ValueError(f"Duplicate config key: '{option.key}' (attribute '{option.attname}')")
        self._keys.add(option.key)
        self.options.append(option)

    @property
    def keys(self) -> set[str]:
        return set(self._keys)

    @property
    def required(self) -> set[str]:
        return {o.key for o in self.options if o.required}


class RunConfigBase(type):
    def __new__(cls, name, bases, attrs, **kwargs):
        parents = [b for b in bases if isinstance(b, RunConfigBase)]
        if not parents:
            return super().__new__(cls, name, bases, attrs)

        module = attrs.pop("__module__")
        new_attrs = {"__module__": module}
        classcell = attrs.pop("__classcell__", None)
        if classcell is not None:
            new_attrs["__classcell__"] = classcell
        attr_meta = attrs.pop("Meta", None)

        contributable_attrs = {}
        for obj_name, obj in attrs.items():
            if _has_contribute_to_class(obj):
                contributable_attrs[obj_name] = obj
            else:
                new_attrs[obj_name] = obj
        new_class: type[RunConfig] = super().__new__(cls, name, bases, new_attrs, **kwargs)  # type: ignore

        # Meta is not inherited, so intermediate classes stay abstract
        new_class.add_to_class("_meta", ConfigOptions(attr_meta))

        # Options of the parents first, then the ones declared here
        for parent in reversed(new_class.__mro__[1:]):
            parent_meta = parent.__dict__.get("_meta")
            if isinstance(parent_meta, ConfigOptions):
                for option in parent_meta.options:
                    if option.attname not in contributable_attrs and option.key not in new_class._meta.keys:
                        new_class._meta.add_option(option)
        for obj_name, obj in contributable_attrs.items():
            new_class.add_to_class(obj_name, obj)

        command = new_class._meta.command
        if command is not None:
            if command in _registry:
                raise ValueError(f"Duplicate config for command '{command}'")
            _registry[command] = new_class
        return new_class

    def add_to_class(cls, name, value):
        if _has_contribute_to_class(value):
            value.contribute_to_class(cls, name)
        else:
            setattr(cls, name, value)


class RunConfig(metaclass=RunConfigBase):
    _meta: ConfigOptions
    base_dir: Path

    def __init__(self, *, base_dir: Path | None = None, **kwargs):
        self.base_dir = Path(".") if base_dir is None else Path(base_dir)
        attnames = {o.attname for o in self._meta.options}
        for name, value in kwargs.items():
            if name not in attnames:
                raise AttributeError(f"No such option '{name}'.")
            setattr(self, name, value)

    def __repr__(self):
        values = ", ".join(f"{o.attname}={getattr(self, o.attname)!r}" for o in self._meta.options)
        return f"{type(self).__qualname__}({values})"

    @classmethod
    def from_mapping(cls, data: Mapping, *, base_dir: Path | None = None) -> Self:
        """Validate the keys of a parsed YAML document and convert every value."""
        meta = cls._meta
        given = {key for key, value in data.items() if value is not None}
        if missing := meta.required - given:
            raise MissingParamError(missing)
        if unused := set(data) - meta.keys:
            logger.warning("Unused config keys for %s: %s", meta.command, ", ".join(sorted(map(str, unused))))

        config = cls(base_dir=base_dir)
        for option in meta.options:
            if option.key in data:
                setattr(config, option.attname, data[option.key])
        config.validate()
        return config

    def validate(self):
        pass

    def resolve(self, path: Path) -> Path:
        """Relative paths in a config are relative to the config file."""
        return path if path.is_absolute() else self.base_dir / path

    def as_dict(self):
        return {o.key: getattr(self, o.attname) for o in self._meta.options}


class DynamicsConfig(RunConfig):
    lambda_ = IntOption("lambda", default=2, minimum=1)
    G = FloatOption("G", default=1.0, positive=True)
    shells = ShellsOption("shells")
    radius_sq = IntOption("radius_sq", minimum=1)
    force_pattern = AmplitudesOption("force_pattern")
    u0 = InitialStateOption("u0")
    dt = FloatOption("dt", required=True, positive=True)
    T = FloatOption("T", required=True, positive=True)
    sample_every = IntOption("sample_every", default=10, minimum=1)

    def validate(self):
        lam = self.lambda_
        if not is_eigenvalue(lam):
            raise InvalidConfigValue(f"lambda={lam} is not an eigenvalue of A")
        if self.shells is not None and self.radius_sq is not None:
            raise InvalidConfigValue("Give either 'shells' (compressed) or 'radius_sq' (full system), not both")
        if self.shells is not None and lam not in self.shells:
            raise InvalidConfigValue(f"lambda={lam} must be one of the shells {sorted(self.shells)}")
        if self.radius_sq is not None and lam > self.radius_sq:
            raise InvalidConfigValue(f"lambda={lam} lies outside radius_sq={self.radius_sq}")
        if self.shells is None and self.radius_sq is None and lam != 2:
            raise MissingParamError(["shells"])

    @property
    def full_system(self) -> bool:
        return self.radius_sq is not None

    @property
    def mode_shells(self) -> frozenset[int]:
        return self.shells if self.shells is not None else DEFAULT_SHELLS

    def force(self) -> SpectralField:
        return make_eigenforce(EigenforceSpec(self.lambda_, self.G, self.force_pattern))

    def galerkin_spec(self) -> GalerkinSpec:
        return GalerkinSpec(self.mode_shells, self.force(), self.lambda_)

    def system(self) -> GalerkinSystem:
        if self.full_system:
            return GalerkinSystem.full(self.force(), self.radius_sq)
        return GalerkinSystem.compressed(self.galerkin_spec())

    def initial_state(self, default_seed: int = 0) -> InitialState:
        return self.u0 if self.u0 is not None else InitialState("seed", default_seed)

    def initial_field(self, system: GalerkinSystem, default_seed: int = 0) -> SpectralField:
        state = self.initial_state(default_seed)
        radius = system.truncation_radius_sq
        if state.kind == "stationary":
            u0 = stationary_state(system.force, self.lambda_)
        elif state.kind == "seed":
            rng = np.random.default_rng(state.value)
            norm = state.norm if state.norm is not None else self.G / self.lambda_
            return random_field(system.modes, rng, norm=norm, truncation_radius_sq=radius)
        elif state.kind == "amplitudes":
            amps = ScalarAmplitudeField.from_mapping(state.value, truncation_radius_sq=radius)
            u0 = from_scalar(amps)
        else:
            u0 = read_field(str(self.resolve(state.value)))

        if state.norm is not None:
            size = norm_As(u0)
            if size == 0:
                raise InvalidConfigValue("u0 vanishes and cannot be rescaled")
            u0 = u0 * (state.norm / size)
        return u0


class SimulateConfig(DynamicsConfig):
    class Meta:
        command = "simulate"


class GhostCheckConfig(DynamicsConfig):
    eps_eta = FloatOption("eps_eta", positive=True)
    eps_chained = FloatOption("eps_chained", default=1e-3, positive=True)
    seeds = IntListOption("seeds", minimum=0)
    ensemble = IntOption("ensemble", minimum=1)

    class Meta:
        command = "ghost-check"

    def validate(self):
        super().validate()
        if self.full_system:
            raise InvalidConfigValue("ghost-check runs on the compressed system; use 'shells'")
        if self.seeds is not None and self.ensemble is not None:
            raise InvalidConfigValue("Give either 'seeds' or 'ensemble', not both")
        if (self.seeds is not None or self.ensemble is not None) and self.u0 is not None:
            raise InvalidConfigValue("An ensemble draws its own u0; drop 'u0'")

    def ensemble_seeds(self, base_seed: int = 0) -> list[int] | None:
        if self.seeds is not None:
            return sorted(set(self.seeds))
        if self.ensemble is not None:
            return list(range(base_seed, base_seed + self.ensemble))
        return None


class CurvesConfig(RunConfig):
    mu_plus = IntListOption("mu_plus", required=True)
    G = FloatOption("G", default=1.0, positive=True)
    lambda_ = IntOption("lambda", default=2, minimum=1)
    e_grid = GridOption("e_grid")
    c_bg = FloatOption("c_bg")

    class Meta:
        command = "curves"

    def validate(self):
        low = [mu for mu in self.mu_plus if mu <= 2]
        if low:
            raise InvalidConfigValue(f"mu_plus must exceed 2, got {low}")
        if self.c_bg is not None and self.c_bg < 0:
            raise InvalidConfigValue(f"c_bg must be non-negative, got {self.c_bg}")

    def grid(self) -> np.ndarray:
        if self.e_grid is not None:
            return self.e_grid
        return np.asarray(default_e_grid(self.G))


class NonexistenceConfig(RunConfig):
    transcribed = PathOption("transcribed")
    search_samples = IntOption("search_samples", default=0, minimum=0)

    class Meta:
        command = "verify-nonexistence"

    def transcribed_text(self) -> str | None:
        if self.transcribed is None:
            return None
        path = self.resolve(self.transcribed)
        try:
            return path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"Cannot read transcribed constraints {path}: {e}") from e


class IdentitiesConfig(RunConfig):
    samples = IntOption("samples", default=1000, minimum=1)
    oracle_samples = IntOption("oracle_samples", default=100, minimum=0)
    radius_sq = IntOption("radius_sq", default=25, minimum=1)

    class Meta:
        command = "identities"


def config_class(command: str) -> type[RunConfig]:
    try:
        return _registry[command]
    except KeyError:
        raise ConfigError(f"Unknown command '{command}'") from None


def commands() -> list[str]:
    return list(_registry)


def load_config(command: str, path: str | Path | None = None) -> RunConfig:
    """Read the YAML run config of `command`. Without a path every key takes its default."""
    cls = config_class(command)
    if path is None:
        return cls.from_mapping({})

    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"Malformed YAML in {path}: {e}") from e

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise InvalidConfigValue(f"The run config must be a mapping, got {type(data).__name__}")
    return cls.from_mapping(data, base_dir=path.parent)
