from __future__ import annotations

import math
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any, Generic

import numpy as np

from ghostlab._typing import T
from ghostlab.core.lattice import WaveVector, is_eigenvalue
from ghostlab.errors import ConversionError

if TYPE_CHECKING:
    from ghostlab.cli.config import RunConfig


class Option(Generic[T], ABC):
    def __init__(self, key: str, *, required=False, default=None, lenient=True):
        """
        :param key: The key of the option in the YAML run config.
        :param required: If the key must be present in the config.
        :param default: Value used when the key is absent.
        :param lenient: Bool specifying if type conversion should be lenient or strict.
        """
        self.key = key
        self.required = required
        self.default = default
        self.lenient = lenient

        self.attname = None

    def contribute_to_class(self, cls, name):
        self.attname = name
        setattr(cls, name, self)
        cls._meta.add_option(self)

    def __get__(self, instance: RunConfig, owner=None):
        if instance is None:
            return self
        return instance.__dict__.get(self.attname, self.default)

    def __set__(self, instance: RunConfig, value):
        if value is None:
            instance.__dict__.pop(self.attname, None)
            return
        try:
            instance.__dict__[self.attname] = self.to_python(value)
        except ConversionError as e:
            raise ConversionError(f"Config key '{self.key}': {e}") from e

    def __repr__(self):
        return f"<{type(self).__name__} '{self.key}'>"

    @abstractmethod
    def to_python(self, value) -> T:
        """
        Convert the raw YAML value to the Python value of this option. If
        this conversion fails, a ghostlab.errors.ConversionError should get
        raised.
        """


class IntOption(Option[int]):
    regex = re.compile(r"[\s_]")

    def __init__(self, key: str, *, minimum: int | None = None, **kwargs):
        super().__init__(key, **kwargs)
        self.minimum = minimum

    def to_python(self, value):
        if isinstance(value, bool):
            raise ConversionError(f"Expected an integer, got {value!r}")
        try:
            result = int(value)
            if isinstance(value, float) and result != value:
                raise ConversionError(f"Expected an integer, got {value!r}")
        except (TypeError, ValueError) as e:
            # Try to convert lenient
            if not self.lenient or not isinstance(value, str):
                raise ConversionError(e)
            try:
                number = float(self.regex.sub("", value))
            except ValueError:
                raise ConversionError(e)
            if not number.is_integer():
                raise ConversionError(f"Expected an integer, got {value!r}")
            result = int(number)

        if self.minimum is not None and result < self.minimum:
            raise ConversionError(f"Must be >= {self.minimum}, got {result}")
        return result


class FloatOption(Option[float]):
    regex = re.compile(r"[\s_]")

    def __init__(self, key: str, *, positive=False, **kwargs):
        super().__init__(key, **kwargs)
        self.positive = positive

    def to_python(self, value):
        if isinstance(value, bool):
            raise ConversionError(f"Expected a number, got {value!r}")
        try:
            result = float(value)
        except (TypeError, ValueError) as e:
            # "1_000" and " 1e-3 " are accepted in lenient mode
            if not self.lenient or not isinstance(value, str):
                raise ConversionError(e)
            try:
                result = float(self.regex.sub("", value))
            except ValueError:
                raise ConversionError(e)

        if not math.isfinite(result):
            raise ConversionError(f"Expected a finite number, got {value!r}")
        if self.positive and not result > 0:
            raise ConversionError(f"Must be positive, got {result}")
        return result


class PathOption(Option[Path]):
    def to_python(self, value):
        if not isinstance(value, (str, Path)):
            raise ConversionError(f"Expected a path, got {value!r}")
        return Path(value)


class IntListOption(Option[tuple]):
    """A list of integers, or a single integer."""

    def __init__(self, key: str, *, minimum: int | None = None, **kwargs):
        super().__init__(key, **kwargs)
        self._item = IntOption(key, minimum=minimum, lenient=self.lenient)

    def to_python(self, value):
        if isinstance(value, (list, tuple)):
            items = value
        else:
            items = [value]
        if not items:
            raise ConversionError("Expected at least one value")
        return tuple(self._item.to_python(v) for v in items)


class ShellsOption(IntListOption):
    def __init__(self, key: str, **kwargs):
        super().__init__(key, minimum=1, **kwargs)

    def to_python(self, value):
        shells = super().to_python(value)
        bad = [mu for mu in shells if not is_eigenvalue(mu)]
        if bad:
            raise ConversionError(f"Not sums of two squares: {bad}")
        return frozenset(shells)


def parse_wave_vector(value) -> WaveVector:
    """`[k1, k2]`, `"k1,k2"` or `"(k1, k2)"`."""
    if isinstance(value, str):
        parts = value.strip().strip("()").split(",")
    else:
        parts = value
    try:
        k1, k2 = (int(p) for p in parts)
    except (TypeError, ValueError):
        raise ConversionError(f"Expected a wave vector 'k1,k2', got {value!r}")
    return WaveVector(k1, k2)


def parse_complex(value) -> complex:
    """A number, `[re, im]` or a Python complex literal such as `"1-2j"`."""
    if isinstance(value, bool):
        raise ConversionError(f"Expected a complex number, got {value!r}")
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConversionError(f"Expected [re, im], got {value!r}")
        return complex(FloatOption("re").to_python(value[0]), FloatOption("im").to_python(value[1]))
    try:
        return complex(value.replace(" ", "") if isinstance(value, str) else value)
    except (TypeError, ValueError) as e:
        raise ConversionError(e)


class AmplitudesOption(Option[dict]):
    """Scalar amplitudes keyed by wave vector: `{"1,1": 1.0, "1,-1": [0.5, 0.5]}`."""

    def to_python(self, value):
        if not isinstance(value, dict):
            raise ConversionError(f"Expected a mapping of wave vectors, got {value!r}")
        amplitudes = {}
        for key, amplitude in value.items():
            k = parse_wave_vector(key)
            if k.is_zero():
                raise ConversionError("The zero mode carries no amplitude")
            amplitudes[k] = parse_complex(amplitude)
        return amplitudes


class GridOption(Option[np.ndarray]):
    """
    Either an explicit list of values or `{start, stop, num}` for an evenly
    spaced grid including both ends.
    """

    def to_python(self, value):
        number = FloatOption(self.key, lenient=self.lenient)
        if isinstance(value, dict):
            unknown = set(value) - {"start", "stop", "num"}
            if unknown or "stop" not in value:
                raise ConversionError(f"Expected keys start, stop, num; got {sorted(value)}")
            start = number.to_python(value.get("start", 0.0))
            stop = number.to_python(value["stop"])
            num = IntOption(self.key, minimum=1).to_python(value.get("num", 101))
            return np.linspace(start, stop, num)
        if isinstance(value, (list, tuple)) and value:
            return np.array([number.to_python(v) for v in value], dtype=np.float64)
        raise ConversionError(f"Expected a list or {{start, stop, num}}, got {value!r}")


@dataclass(frozen=True)
class InitialState:
    """
    Where u₀ comes from. `kind` is one of "stationary", "seed", "amplitudes"
    and "file"; `value` holds the seed, the amplitude mapping or the path.
    """

    kind: str
    value: Any = None
    norm: float | None = None


class InitialStateOption(Option[InitialState]):
    KINDS = ("seed", "amplitudes", "file")

    def to_python(self, value):
        if value == "stationary":
            return InitialState("stationary")
        if isinstance(value, int) and not isinstance(value, bool):
            return InitialState("seed", IntOption(self.key, minimum=0).to_python(value))
        if not isinstance(value, dict):
            raise ConversionError(
                f"Expected 'stationary', a seed or a mapping with one of {self.KINDS}, got {value!r}"
            )

        norm = value.get("norm")
        if norm is not None:
            norm = FloatOption("norm", positive=True).to_python(norm)
        kinds = [k for k in self.KINDS if k in value]
        unknown = set(value) - set(self.KINDS) - {"norm"}
        if len(kinds) != 1 or unknown:
            raise ConversionError(f"u0 needs exactly one of {self.KINDS}, got {sorted(value)}")

        kind = kinds[0]
        if kind == "seed":
            payload = IntOption("seed", minimum=0).to_python(value["seed"])
        elif kind == "amplitudes":
            payload = AmplitudesOption("amplitudes").to_python(value["amplitudes"])
        else:
            payload = PathOption("file").to_python(value["file"])
        return InitialState(kind, payload, norm)
