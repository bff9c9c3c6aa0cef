"""
Run configuration: a single JSON document mapped onto frozen dataclasses.

Every key has a default, so `{}` is a valid document. Unknown keys are
rejected.
"""

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import (
    Any,
    Dict,
    Mapping,
    Optional,
    Tuple,
    Type,
    TypeVar,
    get_args,
    get_origin,
    get_type_hints,
)

from .errors import ConfigurationError
from .multipliers import EnergyConstants

KINDS = (
    "linear-decay",
    "verify-identities",
    "equivalence-band",
    "rate-sweep",
    "nonlinear-bootstrap",
    "threshold-sweep",
)

T = TypeVar("T")


@dataclass(frozen=True)
class GridSettings:
    L_y: float = 10.0
    n_y: int = 128

    def __post_init__(self: "GridSettings") -> None:
        if not self.L_y > 0:
            raise ConfigurationError(f"grid.L_y must be positive: {self.L_y}")
        if self.n_y < 8:
            raise ConfigurationError(f"grid.n_y must be >= 8: {self.n_y}")


@dataclass(frozen=True)
class SpectrumSettings:
    K_max: float = 16.0
    delta_k: float = 0.25
    dealias: float = 2.0 / 3.0

    def __post_init__(self: "SpectrumSettings") -> None:
        if not (self.K_max > 0 and self.delta_k > 0):
            raise ConfigurationError("spectrum.K_max and delta_k must be > 0")
        half = round(self.K_max / self.delta_k)
        if abs(half * self.delta_k - self.K_max) > 1e-9 * self.K_max:
            raise ConfigurationError(
                "spectrum.K_max must be a multiple of spectrum.delta_k"
            )
        if not 0 < self.dealias <= 1:
            raise ConfigurationError(
                f"spectrum.dealias must lie in (0, 1]: {self.dealias}"
            )


@dataclass(frozen=True)
class PhysicsSettings:
    nu: float = 1e-2

    def __post_init__(self: "PhysicsSettings") -> None:
        if not 0 < self.nu < 1:
            raise ConfigurationError(
                f"physics.nu must lie in (0, 1): {self.nu}"
            )


@dataclass(frozen=True)
class TimeSettings:
    """`dt` and `T` may be null, for the automatic step and horizon."""

    dt: Optional[float] = None
    T: Optional[float] = None
    observer_stride: int = 1

    def __post_init__(self: "TimeSettings") -> None:
        if self.dt is not None and not self.dt > 0:
            raise ConfigurationError(f"time.dt must be positive: {self.dt}")
        if self.T is not None and not self.T >= 0:
            raise ConfigurationError(f"time.T must be non-negative: {self.T}")
        if self.observer_stride < 1:
            raise ConfigurationError("time.observer_stride must be >= 1")


@dataclass(frozen=True)
class ExperimentSettings:
    """
    The experiment kind and the fields the kinds draw on.

    `k_list` and `nu_list` span the sweeps; `amplitudes` are either absolute
    or, with `amplitude_mode` "threshold", multiples of the implied
    bootstrap threshold.
    """

    kind: str = "linear-decay"
    k_list: Tuple[float, ...] = (0.0, 1.0, 5.0, 10.0, 40.0)
    nu_list: Tuple[float, ...] = (1e-1, 1e-2, 1e-3)
    amplitudes: Tuple[float, ...] = (0.1, 1.0, 10.0, 100.0)
    amplitude_mode: str = "threshold"
    amplitude: float = 1e-6
    profile: str = "gaussian"
    k0: float = 1.0
    sigma_k: float = 1.0
    n_samples: int = 10
    tolerance: float = 1e-7
    fit_skip: float = 0.1
    plots: bool = True

    def __post_init__(self: "ExperimentSettings") -> None:
        if self.kind not in KINDS:
            raise ConfigurationError(
                f"experiment.kind {self.kind!r} is not one of "
                f"{', '.join(KINDS)}"
            )
        if self.amplitude_mode not in ("absolute", "threshold"):
            raise ConfigurationError(
                "experiment.amplitude_mode must be 'absolute' or 'threshold'"
            )
        if not self.k_list or not self.nu_list or not self.amplitudes:
            raise ConfigurationError("Sweep lists must not be empty")
        for nu in self.nu_list:
            if not 0 < nu < 1:
                raise ConfigurationError(f"nu_list entry {nu} outside (0, 1)")
        if self.n_samples < 1:
            raise ConfigurationError("experiment.n_samples must be >= 1")
        if not 0 <= self.fit_skip < 1:
            raise ConfigurationError("experiment.fit_skip must lie in [0, 1)")
        if not self.tolerance > 0:
            raise ConfigurationError("experiment.tolerance must be positive")
        if not self.sigma_k > 0:
            raise ConfigurationError("experiment.sigma_k must be positive")


@dataclass(frozen=True)
class RunConfig:
    grid: GridSettings = field(default_factory=GridSettings)
    spectrum: SpectrumSettings = field(default_factory=SpectrumSettings)
    physics: PhysicsSettings = field(default_factory=PhysicsSettings)
    constants: EnergyConstants = field(default_factory=EnergyConstants)
    time: TimeSettings = field(default_factory=TimeSettings)
    experiment: ExperimentSettings = field(
        default_factory=ExperimentSettings
    )
    output_dir: str = "results"
    seed: int = 0

    def to_dict(self: "RunConfig") -> Dict[str, Any]:
        out = asdict(self)
        for key in ("k_list", "nu_list", "amplitudes"):
            out["experiment"][key] = list(out["experiment"][key])
        return out

    def dumps(self: "RunConfig") -> str:
        """Canonical JSON: sorted keys, two-space indent."""
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def with_overrides(
        self: "RunConfig",
        *,
        kind: Optional[str] = None,
        output_dir: Optional[Path] = None,
        seed: Optional[int] = None,
    ) -> "RunConfig":
        """Apply command-line flags on top of the file."""
        config = self
        if kind is not None:
            config = replace(
                config, experiment=replace(config.experiment, kind=kind)
            )
        if output_dir is not None:
            config = replace(config, output_dir=str(output_dir))
        if seed is not None:
            config = replace(config, seed=int(seed))
        return config


def _coerce(value: Any, annotation: Any, key: str) -> Any:
    """Check one JSON value against a resolved field annotation."""
    origin = get_origin(annotation)
    args = get_args(annotation)

    if origin is tuple:
        if not isinstance(value, list):
            raise ConfigurationError(f"{key} must be a list")
        item = args[0] if args else Any
        return tuple(
            _coerce(v, item, f"{key}[{i}]") for i, v in enumerate(value)
        )

    if type(None) in args:
        if value is None:
            return None
        rest = [a for a in args if a is not type(None)]
        if len(rest) != 1:
            raise ConfigurationError(f"Unsupported setting {key}")
        return _coerce(value, rest[0], key)

    if annotation is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{key} must be a number")
        if not math.isfinite(value):
            raise ConfigurationError(f"{key} must be finite")
        return float(value)

    if annotation is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{key} must be an integer")
        return value

    if annotation is bool:
        if not isinstance(value, bool):
            raise ConfigurationError(f"{key} must be true or false")
        return value

    if annotation is str:
        if not isinstance(value, str):
            raise ConfigurationError(f"{key} must be a string")
        return value

    raise ConfigurationError(f"Unsupported setting {key}")


def _section(cls: Type[T], data: Any, prefix: str) -> T:
    if not isinstance(data, Mapping):
        raise ConfigurationError(f"{prefix} must be a JSON object")

    known = {f.name for f in fields(cls)}  # type: ignore[arg-type]
    hints = get_type_hints(cls)
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigurationError(
            f"Unknown keys in {prefix}: {', '.join(unknown)}"
        )

    kwargs = {
        name: _coerce(value, hints[name], f"{prefix}.{name}")
        for name, value in data.items()
    }
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ConfigurationError(f"Invalid {prefix}: {e}") from e


SECTIONS: Dict[str, Type[Any]] = {
    "grid": GridSettings,
    "spectrum": SpectrumSettings,
    "physics": PhysicsSettings,
    "constants": EnergyConstants,
    "time": TimeSettings,
    "experiment": ExperimentSettings,
}


def parse_config(data: Any) -> RunConfig:
    """
    Build a RunConfig from a decoded JSON document.

    Raises:
        ConfigurationError: unknown keys, wrong types or values outside
          their ranges
    """
    if not isinstance(data, Mapping):
        raise ConfigurationError("The configuration must be a JSON object")

    allowed = set(SECTIONS) | {"output_dir", "seed"}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigurationError(f"Unknown keys: {', '.join(unknown)}")

    kwargs: Dict[str, Any] = {
        name: _section(cls, data[name], name)
        for name, cls in SECTIONS.items()
        if name in data
    }
    if "output_dir" in data:
        kwargs["output_dir"] = _coerce(data["output_dir"], str, "output_dir")
    if "seed" in data:
        seed = _coerce(data["seed"], int, "seed")
        if seed < 0:
            raise ConfigurationError(f"seed must be non-negative: {seed}")
        kwargs["seed"] = seed

    return RunConfig(**kwargs)


def loads(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Malformed configuration: {e}") from e
    return parse_config(data)


def load_config(path: Optional[Path]) -> RunConfig:
    """
    Read the configuration file, or the defaults when no path is given.

    Raises:
        ConfigurationError: the file is missing, unreadable or invalid
    """
    if path is None:
        return RunConfig()

    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigurationError(
            f"Cannot read configuration {path}: {e}"
        ) from e

    return loads(text)
