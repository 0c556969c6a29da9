"""Run configuration and its plain ``key = value`` file format."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .units import ALPHA, DEFAULT_SINGULARITY_FLOOR, PhysicalParams


class ConfigError(ValueError):
    pass


# documentation written next to each key in generated config files
_DOCS = {
    "Z": "nuclear charge (real to allow scaling experiments)",
    "alpha": "fine-structure constant",
    "N": "frequency grid denominator: omega_n = n / N",
    "omega_max": "top of the frequency grid; null -> cutoff_multiplier * omega_K(E=-3)",
    "tau_c": "field cutoff time; null -> Z^2 alpha^2 (Compton time in Bohr units)",
    "cutoff_multiplier": "moving cutoff at this multiple of the Keplerian frequency",
    "period_update_threshold": "move the cutoff when the Kepler period changed by more than this fraction",
    "steps_per_orbit": "RK4 steps per current Kepler period",
    "samples_per_period": "field coefficient samples per period of the highest admitted mode",
    "taper": "raised-cosine edge over the top 2% of admitted modes",
    "push_threshold": "push the electron when its energy falls below this",
    "push_target": "energy after a push",
    "ionisation_threshold": "stop when the energy rises above this",
    "t_end": "end time in tau0",
    "seed": "master seed for the field and the pushes",
    "enable_damping": "radiation reaction",
    "enable_noise": "stochastic electric field",
    "enable_magnetic": "stochastic magnetic (Lorentz) force; needs enable_noise",
    "enable_p4": "p^4 kinetic correction",
    "enable_spin_orbit": "spin-orbit coupling and spin precession",
    "r0": "initial position (Bohr radii)",
    "p0": "initial momentum",
    "spin": "initial spin vector; null -> |S| = sqrt(3)/2 with random orientation",
    "sample_stride": "write one time-series row every this many steps",
    "checkpoint_every": "write a checkpoint every this many tau0 (0 disables periodic checkpoints)",
    "singularity_floor": "abort when |r| drops below this",
    "max_chunk_samples": "largest block of coefficient samples held in memory",
}


@dataclass
class RunConfig:
    Z: float = 3.0
    alpha: float = ALPHA
    N: int = 100_000
    omega_max: float | None = None
    tau_c: float | None = None
    cutoff_multiplier: float = 2.5
    period_update_threshold: float = 0.20
    steps_per_orbit: int = 4000
    samples_per_period: float = 27.0
    taper: bool = False
    push_threshold: float = -1.6
    push_target: float = -1.0
    ionisation_threshold: float = -0.05
    t_end: float = 1.0e5
    seed: int = 0
    enable_damping: bool = True
    enable_noise: bool = True
    enable_magnetic: bool = True
    enable_p4: bool = True
    enable_spin_orbit: bool = True
    r0: list = field(default_factory=lambda: [1.0, 0.0, 0.0])
    p0: list = field(default_factory=lambda: [0.0, 1.0, 0.0])
    spin: list | None = None
    sample_stride: int = 100
    checkpoint_every: float = 0.0
    singularity_floor: float = DEFAULT_SINGULARITY_FLOOR
    max_chunk_samples: int = 1 << 20

    def __post_init__(self):
        if self.omega_max is None:
            self.omega_max = self.cutoff_multiplier * 6.0**1.5
        self.validate()

    def validate(self):
        if not self.push_threshold < self.push_target < self.ionisation_threshold < 0:
            raise ConfigError(
                "need push_threshold < push_target < ionisation_threshold < 0, got "
                f"{self.push_threshold}, {self.push_target}, {self.ionisation_threshold}"
            )
        if self.steps_per_orbit < 100:
            raise ConfigError(f"steps_per_orbit must be >= 100, got {self.steps_per_orbit}")
        if self.N < 1:
            raise ConfigError(f"N must be >= 1, got {self.N}")
        if self.samples_per_period < 25:
            raise ConfigError("samples_per_period must be >= 25")
        if self.sample_stride < 1:
            raise ConfigError("sample_stride must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        for key in ("r0", "p0") + (("spin",) if self.spin is not None else ()):
            value = getattr(self, key)
            if len(value) != 3:
                raise ConfigError(f"{key} must have three components")

    @property
    def params(self) -> PhysicalParams:
        return PhysicalParams(self.Z, self.alpha)

    @property
    def effective_tau_c(self) -> float:
        return self.params.tau_c if self.tau_c is None else self.tau_c

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def hash(self) -> bytes:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).digest()

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_INT_KEYS = {"N", "steps_per_orbit", "seed", "sample_stride", "max_chunk_samples"}
_BOOL_KEYS = {"taper", "enable_damping", "enable_noise", "enable_magnetic", "enable_p4", "enable_spin_orbit"}
_VECTOR_KEYS = {"r0", "p0", "spin"}
_OPTIONAL_KEYS = {"omega_max", "tau_c", "spin"}


def _coerce(key, value, where):
    if value is None:
        if key in _OPTIONAL_KEYS:
            return None
        raise ConfigError(f"{where}: key '{key}' may not be null")
    if key in _BOOL_KEYS:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: key '{key}' expects true/false, got {value!r}")
        return value
    if key in _VECTOR_KEYS:
        if not (isinstance(value, list) and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
            raise ConfigError(f"{where}: key '{key}' expects a list of numbers, got {value!r}")
        return [float(v) for v in value]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: key '{key}' expects a number, got {value!r}")
    if key in _INT_KEYS:
        if float(value) != int(value):
            raise ConfigError(f"{where}: key '{key}' expects an integer, got {value!r}")
        return int(value)
    if not math.isfinite(value):
        raise ConfigError(f"{where}: key '{key}' must be finite")
    return float(value)


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    """Parse ``key = value`` lines; values use JSON syntax, ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        key, _, rhs = (part.strip() for part in line.partition("="))
        if key not in _FIELDS:
            raise ConfigError(f"{where}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"{where}: duplicate key '{key}'")
        try:
            value = json.loads(rhs)
        except json.JSONDecodeError:
            raise ConfigError(f"{where}: cannot parse value for '{key}': {rhs!r}") from None
        values[key] = _coerce(key, value, where)
    try:
        return RunConfig(**values)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, str(path))


def format_config(config: RunConfig) -> str:
    lines = []
    for name, value in config.to_dict().items():
        lines.append(f"# {_DOCS[name]}")
        lines.append(f"{name} = {json.dumps(value)}")
    return "\n".join(lines) + "\n"


def write_config(config: RunConfig, path) -> None:
    Path(path).write_text(format_config(config))
