"""Strict JSON scenario configuration."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError

SCENARIOS = ("modal-ideal", "modal-slm", "modal-experimental-approx", "oct-dense",
             "oct-sparse", "two-d", "localization", "diagnostics")
SOLVERS = ("auto", "bp", "lasso", "dantzig", "ft", "ls")
DIAGNOSTICS = ("isotropy", "incoherence", "concentration", "rip")
LAMBDA_RULES = ("default", "universal")


@dataclass(frozen=True)
class ScenarioConfig:
    """One experiment.  ``M`` and ``snr_db`` may be scalars or sweep lists;
    ``None`` in ``snr_db`` means noise-free."""

    scenario: str
    N: int = 64
    s: int = 4
    M: tuple[int, ...] = (25,)
    snr_db: tuple[float | None, ...] = (None,)
    runs: int = 1
    seed: int = 0
    solver: str = "auto"
    # Number, "default" (10 sqrt(log K)) or "universal" (sqrt(2 log K)).
    lam: float | str = "default"
    nonneg: bool = False
    sigma: float = 1.0
    wavelength: float = 1.0
    grid_points: int = 1024
    grid_halfwidth: float = 12.0
    # modal-experimental-approx: flipped-Gaussian orders and amplitudes.
    modes: tuple[int, ...] = (1,)
    weights: tuple[float, ...] | None = None
    # OCT: candidate depth count and Gaussian source width (None for flat).
    depths: int | None = None
    source_width: float | None = None
    # two-d: modes per axis.
    shape: tuple[int, int] = (10, 10)
    # localization carriers and path lengths.
    carriers: tuple[float, float] = (2.0, 1.0)
    paths: tuple[float, float] = (0.3, 1.1)
    amplitudes: tuple[float, float] = (1.0, 0.7)
    light_speed: float = 1.0
    what: tuple[str, ...] = DIAGNOSTICS
    trials: int = 1000
    workers: int = 1
    record_timing: bool = False
    plots: bool = False
    out: str = "results"

    def __post_init__(self):
        checks = [
            (self.scenario in SCENARIOS, "scenario", f"must be one of {', '.join(SCENARIOS)}"),
            (self.solver in SOLVERS, "solver", f"must be one of {', '.join(SOLVERS)}"),
            (self.N >= 1, "N", "must be at least 1"),
            (1 <= self.s <= self.N, "s", "must satisfy 1 <= s <= N"),
            (len(self.M) >= 1 and all(m >= 1 for m in self.M), "M", "entries must be at least 1"),
            (len(self.snr_db) >= 1, "snr_db", "needs at least one entry"),
            (self.runs >= 1, "runs", "must be at least 1"),
            (0 <= self.seed < 2 ** 64, "seed", "must fit in an unsigned 64-bit integer"),
            (self.workers >= 1, "workers", "must be at least 1"),
            (self.trials >= 1, "trials", "must be at least 1"),
            (self.sigma > 0 and self.wavelength > 0, "sigma", "optical scales must be positive"),
            (isinstance(self.lam, float) and self.lam > 0 or self.lam in LAMBDA_RULES,
             "lambda", f"must be positive or one of {', '.join(LAMBDA_RULES)}"),
            (all(w in DIAGNOSTICS for w in self.what), "what",
             f"entries must be among {', '.join(DIAGNOSTICS)}"),
            (self.weights is None or len(self.weights) == len(self.modes), "weights",
             "needs one weight per mode"),
        ]
        for ok, name, message in checks:
            if not ok:
                raise ConfigError(f"field '{name}': {message}")

    @property
    def max_m(self) -> int:
        return max(self.M)

    def with_overrides(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})


# JSON key -> (attribute, converter)
def _int(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError("expected an integer")
    return v


def _num(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError("expected a number")
    return float(v)


def _bool(v):
    if not isinstance(v, bool):
        raise TypeError("expected true or false")
    return v


def _str(v):
    if not isinstance(v, str):
        raise TypeError("expected a string")
    return v


def _list_of(conv, length=None):
    def convert(v):
        items = v if isinstance(v, list) else [v]
        if length is not None and len(items) != length:
            raise TypeError(f"expected {length} entries")
        return tuple(conv(item) for item in items)
    return convert


def _snr(v):
    if v is None or v == "inf":
        return None
    value = _num(v)
    return None if math.isinf(value) else value


def _lam(v):
    return v if isinstance(v, str) else _num(v)


def _optional(conv):
    return lambda v: None if v is None else conv(v)


_FIELDS = {
    "scenario": ("scenario", _str),
    "N": ("N", _int),
    "s": ("s", _int),
    "M": ("M", _list_of(_int)),
    "snr_db": ("snr_db", _list_of(_snr)),
    "runs": ("runs", _int),
    "seed": ("seed", _int),
    "solver": ("solver", _str),
    "lambda": ("lam", _lam),
    "nonneg": ("nonneg", _bool),
    "sigma": ("sigma", _num),
    "wavelength": ("wavelength", _num),
    "grid_points": ("grid_points", _int),
    "grid_halfwidth": ("grid_halfwidth", _num),
    "modes": ("modes", _list_of(_int)),
    "weights": ("weights", _optional(_list_of(_num))),
    "depths": ("depths", _optional(_int)),
    "source_width": ("source_width", _optional(_num)),
    "shape": ("shape", _list_of(_int, 2)),
    "carriers": ("carriers", _list_of(_num, 2)),
    "paths": ("paths", _list_of(_num, 2)),
    "amplitudes": ("amplitudes", _list_of(_num, 2)),
    "light_speed": ("light_speed", _num),
    "what": ("what", _list_of(_str)),
    "trials": ("trials", _int),
    "workers": ("workers", _int),
    "record_timing": ("record_timing", _bool),
    "plots": ("plots", _bool),
    "out": ("out", _str),
}


def _key_line(text: str, key: str) -> int | None:
    for number, line in enumerate(text.splitlines(), 1):
        if f'"{key}"' in line:
            return number
    return None


def _where(text: str | None, key: str) -> str:
    line = _key_line(text, key) if text else None
    return f"line {line}, field '{key}'" if line else f"field '{key}'"


def config_from_dict(data: dict, text: str | None = None) -> ScenarioConfig:
    """Validate a decoded JSON object; ``text`` only improves diagnostics."""
    if not isinstance(data, dict):
        raise ConfigError("a config must be a JSON object")
    if "scenario" not in data:
        raise ConfigError("field 'scenario' is required")
    kwargs = {}
    for key, value in data.items():
        if key not in _FIELDS:
            raise ConfigError(f"{_where(text, key)}: unknown key")
        attr, conv = _FIELDS[key]
        try:
            kwargs[attr] = conv(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{_where(text, key)}: {exc}") from None
    try:
        return ScenarioConfig(**kwargs)
    except ConfigError as exc:
        message = str(exc)
        for key, (attr, _) in _FIELDS.items():
            if f"field '{attr}'" in message or f"field '{key}'" in message:
                detail = message.split(": ", 1)[-1]
                raise ConfigError(f"{_where(text, key)}: {detail}") from None
        raise


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return config_from_dict(data, text)


def config_to_dict(config: ScenarioConfig) -> dict:
    """JSON-ready mapping that ``config_from_dict`` accepts back."""
    out = {}
    for key, (attr, _) in _FIELDS.items():
        value = getattr(config, attr)
        if isinstance(value, tuple):
            value = list(value)
        out[key] = value
    return out
