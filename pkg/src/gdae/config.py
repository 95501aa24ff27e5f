"""Experiment configuration files.

TOML with one level of sections::

    seed = 0

    [data]
    train = "train.csv"        # .csv dataset or IDX image file (optionally .gz)
    limit = 5000

    [corruption]
    kind = "salt_pepper"
    corrupt_prob = 0.5

    [model]
    family = "mlp"
    hidden = 256

    [output]
    model = "model.gdae"
    metrics = "metrics.csv"

Relative paths resolve against the config file's directory.  Unknown
sections or keys are rejected; input files must exist when parsing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError

_INT, _FLOAT, _STR, _BOOL = int, float, str, bool

SCHEMA = {
    "": {"seed": _INT},
    "data": {"train": _STR, "valid": _STR, "limit": _INT, "valid_limit": _INT},
    "corruption": {"kind": _STR, "eps": _FLOAT, "corrupt_prob": _FLOAT, "sigma": _FLOAT},
    "model": {"family": _STR, "K": _INT, "alpha": _FLOAT, "sigma_x": _FLOAT, "sigma_c": _FLOAT, "hidden": _INT},
    "train": {"epochs": _INT, "minibatch": _INT, "learning_rate": _FLOAT, "momentum": _FLOAT,
              "lr_decay": _FLOAT, "weight_decay": _FLOAT},
    "walkback": {"enabled": _BOOL, "p": _FLOAT, "max_steps": _INT, "fixed_steps": _INT},
    "chain": {"n_steps": _INT, "burn_in": _INT, "thin": _INT},
    "output": {"model": _STR, "metrics": _STR},
}

DEFAULTS = {
    "seed": 0,
    "data.limit": None,
    "data.valid": None,
    "data.valid_limit": None,
    "corruption.kind": None,
    "corruption.eps": 0.5,
    "corruption.corrupt_prob": 0.5,
    "corruption.sigma": None,
    "model.family": None,
    "model.K": None,
    "model.alpha": 0.1,
    "model.sigma_x": None,
    "model.sigma_c": None,
    "model.hidden": 256,
    "train.epochs": 20,
    "train.minibatch": 32,
    "train.learning_rate": 0.01,
    "train.momentum": 0.9,
    "train.lr_decay": 0.99,
    "train.weight_decay": 0.0,
    "walkback.enabled": False,
    "walkback.p": 0.5,
    "walkback.max_steps": 20,
    "walkback.fixed_steps": None,
    "chain.n_steps": 5000,
    "chain.burn_in": None,
    "chain.thin": 1,
    "output.model": "model.gdae",
    "output.metrics": "metrics.csv",
}

REQUIRED = ("data.train", "corruption.kind", "model.family")
CHOICES = {
    "corruption.kind": ("discrete_flip", "salt_pepper", "gaussian"),
    "model.family": ("multinomial", "parzen", "mlp"),
}


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else v

    def path(self, key) -> Path | None:
        v = self.values.get(key)
        return None if v is None else (self.base_dir / v)


def _check_type(key, value, kind):
    if kind is _FLOAT and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if kind is _INT and isinstance(value, bool):
        raise ConfigError(f"{key}: expected int, got bool")
    if not isinstance(value, kind):
        raise ConfigError(f"{key}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def parse_config_text(text: str, base_dir: Path = Path(".")) -> ExperimentConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"syntax error: {exc}") from None
    values = dict(DEFAULTS)
    for name, value in doc.items():
        if isinstance(value, dict):
            if name not in SCHEMA or name == "":
                raise ConfigError(f"unknown section [{name}]")
            for key, v in value.items():
                if isinstance(v, dict):
                    raise ConfigError(f"{name}.{key}: nested tables are not allowed")
                if key not in SCHEMA[name]:
                    raise ConfigError(f"unknown key {name}.{key}")
                values[f"{name}.{key}"] = _check_type(f"{name}.{key}", v, SCHEMA[name][key])
        else:
            if name not in SCHEMA[""]:
                raise ConfigError(f"unknown key {name}")
            values[name] = _check_type(name, value, SCHEMA[""][name])
    for key in REQUIRED:
        if values.get(key) is None:
            raise ConfigError(f"missing required key {key}")
    for key, options in CHOICES.items():
        if values[key] not in options:
            raise ConfigError(f"{key}: {values[key]!r} is not one of {', '.join(options)}")
    cfg = ExperimentConfig(values, Path(base_dir))
    for key in ("data.train", "data.valid"):
        p = cfg.path(key)
        if p is not None and not p.exists():
            raise ConfigError(f"{key}: file not found: {p}")
    return cfg


def load_config(path) -> ExperimentConfig:
    """Parse a config file; a missing file raises ``FileNotFoundError``."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_config_text(text, path.parent)
