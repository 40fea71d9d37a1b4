"""Flat `key = value` experiment configuration files.

Dotted keys group related settings (train.lambda, out.path, ...). Lines
starting with # and blank lines are ignored. Unknown keys are rejected so
typos fail loudly instead of silently using a default.
"""
from __future__ import annotations

KNOWN_KEYS = frozenset(
    {
        "dataset",
        "data.path",
        "methods",
        "repeats",
        "seed",
        "workers",
        "train.lambda",
        "train.epochs",
        "train.batch_size",
        "train.lr",
        "train.h_slope",
        "train.adversary_mode",
        "train.fair_mode",
        "train.loss_kind",
        "train.z_dim",
        "train.encoder_hidden",
        "train.predictor_hidden",
        "train.steps_per_player",
        "ae.e",
        "ae.epochs",
        "ae.input",
        "baseline.ae_latent",
        "baseline.ae_epochs",
        "boost.rounds",
        "boost.learning_rate",
        "metrics.cv_sqrt",
        "sweep.lambdas",
        "out.path",
        "out.format",
        "out.history_dir",
    }
)


class ConfigError(ValueError):
    pass


def parse_config_text(text: str) -> dict:
    values = {}
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        values[key] = value
    return values


def load_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def get_str(cfg: dict, key: str, default=None) -> str:
    return cfg.get(key, default)


def get_int(cfg: dict, key: str, default=None) -> int:
    if key not in cfg:
        return default
    try:
        return int(cfg[key])
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {cfg[key]!r}") from None


def get_float(cfg: dict, key: str, default=None) -> float:
    if key not in cfg:
        return default
    try:
        return float(cfg[key])
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {cfg[key]!r}") from None


def get_bool(cfg: dict, key: str, default=None) -> bool:
    if key not in cfg:
        return default
    value = cfg[key].lower()
    if value in ("true", "yes", "1"):
        return True
    if value in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key} must be a boolean, got {cfg[key]!r}")


def get_list(cfg: dict, key: str, default=None) -> list:
    if key not in cfg:
        return list(default) if default is not None else None
    return [item.strip() for item in cfg[key].split(",") if item.strip()]


def get_float_list(cfg: dict, key: str, default=None) -> list:
    items = get_list(cfg, key, None)
    if items is None:
        return list(default) if default is not None else None
    try:
        return [float(item) for item in items]
    except ValueError:
        raise ConfigError(f"{key} must be a comma-separated number list") from None
