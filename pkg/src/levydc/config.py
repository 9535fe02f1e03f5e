"""Flat dotted-key configuration: text files plus command-line overrides.

Format: one ``key = value`` per line, ``#`` starts a comment, keys are
dotted paths, list values are comma-separated.  Overrides are ``key=value``
strings applied on top of the file.  Unknown keys are rejected so typos
fail loudly.
"""

from __future__ import annotations

from pathlib import Path


class ConfigError(ValueError):
    """Malformed configuration; message carries the key or line."""


# Every recognized key with its default; None means "required when read".
DEFAULTS = {
    "levy.kind": "truncated-stable",
    "levy.alpha": None,
    "cut.epsilon": "0.1",
    "cut.h": None,
    "cut.h_mode": "match-ar-variance",
    "cut.T": "1.0",
    "ar.threshold_eps": "0.01",
    "sde.example": "sin-cos",
    "sde.sigma_mode": "closed-form",
    "sde.x0": "0.0",
    "sde.compensate_large_jumps": "true",
    "sde.small_jump_coupling": "shared-brownian",
    "scheme": "2",
    "method": "dc",
    "methods": "ar,dc",
    "grid.benchmark_k": "14",
    "grid.coarse_ks": "9,10,11,12",
    "compare.alphas": None,
    "mc.loops": "20",
    "mc.trajectories": "100",
    "mc.p_values": "2,4,6,8,10",
    "seed": "0",
    "jobs": "1",
    "out.dir": "out",
    "simulate.n": "512",
    "simulate.trajectories": "1",
    "validate.runs": "1000",
    "validate.ks_samples": "10000",
    "validate.laplace_samples": "100000",
    "validate.laplace_r": "0.5,1,2",
    "validate.fixed_time": "1.0",
    "validate.inject_fault": "none",
}


def parse_config_file(path: str) -> dict:
    out: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def apply_overrides(values: dict, overrides) -> dict:
    out = dict(values)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key=value")
        key, value = (part.strip() for part in item.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"override references unknown key {key!r}")
        out[key] = value
    return out


class RunConfig:
    """Typed access over the merged key-value map."""

    def __init__(self, values: dict) -> None:
        self.values = {**{k: v for k, v in DEFAULTS.items() if v is not None}, **values}

    def raw(self, key: str, required: bool = True) -> str:
        if key not in DEFAULTS:
            raise ConfigError(f"unknown key {key!r}")
        if key not in self.values:
            if required:
                raise ConfigError(f"missing required key {key!r}")
            return None
        return self.values[key]

    def get_float(self, key: str, required: bool = True):
        raw = self.raw(key, required)
        if raw is None:
            return None
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: expected a number, got {raw!r}") from exc

    def get_int(self, key: str, required: bool = True):
        raw = self.raw(key, required)
        if raw is None:
            return None
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: expected an integer, got {raw!r}") from exc

    def get_str(self, key: str, choices=None) -> str:
        raw = self.raw(key)
        if choices is not None and raw not in choices:
            raise ConfigError(f"key {key!r}: expected one of {choices}, got {raw!r}")
        return raw

    def get_bool(self, key: str) -> bool:
        raw = self.raw(key).lower()
        if raw in ("true", "1", "yes", "on"):
            return True
        if raw in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"key {key!r}: expected a boolean, got {raw!r}")

    def get_float_list(self, key: str, required: bool = True):
        raw = self.raw(key, required)
        if raw is None:
            return None
        try:
            return tuple(float(part) for part in raw.split(",") if part.strip())
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: expected numbers, got {raw!r}") from exc

    def get_int_list(self, key: str, required: bool = True):
        raw = self.raw(key, required)
        if raw is None:
            return None
        try:
            return tuple(int(part) for part in raw.split(",") if part.strip())
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: expected integers, got {raw!r}") from exc

    def snapshot(self) -> dict:
        return dict(sorted(self.values.items()))


def load(config_path, overrides) -> RunConfig:
    values = parse_config_file(config_path) if config_path else {}
    return RunConfig(apply_overrides(values, overrides))
