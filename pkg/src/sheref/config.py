"""Declarative run configuration: INI files with ``[model]``, ``[policy]``, ``[run]`` and ``[boost]`` sections.

A dotted key such as ``model.variant`` is key ``variant`` in section
``[model]``.  ``run.alpha`` and ``run.method`` may list several values
separated by commas; a simulation runs every (method, alpha) pair.

The resolved configuration is echoed into every output artifact as comment
lines between ``# config-begin`` and ``# config-end``; :func:`load_config`
accepts such an artifact directly, which is how a run is reproduced from its
output.
"""
from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .models import ModelSpec
from .types import Method, PolicyKind, PolicySpec, ScenarioConfig

SECTIONS = ("model", "policy", "run", "boost")

MODEL_KEYS = {
    "variant": str,
    "mu": float,
    "sigma": float,
    "sigma_z": float,
    "factor_loading_range": "floats",
    "loadings": "floats",
    "ar_pre": float,
    "ar_post": float,
    "noise_rho": float,
    "var_coef": float,
}
POLICY_KEYS = {"kind": str, "initial_active": int}
RUN_KEYS = {
    "alpha": "floats",
    "method": "strs",
    "reps": int,
    "seed": int,
    "cap": int,
    "horizon": int,
    "pool_size": int,
    "change_p": float,
    "evalue_convention": str,
    "boost_tol": float,
    "boost_b_max": float,
}
BOOST_KEYS = {
    "alpha": "floats",
    "scale": "floats",
    "shift": "floats",
    "cap": int,
    "b_max": float,
    "tol": float,
}
KEYS = {"model": MODEL_KEYS, "policy": POLICY_KEYS, "run": RUN_KEYS, "boost": BOOST_KEYS}

ECHO_BEGIN = "# config-begin"
ECHO_END = "# config-end"


def _convert(section: str, key: str, raw: str):
    kind = KEYS[section][key]
    name = f"{section}.{key}"
    try:
        if kind == "floats":
            return tuple(float(x) for x in raw.replace(",", " ").split())
        if kind == "strs":
            return tuple(x.strip() for x in raw.split(",") if x.strip())
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"cannot parse {name} = {raw!r}", key=name) from None


@dataclass
class RunConfig:
    """Parsed configuration: ``values[section][key]`` holds typed values."""

    values: dict = field(default_factory=lambda: {s: {} for s in SECTIONS})

    def get(self, dotted: str, default=None):
        section, key = dotted.split(".", 1)
        return self.values.get(section, {}).get(key, default)

    def require(self, dotted: str):
        value = self.get(dotted)
        if value is None:
            raise ConfigError(f"missing required key {dotted}", key=dotted)
        return value

    def set(self, dotted: str, value):
        section, key = dotted.split(".", 1)
        if section not in KEYS or key not in KEYS[section]:
            raise ConfigError(f"unknown key {dotted}", key=dotted)
        self.values[section][key] = value

    # -- typed views -----------------------------------------------------

    def model_spec(self) -> ModelSpec:
        kw = dict(self.values["model"])
        if "variant" not in kw:
            raise ConfigError("missing required key model.variant", key="model.variant")
        if "factor_loading_range" in kw:
            r = kw["factor_loading_range"]
            if len(r) != 2:
                raise ConfigError("model.factor_loading_range needs two numbers", key="model.factor_loading_range")
        return ModelSpec(**kw)

    def policy_spec(self) -> PolicySpec:
        p = self.values["policy"]
        try:
            kind = PolicyKind(p.get("kind", PolicyKind.REPLACE_FROM_POOL.value))
        except ValueError:
            raise ConfigError(f"unknown policy {p.get('kind')!r}", key="policy.kind") from None
        return PolicySpec(kind, p.get("initial_active"))

    def methods(self) -> list[Method]:
        return [Method.parse(m) for m in self.get("run.method", ("SHEREF",))]

    def alphas(self) -> list[float]:
        return list(self.get("run.alpha", (0.1,)))

    def scenarios(self) -> list[ScenarioConfig]:
        """One scenario per (method, alpha) pair, methods outermost."""
        seed = self.require("run.seed")
        model = self.model_spec()
        policy = self.policy_spec()
        r = self.values["run"]
        common = {k: r[k] for k in ("reps", "cap", "horizon", "pool_size", "change_p",
                                    "evalue_convention", "boost_tol", "boost_b_max") if k in r}
        return [
            ScenarioConfig(model=model, policy=policy, alpha=a, method=m, seed=seed, **common)
            for m in self.methods()
            for a in self.alphas()
        ]

    # -- serialization ---------------------------------------------------

    def to_ini(self) -> str:
        lines = []
        for section in SECTIONS:
            items = self.values.get(section, {})
            if not items:
                continue
            lines.append(f"[{section}]")
            for key in KEYS[section]:
                if key in items:
                    lines.append(f"{key} = {_format(items[key])}")
            lines.append("")
        return "\n".join(lines).rstrip() + "\n"

    def echo(self) -> str:
        """The configuration as ``#`` comment lines for embedding in artifacts."""
        body = [f"# {line}" if line else "#" for line in self.to_ini().splitlines()]
        return "\n".join([ECHO_BEGIN, *body, ECHO_END]) + "\n"

    def to_dict(self) -> dict:
        return {s: {k: list(v) if isinstance(v, tuple) else v for k, v in self.values[s].items()}
                for s in SECTIONS if self.values.get(s)}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        cfg = cls()
        for section, items in d.items():
            if section not in KEYS:
                raise ConfigError(f"unknown section [{section}]", key=section)
            for key, value in items.items():
                cfg.set(f"{section}.{key}", _convert(section, key, _format(value)) if key in KEYS[section] else value)
        return cfg


def _format(value) -> str:
    if isinstance(value, (tuple, list)):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config(text: str) -> RunConfig:
    """Parse INI text, or an artifact carrying an echoed configuration."""
    if ECHO_BEGIN in text:
        block = text.split(ECHO_BEGIN, 1)[1].split(ECHO_END, 1)[0]
        text = "\n".join(line[2:] if line.startswith("# ") else line.lstrip("#") for line in block.splitlines())
    else:
        first = text.lstrip().split("\n", 1)[0]
        if first.startswith("{"):
            try:
                header = json.loads(first)
            except json.JSONDecodeError:
                header = None
            if isinstance(header, dict) and "config" in header:
                return RunConfig.from_dict(header["config"])
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from None
    cfg = RunConfig()
    for section in parser.sections():
        if section not in KEYS:
            raise ConfigError(f"unknown section [{section}]", key=section)
        for key, raw in parser.items(section):
            if key not in KEYS[section]:
                raise ConfigError(f"unknown key {section}.{key}", key=f"{section}.{key}")
            cfg.values[section][key] = _convert(section, key, raw)
    return cfg


def load_config(path) -> RunConfig:
    """Read a config file; ``OSError`` propagates for the caller to report."""
    return parse_config(Path(path).read_text())


def apply_overrides(cfg: RunConfig, alpha=None, method=None, reps=None, seed=None) -> RunConfig:
    """Command-line overrides replace file values."""
    if alpha is not None:
        cfg.set("run.alpha", tuple(alpha) if isinstance(alpha, (list, tuple)) else (float(alpha),))
    if method is not None:
        cfg.set("run.method", tuple(method) if isinstance(method, (list, tuple)) else (method,))
    if reps is not None:
        cfg.set("run.reps", int(reps))
    if seed is not None:
        cfg.set("run.seed", int(seed))
    return cfg
