"""Experiment configuration: flat key-value text with sections.

The file format is INI-style with a ``[model]`` and an ``[experiment]``
section; keys are reported in errors as dotted paths (``model.beta``).  A
fixed-edge-density sweep can set ``model.edge_density``, which overrides
``beta`` via ``beta = edge_density * (1 - gamma)``.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields

from .geometry import Space
from .kernel import ModelParams, parse_profile

__all__ = ["ConfigError", "ExperimentConfig", "EXPERIMENT_KINDS"]

EXPERIMENT_KINDS = (
    "grow",
    "palm",
    "clustering-sweep",
    "edge-length",
    "degree",
    "heatmap",
    "oracle",
)


class ConfigError(ValueError):
    """Invalid configuration; carries the dotted field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _float_list(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.replace(",", " ").split())


@dataclass
class ExperimentConfig:
    kind: str = "grow"
    # model
    d: int = 1
    beta: float = 1.0
    gamma: float = 0.5
    profile: str = "indicator(a=0.5)"
    edge_density: float | None = None
    # execution
    t: float = 1000.0
    replicates: int = 1
    seed: int = 1
    q: float = 0.99
    samples: int = 10000
    root_age: str = "uniform"
    root_ages: tuple[float, ...] = (0.2, 0.8)
    s0: float = 1.0
    n_roots: int = 200
    n_pairs: int = 500
    widths: tuple[float, ...] = (1.0, 2.0, 4.0, 8.0)
    gammas: tuple[float, ...] = (0.3, 0.6)
    edge_densities: tuple[float, ...] = (1.0,)
    sweep: str = "width"
    bins: int = 20
    k_max: int = 30
    grid_nx: int = 120
    grid_ns: int = 80
    jobs: int = 1
    out: str = "results"

    _MODEL_KEYS = ("d", "beta", "gamma", "profile", "edge_density")

    def resolved_beta(self, gamma: float | None = None) -> float:
        g = self.gamma if gamma is None else gamma
        if self.edge_density is not None:
            return self.edge_density * (1.0 - g)
        return self.beta

    def model_params(self) -> ModelParams:
        space = Space(d=self.d, volume=1.0)
        try:
            profile = parse_profile(self.profile, d=self.d)
        except ValueError as exc:
            raise ConfigError("model.profile", str(exc)) from exc
        try:
            return ModelParams(
                beta=self.resolved_beta(), gamma=self.gamma, profile=profile, space=space
            )
        except ValueError as exc:
            raise ConfigError("model", str(exc)) from exc

    def validate(self) -> None:
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError("experiment.kind", f"unknown kind {self.kind!r}")
        if self.d < 1:
            raise ConfigError("model.d", "dimension must be a positive integer")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError("model.gamma", f"must lie in (0, 1), got {self.gamma}")
        if self.resolved_beta() <= 0:
            raise ConfigError("model.beta", "must be positive")
        if self.t <= 0:
            raise ConfigError("experiment.t", "horizon must be positive")
        if self.replicates < 1:
            raise ConfigError("experiment.replicates", "need at least one replicate")
        if not 0.0 < self.q <= 1.0:
            raise ConfigError("experiment.q", f"must lie in (0, 1], got {self.q}")
        if self.root_age != "uniform":
            try:
                u = float(self.root_age)
            except ValueError:
                raise ConfigError(
                    "experiment.root_age", f"must be 'uniform' or a number, got {self.root_age!r}"
                ) from None
            if not 0.0 < u <= 1.0:
                raise ConfigError("experiment.root_age", "must lie in (0, 1]")
        if self.sweep not in ("width", "root_age"):
            raise ConfigError("experiment.sweep", f"unknown sweep {self.sweep!r}")
        if self.kind == "heatmap" and self.d != 1:
            raise ConfigError("model.d", "heatmaps are defined for dimension 1")
        self.model_params()

    def to_text(self) -> str:
        cp = configparser.ConfigParser()
        cp["model"] = {}
        cp["experiment"] = {}
        for f in fields(self):
            if f.name.startswith("_"):
                continue
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, tuple):
                value = ", ".join(repr(v) for v in value)
            section = "model" if f.name in self._MODEL_KEYS else "experiment"
            cp[section][f.name] = str(value)
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError("<file>", f"cannot parse config: {exc}") from exc
        known = {f.name: f for f in fields(cls) if not f.name.startswith("_")}
        kwargs = {}
        for section in cp.sections():
            if section not in ("model", "experiment"):
                raise ConfigError(section, "unknown section")
            for key, raw in cp[section].items():
                if key not in known:
                    raise ConfigError(f"{section}.{key}", "unknown key")
                kwargs[key] = _parse_value(cls, key, raw, f"{section}.{key}")
        return cls(**kwargs)

    def items(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name.startswith("_"):
                continue
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out


def _parse_value(cls, key: str, raw: str, path: str):
    default = getattr(cls, key, None)
    raw = raw.strip()
    try:
        if key == "edge_density":
            return None if raw in ("", "none", "None") else float(raw)
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return _float_list(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(path, f"bad value {raw!r}") from exc
