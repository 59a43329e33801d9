"""Flat key=value run configuration shared by every CLI subcommand."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields, replace

from machlab.errors import ConfigurationError
from machlab.initial_data import PROFILES, DataRecipe


@dataclass(frozen=True)
class RunConfig:
    # grid and model
    n: int = 128
    L: float = 2 * math.pi
    gamma_bar: float = 0.2
    # single run and sweep
    epsilon: float = 0.1
    epsilons: tuple[float, ...] = (0.1, 0.05, 0.025, 0.0125)
    T: float = 0.5
    dt_safety: float = 0.5
    dt_max: float = 0.0025
    blowup_threshold: float = 1e4
    sample_stride: int = 10
    # exponents
    s: float = 0.5
    alpha: float = 0.5
    p: float = 1.5
    q: tuple[float, ...] = (1.5, 2.0, 4.0)
    F: str = "one_plus_log"
    # data recipe
    data_recipe: str = "lbmo_vortex"
    k: float = 8.0
    R: float = 1.5
    C0: float = 500.0
    acoustic_amplitude: float = 0.3
    compressive_amplitude: float = 0.3
    noise_amplitude: float = 0.0
    well_prepared: bool = False
    seed: int = 0
    # lifespan probe
    lifespan_C0: float = 1.0
    osgood_C: float = 1.0
    # outputs and inputs
    out_csv: str = "trajectory.csv"
    store_history: bool = False
    field: str = ""
    field_b: str = ""
    history: str = ""
    particles: int = 64
    t_calibration: float = 0.1
    threads: int = 1

    def recipe(self, epsilon: float | None = None) -> DataRecipe:
        return DataRecipe(
            n=self.n, L=self.L, profile=self.data_recipe, epsilon=self.epsilon if epsilon is None else epsilon,
            k=self.k, R=self.R, s=self.s, alpha=self.alpha, C0=self.C0, gamma=2.0 * self.gamma_bar + 1.0,
            acoustic_amplitude=self.acoustic_amplitude, compressive_amplitude=self.compressive_amplitude,
            noise_amplitude=self.noise_amplitude, seed=self.seed, well_prepared=self.well_prepared)

    def validate(self) -> "RunConfig":
        if self.n < 16 or self.n & (self.n - 1):
            raise ConfigurationError(f"n must be a power of two >= 16, got {self.n}")
        if not self.L > 0:
            raise ConfigurationError("L must be positive")
        if not 0 < self.epsilon < 1:
            raise ConfigurationError("epsilon must lie in (0, 1)")
        eps = self.epsilons
        if not eps or any(not 0 < e < 1 for e in eps):
            raise ConfigurationError("epsilons must be a nonempty list in (0, 1)")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigurationError("epsilons must be strictly decreasing")
        if not 1 < self.p < 2:
            raise ConfigurationError("p must lie in (1, 2)")
        if any(q < self.p for q in self.q):
            raise ConfigurationError("every q must satisfy q >= p")
        if not 0 < self.s < 1 or not 0 < self.alpha < 1:
            raise ConfigurationError("s and alpha must lie in (0, 1)")
        if not self.T > 0:
            raise ConfigurationError("T must be positive")
        if not 0 < self.dt_safety <= 1 or not self.dt_max > 0:
            raise ConfigurationError("need 0 < dt_safety <= 1 and dt_max > 0")
        if self.sample_stride < 1 or self.threads < 1 or self.particles < 4:
            raise ConfigurationError("sample_stride and threads must be >= 1, particles >= 4")
        if self.data_recipe not in PROFILES:
            raise ConfigurationError(f"unknown data_recipe {self.data_recipe!r}; choose from {PROFILES}")
        if self.gamma_bar < 0:
            raise ConfigurationError("gamma_bar must be nonnegative")
        return self

    def dumps(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"


_NUMBER_PI = re.compile(r"^([-+]?[0-9.eE+-]*)\*?pi$")


def _float(text: str) -> float:
    m = _NUMBER_PI.match(text)
    if m:
        coef = m.group(1)
        return (float(coef) if coef not in ("", "+", "-") else float(coef + "1")) * math.pi
    return float(text)


def _convert(name: str, typ, raw: str):
    raw = raw.strip()
    try:
        if typ in (bool, "bool"):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ in (int, "int"):
            return int(raw)
        if typ in (float, "float"):
            return _float(raw)
        if typ in (str, "str"):
            return raw
        if "tuple" in str(typ):
            return tuple(_float(x) for x in raw.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {name}: {raw!r}") from exc
    raise ConfigurationError(f"unsupported type for {name}")


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse ``key=value`` lines; '#' starts a comment, blank lines are skipped."""
    types = {f.name: f.type for f in fields(RunConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key=value")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in types:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        values[key] = _convert(key, types[key], raw)
    return replace(base or RunConfig(), **values)


def load_config(path: str | None, **overrides) -> RunConfig:
    cfg = RunConfig()
    if path:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        cfg = parse_config(text, cfg)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **overrides).validate()


__all__ = ["RunConfig", "parse_config", "load_config"]
