"""Scenario files: a sectioned ``key = value`` format parsed with configparser.

Grammar::

    [collision]      preset, k1, sigma, nu, xi
    [fragmentation]  preset, alpha, beta, k2, theta_max, split_rule
    [grid]           n, cells_per_decade, taper_fraction
    [initial]        preset, scale, size, exponent, number
    [time]           T, output_times (comma list)
    [norm]           lambda, r
    [uniqueness]     lambda, theta
    [solver]         picard_tol, picard_max_iter, slab_policy, substeps,
                     max_slab, cross_check, rk4_dt
    [refine]         n_list (comma list), window (lo, hi)
    [output]         directory

Every key is optional; omitted keys take the defaults of
``ScenarioConfig``.  All quantities are dimensionless.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, fields, replace
from typing import Optional

from .errors import ConfigError, FragkinError
from .kernels import (
    COLLISION_PRESETS,
    CR_SPLIT_RULE,
    FRAGMENTATION_PRESETS,
    SPLIT_RULES,
    collision_preset,
    fragmentation_preset,
)
from .solver.config import INITIAL_PRESETS, SLAB_POLICIES, InitialData, SolverConfig
from .state import WeightedNormParams

__all__ = ["ScenarioConfig", "parse_scenario", "load_scenario", "FIELD_MAP"]


@dataclass(frozen=True)
class ScenarioConfig:
    collision: str = "constant"
    k1: float = 1.0
    sigma: Optional[float] = None
    nu: Optional[float] = None
    xi: float = 0.0
    fragmentation: str = "powerlaw"
    alpha: float = 0.0
    beta: float = 0.0
    k2: Optional[float] = None
    theta_max: Optional[float] = None
    split_rule: Optional[str] = None
    n: float = 8.0
    cells_per_decade: int = 32
    taper_fraction: float = 0.5
    initial: str = "exp"
    initial_scale: float = 1.0
    initial_size: float = 1.0
    initial_exponent: float = 0.0
    initial_number: Optional[float] = 1.0
    T: float = 0.5
    output_times: Optional[tuple] = None
    lam: float = 1.0
    r: float = 0.6
    lam_u: float = 1.0
    theta_u: float = 0.25
    picard_tol: float = 1e-11
    picard_max_iter: int = 100
    slab_policy: str = "adaptive"
    substeps: int = 16
    max_slab: float = 0.004
    cross_check: bool = False
    rk4_dt: float = 1e-3
    n_list: Optional[tuple] = None
    window: Optional[tuple] = None
    output_dir: str = "out"

    # -- conversion -------------------------------------------------------

    def collision_spec(self):
        params = {"k1": self.k1, "xi": self.xi}
        if self.sigma is not None:
            params["sigma"] = self.sigma
        if self.nu is not None:
            params["nu"] = self.nu
        return collision_preset(self.collision, **params)

    def fragmentation_spec(self):
        if self.fragmentation == "half-split":
            rule = self.split_rule or CR_SPLIT_RULE.get(self.collision, "both")
            return fragmentation_preset("half-split", split_rule=rule)
        spec = fragmentation_preset(self.fragmentation, alpha=self.alpha, beta=self.beta, n=self.n, k2=self.k2)
        if self.theta_max is not None:
            spec = replace(spec, theta_max=self.theta_max)
        return spec

    def solver_config(self, **overrides) -> SolverConfig:
        cfg = SolverConfig(
            collision=self.collision_spec(),
            fragmentation=self.fragmentation_spec(),
            n=self.n,
            cells_per_decade=self.cells_per_decade,
            taper_fraction=self.taper_fraction,
            norm=WeightedNormParams(self.lam, self.r),
            T=self.T,
            initial=InitialData(
                self.initial,
                scale=self.initial_scale,
                size=self.initial_size,
                exponent=self.initial_exponent,
                number=self.initial_number,
            ),
            output_times=self.output_times,
            picard_tol=self.picard_tol,
            picard_max_iter=self.picard_max_iter,
            slab_policy=self.slab_policy,
            substeps=self.substeps,
            max_slab=self.max_slab,
            cross_check=self.cross_check,
            rk4_dt=self.rk4_dt,
        )
        return replace(cfg, **overrides) if overrides else cfg

    def to_ini(self) -> str:
        """Serialise back to the file grammar (omitting unset optional keys)."""
        sections = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            section, key = FIELD_MAP[f.name]
            sections.setdefault(section, []).append(f"{key} = {_format(value)}")
        return "\n".join(f"[{s}]\n" + "\n".join(lines) + "\n" for s, lines in sections.items())


# field name -> (section, key)
FIELD_MAP = {
    "collision": ("collision", "preset"),
    "k1": ("collision", "k1"),
    "sigma": ("collision", "sigma"),
    "nu": ("collision", "nu"),
    "xi": ("collision", "xi"),
    "fragmentation": ("fragmentation", "preset"),
    "alpha": ("fragmentation", "alpha"),
    "beta": ("fragmentation", "beta"),
    "k2": ("fragmentation", "k2"),
    "theta_max": ("fragmentation", "theta_max"),
    "split_rule": ("fragmentation", "split_rule"),
    "n": ("grid", "n"),
    "cells_per_decade": ("grid", "cells_per_decade"),
    "taper_fraction": ("grid", "taper_fraction"),
    "initial": ("initial", "preset"),
    "initial_scale": ("initial", "scale"),
    "initial_size": ("initial", "size"),
    "initial_exponent": ("initial", "exponent"),
    "initial_number": ("initial", "number"),
    "T": ("time", "T"),
    "output_times": ("time", "output_times"),
    "lam": ("norm", "lambda"),
    "r": ("norm", "r"),
    "lam_u": ("uniqueness", "lambda"),
    "theta_u": ("uniqueness", "theta"),
    "picard_tol": ("solver", "picard_tol"),
    "picard_max_iter": ("solver", "picard_max_iter"),
    "slab_policy": ("solver", "slab_policy"),
    "substeps": ("solver", "substeps"),
    "max_slab": ("solver", "max_slab"),
    "cross_check": ("solver", "cross_check"),
    "rk4_dt": ("solver", "rk4_dt"),
    "n_list": ("refine", "n_list"),
    "window": ("refine", "window"),
    "output_dir": ("output", "directory"),
}
_KEY_TO_FIELD = {v: k for k, v in FIELD_MAP.items()}
_FLOAT_TUPLES = {"output_times", "n_list", "window"}
_INTS = {"cells_per_decade", "picard_max_iter", "substeps"}
_BOOLS = {"cross_check"}
_STRINGS = {"collision", "fragmentation", "split_rule", "initial", "slab_policy", "output_dir"}
_OPTIONAL = {"sigma", "nu", "k2", "theta_max", "initial_number"}


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _line_index(text: str) -> dict:
    """``(section, key) -> line number`` for field-addressed messages."""
    out, section = {}, None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]$", line)
        if m:
            section = m.group(1).strip().lower()
            continue
        m = re.match(r"^([^=:#;]+?)\s*[=:]", line)
        if m and section is not None:
            out[(section, m.group(1).strip().lower())] = no
    return out


def _convert(name: str, raw: str):
    raw = raw.strip()
    if name in _STRINGS:
        return raw
    if name in _BOOLS:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if name in _FLOAT_TUPLES:
        parts = [p for p in re.split(r"[,\s]+", raw) if p]
        return tuple(float(p) for p in parts)
    if name in _INTS:
        v = float(raw)
        if v != int(v):
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(v)
    if raw.lower() in ("none", "") and name in _OPTIONAL:
        return None
    return float(raw)


def _validate(cfg: ScenarioConfig, where) -> list:
    problems = []

    def add(field_name, msg):
        problems.append(f"{where(field_name)}: {msg}")

    if cfg.collision not in COLLISION_PRESETS:
        add("collision", f"unknown collision preset {cfg.collision!r}; known: {', '.join(sorted(COLLISION_PRESETS))}")
    if cfg.fragmentation not in FRAGMENTATION_PRESETS:
        add("fragmentation", f"unknown fragmentation preset {cfg.fragmentation!r}; known: {', '.join(sorted(FRAGMENTATION_PRESETS))}")
    if cfg.sigma is not None and not 0 <= cfg.sigma <= 0.5:
        add("sigma", f"sigma must lie in [0, 1/2], got {cfg.sigma:g}")
    if cfg.nu is not None and not 0 <= cfg.nu <= 1:
        add("nu", f"nu must lie in [0, 1], got {cfg.nu:g}")
    if not cfg.k1 >= 0:
        add("k1", f"k1 must be nonnegative, got {cfg.k1:g}")
    if not cfg.alpha > -1:
        add("alpha", f"alpha must exceed -1, got {cfg.alpha:g}")
    if not 0 <= cfg.beta <= 1:
        add("beta", f"beta must lie in [0, 1], got {cfg.beta:g}")
    if cfg.k2 is not None and not cfg.k2 > 0:
        add("k2", f"k2 must be positive, got {cfg.k2:g}")
    if cfg.split_rule is not None and cfg.split_rule not in SPLIT_RULES:
        add("split_rule", f"split_rule must be one of {', '.join(SPLIT_RULES)}")
    if not cfg.n > 1:
        add("n", f"n must exceed 1, got {cfg.n:g}")
    if cfg.cells_per_decade < 1:
        add("cells_per_decade", "cells_per_decade must be at least 1")
    if not 0 < cfg.taper_fraction <= 1:
        add("taper_fraction", "taper_fraction must lie in (0, 1]")
    if cfg.initial not in INITIAL_PRESETS or cfg.initial == "custom":
        add("initial", f"initial preset must be one of exp, monodisperse, powerlaw-cutoff, got {cfg.initial!r}")
    if not cfg.T >= 0:
        add("T", f"T must be nonnegative, got {cfg.T:g}")
    if cfg.output_times is not None and any(not 0 <= t <= cfg.T for t in cfg.output_times):
        add("output_times", f"output times must lie in [0, T = {cfg.T:g}]")
    if not cfg.lam > 0:
        add("lam", "lambda must be positive")
    if not 0 < cfg.r < 1:
        add("r", f"r must lie in (0, 1), got {cfg.r:g}")
    if not cfg.lam_u >= 0:
        add("lam_u", "uniqueness lambda must be nonnegative")
    if not cfg.picard_tol > 0:
        add("picard_tol", "picard_tol must be positive")
    if cfg.picard_max_iter < 1:
        add("picard_max_iter", "picard_max_iter must be at least 1")
    if cfg.slab_policy not in SLAB_POLICIES:
        add("slab_policy", f"slab_policy must be one of {', '.join(SLAB_POLICIES)}")
    if cfg.substeps < 1:
        add("substeps", "substeps must be at least 1")
    for name in ("max_slab", "rk4_dt"):
        if not getattr(cfg, name) > 0:
            add(name, f"{name} must be positive")
    if cfg.n_list is not None and (not cfg.n_list or any(b < a for a, b in zip(cfg.n_list, cfg.n_list[1:]))):
        add("n_list", "n_list must be a non-empty non-decreasing list")
    if cfg.window is not None and (len(cfg.window) != 2 or not 0 < cfg.window[0] < cfg.window[1]):
        add("window", "window must be two sizes 0 < lo < hi")
    if problems:
        return problems

    # cross-field rules live in the module constructors
    try:
        sc = cfg.solver_config()
    except FragkinError as exc:
        return [f"{where('sigma')}: {exc}" if "sigma" in str(exc) else f"{where('collision')}: {exc}"]
    sigma = sc.collision.sigma
    if not (cfg.theta_u >= 0 and cfg.theta_u + sigma < 1):
        add("theta_u", f"uniqueness theta must satisfy theta >= 0 and theta + sigma < 1 (sigma = {sigma:g})")
    return problems


def parse_scenario(text: str, source: str = "<string>") -> ScenarioConfig:
    """Parse and validate scenario text; all problems are collected into one ConfigError."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str.lower
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    lines = _line_index(text)
    key_lookup = {(s, k.lower()): f for (s, k), f in _KEY_TO_FIELD.items()}

    def where(field_name):
        section, key = FIELD_MAP[field_name]
        no = lines.get((section, key.lower()))
        return f"{source}:{no} [{section}] {key}" if no else f"{source} [{section}] {key}"

    values, problems = {}, []
    for section in parser.sections():
        for key, raw in parser.items(section):
            name = key_lookup.get((section.lower(), key))
            if name is None:
                no = lines.get((section.lower(), key))
                problems.append(f"{source}:{no} [{section}] {key}: unknown key")
                continue
            try:
                values[name] = _convert(name, raw)
            except ValueError as exc:
                problems.append(f"{where(name)}: {exc}")
    if problems:
        raise ConfigError(problems)
    cfg = ScenarioConfig(**values)
    problems = _validate(cfg, where)
    if problems:
        raise ConfigError(problems)
    return cfg


def load_scenario(path) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_scenario(text, source=str(path))
