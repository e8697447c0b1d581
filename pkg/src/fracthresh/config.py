"""Declarative experiment configurations.

Each command reads one JSON object.  Unknown keys and out-of-range values are
rejected with messages naming the offending field, and every config
round-trips through :meth:`to_dict` / :meth:`from_dict` unchanged.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .kernel import Convention
from .scheme import CRITICAL_H_MAX, disk, half_space, regime

__all__ = ["ConfigError", "ShapeConfig", "SimulateConfig", "ConvergeConfig", "ConstantsConfig",
           "ValidateConfig", "CONFIGS", "apply_overrides", "load_config"]


class ConfigError(ValueError):
    """A configuration value is missing, unknown or out of range."""


def _require(cond, name, msg):
    if not cond:
        raise ConfigError(f"{name}: {msg}")


def _check_alpha(a, name="alpha"):
    _require(isinstance(a, (int, float)) and 0.0 < a < 2.0, name, f"must lie in (0, 2), got {a!r}")


def _check_pow2(n, name):
    ok = isinstance(n, int) and n >= 8 and n & (n - 1) == 0
    _require(ok, name, f"must be a power of two >= 8, got {n!r}")


def _check_positive(x, name):
    _require(isinstance(x, (int, float)) and x > 0 and math.isfinite(x), name,
             f"must be positive and finite, got {x!r}")


def _check_convention(c, name="convention"):
    try:
        Convention.parse(c)
    except ValueError:
        raise ConfigError(f"{name}: must be 'standard' or 'unnormalized', got {c!r}") from None


_EXPR_NAMES = {name: getattr(np, name) for name in
               ("sqrt", "abs", "sin", "cos", "tan", "exp", "log", "minimum", "maximum",
                "logical_and", "logical_or", "logical_not", "where", "arctan2", "pi")}


class _Base:
    """Shared serialization and validation."""

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError(f"{cls.__name__}: expected an object, got {type(data).__name__}")
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"{unknown[0]}: unknown key for {cls.section} config")
        kwargs = {}
        for name, value in data.items():
            sub = _NESTED.get((cls, name))
            kwargs[name] = sub.from_dict(value) if sub is not None else value
        try:
            obj = cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        obj.validate()
        return obj

    def validate(self):
        pass

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


@dataclass
class ShapeConfig(_Base):
    """Initial set.

    ``kind`` is one of ``disk`` (``radius``, ``center``), ``half_space``
    (``normal``, ``offset``), ``expression`` (a numpy expression in
    ``x``, ``y``, ``z`` that is true inside) or ``random`` (independent
    nodes inside with probability ``fraction``, seeded by ``seed``).
    """

    section = "shape"
    kind: str = "disk"
    radius: float = 1.0
    center: list | None = None
    normal: list | None = None
    offset: float = 0.0
    expression: str = ""
    fraction: float = 0.5
    seed: int = 0

    def validate(self):
        kinds = ("disk", "half_space", "expression", "random")
        _require(self.kind in kinds, "shape.kind", f"must be one of {kinds}, got {self.kind!r}")
        if self.kind == "disk":
            _check_positive(self.radius, "shape.radius")
        if self.kind == "half_space" and self.normal is not None:
            _require(any(v != 0 for v in self.normal), "shape.normal", "must be nonzero")
        if self.kind == "expression":
            _require(bool(self.expression.strip()), "shape.expression", "must be a nonempty expression")
        if self.kind == "random":
            _require(0.0 < self.fraction < 1.0, "shape.fraction", f"must lie in (0, 1), got {self.fraction}")

    def indicator(self, dim):
        """Callable mapping coordinate arrays to a boolean mask."""
        if self.center is not None:
            _require(len(self.center) == dim, "shape.center", f"needs {dim} components")
        if self.normal is not None:
            _require(len(self.normal) == dim, "shape.normal", f"needs {dim} components")
        if self.kind == "disk":
            return disk(self.radius, self.center)
        if self.kind == "half_space":
            return half_space(self.normal, self.offset)
        if self.kind == "expression":
            code = compile(self.expression, "<shape.expression>", "eval")

            def inside(*coords):
                names = dict(zip("xyz", coords))
                return np.asarray(eval(code, {"__builtins__": {}}, {**_EXPR_NAMES, **names}), bool)
            return inside
        rng = np.random.default_rng(self.seed)

        def inside(*coords):
            shape = np.broadcast_shapes(*(np.shape(c) for c in coords))
            return rng.random(shape) < self.fraction
        return inside


@dataclass
class SimulateConfig(_Base):
    section = "simulate"
    alpha: float = 1.5
    dim: int = 2
    convention: str = "standard"
    extent: float = 8.0
    points: int = 256
    h: float = 0.01
    steps: int = 10
    snapshot_every: int = 1
    shape: ShapeConfig = field(default_factory=ShapeConfig)
    fronts: bool = True
    wrap_tolerance: float = 0.05

    def validate(self):
        _check_alpha(self.alpha)
        _require(self.dim in (1, 2, 3), "dim", f"must be 1, 2 or 3, got {self.dim!r}")
        _check_convention(self.convention)
        _check_positive(self.extent, "extent")
        _check_pow2(self.points, "points")
        _check_positive(self.h, "h")
        if self.alpha == 1.0:
            _require(self.h < CRITICAL_H_MAX, "h", f"must be below {CRITICAL_H_MAX} when alpha = 1")
        _require(isinstance(self.steps, int) and self.steps >= 0, "steps", "must be a nonnegative integer")
        _require(isinstance(self.snapshot_every, int) and self.snapshot_every >= 1, "snapshot_every",
                 "must be a positive integer")
        _check_positive(self.wrap_tolerance, "wrap_tolerance")
        self.shape.validate()


@dataclass
class ConvergeConfig(_Base):
    """Convergence study on a ball.

    Grid rule: each rung uses the power of two closest to
    ``extent * cells_per_width / width``, where ``width`` is the kernel's
    effective width at that rung's ``sigma``, clamped to
    ``[min_points, max_points]``.
    """

    section = "converge"
    alpha: float = 1.5
    dim: int = 2
    convention: str = "standard"
    extent: float = 8.0
    radius: float = 1.0
    h_ladder: list = field(default_factory=lambda: [0.04, 0.01, 0.0025])
    cells_per_width: float = 6.4
    min_points: int = 32
    max_points: int = 4096
    window: float = 0.5
    write_fronts: bool = False

    def validate(self):
        _check_alpha(self.alpha)
        _require(self.dim in (2, 3), "dim", f"must be 2 or 3, got {self.dim!r}")
        _check_convention(self.convention)
        _check_positive(self.extent, "extent")
        _check_positive(self.radius, "radius")
        _require(self.radius < 0.25 * self.extent, "radius", "must be below extent/4")
        ladder = self.h_ladder
        _require(isinstance(ladder, list) and len(ladder) >= 3, "h_ladder", "needs at least three rungs")
        for i, h in enumerate(ladder):
            _check_positive(h, f"h_ladder[{i}]")
        _require(all(b < a for a, b in zip(ladder, ladder[1:])), "h_ladder", "must be strictly decreasing")
        if self.alpha == 1.0:
            _require(ladder[0] < CRITICAL_H_MAX, "h_ladder", f"must stay below {CRITICAL_H_MAX} when alpha = 1")
        _check_positive(self.cells_per_width, "cells_per_width")
        _require(self.cells_per_width >= 2.0, "cells_per_width", "must be at least 2 (resolvability)")
        _check_pow2(self.min_points, "min_points")
        _check_pow2(self.max_points, "max_points")
        _require(self.min_points <= self.max_points, "max_points", "must be at least min_points")
        _require(0.0 < self.window <= 1.0, "window", f"must lie in (0, 1], got {self.window}")


@dataclass
class ConstantsConfig(_Base):
    section = "constants"
    alphas: list = field(default_factory=lambda: [0.5, 1.0, 1.5])
    dim: int = 2
    convention: str = "standard"
    regime: str | None = None

    def validate(self):
        _require(isinstance(self.alphas, list) and self.alphas, "alphas", "needs at least one value")
        for i, a in enumerate(self.alphas):
            _check_alpha(a, f"alphas[{i}]")
        _require(isinstance(self.dim, int) and self.dim >= 2, "dim", "must be an integer >= 2")
        _check_convention(self.convention)
        regimes = (None, "mcf", "critical", "fractional")
        _require(self.regime in regimes, "regime", f"must be one of {regimes}, got {self.regime!r}")
        if self.regime is not None:
            for a in self.alphas:
                _require(regime(a) == self.regime, "regime",
                         f"the {self.regime!r} formula does not apply to alpha = {a!r} ({regime(a)} regime)")


@dataclass
class ValidateConfig(_Base):
    """Kernel validators and identity checks.

    Tolerances default to the acceptance values; setting one to 0 forces
    the corresponding check to fail.
    """

    section = "validate"
    alphas: list = field(default_factory=lambda: [0.5, 1.0, 1.5])
    points: int = 512
    extent: float = 32.0
    mass_tolerance: float = 1e-10
    poisson_tolerance: float = 1e-4
    growth_tolerance: float = 0.1
    small_time_alpha: float = 1.0
    small_time_convention: str = "unnormalized"
    small_time_points: int = 512
    small_time_extent: float = 8.0
    small_time_times: list = field(default_factory=lambda: [0.08, 0.04, 0.02, 0.01])
    constant_tolerance: float = 0.05
    lemma: bool = True
    lemma_sigma: float = 0.2
    lemma_epsilons: list = field(default_factory=lambda: [0.2, 0.1, 0.05, 0.025])

    def validate(self):
        for i, a in enumerate(self.alphas):
            _check_alpha(a, f"alphas[{i}]")
        _check_pow2(self.points, "points")
        _check_pow2(self.small_time_points, "small_time_points")
        _check_positive(self.extent, "extent")
        _check_positive(self.small_time_extent, "small_time_extent")
        for name in ("mass_tolerance", "poisson_tolerance", "growth_tolerance", "constant_tolerance"):
            v = getattr(self, name)
            _require(isinstance(v, (int, float)) and v >= 0, name, f"must be nonnegative, got {v!r}")
        _check_alpha(self.small_time_alpha, "small_time_alpha")
        _check_convention(self.small_time_convention, "small_time_convention")
        times = self.small_time_times
        _require(isinstance(times, list) and len(times) >= 2, "small_time_times", "needs at least two times")
        _require(all(b < a for a, b in zip(times, times[1:])), "small_time_times", "must be decreasing")
        _check_positive(self.lemma_sigma, "lemma_sigma")
        eps = self.lemma_epsilons
        _require(isinstance(eps, list) and len(eps) >= 2 and all(b < a for a, b in zip(eps, eps[1:])),
                 "lemma_epsilons", "must be a decreasing list of at least two widths")


_NESTED = {(SimulateConfig, "shape"): ShapeConfig}

CONFIGS = {"simulate": SimulateConfig, "converge": ConvergeConfig, "constants": ConstantsConfig,
           "validate": ValidateConfig}


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data, overrides):
    """Apply ``key=value`` overrides (dotted keys, JSON values) to a config dict."""
    out = json.loads(json.dumps(data))
    for item in overrides or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"{item}: override must look like key=value")
        node = out
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"{key}: {p} is not a section")
        node[parts[-1]] = _parse_value(value)
    return out


def load_config(command, path=None, overrides=None):
    """Resolved config for ``command`` from an optional JSON file plus overrides."""
    cls = CONFIGS[command]
    data = cls().to_dict()
    if path is not None:
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config file: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file: top level must be an object")
        unknown = sorted(set(loaded) - set(data))
        if unknown:
            raise ConfigError(f"{unknown[0]}: unknown key for {command} config")
        for k, v in loaded.items():
            if isinstance(data.get(k), dict) and isinstance(v, dict):
                data[k] = {**data[k], **v}
            else:
                data[k] = v
    data = apply_overrides(data, overrides)
    return cls.from_dict(data)
