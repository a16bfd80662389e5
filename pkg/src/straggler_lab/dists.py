"""Task execution-time distributions and a counter-based uniform generator.

Uniform variates are a pure function of ``(seed, stream, counter)``, so a
replication's draws do not depend on which process evaluates it or in which
order. The hash is SplitMix64 evaluated at an arbitrary counter position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Union

import numpy as np

from .errors import ConfigError, DomainError

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_STREAM_MULT = np.uint64(0xD1B54A32D192ED03)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def stream_key(seed: int, stream) -> np.ndarray:
    """64-bit key for each (seed, stream) pair; ``stream`` may be an array."""
    with np.errstate(over="ignore"):
        s = np.asarray(seed & _MASK64, dtype=np.uint64)
        st = np.asarray(stream, dtype=np.uint64)
        return _mix64(_mix64(s ^ _GOLDEN) + st * _STREAM_MULT)


def counter_uniforms(seed: int, stream, counter) -> np.ndarray:
    """Uniforms on the open interval (0, 1) at the given stream/counter positions.

    ``stream`` and ``counter`` broadcast against each other.
    """
    with np.errstate(over="ignore"):
        key = stream_key(seed, stream)
        ctr = np.asarray(counter, dtype=np.uint64)
        bits = _mix64(key + (ctr + np.uint64(1)) * _GOLDEN)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


@dataclass
class RngState:
    """Position in one deterministic uniform stream.

    Two states with equal ``(seed, stream, counter)`` produce identical draws.
    """

    seed: int
    stream: int = 0
    counter: int = 0

    def __post_init__(self):
        for name in ("seed", "stream", "counter"):
            v = getattr(self, name)
            if not 0 <= int(v) <= _MASK64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v}")

    def uniforms(self, size: int) -> np.ndarray:
        out = counter_uniforms(self.seed, self.stream, self.counter + np.arange(size, dtype=np.uint64))
        self.counter += size
        return out

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be positive and finite, got {value}")
    return value


class _Dist:
    def from_uniform(self, u):
        raise NotImplementedError

    def sample(self, rng: RngState, size: int | None = None):
        """Inverse-CDF draw(s) using the next uniforms of ``rng``."""
        if size is None:
            return float(self.from_uniform(rng.uniform()))
        return self.from_uniform(rng.uniforms(size))


@dataclass(frozen=True)
class Exp(_Dist):
    mu: float

    def __post_init__(self):
        object.__setattr__(self, "mu", _positive("rate mu", self.mu))

    @property
    def support_min(self) -> float:
        return 0.0

    def from_uniform(self, u):
        return -np.log(u) / self.mu

    def cdf(self, x: float) -> float:
        return 0.0 if x <= 0 else -math.expm1(-self.mu * x)

    def mean(self) -> float:
        return 1.0 / self.mu


@dataclass(frozen=True)
class SExp(_Dist):
    """Constant ``shift`` plus Exp(``mu``) noise. ``shift`` is per task (D/k)."""

    shift: float
    mu: float

    def __post_init__(self):
        shift = float(self.shift)
        if not (math.isfinite(shift) and shift >= 0):
            raise DomainError(f"shift must be nonnegative and finite, got {shift}")
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "mu", _positive("rate mu", self.mu))

    @property
    def support_min(self) -> float:
        return self.shift

    def from_uniform(self, u):
        return self.shift - np.log(u) / self.mu

    def cdf(self, x: float) -> float:
        return 0.0 if x <= self.shift else -math.expm1(-self.mu * (x - self.shift))

    def mean(self) -> float:
        return self.shift + 1.0 / self.mu


@dataclass(frozen=True)
class Pareto(_Dist):
    scale: float
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "scale", _positive("scale lambda", self.scale))
        object.__setattr__(self, "alpha", _positive("tail index alpha", self.alpha))

    @property
    def support_min(self) -> float:
        return self.scale

    def from_uniform(self, u):
        return self.scale * np.power(u, -1.0 / self.alpha)

    def cdf(self, x: float) -> float:
        return 0.0 if x <= self.scale else 1.0 - (self.scale / x) ** self.alpha

    def mean(self) -> float:
        if self.alpha <= 1:
            return math.inf
        return self.scale * self.alpha / (self.alpha - 1.0)


TaskDistribution = Union[Exp, SExp, Pareto]


def exp_like(dist: TaskDistribution) -> tuple[float, float]:
    """(shift, rate) of an Exp or SExp law."""
    if isinstance(dist, Exp):
        return 0.0, dist.mu
    if isinstance(dist, SExp):
        return dist.shift, dist.mu
    raise TypeError(f"{type(dist).__name__} is not exponential-family")


def dist_from_dict(spec: Mapping[str, Any], k: int) -> TaskDistribution:
    """Build a distribution from a config literal.

    ``{"type": "sexp", "D": 1.0, "mu": 1.0}`` gives a per-task shift of D / k;
    ``"shift"`` may be given instead of ``"D"`` to set the per-task value.
    """
    try:
        kind = str(spec["type"]).lower()
        if kind == "exp":
            return Exp(spec["mu"])
        if kind == "sexp":
            if "shift" in spec:
                return SExp(spec["shift"], spec["mu"])
            return SExp(float(spec["D"]) / k, spec["mu"])
        if kind == "pareto":
            return Pareto(spec["lambda"], spec["alpha"])
    except KeyError as exc:
        raise ConfigError(f"distribution {dict(spec)} is missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise ConfigError(f"bad distribution literal {dict(spec)}: {exc}") from None
    raise ConfigError(f"unknown distribution type {spec.get('type')!r}")


def dist_to_dict(dist: TaskDistribution, k: int) -> dict:
    if isinstance(dist, Exp):
        return {"type": "exp", "mu": dist.mu}
    if isinstance(dist, SExp):
        return {"type": "sexp", "D": dist.shift * k, "shift": dist.shift, "mu": dist.mu}
    return {"type": "pareto", "lambda": dist.scale, "alpha": dist.alpha}
