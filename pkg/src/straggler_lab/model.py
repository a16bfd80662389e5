"""Job/redundancy configuration shared by the analytic and simulation engines."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any, Mapping, Union

from .dists import TaskDistribution, dist_from_dict, dist_to_dict
from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class Replicated:
    """At the delay, every unfinished task gets ``c`` fresh replicas."""

    c: int

    def __post_init__(self):
        if int(self.c) != self.c or self.c < 0:
            raise DomainError(f"replica count c must be a nonnegative integer, got {self.c}")
        object.__setattr__(self, "c", int(self.c))


@dataclass(frozen=True)
class Coded:
    """At the delay, ``n - k`` parity tasks launch; any k completions finish the job."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"code length n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))


Scheme = Union[Replicated, Coded]


@dataclass(frozen=True)
class SystemConfig:
    k: int
    scheme: Scheme
    delta: float
    dist: TaskDistribution

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise DomainError(f"k must be a positive integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))
        delta = float(self.delta)
        if not (math.isfinite(delta) and delta >= 0):
            raise DomainError(f"delta must be finite and nonnegative, got {self.delta}")
        object.__setattr__(self, "delta", delta)
        if isinstance(self.scheme, Coded) and self.scheme.n < self.k:
            raise DomainError(f"coded scheme needs n >= k, got n={self.scheme.n}, k={self.k}")

    @property
    def has_redundancy(self) -> bool:
        if isinstance(self.scheme, Replicated):
            return self.scheme.c > 0
        return self.scheme.n > self.k

    def with_delta(self, delta: float) -> "SystemConfig":
        return replace(self, delta=delta)

    def to_dict(self) -> dict:
        if isinstance(self.scheme, Replicated):
            scheme = {"type": "rep", "c": self.scheme.c}
        else:
            scheme = {"type": "coded", "n": self.scheme.n}
        return {
            "k": self.k,
            "scheme": scheme,
            "delta": self.delta,
            "dist": dist_to_dict(self.dist, self.k),
        }


def scheme_from_dict(spec: Mapping[str, Any]) -> Scheme:
    kind = str(spec.get("type", "")).lower()
    try:
        if kind in ("rep", "replicated"):
            return Replicated(spec["c"])
        if kind == "coded":
            return Coded(spec["n"])
    except KeyError as exc:
        raise ConfigError(f"{kind} scheme is missing field {exc.args[0]!r}") from None
    raise ConfigError(f"unknown scheme type {spec.get('type')!r}; expected 'rep' or 'coded'")


def config_from_dict(spec: Mapping[str, Any]) -> SystemConfig:
    for field in ("k", "scheme", "dist"):
        if field not in spec:
            raise ConfigError(f"config is missing field {field!r}")
    try:
        k = int(spec["k"])
    except (TypeError, ValueError):
        raise ConfigError(f"k must be an integer, got {spec['k']!r}") from None
    if k < 1:
        raise ConfigError(f"k must be positive, got {k}")
    return SystemConfig(
        k=k,
        scheme=scheme_from_dict(spec["scheme"]),
        delta=float(spec.get("delta", 0.0)),
        dist=dist_from_dict(spec["dist"], k),
    )
