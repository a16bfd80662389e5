"""Closed-form expected latency and cost under delayed replicated/coded redundancy.

Conventions:

* ``k`` tasks per job, ``c`` replicas per straggling task, code length ``n``.
* ``delta`` is the time redundancy is introduced; 0 means all of it launches
  with the job.
* SExp task times are ``shift + Exp(mu)`` with ``shift = D / k``; functions
  here take the job-level ``D`` and divide internally.
* ``cost_cancel`` is the expected total task lifetime when outstanding work is
  cancelled, ``cost_nocancel`` when every launched task runs to completion.

Approximate expressions are marked per field in ``Metrics.exactness``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import specfun
from .dists import Exp, Pareto, TaskDistribution, exp_like
from .errors import DomainError, UnsupportedCombination
from .model import Coded, Replicated, Scheme, SystemConfig

EXACT = "exact"
APPROX = "approximation"
EXTRAPOLATED = "extrapolated"

FIELDS = ("latency", "cost_cancel", "cost_nocancel")

# Replicated-SExp latency q. "printed" is 1 - e^(-mu*delta) as published;
# "shifted" is P(X <= delta) = 1(delta > d)(1 - e^(-mu(delta - d))), the q the
# cost expressions use.
Q_VARIANTS = ("printed", "shifted")

# Coded latency. "resolved" swaps the harmonic pair so that delta = 0 and
# delta -> inf both land on the exact boundary values; "as-printed" is kept
# for audit only (it is negative at delta = 0).
ORIENTATIONS = ("resolved", "as-printed")

PARETO_GAP_MESSAGE = (
    "no closed form exists for delayed redundancy with Pareto task times "
    "(the analysis covers that regime by simulation only); use engine 'simulate'"
)


@dataclass
class Metrics:
    latency: float
    cost_cancel: float
    cost_nocancel: float
    exactness: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def flags(self) -> str:
        parts = [f"{name}={self.exactness.get(name, EXACT)}" for name in FIELDS]
        parts += [f"{key}={value}" for key, value in sorted(self.notes.items())]
        return ";".join(parts)

    def to_dict(self) -> dict:
        return {
            "latency": self.latency,
            "cost_cancel": self.cost_cancel,
            "cost_nocancel": self.cost_nocancel,
            "exactness": dict(self.exactness),
            "notes": dict(self.notes),
        }


@dataclass(frozen=True)
class DelayIntermediates:
    """q, q~ and eta of the coded-SExp formulas."""

    q: float
    q_tilde: float
    eta: float


def _check_common(k: int, delta: float, mu: float, D: float = 0.0) -> None:
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    if not (math.isfinite(delta) and delta >= 0):
        raise DomainError(f"delta must be finite and nonnegative, got {delta}")
    if not (math.isfinite(mu) and mu > 0):
        raise DomainError(f"mu must be positive, got {mu}")
    if not (math.isfinite(D) and D >= 0):
        raise DomainError(f"D must be nonnegative, got {D}")


def _survival(mu: float, delta: float, shift: float = 0.0) -> float:
    """P(X > delta) for X = shift + Exp(mu)."""
    if delta <= shift:
        return 1.0
    return math.exp(-mu * (delta - shift))


def delay_intermediates(k: int, delta: float, D: float, mu: float) -> DelayIntermediates:
    d = D / k
    e = math.exp(-mu * delta)
    return DelayIntermediates(q=1.0 - _survival(mu, delta, d), q_tilde=1.0 - e, eta=1.0 - e)


def _rep_latency(k: int, c: int, mu: float, survival: float) -> float:
    # H_{k - kq} with k - kq = k * P(X > delta)
    return (specfun.harmonic(k) - c / (c + 1.0) * specfun.harmonic(k * survival)) / mu


def rep_exp_metrics(k: int, c: int, delta: float, mu: float) -> Metrics:
    _check_common(k, delta, mu)
    if int(c) != c or c < 0:
        raise DomainError(f"c must be a nonnegative integer, got {c}")
    surv = math.exp(-mu * delta)
    return Metrics(
        latency=_rep_latency(k, c, mu, surv),
        cost_cancel=k / mu,
        cost_nocancel=(c * surv + 1.0) * k / mu,
        exactness={"latency": APPROX, "cost_cancel": EXACT, "cost_nocancel": EXACT},
    )


def rep_sexp_metrics(
    k: int, c: int, delta: float, D: float, mu: float, q_variant: str = "printed"
) -> Metrics:
    """Replicated system with SExp(D/k, mu) tasks.

    The cost-with-cancellation expression only holds for ``delta > D/k``; at
    or below that point its right-hand limit is returned and flagged.
    """
    _check_common(k, delta, mu, D)
    if int(c) != c or c < 0:
        raise DomainError(f"c must be a nonnegative integer, got {c}")
    if q_variant not in Q_VARIANTS:
        raise ValueError(f"q_variant must be one of {Q_VARIANTS}, got {q_variant!r}")
    d = D / k
    lat_surv = math.exp(-mu * delta) if q_variant == "printed" else _survival(mu, delta, d)
    cost_surv = _survival(mu, delta, d)

    exactness = {"latency": APPROX, "cost_nocancel": EXACT}
    if D == 0:
        cost_cancel = k / mu
        exactness["cost_cancel"] = EXACT
    else:
        cost_cancel = D + k / mu * (1.0 + c * (cost_surv - math.exp(-mu * max(delta, d))))
        exactness["cost_cancel"] = APPROX if delta > d else EXTRAPOLATED
    return Metrics(
        latency=d + _rep_latency(k, c, mu, lat_surv),
        cost_cancel=cost_cancel,
        cost_nocancel=(c * cost_surv + 1.0) * (D + k / mu),
        exactness=exactness,
        notes={"q_variant": q_variant},
    )


def _coded_latency(k: int, n: int, delta: float, mu: float, orientation: str) -> float:
    if orientation not in ORIENTATIONS:
        raise ValueError(f"orientation must be one of {ORIENTATIONS}, got {orientation!r}")
    if n == k and orientation == "resolved":
        # no parity tasks: the closed form overshoots H_k by up to ~6% mid-range
        return specfun.harmonic(k) / mu
    x = mu * delta
    beta = specfun.inc_beta_zero_exp(x, k + 1)
    h_nk = specfun.harmonic(n - k)
    # n - kq = n - k + k e^(-mu delta)
    h_nkq = specfun.harmonic(n - k + k * math.exp(-x))
    if orientation == "resolved":
        return delta - (beta + h_nk - h_nkq) / mu
    return delta - (beta + h_nkq - h_nk) / mu


def _check_code(k: int, n: int) -> None:
    if int(n) != n or n < k:
        raise DomainError(f"code length must be an integer n >= k, got n={n}, k={k}")


def coded_exp_metrics(
    k: int, n: int, delta: float, mu: float, orientation: str = "resolved"
) -> Metrics:
    _check_common(k, delta, mu)
    _check_code(k, n)
    q_k = (-math.expm1(-mu * delta)) ** k
    return Metrics(
        latency=_coded_latency(k, n, delta, mu, orientation),
        cost_cancel=k / mu,
        cost_nocancel=(k * q_k + n * (1.0 - q_k)) / mu,
        exactness={"latency": EXACT if n == k and orientation == "resolved" else APPROX, "cost_cancel": EXACT, "cost_nocancel": EXACT},
        notes={"orientation": orientation},
    )


def coded_sexp_metrics(
    k: int,
    n: int,
    delta: float,
    D: float,
    mu: float,
    orientation: str = "resolved",
    intermediates: Optional[Callable[[int, float, float, float], DelayIntermediates]] = None,
) -> Metrics:
    """Coded system with SExp(D/k, mu) tasks.

    ``intermediates`` replaces the (q, q~, eta) definitions; it receives
    ``(k, delta, D, mu)``.
    """
    _check_common(k, delta, mu, D)
    _check_code(k, n)
    d = D / k
    im = (intermediates or delay_intermediates)(k, delta, D, mu)
    q_k = im.q**k
    cost_nocancel = (k * q_k + n * (1.0 - q_k)) * (1.0 / mu + d)
    weight = im.q_tilde**k - q_k
    # for huge delays both probabilities round to 1 and eta is no longer < 1
    extra = specfun.scaled_inc_beta_zero(im.eta, k * (1.0 - im.q)) if weight != 0.0 else 0.0
    cost_cancel = (
        cost_nocancel
        - (n - k) / mu * (1.0 - q_k)
        - (n - k) / mu * extra * weight
    )
    approx = EXACT if D == 0 else APPROX
    return Metrics(
        latency=d + _coded_latency(k, n, delta, mu, orientation),
        cost_cancel=cost_cancel,
        cost_nocancel=cost_nocancel,
        exactness={"latency": EXACT if n == k and orientation == "resolved" else APPROX,
                   "cost_cancel": approx, "cost_nocancel": EXACT},
        notes={"orientation": orientation},
    )


def _max_of_k_pareto(k: int, scale: float, alpha: float) -> float:
    """E[max of k iid Pareto(scale, alpha)]."""
    s = 1.0 / alpha
    if s >= 1.0:
        raise DomainError(f"expected maximum diverges for tail index {alpha} <= 1")
    return scale * math.exp(math.lgamma(k + 1) + specfun.ln_gamma(1.0 - s) - specfun.ln_gamma(k + 1.0 - s))


def _pareto_order_stat_mean(j: int, n: int, scale: float, alpha: float) -> float:
    """E[X_(j:n)] for iid Pareto(scale, alpha)."""
    s = 1.0 / alpha
    if n - j + 1 - s <= 0:
        return math.inf
    return scale * math.exp(
        math.lgamma(n + 1) - math.lgamma(n - j + 1)
        + math.lgamma(n - j + 1 - s) - math.lgamma(n + 1 - s)
    )


def _zero_delay_pareto(k: int, scheme: Scheme, dist: Pareto) -> Metrics:
    lam, alpha = dist.scale, dist.alpha
    if isinstance(scheme, Replicated):
        copies = scheme.c + 1
        beta = copies * alpha
        if beta <= 1:
            raise DomainError(
                f"latency undefined for (c+1)*alpha = {beta} <= 1 (Gamma pole)"
            )
        latency = _max_of_k_pareto(k, lam, beta)
        cost_cancel = lam * k * copies * beta / (beta - 1.0)
        cost_nocancel = copies * k * dist.mean()
    else:
        n = scheme.n
        s = 1.0 / alpha
        if n - k + 1 - s <= 0:
            raise DomainError(
                f"latency undefined for n-k+1-1/alpha = {n - k + 1 - s} <= 0 (Gamma pole)"
            )
        latency = lam * math.exp(
            math.lgamma(n + 1) - math.lgamma(n - k + 1)
            + specfun.ln_gamma(n - k + 1 - s) - specfun.ln_gamma(n + 1 - s)
        )
        if n == k:
            cost_cancel = k * dist.mean()
        elif alpha > 1:
            ratio = math.exp(
                math.lgamma(n) - math.lgamma(n - k)
                + specfun.ln_gamma(n - k + 1 - s) - specfun.ln_gamma(n + 1 - s)
            )
            cost_cancel = lam * n / (alpha - 1.0) * (alpha - ratio)
        else:
            # closed form has a removable 0/0 at alpha = 1; sum order statistics
            cost_cancel = math.fsum(
                _pareto_order_stat_mean(j, n, lam, alpha) for j in range(1, k + 1)
            ) + (n - k) * latency
        cost_nocancel = n * dist.mean()
    return Metrics(
        latency=latency,
        cost_cancel=cost_cancel,
        cost_nocancel=cost_nocancel,
        exactness={name: EXACT for name in FIELDS},
    )


def zero_delay_metrics(k: int, scheme: Scheme, dist: TaskDistribution) -> Metrics:
    """Exact metrics when redundancy launches together with the job.

    Exp tasks are handled as SExp with zero shift.
    """
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    if isinstance(scheme, Coded):
        _check_code(k, scheme.n)
    if isinstance(dist, Pareto):
        return _zero_delay_pareto(k, scheme, dist)
    d, mu = exp_like(dist)
    if isinstance(scheme, Replicated):
        copies = scheme.c + 1
        latency = d + specfun.harmonic(k) / (copies * mu)
        cost_cancel = copies * k * d + k / mu
        cost_nocancel = copies * k * (d + 1.0 / mu)
    else:
        n = scheme.n
        latency = d + (specfun.harmonic(n) - specfun.harmonic(n - k)) / mu
        cost_cancel = n * d + k / mu
        cost_nocancel = n * (d + 1.0 / mu)
    return Metrics(
        latency=latency,
        cost_cancel=cost_cancel,
        cost_nocancel=cost_nocancel,
        exactness={name: EXACT for name in FIELDS},
    )


def analytic_metrics(
    config: SystemConfig, q_variant: str = "printed", orientation: str = "resolved"
) -> Metrics:
    """Dispatch a configuration to the matching closed form."""
    k, scheme, delta, dist = config.k, config.scheme, config.delta, config.dist
    if delta == 0:
        return zero_delay_metrics(k, scheme, dist)
    if isinstance(dist, Pareto):
        raise UnsupportedCombination(PARETO_GAP_MESSAGE)
    d, mu = exp_like(dist)
    if isinstance(scheme, Replicated):
        if isinstance(dist, Exp):
            return rep_exp_metrics(k, scheme.c, delta, mu)
        return rep_sexp_metrics(k, scheme.c, delta, d * k, mu, q_variant=q_variant)
    if isinstance(dist, Exp):
        return coded_exp_metrics(k, scheme.n, delta, mu, orientation=orientation)
    return coded_sexp_metrics(k, scheme.n, delta, d * k, mu, orientation=orientation)


def baseline_latency(k: int, dist: TaskDistribution) -> float:
    """Expected latency with no redundancy."""
    return zero_delay_metrics(k, Replicated(0), dist).latency


@dataclass(frozen=True)
class MinLatencyResult:
    scheme_kind: str
    t_min: float
    level: int
    feasible: bool
    t_baseline: float
    baseline_cost: float
    bound: Optional[float] = None

    @property
    def reduction(self) -> float:
        return (self.t_baseline - self.t_min) / self.t_baseline


# safety stop for the coded scan; the crossing sits near n = k / (alpha - 1)
_SCAN_LIMIT = 100_000


def replicated_c_max(alpha: float) -> int:
    """Largest replica count whose zero-delay cost stays within the baseline.

    The break-even condition is c <= 1/(alpha - 1) - 1; reduction is
    additionally restricted to alpha < 1.5.
    """
    if not alpha > 1:
        raise DomainError(f"baseline cost is infinite for alpha = {alpha} <= 1")
    if alpha >= 1.5:
        return 0
    # guard floor() against 1/(alpha-1) landing a hair below an integer
    return max(math.floor(1.0 / (alpha - 1.0) + 1e-9) - 1, 0)


def pareto_min_latency_at_baseline_cost(
    k: int, lam: float, alpha: float, scheme_kind: str, n_max: Optional[int] = None
) -> MinLatencyResult:
    """Minimum zero-delay latency whose cost with cancellation stays within baseline.

    ``scheme_kind`` is ``"rep"`` or ``"coded"``. The coded scan walks n upward
    from k + 1 and stops at the first n whose cost exceeds the baseline (or at
    ``n_max``); latency decreases in n, so the last feasible n is optimal.
    """
    if not alpha > 1:
        raise DomainError(f"baseline cost is infinite for alpha = {alpha} <= 1")
    dist = Pareto(lam, alpha)
    baseline_cost = k * dist.mean()
    t0 = baseline_latency(k, dist)
    if scheme_kind in ("rep", "replicated"):
        c_max = replicated_c_max(alpha)
        t_min = zero_delay_metrics(k, Replicated(c_max), dist).latency
        return MinLatencyResult("rep", t_min, c_max, c_max >= 1, t0, baseline_cost)
    if scheme_kind != "coded":
        raise ValueError(f"scheme_kind must be 'rep' or 'coded', got {scheme_kind!r}")
    limit = _SCAN_LIMIT * k if n_max is None else n_max
    n_star = k
    for n in range(k + 1, limit + 1):
        if zero_delay_metrics(k, Coded(n), dist).cost_cancel > baseline_cost * (1.0 + 1e-12):
            break
        n_star = n
    t_min = zero_delay_metrics(k, Coded(n_star), dist).latency if n_star > k else t0
    bound = lam * alpha + t0
    return MinLatencyResult("coded", t_min, n_star, n_star > k, t0, baseline_cost, bound)
