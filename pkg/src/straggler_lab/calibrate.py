"""Analytic-vs-simulation calibration over the standard grid.

Grid: k = 10, mu = 1, delays {0, 0.5, 1, 2}, replicated c in {1, 2}, coded
n in {12, 15, 20}, for Exp tasks and SExp tasks with D = 1. Delayed closed
forms are evaluated directly (not through the zero-delay dispatch) so the
delta = 0 cells exercise them too.

An approximation passes when it lies within max(3% relative, 3 standard
errors) of the simulated mean; exact fields must lie within 3 standard errors.
Extrapolated values are reported but not judged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import analytic
from .dists import Exp, SExp
from .model import Coded, Replicated, SystemConfig
from .sim import estimate

K = 10
MU = 1.0
D = 1.0
DELTAS = (0.0, 0.5, 1.0, 2.0)
REPLICAS = (1, 2)
CODE_LENGTHS = (12, 15, 20)
REL_TOL = 0.03
N_SE = 3.0


@dataclass
class Check:
    dist: str
    scheme: str
    delta: float
    field: str
    variant: str
    exactness: str
    analytic: float
    simulated: float
    se: float

    @property
    def deviation(self) -> float:
        return (self.analytic - self.simulated) / self.simulated

    @property
    def tolerance(self) -> float:
        if self.exactness == analytic.EXACT:
            return N_SE * self.se
        return max(REL_TOL * abs(self.simulated), N_SE * self.se)

    @property
    def judged(self) -> bool:
        return self.exactness != analytic.EXTRAPOLATED

    @property
    def passed(self) -> bool:
        return abs(self.analytic - self.simulated) <= self.tolerance


@dataclass
class Report:
    checks: list = field(default_factory=list)
    replications: int = 0
    seed: int = 0

    def judged(self, variant: str = "printed") -> list:
        return [c for c in self.checks if c.judged and c.variant in ("-", variant)]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.judged())

    def variant_summary(self) -> dict:
        out = {}
        for v in analytic.Q_VARIANTS:
            cells = [c for c in self.checks if c.variant == v and c.field == "latency"]
            out[v] = (sum(c.passed for c in cells), len(cells))
        return out


def _formulas(dist_name: str, scheme, delta: float) -> list:
    """(variant, Metrics) pairs of the delayed closed form for one cell."""
    if isinstance(scheme, Replicated):
        if dist_name == "exp":
            return [("-", analytic.rep_exp_metrics(K, scheme.c, delta, MU))]
        return [(v, analytic.rep_sexp_metrics(K, scheme.c, delta, D, MU, q_variant=v))
                for v in analytic.Q_VARIANTS]
    if dist_name == "exp":
        return [("-", analytic.coded_exp_metrics(K, scheme.n, delta, MU))]
    return [("-", analytic.coded_sexp_metrics(K, scheme.n, delta, D, MU))]


def cells():
    for dist_name, dist in (("exp", Exp(MU)), ("sexp", SExp(D / K, MU))):
        for scheme in [Replicated(c) for c in REPLICAS] + [Coded(n) for n in CODE_LENGTHS]:
            for delta in DELTAS:
                yield dist_name, SystemConfig(K, scheme, delta, dist)


def _scheme_label(scheme) -> str:
    return f"rep c={scheme.c}" if isinstance(scheme, Replicated) else f"coded n={scheme.n}"


def run(replications: int = 200_000, seed: int = 0, parallel: int = 1) -> Report:
    report = Report(replications=replications, seed=seed)
    for dist_name, cfg in cells():
        est = estimate(cfg, replications, seed, parallel=parallel)
        sim_vals = {
            "latency": (est.mean_latency, est.se_latency),
            "cost_cancel": (est.mean_cost_cancel, est.se_cost_cancel),
            "cost_nocancel": (est.mean_cost_nocancel, est.se_cost_nocancel),
        }
        for variant, m in _formulas(dist_name, cfg.scheme, cfg.delta):
            for name in analytic.FIELDS:
                if variant == "shifted" and name != "latency":
                    continue  # cost fields do not depend on the latency q-variant
                mean, se = sim_vals[name]
                report.checks.append(Check(
                    dist_name, _scheme_label(cfg.scheme), cfg.delta, name,
                    variant, m.exactness[name], getattr(m, name), mean, se,
                ))
    return report


def format_report(report: Report) -> str:
    head = (f"{'dist':5} {'scheme':11} {'delta':>5} {'field':13} {'variant':8} {'kind':13} "
            f"{'analytic':>10} {'simulated':>10} {'se':>8} {'dev%':>7}  result")
    lines = [f"calibration: {report.replications} replications, seed {report.seed}", head]
    for c in report.checks:
        result = ("PASS" if c.passed else "FAIL") if c.judged else "n/a"
        lines.append(
            f"{c.dist:5} {c.scheme:11} {c.delta:5.2f} {c.field:13} {c.variant:8} {c.exactness:13} "
            f"{c.analytic:10.5f} {c.simulated:10.5f} {c.se:8.5f} {100 * c.deviation:7.2f}  {result}"
        )
    lines.append("")
    for v, (ok, total) in report.variant_summary().items():
        lines.append(f"replicated-SExp latency q-variant {v!r}: {ok}/{total} cells pass")
    judged = report.judged()
    failed = [c for c in judged if not c.passed]
    lines.append(f"overall (default variant): {len(judged) - len(failed)}/{len(judged)} checks pass"
                 f" -> {'PASS' if not failed else 'FAIL'}")
    return "\n".join(lines) + "\n"
