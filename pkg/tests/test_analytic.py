import math
from fractions import Fraction

import numpy as np
import pytest

from straggler_lab import analytic
from straggler_lab.analytic import (
    DelayIntermediates,
    coded_exp_metrics,
    coded_sexp_metrics,
    pareto_min_latency_at_baseline_cost,
    rep_exp_metrics,
    rep_sexp_metrics,
    replicated_c_max,
    zero_delay_metrics,
)
from straggler_lab.dists import Exp, Pareto, SExp
from straggler_lab.errors import DomainError, UnsupportedCombination
from straggler_lab.model import Coded, Replicated, SystemConfig
from straggler_lab.sim import estimate


def H(n):
    return float(sum(Fraction(1, i) for i in range(1, n + 1)))


H10 = H(10)


def within_3se(value, est_mean, est_se):
    return abs(value - est_mean) <= 3 * est_se


# --- replicated, exponential ------------------------------------------------

def test_rep_exp_large_delay_is_baseline():
    m = rep_exp_metrics(10, 1, 40.0, 1.0)
    assert m.latency == pytest.approx(H10, rel=1e-12)
    assert H10 == pytest.approx(2.928968, abs=1e-6)


@pytest.mark.parametrize("c", [0, 1, 3])
@pytest.mark.parametrize("delta", [0, 0.3, 2.0])
def test_rep_exp_cost_cancel_is_k_over_mu(c, delta):
    assert rep_exp_metrics(10, c, delta, 1.0).cost_cancel == 10


def test_rep_exp_zero_delay_latency():
    m = rep_exp_metrics(10, 2, 0.0, 1.0)
    assert m.latency == pytest.approx(H10 / 3, rel=1e-13)
    assert m.latency == pytest.approx(0.976323, abs=1e-6)
    assert m.exactness["latency"] == analytic.APPROX
    assert m.exactness["cost_cancel"] == analytic.EXACT


def test_rep_exp_zero_delay_against_simulation():
    cfg = SystemConfig(10, Replicated(2), 0.0, Exp(1.0))
    est = estimate(cfg, 200_000, seed=17)
    assert within_3se(H10 / 3, est.mean_latency, est.se_latency)


def test_rep_exp_cost_nocancel():
    q = 1 - math.exp(-0.7)
    m = rep_exp_metrics(10, 2, 0.7, 1.0)
    assert m.cost_nocancel == pytest.approx((2 * (1 - q) + 1) * 10, rel=1e-13)


# --- replicated, shifted exponential ---------------------------------------

@pytest.mark.parametrize("delta", [0.0, 0.4, 3.0])
@pytest.mark.parametrize("variant", analytic.Q_VARIANTS)
def test_rep_sexp_degenerates_to_exp(delta, variant):
    a = rep_sexp_metrics(10, 2, delta, 0.0, 1.5, q_variant=variant)
    b = rep_exp_metrics(10, 2, delta, 1.5)
    assert (a.latency, a.cost_cancel, a.cost_nocancel) == pytest.approx(
        (b.latency, b.cost_cancel, b.cost_nocancel), rel=1e-14
    )


def test_rep_sexp_zero_delay_examples():
    m = rep_sexp_metrics(10, 1, 0.0, 1.0, 1.0)
    assert m.latency == pytest.approx(0.1 + H10 / 2, rel=1e-13)
    assert m.latency == pytest.approx(1.564484, abs=1e-6)
    assert m.cost_nocancel == pytest.approx(22.0, rel=1e-14)
    assert m.exactness["cost_cancel"] == analytic.EXTRAPOLATED
    assert m.notes["q_variant"] == "printed"
    z = zero_delay_metrics(10, Replicated(1), SExp(0.1, 1.0))
    assert m.latency == pytest.approx(z.latency, rel=1e-12)


def test_rep_sexp_zero_delay_latency_against_simulation():
    est = estimate(SystemConfig(10, Replicated(1), 0.0, SExp(0.1, 1.0)), 200_000, seed=5)
    assert within_3se(0.1 + H10 / 2, est.mean_latency, est.se_latency)


def test_rep_sexp_cost_cancel_branch():
    # delta > D/k uses the stated expression
    m = rep_sexp_metrics(10, 2, 1.0, 1.0, 1.0)
    q = 1 - math.exp(-(1.0 - 0.1))
    assert m.cost_cancel == pytest.approx(1 + 10 * (1 + 2 * (1 - q - math.exp(-1.0))), rel=1e-13)
    assert m.exactness["cost_cancel"] == analytic.APPROX
    # below D/k the right-hand limit is returned
    below = rep_sexp_metrics(10, 2, 0.05, 1.0, 1.0)
    limit = rep_sexp_metrics(10, 2, 0.1 + 1e-12, 1.0, 1.0)
    assert below.cost_cancel == pytest.approx(limit.cost_cancel, rel=1e-9)
    assert below.exactness["cost_cancel"] == analytic.EXTRAPOLATED


def test_rep_sexp_q_variants_differ_only_after_shift():
    p = rep_sexp_metrics(10, 1, 0.5, 1.0, 1.0, q_variant="printed")
    s = rep_sexp_metrics(10, 1, 0.5, 1.0, 1.0, q_variant="shifted")
    assert p.latency != s.latency
    assert p.notes["q_variant"] == "printed" and s.notes["q_variant"] == "shifted"
    assert p.cost_cancel == s.cost_cancel and p.cost_nocancel == s.cost_nocancel
    with pytest.raises(ValueError):
        rep_sexp_metrics(10, 1, 0.5, 1.0, 1.0, q_variant="other")


# --- coded, exponential --------------------------------------------------------

@pytest.mark.parametrize("delta", [0.0, 0.5, 3.0])
def test_coded_exp_no_parity_cost(delta):
    assert coded_exp_metrics(10, 10, delta, 2.0).cost_nocancel == pytest.approx(5.0, rel=1e-14)


def test_coded_exp_zero_delay_latency():
    m = coded_exp_metrics(10, 12, 0.0, 1.0)
    assert m.latency == pytest.approx(H(12) - H(2), rel=1e-13)
    assert m.latency == pytest.approx(1.603211, abs=1e-6)


def test_coded_exp_large_delay_is_baseline():
    assert coded_exp_metrics(10, 12, 40.0, 1.0).latency == pytest.approx(H10, rel=1e-12)


def test_coded_exp_large_delay_baseline_by_simulation():
    est = estimate(SystemConfig(10, Coded(12), 30.0, Exp(1.0)), 100_000, seed=3)
    assert within_3se(H10, est.mean_latency, est.se_latency)


def test_coded_exp_as_printed_orientation_is_negative_at_zero():
    m = coded_exp_metrics(10, 12, 0.0, 1.0, orientation="as-printed")
    assert m.latency == pytest.approx(-(H(12) - H(2)), rel=1e-13)
    assert m.notes["orientation"] == "as-printed"


def test_coded_exp_cost_nocancel_formula():
    q = 1 - math.exp(-2.0 * 0.8)
    m = coded_exp_metrics(10, 15, 0.8, 2.0)
    assert m.cost_nocancel == pytest.approx(10 / 2 * q**10 + 15 / 2 * (1 - q**10), rel=1e-13)


# --- coded, shifted exponential --------------------------------------------

@pytest.mark.parametrize("delta", [0.0, 0.4, 3.0])
def test_coded_sexp_degenerates_to_exp(delta):
    a = coded_sexp_metrics(10, 14, delta, 0.0, 1.3)
    b = coded_exp_metrics(10, 14, delta, 1.3)
    assert (a.latency, a.cost_cancel, a.cost_nocancel) == pytest.approx(
        (b.latency, b.cost_cancel, b.cost_nocancel), rel=1e-12
    )


def test_coded_sexp_zero_delay_costs():
    m = coded_sexp_metrics(10, 20, 0.0, 1.0, 1.0)
    assert m.cost_nocancel == pytest.approx(20 * (1 + 0.1), rel=1e-14)
    assert m.cost_cancel == pytest.approx(20 * 0.1 + 10, rel=1e-13)
    z = zero_delay_metrics(10, Coded(20), SExp(0.1, 1.0))
    assert m.cost_cancel == pytest.approx(z.cost_cancel, rel=1e-13)
    assert m.latency == pytest.approx(z.latency, rel=1e-12)


def test_coded_sexp_intermediates_seam():
    calls = []

    def custom(k, delta, D, mu):
        calls.append((k, delta, D, mu))
        return DelayIntermediates(q=0.2, q_tilde=0.5, eta=0.4)

    m = coded_sexp_metrics(10, 15, 2.0, 1.0, 1.0, intermediates=custom)
    assert calls == [(10, 2.0, 1.0, 1.0)]
    from straggler_lab import specfun

    base = (10 * 0.2**10 + 15 * (1 - 0.2**10)) * 1.1
    expected = (base - 5 * (1 - 0.2**10)
                - 5 * specfun.scaled_inc_beta_zero(0.4, 10 * 0.8) * (0.5**10 - 0.2**10))
    assert m.cost_cancel == pytest.approx(expected, rel=1e-12)
    assert m.cost_nocancel == pytest.approx(base, rel=1e-13)


def test_default_intermediates_equal_qtilde_and_eta():
    im = analytic.delay_intermediates(10, 2.0, 1.0, 1.0)
    assert im.q_tilde == im.eta == pytest.approx(1 - math.exp(-2.0))
    assert im.q == pytest.approx(1 - math.exp(-1.9))
    assert analytic.delay_intermediates(10, 0.05, 1.0, 1.0).q == 0.0


def test_coded_sexp_point_against_simulation():
    m = coded_sexp_metrics(10, 15, 2.0, 1.0, 1.0)
    est = estimate(SystemConfig(10, Coded(15), 2.0, SExp(0.1, 1.0)), 200_000, seed=8)
    assert within_3se(m.cost_nocancel, est.mean_cost_nocancel, est.se_cost_nocancel)
    assert abs(m.latency - est.mean_latency) <= max(0.03 * est.mean_latency, 3 * est.se_latency)
    assert abs(m.cost_cancel - est.mean_cost_cancel) <= max(0.03 * est.mean_cost_cancel, 3 * est.se_cost_cancel)


# --- zero delay ---------------------------------------------------------------

@pytest.mark.parametrize("alpha", [1.5, 2.0, 4.0])
def test_zero_delay_single_task_is_mean(alpha):
    m = zero_delay_metrics(1, Replicated(0), Pareto(2.0, alpha))
    assert m.latency == pytest.approx(2.0 * alpha / (alpha - 1), rel=1e-12)


def test_zero_delay_reference_values():
    assert zero_delay_metrics(10, Coded(20), SExp(0.1, 1.0)).cost_cancel == pytest.approx(12.0, rel=1e-14)
    m = zero_delay_metrics(10, Replicated(1), Pareto(1.0, 2.0))
    assert m.cost_cancel == pytest.approx(10 * 2 * 4 / 3, rel=1e-14)
    assert m.cost_cancel == pytest.approx(26.667, abs=1e-3)
    assert all(v == analytic.EXACT for v in m.exactness.values())


def test_zero_delay_rep_pareto_cost_against_simulation():
    m = zero_delay_metrics(10, Replicated(1), Pareto(1.0, 2.0))
    est = estimate(SystemConfig(10, Replicated(1), 0.0, Pareto(1.0, 2.0)), 200_000, seed=0)
    assert within_3se(m.cost_cancel, est.mean_cost_cancel, est.se_cost_cancel)
    assert within_3se(m.latency, est.mean_latency, est.se_latency)


def test_zero_delay_n_equals_k_is_baseline():
    for dist in (SExp(0.1, 1.0), Pareto(1.0, 2.0), Exp(3.0)):
        a = zero_delay_metrics(10, Coded(10), dist)
        b = zero_delay_metrics(10, Replicated(0), dist)
        assert (a.latency, a.cost_cancel, a.cost_nocancel) == pytest.approx(
            (b.latency, b.cost_cancel, b.cost_nocancel), rel=1e-12
        )


def test_zero_delay_pareto_domain():
    with pytest.raises(DomainError):
        zero_delay_metrics(10, Replicated(0), Pareto(1.0, 0.9))
    # (c+1) alpha > 1 keeps the latency finite, baseline-style cost is infinite
    m = zero_delay_metrics(10, Replicated(1), Pareto(1.0, 0.9))
    assert math.isfinite(m.latency) and math.isfinite(m.cost_cancel)
    assert m.cost_nocancel == math.inf


def test_zero_delay_coded_pareto_heavy_tail_cost_by_simulation():
    # alpha < 1: the closed form's 0/0 point is avoided by summing order statistics
    dist = Pareto(1.0, 0.8)
    m = zero_delay_metrics(10, Coded(13), dist)
    est = estimate(SystemConfig(10, Coded(13), 0.0, dist), 200_000, seed=4)
    assert within_3se(m.cost_cancel, est.mean_cost_cancel, est.se_cost_cancel)
    assert within_3se(m.latency, est.mean_latency, est.se_latency)


def test_coded_pareto_cost_matches_order_statistic_sum():
    lam, alpha, k, n = 1.0, 2.0, 10, 15

    def order_mean(j):
        s = 1 / alpha
        return lam * math.exp(math.lgamma(n + 1) - math.lgamma(n - j + 1)
                              + math.lgamma(n - j + 1 - s) - math.lgamma(n + 1 - s))

    expected = sum(order_mean(j) for j in range(1, k + 1)) + (n - k) * order_mean(k)
    assert zero_delay_metrics(k, Coded(n), Pareto(lam, alpha)).cost_cancel == pytest.approx(expected, rel=1e-12)


# --- dispatch -------------------------------------------------------------------

def test_dispatch():
    cfg = SystemConfig(10, Coded(15), 0.0, Exp(1.0))
    assert analytic.analytic_metrics(cfg).latency == pytest.approx(H(15) - H(5), rel=1e-13)
    with pytest.raises(UnsupportedCombination):
        analytic.analytic_metrics(SystemConfig(10, Coded(15), 1.0, Pareto(1.0, 2.0)))
    m = analytic.analytic_metrics(SystemConfig(10, Replicated(1), 1.0, SExp(0.1, 1.0)), q_variant="shifted")
    assert m.notes["q_variant"] == "shifted"


# --- invariants -------------------------------------------------------------

DELAYED = [
    ("rep-exp", lambda delta, lvl: rep_exp_metrics(10, lvl, delta, 1.0), [0, 1, 2, 4]),
    ("rep-sexp", lambda delta, lvl: rep_sexp_metrics(10, lvl, delta, 1.0, 1.0), [0, 1, 2, 4]),
    ("coded-exp", lambda delta, lvl: coded_exp_metrics(10, lvl, delta, 1.0), [10, 12, 15, 20, 30]),
    ("coded-sexp", lambda delta, lvl: coded_sexp_metrics(10, lvl, delta, 1.0, 1.0), [10, 12, 15, 20, 30]),
]


def zero_delay_reference(name, lvl):
    scheme = Replicated(lvl) if name.startswith("rep") else Coded(lvl)
    dist = Exp(1.0) if name.endswith("-exp") else SExp(0.1, 1.0)
    return zero_delay_metrics(10, scheme, dist)


@pytest.mark.parametrize("name,fn,levels", DELAYED, ids=[d[0] for d in DELAYED])
def test_boundary_consistency(name, fn, levels):
    baseline = H10 + (0.1 if name.endswith("sexp") else 0.0)
    for lvl in levels:
        assert fn(0.0, lvl).latency == pytest.approx(zero_delay_reference(name, lvl).latency, rel=1e-9)
        assert fn(40.0, lvl).latency == pytest.approx(baseline, rel=1e-6)


@pytest.mark.parametrize("name,fn,levels", DELAYED, ids=[d[0] for d in DELAYED])
def test_monotone_in_delta(name, fn, levels):
    grid = np.linspace(0, 6, 50)
    for lvl in levels:
        rows = [fn(d, lvl) for d in grid]
        lat = [r.latency for r in rows]
        cost = [r.cost_nocancel for r in rows]
        assert all(b >= a - 1e-12 for a, b in zip(lat, lat[1:])), (name, lvl)
        assert all(b <= a + 1e-12 for a, b in zip(cost, cost[1:])), (name, lvl)


def test_exp_cost_cancel_exact_everywhere():
    for delta in np.linspace(0, 10, 21):
        for c in range(5):
            assert rep_exp_metrics(10, c, delta, 2.0).cost_cancel == 5.0
        for n in range(10, 31):
            assert coded_exp_metrics(10, n, delta, 2.0).cost_cancel == 5.0


def test_metrics_invariants():
    for name, fn, levels in DELAYED:
        for lvl in levels:
            for delta in (0.0, 0.3, 1.0, 5.0):
                m = fn(delta, lvl)
                assert m.cost_cancel <= m.cost_nocancel + 1e-12
                assert min(m.latency, m.cost_cancel, m.cost_nocancel) >= 0


@pytest.mark.parametrize("dist", [SExp(0.1, 1.0), Pareto(1.0, 2.0)], ids=["sexp", "pareto"])
@pytest.mark.parametrize("c", [1, 2])
def test_coding_dominates_replication(dist, c):
    rep = zero_delay_metrics(10, Replicated(c), dist)
    winners = [
        n for n in range(10, 31)
        if (m := zero_delay_metrics(10, Coded(n), dist)).latency <= rep.latency
        and m.cost_cancel <= rep.cost_cancel
    ]
    assert winners


# --- Pareto latency at baseline cost -------------------------------------------

@pytest.mark.parametrize("alpha,expected", [(1.25, 3), (1.4, 1), (1.5, 0), (1.6, 0), (2.0, 0), (3.0, 0),
                                            (1.2, 4), (1.1, 9)])
def test_c_max(alpha, expected):
    assert replicated_c_max(alpha) == expected


def test_c_max_break_even():
    # c_max replicas never exceed the baseline cost (checked with exact Pareto costs)
    for alpha in np.linspace(1.01, 1.49, 49):
        c = replicated_c_max(alpha)
        dist = Pareto(1.0, alpha)
        assert zero_delay_metrics(10, Replicated(c), dist).cost_cancel <= 10 * dist.mean() * (1 + 1e-12)
        over = zero_delay_metrics(10, Replicated(c + 1), dist).cost_cancel
        assert over > 10 * dist.mean()


def test_min_latency_at_baseline_cost_examples():
    r = pareto_min_latency_at_baseline_cost(10, 1.0, 2.0, "rep")
    assert r.level == 0 and not r.feasible and r.reduction == 0.0
    r = pareto_min_latency_at_baseline_cost(10, 1.0, 1.4, "rep")
    assert r.level == 1 and r.feasible and r.reduction > 0


def test_coded_scan():
    r = pareto_min_latency_at_baseline_cost(10, 1.0, 2.0, "coded")
    dist = Pareto(1.0, 2.0)
    assert r.level == 13 and r.feasible
    assert zero_delay_metrics(10, Coded(13), dist).cost_cancel <= 20
    assert zero_delay_metrics(10, Coded(14), dist).cost_cancel > 20
    assert r.t_min < r.bound
    assert r.t_min == pytest.approx(zero_delay_metrics(10, Coded(13), dist).latency)
    capped = pareto_min_latency_at_baseline_cost(10, 1.0, 2.0, "coded", n_max=12)
    assert capped.level == 12


def test_coded_cost_crosses_baseline_once():
    # after the first n whose cost exceeds the baseline, cost stays above it
    for k in (10, 50):
        for alpha in (1.1, 1.5, 2.0, 3.0):
            dist = Pareto(1.0, alpha)
            base = k * dist.mean()
            costs = [zero_delay_metrics(k, Coded(n), dist).cost_cancel for n in range(k + 1, 12 * k)]
            above = [c > base for c in costs]
            first = above.index(True)
            assert all(above[first:])


def test_min_latency_at_baseline_cost_domain():
    with pytest.raises(DomainError):
        pareto_min_latency_at_baseline_cost(10, 1.0, 1.0, "rep")
    with pytest.raises(DomainError):
        replicated_c_max(0.9)


@pytest.mark.parametrize("delta", [0.0, 1.0, 2.345, 5.0])
def test_coded_without_parity_is_baseline(delta):
    m = coded_exp_metrics(10, 10, delta, 1.0)
    assert m.latency == pytest.approx(H10, rel=1e-13)
    assert m.exactness["latency"] == analytic.EXACT
    s = coded_sexp_metrics(10, 10, delta, 1.0, 1.0)
    assert s.latency == pytest.approx(0.1 + H10, rel=1e-13)
