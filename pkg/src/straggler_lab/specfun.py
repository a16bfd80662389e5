"""Real-argument special functions used by the closed-form latency/cost formulas.

* ``harmonic(x)``: H_x = int_0^1 (1 - u^x) / (1 - u) du, which equals
  digamma(x + 1) + euler_gamma and reduces to 1 + 1/2 + ... + 1/x for integers.
* ``inc_beta_zero(q, m)``: B(q; m, 0) = int_0^q u^(m-1) / (1 - u) du.
* ``ln_gamma`` / ``gamma_ratio``: log-space Gamma helpers.

Delay formulas substitute q = 1 - exp(-mu * delta), which rounds to 1.0 long
before the quantities of interest stop changing. The ``*_exp`` variants take
x = -ln(1 - q) instead so that large delays stay representable.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286060651209008240243

# Above this q the power series needs thousands of terms; switch to
# B(q; m, 0) = -ln(1 - q) - int_0^q (1 - u^(m-1)) / (1 - u) du.
_SERIES_MAX_Q = 0.99
_SERIES_REL_TOL = 1e-18


def _check_finite(name: str, x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x}")
    return x


def _harmonic_unchecked(x: float) -> float:
    # valid for x > -1
    if x == 0.0:
        return 0.0
    return float(special.digamma(x + 1.0)) + EULER_GAMMA


def harmonic(x: float) -> float:
    """Harmonic number H_x for real ``x >= 0``.

    >>> round(harmonic(4), 12) == round(25 / 12, 12)
    True
    """
    x = _check_finite("harmonic argument", x)
    if x < 0:
        raise DomainError(f"harmonic number undefined for negative argument {x}")
    return _harmonic_unchecked(x)


def _series(log_q: float, m: float, scale: float = 0.0) -> float:
    """Sum_{i>=0} q^(m + i - scale) / (m + i), with ln(q) given."""
    # log_q < 0 here; pick the count so the geometric tail is negligible
    n_terms = int(math.ceil(math.log(_SERIES_REL_TOL) / log_q)) + 1
    idx = m + np.arange(n_terms, dtype=float)
    terms = np.exp((idx - scale) * log_q) / idx
    return float(terms.sum())


def _log_residual(x: float, m: float) -> float:
    """int_0^q (1 - u^(m-1)) / (1 - u) du for q = 1 - exp(-x)."""
    q = -math.expm1(-x)
    if m == math.floor(m) and m < 1e6:
        mi = int(m)
        return math.fsum(q**i / i for i in range(1, mi))
    # int_0^1 ... = H_{m-1}; subtract the piece over [q, 1] in t = 1 - u
    eps = math.exp(-x)

    def integrand(t: float) -> float:
        return -math.expm1((m - 1.0) * math.log1p(-t)) / t

    tail, _ = integrate.quad(integrand, 0.0, eps, epsabs=1e-15, epsrel=1e-13)
    return _harmonic_unchecked(m - 1.0) - tail


def _check_m(m: float) -> float:
    m = _check_finite("m", m)
    if m <= 0:
        raise DomainError(f"incomplete Beta B(q; m, 0) needs m > 0, got {m}")
    return m


def inc_beta_zero_exp(x: float, m: float) -> float:
    """B(1 - e^(-x); m, 0) for ``x >= 0``; ``x`` may be arbitrarily large."""
    x = _check_finite("x", x)
    m = _check_m(m)
    if x < 0:
        raise DomainError(f"x = -ln(1 - q) must be nonnegative, got {x}")
    if x == 0.0:
        return 0.0
    q = -math.expm1(-x)
    if q <= _SERIES_MAX_Q:
        return _series(math.log(q), m)
    return x - _log_residual(x, m)


def inc_beta_zero(q: float, m: float) -> float:
    """Incomplete Beta function with zero second parameter, B(q; m, 0).

    Defined for ``0 <= q < 1`` and ``m > 0``; diverges like -ln(1 - q) as
    q approaches 1.
    """
    q = _check_finite("q", q)
    if not 0.0 <= q < 1.0:
        raise DomainError(f"B(q; m, 0) needs 0 <= q < 1, got q = {q}")
    return inc_beta_zero_exp(-math.log1p(-q), m)


def scaled_inc_beta_zero(eta: float, a: float) -> float:
    """eta^(-a) * B(eta; a + 1, 0), finite and continuous down to eta = 0.

    Computed without forming eta^(-a) separately, since that factor is huge
    exactly where B(eta; a + 1, 0) is tiny.
    """
    eta = _check_finite("eta", eta)
    if not 0.0 <= eta < 1.0:
        raise DomainError(f"eta must lie in [0, 1), got {eta}")
    if a < 0:
        raise DomainError(f"a must be nonnegative, got {a}")
    if eta == 0.0:
        return 0.0
    m = a + 1.0
    if eta <= _SERIES_MAX_Q:
        return _series(math.log(eta), m, scale=a)
    return inc_beta_zero(eta, m) * eta ** (-a)


def ln_gamma(x: float) -> float:
    x = _check_finite("Gamma argument", x)
    if x <= 0:
        raise DomainError(f"ln Gamma evaluated at non-positive argument {x}")
    return math.lgamma(x)


def gamma_ratio(a: float, b: float) -> float:
    """Gamma(a) / Gamma(b) for positive arguments, via log-Gamma."""
    if a == b:
        ln_gamma(a)
        return 1.0
    return math.exp(ln_gamma(a) - ln_gamma(b))
