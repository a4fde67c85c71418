"""Distribution functions used by the selection p-values.

The regularized incomplete beta function and its inverse are implemented
here directly (continued fraction, double precision) because the exact
step p-value rests on them and needs uniform relative accuracy for shape
parameters up to a few thousand.  The normal and chi-squared (df=1)
helpers wrap scipy.special, which is already exact at double precision.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp

__all__ = [
    "ConvergenceError",
    "beta_cdf",
    "beta_sf",
    "beta_pdf",
    "beta_quantile",
    "beta_isf",
    "chisq1_cdf",
    "chisq1_sf",
    "normal_cdf",
    "normal_quantile",
    "pow1m",
]

_CF_EPS = 1e-16
_CF_MAX_ITER = 500
_TINY = 1e-300


class ConvergenceError(RuntimeError):
    """An iterative routine failed to converge; never a silent wrong value."""


def _check_shape(a: float, b: float) -> None:
    if not (a > 0.0 and b > 0.0):
        raise ValueError(f"beta shape parameters must be positive, got a={a}, b={b}")


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, modified Lentz scheme."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ConvergenceError(
        f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})"
    )


def _stirling_corr(z: float) -> float:
    z2 = z * z
    return (1.0 / 12.0 - (1.0 / 360.0 - 1.0 / (1260.0 * z2)) / z2) / z


def _lgamma_diff(delta: float, z: float) -> float:
    """lgamma(z + delta) - lgamma(z) without the huge-value cancellation.

    Requires z >= 1000 so the truncated Stirling series is far below
    double precision; exact cancellation structure keeps every term small
    when delta is small.
    """
    return ((z - 0.5) * math.log1p(delta / z) + delta * math.log(z + delta) - delta
            + _stirling_corr(z + delta) - _stirling_corr(z))


def _lbeta(a: float, b: float) -> float:
    """log B(a, b); switches to a Stirling difference once a shape is large.

    The direct lgamma difference loses ~b*eps*log(b) absolute accuracy in
    the exponent, which the powered front factor turns into relative error
    of the same size; the difference form keeps every term O(min(a,b) log max).
    """
    lo, hi = (a, b) if a <= b else (b, a)
    if hi < 1000.0:
        return math.lgamma(lo) + math.lgamma(hi) - math.lgamma(lo + hi)
    return math.lgamma(lo) - _lgamma_diff(lo, hi)


def _betainc_lower(a: float, b: float, x: float,
                   log_x: float | None = None, log1m_x: float | None = None) -> float:
    """I_x(a,b) evaluated on the side where the continued fraction converges fast.

    Caller must ensure x < (a+1)/(a+b+2); otherwise use the symmetry
    switch.  ``log_x``/``log1m_x`` let a caller that knows the complement
    exactly supply accurate logarithms: with large shapes the front factor
    amplifies any rounding of log(1-x) by a factor of b.
    """
    lx = math.log(x) if log_x is None else log_x
    l1x = math.log1p(-x) if log1m_x is None else log1m_x
    ln_front = a * lx + b * l1x - _lbeta(a, b)
    return math.exp(ln_front) * _betacf(a, b, x) / a


def beta_cdf(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b).

    Uses the continued fraction with the symmetry switch at
    x = (a+1)/(a+b+2), so whichever of the two tails is smaller is
    computed directly and keeps full relative accuracy.
    """
    _check_shape(a, b)
    x = float(x)
    if math.isnan(x) or x < 0.0 or x > 1.0:
        raise ValueError(f"beta_cdf argument must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    if x < (a + 1.0) / (a + b + 2.0):
        return min(1.0, _betainc_lower(a, b, x))
    comp = _betainc_lower(b, a, 1.0 - x, log_x=math.log1p(-x), log1m_x=math.log(x))
    return max(0.0, 1.0 - comp)


def beta_sf(x: float, a: float, b: float) -> float:
    """Upper tail 1 - I_x(a, b), accurate when the tail is small."""
    _check_shape(a, b)
    x = float(x)
    if math.isnan(x) or x < 0.0 or x > 1.0:
        raise ValueError(f"beta_sf argument must lie in [0, 1], got {x}")
    if x == 0.0:
        return 1.0
    if x == 1.0:
        return 0.0
    xc = 1.0 - x
    if xc < (b + 1.0) / (a + b + 2.0):
        return min(1.0, _betainc_lower(b, a, xc, log_x=math.log1p(-x), log1m_x=math.log(x)))
    return max(0.0, 1.0 - _betainc_lower(a, b, x))


def beta_pdf(x: float, a: float, b: float) -> float:
    """Beta density, evaluated in log space to survive extreme shapes."""
    _check_shape(a, b)
    if x <= 0.0 or x >= 1.0:
        return 0.0
    ln = (a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - _lbeta(a, b)
    if ln > 700.0:
        return math.inf
    return math.exp(ln)


def _beta_root(a: float, b: float, cdf_target: float | None, sf_target: float | None) -> float:
    """Invert the beta CDF (or SF) by safeguarded Newton iteration.

    Keeps a shrinking bracket [lo, hi] and falls back to bisection
    whenever a Newton step would leave it.  Convergence is judged on the
    function residual relative to the target (that is what the roundtrip
    contract measures); a bracket collapsed to a few ulps also stops, as
    double precision then has nothing left to resolve.  200-iteration cap.
    """
    if cdf_target is not None:
        target = cdf_target
        f = lambda t: beta_cdf(t, a, b) - cdf_target  # noqa: E731 - local helper
        fprime_sign = 1.0
    else:
        target = sf_target
        f = lambda t: beta_sf(t, a, b) - sf_target  # noqa: E731
        fprime_sign = -1.0
    rtol = 1e-12 * max(target, 1e-15)

    lo, hi = 0.0, 1.0
    x = a / (a + b)  # start at the mean
    for _ in range(200):
        fx = f(x)
        if abs(fx) <= rtol:
            return x
        if fx > 0.0:
            if fprime_sign > 0:
                hi = x
            else:
                lo = x
        else:
            if fprime_sign > 0:
                lo = x
            else:
                hi = x
        dfx = fprime_sign * beta_pdf(x, a, b)
        x_new = x - fx / dfx if dfx != 0.0 and math.isfinite(dfx) else math.nan
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if hi - lo <= 2.0 * math.ulp(hi):
            return x_new
        x = x_new
    raise ConvergenceError(
        f"beta quantile iteration did not converge (a={a}, b={b}, "
        f"cdf_target={cdf_target}, sf_target={sf_target})"
    )


def beta_quantile(prob: float, a: float, b: float) -> float:
    """Inverse of ``beta_cdf`` in its first argument.

    Endpoints map exactly: quantile(0) = 0 and quantile(1) = 1.
    """
    _check_shape(a, b)
    prob = float(prob)
    if math.isnan(prob) or prob < 0.0 or prob > 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {prob}")
    if prob == 0.0:
        return 0.0
    if prob == 1.0:
        return 1.0
    return _beta_root(a, b, prob, None)


def beta_isf(tail: float, a: float, b: float) -> float:
    """Inverse survival function: the x with ``beta_sf(x, a, b) == tail``.

    Preferred over ``beta_quantile(1 - tail, ...)`` when the upper tail is
    tiny, because the tail is then used at full precision.
    """
    _check_shape(a, b)
    tail = float(tail)
    if math.isnan(tail) or tail < 0.0 or tail > 1.0:
        raise ValueError(f"tail probability must lie in [0, 1], got {tail}")
    if tail == 0.0:
        return 1.0
    if tail == 1.0:
        return 0.0
    return _beta_root(a, b, None, tail)


def chisq1_cdf(x):
    """Chi-squared CDF with one degree of freedom: 2*Phi(sqrt(x)) - 1."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0) or np.any(np.isnan(arr)):
        raise ValueError("chisq1_cdf requires x >= 0")
    out = _sp.erf(np.sqrt(arr / 2.0))
    return float(out) if np.ndim(x) == 0 else out


def chisq1_sf(x):
    """Upper tail of the chi-squared(1) distribution, erfc-based."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0) or np.any(np.isnan(arr)):
        raise ValueError("chisq1_sf requires x >= 0")
    out = _sp.erfc(np.sqrt(arr / 2.0))
    return float(out) if np.ndim(x) == 0 else out


def normal_cdf(x):
    """Standard normal CDF."""
    out = _sp.ndtr(np.asarray(x, dtype=float))
    return float(out) if np.ndim(x) == 0 else out


def normal_quantile(p):
    """Standard normal quantile; rejects the endpoints 0 and 1."""
    arr = np.asarray(p, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= 1.0) or np.any(np.isnan(arr)):
        raise ValueError("normal_quantile requires 0 < p < 1")
    out = _sp.ndtri(arr)
    return float(out) if np.ndim(p) == 0 else out


def pow1m(sf: float, m: float) -> float:
    """Compute 1 - (1 - sf)**m without cancellation.

    ``sf`` is a small upper-tail probability and ``m`` the number of
    independent noise candidates; meaningful for m up to tens of
    thousands where direct powering would lose all precision.
    """
    if sf >= 1.0:
        return 1.0
    if sf <= 0.0:
        return 0.0
    p = -math.expm1(m * math.log1p(-sf))
    return min(max(p, 0.0), 1.0)
