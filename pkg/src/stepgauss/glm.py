"""Nonlinear least-squares and Kullback-Leibler stepwise selection.

For a smooth link g the response is approximated by g(x'beta); the noise
benchmark again reduces to a chi-squared(1) approximation through a Taylor
expansion of the objective drop.  For 0/1 responses the squared error can
be replaced by the Kullback-Leibler discrepancy (negative Bernoulli
log-likelihood), which avoids the saturated-probability pathologies of
least squares with a logistic link.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .engine import Dataset
from .lsq import (
    PERFECT_FIT_TOL,
    Rule,
    SelectionTrace,
    SelectorConfig,
    Step,
    StopReason,
)
from .special import chisq1_sf, pow1m

__all__ = [
    "IDENTITY",
    "LOGISTIC",
    "KLFit",
    "LinkSpec",
    "NLFit",
    "kl_fit",
    "kl_select",
    "kl_step_p_value",
    "kl_value",
    "nl_fit",
    "nl_select",
    "nl_step_p_value",
]

PROB_CLAMP = 1e-12     # keeps the KL discrepancy finite under separation
SEPARATION_ETA = 30.0  # |x'beta| beyond this freezes the fit and raises a flag


@dataclass(frozen=True)
class LinkSpec:
    """A link g with its derivative g1 and a short name."""

    g: callable
    g1: callable
    name: str


def _logistic_g1(u):
    p = expit(u)
    return p * (1.0 - p)


LOGISTIC = LinkSpec(g=expit, g1=_logistic_g1, name="logistic")
IDENTITY = LinkSpec(g=lambda u: u, g1=lambda u: np.ones_like(np.asarray(u, dtype=float)),
                    name="identity")


@dataclass(frozen=True)
class NLFit:
    coefficients: np.ndarray
    residuals: np.ndarray
    ss: float  # mean squared residual
    fitted: np.ndarray
    iterations: int
    converged: bool
    saturated: bool


def nl_fit(d: Dataset, active, link: LinkSpec, max_iter: int = 200, tol: float = 1e-9) -> NLFit:
    """Gauss-Newton fit of y ~ g(X[active] beta) with step halving.

    The mean squared residual is nonincreasing by construction.  A linear
    predictor exceeding +-30 marks the fit as saturated (relevant for
    steep links on separable data); further iteration is pointless there.
    """
    active = [int(i) for i in active]
    n = d.n
    if len(active) > n - 3:
        raise ValueError("active set too large")
    y = d.y
    if not active:
        fitted = np.full(n, float(link.g(0.0)))
        resid = y - fitted
        return NLFit(np.zeros(0), resid, float(np.mean(resid**2)), fitted, 0, True, False)
    a = d.X[:, active]
    g0 = float(link.g(0.0))
    g1_0 = float(link.g1(0.0))
    if g1_0 != 0.0:
        beta, _, _, _ = np.linalg.lstsq(a, (y - g0) / g1_0, rcond=None)
    else:
        beta = np.zeros(len(active))

    def ss_of(b):
        r = y - link.g(a @ b)
        return float(np.mean(r * r))

    ss = ss_of(beta)
    converged = False
    saturated = False
    it = 0
    for it in range(1, max_iter + 1):
        eta = a @ beta
        if np.max(np.abs(eta)) > SEPARATION_ETA:
            saturated = True
            warnings.warn("linear predictor saturated the link; coefficients frozen",
                          RuntimeWarning)
            break
        w = link.g1(eta)
        r = y - link.g(eta)
        jac = a * np.asarray(w)[:, None]
        delta, _, _, _ = np.linalg.lstsq(jac, r, rcond=None)
        lam = 1.0
        improved = False
        for _ in range(31):
            cand = beta + lam * delta
            ss_new = ss_of(cand)
            if ss_new <= ss:
                improved = True
                break
            lam *= 0.5
        if not improved:
            warnings.warn("Gauss-Newton step could not reduce the objective",
                          RuntimeWarning)
            break
        step = float(np.max(np.abs(lam * delta)))
        beta = cand
        ss = ss_new
        if step < tol:
            converged = True
            break
    if not converged and not saturated and it == max_iter:
        warnings.warn(f"nonlinear fit did not converge in {max_iter} iterations",
                      RuntimeWarning)
    fitted = link.g(a @ beta)
    resid = y - fitted
    return NLFit(beta, resid, float(np.mean(resid**2)), fitted, it, converged, saturated)


def nl_step_p_value(ss0: float, ss1: float, weights_num: float, weights_den: float,
                    q: int, nu0: int) -> float:
    """Chi-squared(1) benchmark for the nonlinear objective drop.

    ``ss0`` and ``ss1`` are on the TOTAL squared-residual scale here (the
    callers multiply the mean objectives by n); the weights are
    weights_num = sum r_i^2 g1_i^2 and weights_den = sum g1_i^2 from the
    baseline fit.  With the identity link this reduces to the chi-squared
    approximation of the exact least-squares p-value.
    """
    if q <= nu0:
        raise ValueError(f"need q > nu0, got q={q}, nu0={nu0}")
    if ss1 > ss0 * (1.0 + 1e-9) + 1e-300:
        raise ValueError(f"need ss1 <= ss0, got ss0={ss0}, ss1={ss1}")
    if weights_den <= 0.0:
        warnings.warn("flat link everywhere (sum g1^2 = 0); p-value 1", RuntimeWarning)
        return 1.0
    if weights_num <= 0.0:
        return 1.0
    stat = max((ss0 - ss1) * weights_den / weights_num, 0.0)
    return pow1m(chisq1_sf(stat), q - nu0)


def kl_value(y, p) -> float:
    """Kullback-Leibler discrepancy -sum(y log p + (1-y) log(1-p)).

    Probabilities are clamped away from 0 and 1 so the value stays finite
    under separation.
    """
    y = np.asarray(y, dtype=float)
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("response must be 0/1 for the Kullback-Leibler discrepancy")
    p = np.clip(np.asarray(p, dtype=float), PROB_CLAMP, 1.0 - PROB_CLAMP)
    return float(-np.sum(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


@dataclass(frozen=True)
class KLFit:
    coefficients: np.ndarray  # intercept first when fitted with one
    probabilities: np.ndarray
    kl: float
    iterations: int
    converged: bool
    separated: bool
    intercept: bool


def kl_fit(d: Dataset, active, intercept: bool = True, max_iter: int = 200,
           tol: float = 1e-9) -> KLFit:
    """Newton-Raphson logistic fit minimizing the KL discrepancy.

    Step halving keeps the discrepancy nonincreasing.  Separation is
    declared once |x'beta| exceeds 30; the coefficients are frozen there
    and the fit flagged, with the clamped KL value still finite.
    """
    active = [int(i) for i in active]
    y = d.y
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("response must be 0/1 for logistic fits")
    n = d.n
    cols = [np.ones((n, 1))] if intercept else []
    if active:
        cols.append(d.X[:, active])
    if not cols:
        p = np.full(n, 0.5)
        return KLFit(np.zeros(0), p, kl_value(y, p), 0, True, False, intercept)
    a = np.hstack(cols)
    k = a.shape[1]
    beta = np.zeros(k)
    p = expit(a @ beta)
    kl = kl_value(y, p)
    converged = False
    separated = False
    it = 0
    for it in range(1, max_iter + 1):
        w = p * (1.0 - p)
        grad = a.T @ (p - y)
        hess = (a * w[:, None]).T @ a
        try:
            delta = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            delta, _, _, _ = np.linalg.lstsq(hess, -grad, rcond=None)
        lam = 1.0
        improved = False
        for _ in range(31):
            cand = beta + lam * delta
            kl_new = kl_value(y, expit(a @ cand))
            if kl_new <= kl:
                improved = True
                break
            lam *= 0.5
        if not improved:
            break
        beta = cand
        p = expit(a @ beta)
        kl = kl_new
        if np.max(np.abs(a @ beta)) > SEPARATION_ETA:
            separated = True
            warnings.warn("separation detected in logistic fit; coefficients frozen",
                          RuntimeWarning)
            break
        if float(np.max(np.abs(lam * delta))) < tol:
            converged = True
            break
    if not converged and not separated and it == max_iter:
        warnings.warn(f"logistic fit did not converge in {max_iter} iterations",
                      RuntimeWarning)
    return KLFit(beta, p, kl, it, converged, separated, intercept)


def kl_step_p_value(kl0: float, kl1: float, p0, y, q: int, nu0: int) -> float:
    """Chi-squared(1) benchmark for the KL drop.

    The scaling factor 2 sum p(1-p) / sum (y-p)^2 comes from the score and
    curvature of the Bernoulli log-likelihood at the baseline fit.  The
    power exponent is q - nu0 with nu0 the number of selected covariates.
    """
    if q <= nu0:
        raise ValueError(f"need q > nu0, got q={q}, nu0={nu0}")
    if kl1 > kl0 * (1.0 + 1e-9) + 1e-300:
        raise ValueError(f"need kl1 <= kl0, got kl0={kl0}, kl1={kl1}")
    p0 = np.asarray(p0, dtype=float)
    y = np.asarray(y, dtype=float)
    curvature = float(np.sum(p0 * (1.0 - p0)))
    score_var = float(np.sum((y - p0) ** 2))
    if curvature <= 1e-12 * p0.size:
        warnings.warn("degenerate fitted probabilities (all 0/1); p-value 1", RuntimeWarning)
        return 1.0
    if score_var <= 0.0:
        warnings.warn("zero residual variation in logistic fit; p-value 1", RuntimeWarning)
        return 1.0
    stat = max(2.0 * curvature / score_var * (kl0 - kl1), 0.0)
    return pow1m(chisq1_sf(stat), q - nu0)


def _greedy_glm(d: Dataset, cfg: SelectorConfig, *, kind: str,
                link: LinkSpec | None = None, intercept: bool = True) -> SelectionTrace:
    """Shared greedy loop for the nonlinear-LSQ and KL procedures.

    Candidates are scored with the one-step quadratic drop of the
    objective; only the winner is refit in full.
    """
    if not d.standardized:
        raise ValueError("selection requires a standardized dataset")
    n, q = d.n, d.q
    x = d.X
    x2 = x * x
    max_steps = min(cfg.max_steps if cfg.max_steps is not None else n - 2, n - 2)
    dead = np.zeros(q, dtype=bool)
    dead[list(d.excluded)] = True

    active: list[int] = []
    if kind == "kl":
        fit0 = kl_fit(d, active, intercept=intercept)
        obj0 = fit0.kl
    else:
        fit0 = nl_fit(d, active, link)
        obj0 = fit0.ss
    initial_obj = obj0

    steps: list[Step] = []
    joint = 1.0
    stop_candidate = None
    reason = StopReason.MAX_STEPS
    while True:
        if obj0 <= PERFECT_FIT_TOL * max(initial_obj, 1e-300):
            reason = StopReason.PERFECT_FIT
            break
        if len(steps) >= max_steps or len(active) > n - 3:
            reason = StopReason.MAX_STEPS
            break

        if kind == "kl":
            resid = d.y - fit0.probabilities
            w = fit0.probabilities * (1.0 - fit0.probabilities)
            num = resid @ x
            den = w @ x2
        else:
            w1 = np.asarray(link.g1(x[:, active] @ fit0.coefficients if active
                                    else np.zeros(n)))
            rw = fit0.residuals * w1
            num = rw @ x
            den = (w1 * w1) @ x2
        with np.errstate(invalid="ignore", divide="ignore"):
            score = np.where(den > 0.0, num * num / den, -np.inf)
        score[dead] = -np.inf
        score[active] = -np.inf
        j = int(np.argmax(score))
        if not np.isfinite(score[j]):
            reason = StopReason.EXHAUSTED
            break

        if kind == "kl":
            fit1 = kl_fit(d, active + [j], intercept=intercept)
            obj1 = min(fit1.kl, obj0)
            p = kl_step_p_value(obj0, obj1, fit0.probabilities, d.y, q, len(active))
        else:
            fit1 = nl_fit(d, active + [j], link)
            obj1 = min(fit1.ss, obj0)
            eta = x[:, active] @ fit0.coefficients if active else np.zeros(n)
            g1v = np.asarray(link.g1(eta))
            weights_num = float(np.sum(fit0.residuals**2 * g1v**2))
            weights_den = float(np.sum(g1v**2))
            p = nl_step_p_value(n * obj0, n * obj1, weights_num, weights_den, q, len(active))
        if p > cfg.alpha:
            stop_candidate = Step(j, obj1, p)
            reason = StopReason.P_VALUE_EXCEEDED
            break
        steps.append(Step(j, obj1, p))
        joint *= 1.0 - p
        active.append(j)
        fit0 = fit1
        obj0 = obj1

    return SelectionTrace(
        steps=tuple(steps),
        joint_relevance=joint,
        stop_reason=reason,
        stop_candidate=stop_candidate,
        method="kl" if kind == "kl" else f"nl-{link.name}",
        n=n,
        q=q,
        alpha=cfg.alpha,
        rule=Rule.EXACT,
        initial_ss=initial_obj,
    )


def nl_select(d: Dataset, cfg: SelectorConfig | None = None,
              link: LinkSpec = LOGISTIC) -> SelectionTrace:
    """Greedy nonlinear least-squares selection for a given link."""
    return _greedy_glm(d, cfg or SelectorConfig(), kind="nl", link=link)


def kl_select(d: Dataset, cfg: SelectorConfig | None = None,
              intercept: bool = True) -> SelectionTrace:
    """Greedy Kullback-Leibler (logistic) selection for 0/1 responses.

    An intercept column is implicitly active by default; logistic fits on
    0/1 data without one are rarely meaningful, but it can be switched off
    to follow the intercept-free notation exactly.
    """
    return _greedy_glm(d, cfg or SelectorConfig(), kind="kl", intercept=intercept)
