"""Greedy least-squares covariate selection with exact noise-benchmark p-values.

A covariate is included only if the residual-sum drop it delivers would be
improbable for the best of the remaining-candidate count of independent
standard Gaussian columns.  For least squares that probability has a
closed form: the per-candidate drop follows a Beta(1/2, (n-nu0-1)/2) law,
and the minimum over m candidates is handled by powering the beta CDF.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from .engine import (
    Dataset,
    ExhaustedError,
    SweepState,
    standardize,
    svd_precondition,
)
from .special import beta_cdf, beta_isf, beta_quantile, beta_sf, pow1m

__all__ = [
    "Precondition",
    "Rule",
    "SelectorConfig",
    "SelectionTrace",
    "StopReason",
    "Step",
    "confidence_intervals",
    "relevance_scan",
    "run_selector",
    "select",
    "select_pre1",
    "select_pre2",
    "step_p_value",
    "stop_threshold_asymptotic",
    "stop_threshold_exact",
    "student_t_quantile",
    "student_t_two_sided_p",
]

# A fit counts as perfect once the residual sum falls below this fraction
# of its starting value; the p-value is 1 by convention from then on.
PERFECT_FIT_TOL = 1e-12

# Appended-fit interval is reported as singular below this squared-norm
# fraction of n for the column orthogonalized against the active set.
COLLINEARITY_APPEND_TOL = 1e-10


class Rule(str, enum.Enum):
    EXACT = "exact"
    ASYMPTOTIC = "asymptotic"


class Precondition(str, enum.Enum):
    NONE = "none"
    PRE1 = "pre1"
    PRE2 = "pre2"


class StopReason(str, enum.Enum):
    P_VALUE_EXCEEDED = "p_value_exceeded"
    MAX_STEPS = "max_steps"
    EXHAUSTED = "exhausted"
    PERFECT_FIT = "perfect_fit"


@dataclass(frozen=True)
class SelectorConfig:
    """Knobs of the stepwise procedures.

    ``max_steps`` of None means the structural cap n - 2.  The
    ``pre2_candidate_alpha`` is the permissive cutoff of the two-phase
    preconditioned variant's first phase.
    """

    alpha: float = 0.01
    rule: Rule = Rule.EXACT
    max_steps: int | None = None
    precondition: Precondition = Precondition.NONE
    pre2_candidate_alpha: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie strictly inside (0, 1), got {self.alpha}")
        if not (0.0 < self.pre2_candidate_alpha < 1.0):
            raise ValueError("pre2_candidate_alpha must lie strictly inside (0, 1)")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError("max_steps must be a positive integer")


@dataclass(frozen=True)
class Step:
    """One inclusion: 0-based column index, residual sum after inclusion, p-value."""

    index: int
    ss: float
    p_value: float


@dataclass(frozen=True)
class SelectionTrace:
    """Ordered record of a stepwise run.

    The first p-value to exceed alpha is never recorded as a step; it is
    kept in ``stop_candidate``.  ``joint_relevance`` is the product of
    (1 - p_j) over recorded steps: the probability that every included
    covariate beats Gaussian noise.
    """

    steps: tuple[Step, ...]
    joint_relevance: float
    stop_reason: StopReason
    stop_candidate: Step | None
    method: str
    n: int
    q: int
    alpha: float
    rule: Rule
    initial_ss: float
    extra: dict[str, Any] | None = None

    @property
    def selected(self) -> tuple[int, ...]:
        return tuple(s.index for s in self.steps)

    def selected_at(self, alpha: float) -> tuple[int, ...]:
        """Selected set had the run used a smaller cutoff.

        The greedy path does not depend on alpha, only the stopping point
        does; so for any alpha' <= alpha the trace prefix up to the first
        recorded p-value above alpha' is exactly the alpha' run.
        """
        out = []
        for s in self.steps:
            if s.p_value > alpha:
                break
            out.append(s.index)
        return tuple(out)


def step_p_value(ss0: float, ss01: float, n: int, nu0: int, q: int) -> float:
    """Probability that the best of q - nu0 Gaussian noise columns beats ss01.

    Evaluates 1 - pbeta(1 - ss01/ss0, 1/2, (n-nu0-1)/2)**(q-nu0) with the
    power taken in log space; a zero ss0 returns 1 by convention (no
    structure left to explain).
    """
    if nu0 > n - 3:
        raise ValueError(f"need nu0 <= n - 3, got nu0={nu0}, n={n}")
    if q <= nu0:
        raise ValueError(f"need q > nu0, got q={q}, nu0={nu0}")
    if ss0 < 0.0 or ss01 < 0.0 or ss01 > ss0 * (1.0 + 1e-9) + 1e-300:
        raise ValueError(f"need 0 <= ss01 <= ss0, got ss0={ss0}, ss01={ss01}")
    if ss0 <= 0.0:
        return 1.0
    x = min(max((ss0 - ss01) / ss0, 0.0), 1.0)
    sf = beta_sf(x, 0.5, (n - nu0 - 1) / 2.0)
    return pow1m(sf, q - nu0)


def stop_threshold_exact(ss0: float, n: int, nu0: int, q: int, alpha: float) -> float:
    """Largest ss01 still accepted at level alpha under the exact rule.

    ss0 * (1 - qbeta((1-alpha)^(1/(q-nu0)), 1/2, (n-nu0-1)/2)); the quantile
    is found from the upper tail so tiny alpha/(q-nu0) keeps full precision.
    """
    if nu0 > n - 3:
        raise ValueError(f"need nu0 <= n - 3, got nu0={nu0}, n={n}")
    if q <= nu0:
        raise ValueError(f"need q > nu0, got q={q}, nu0={nu0}")
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie strictly inside (0, 1)")
    m = q - nu0
    tail = -math.expm1(math.log1p(-alpha) / m)  # 1 - (1-alpha)^(1/m)
    x = beta_isf(tail, 0.5, (n - nu0 - 1) / 2.0)
    return ss0 * (1.0 - x)


def stop_threshold_asymptotic(ss0: float, n: int, q: int, alpha: float) -> float:
    """Large-(n, q) form of the stopping threshold, floored at zero."""
    if q < 3:
        raise ValueError("asymptotic threshold needs q >= 3 (log log q defined)")
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie strictly inside (0, 1)")
    level = -math.log1p(-alpha)
    x = (2.0 * math.log(q) - math.log(math.log(q)) - 2.0 * math.log(level)) / n
    return max(ss0 * (1.0 - x), 0.0)


def select(d: Dataset, cfg: SelectorConfig | None = None, scan_workers: int = 1) -> SelectionTrace:
    """Greedy selection: sweep, p-value, stop at the first exceedance.

    The dataset must be standardized.  Under ``Rule.ASYMPTOTIC`` the stop
    decision uses the log-based threshold; exact p-values are still
    recorded for reporting.
    """
    cfg = cfg or SelectorConfig()
    if not d.standardized:
        raise ValueError("select requires a standardized dataset")
    n, q = d.n, d.q
    state = SweepState(d)
    initial_ss = state.ss0
    max_steps = min(cfg.max_steps if cfg.max_steps is not None else n - 2, n - 2)

    steps: list[Step] = []
    joint = 1.0
    stop_candidate = None
    reason = StopReason.MAX_STEPS
    while True:
        if state.ss0 <= PERFECT_FIT_TOL * initial_ss:
            reason = StopReason.PERFECT_FIT
            break
        if len(steps) >= max_steps or len(state.active) > n - 3:
            reason = StopReason.MAX_STEPS
            break
        try:
            idx, ss01 = state.sweep_best(workers=scan_workers)
        except ExhaustedError:
            reason = StopReason.EXHAUSTED
            break
        p = step_p_value(state.ss0, ss01, n, len(state.active), q)
        if cfg.rule is Rule.ASYMPTOTIC:
            stop_now = ss01 > stop_threshold_asymptotic(state.ss0, n, q, cfg.alpha)
        else:
            stop_now = p > cfg.alpha
        if stop_now:
            stop_candidate = Step(idx, ss01, p)
            reason = StopReason.P_VALUE_EXCEEDED
            break
        state.include(idx)
        steps.append(Step(idx, ss01, p))
        joint *= 1.0 - p

    return SelectionTrace(
        steps=tuple(steps),
        joint_relevance=joint,
        stop_reason=reason,
        stop_candidate=stop_candidate,
        method="lsq",
        n=n,
        q=q,
        alpha=cfg.alpha,
        rule=cfg.rule,
        initial_ss=initial_ss,
    )


def select_pre1(d: Dataset, cfg: SelectorConfig | None = None, scan_workers: int = 1) -> SelectionTrace:
    """Selection after SVD preconditioning; indices refer to original columns."""
    cfg = cfg or SelectorConfig()
    if not d.standardized:
        raise ValueError("select_pre1 requires a standardized dataset")
    pre = standardize(svd_precondition(d))
    trace = select(pre, replace(cfg, precondition=Precondition.NONE), scan_workers=scan_workers)
    return replace(trace, method="lsq-pre1")


def _ols(y: np.ndarray, a: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Least-squares fit returning (coefficients, residuals, rss)."""
    if a.shape[1] == 0:
        return np.zeros(0), y.copy(), float(y @ y)
    coef, _, _, _ = np.linalg.lstsq(a, y, rcond=None)
    resid = y - a @ coef
    return coef, resid, float(resid @ resid)


def student_t_two_sided_p(t: float, df: float) -> float:
    """Two-sided tail P(|T_df| > t) via the incomplete beta."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    t = abs(float(t))
    if not math.isfinite(t):
        return 0.0
    return beta_cdf(df / (df + t * t), df / 2.0, 0.5)


def student_t_quantile(gamma: float, df: float) -> float:
    """t with P(|T_df| <= t) = gamma; gamma = 0 gives 0 exactly."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if not (0.0 <= gamma < 1.0):
        raise ValueError("coverage must lie in [0, 1)")
    if gamma == 0.0:
        return 0.0
    w = beta_quantile(1.0 - gamma, df / 2.0, 0.5)
    if w <= 0.0:
        return math.inf
    return math.sqrt(df * (1.0 - w) / w)


def select_pre2(d: Dataset, cfg: SelectorConfig | None = None, scan_workers: int = 1) -> SelectionTrace:
    """Two-phase variant: permissive preconditioned scan, then a t-test filter.

    Phase 1 runs the preconditioned selection at ``pre2_candidate_alpha``.
    Phase 2 regresses y on the candidate set using the data as passed (not
    the preconditioned data) and keeps candidates whose two-sided t-test
    p-value is at most 1 - (1-alpha)^(1/(q-nu0)), nu0 being the candidate
    count; that cutoff is approximately alpha/q.
    """
    cfg = cfg or SelectorConfig()
    if not d.standardized:
        raise ValueError("select_pre2 requires a standardized dataset")
    n, q = d.n, d.q
    phase1 = select_pre1(d, replace(cfg, alpha=cfg.pre2_candidate_alpha), scan_workers=scan_workers)
    candidates = list(phase1.selected)
    if len(candidates) >= n - 1:
        warnings.warn(
            f"phase 1 produced {len(candidates)} candidates; truncating to {n - 2}",
            RuntimeWarning,
        )
        candidates = candidates[: n - 2]

    extra: dict[str, Any] = {
        "phase1_candidates": [int(c) for c in candidates],
        "phase2_cutoff": None,
        "phase2_removed": [],
    }
    if not candidates:
        return replace(
            phase1, method="lsq-pre2", steps=(), joint_relevance=1.0,
            alpha=cfg.alpha, extra=extra,
        )

    a = d.X[:, candidates]
    coef, _, rss = _ols(d.y, a)
    df = n - len(candidates)
    if df <= 0:
        raise ValueError("phase-2 regression has no residual degrees of freedom")
    sigma2 = rss / df
    xtx_inv = np.linalg.pinv(a.T @ a)
    se = np.sqrt(np.clip(sigma2 * np.diag(xtx_inv), 0.0, None))
    cutoff = -math.expm1(math.log1p(-cfg.alpha) / (q - len(candidates)))
    extra["phase2_cutoff"] = cutoff

    retained: list[tuple[int, float]] = []
    for pos, c in enumerate(candidates):
        if se[pos] > 0.0:
            p = student_t_two_sided_p(coef[pos] / se[pos], df)
        else:
            p = 0.0 if coef[pos] != 0.0 else 1.0
        if p <= cutoff:
            retained.append((c, p))
        else:
            extra["phase2_removed"].append(int(c))

    # Sequential residual sums over the retained prefix, for the step record.
    steps: list[Step] = []
    joint = 1.0
    kept = []
    for c, p in retained:
        kept.append(c)
        _, _, rss_k = _ols(d.y, d.X[:, kept])
        steps.append(Step(c, rss_k, p))
        joint *= 1.0 - p

    return SelectionTrace(
        steps=tuple(steps),
        joint_relevance=joint,
        stop_reason=phase1.stop_reason,
        stop_candidate=phase1.stop_candidate,
        method="lsq-pre2",
        n=n,
        q=q,
        alpha=cfg.alpha,
        rule=cfg.rule,
        initial_ss=float(d.y @ d.y),
        extra=extra,
    )


def run_selector(d: Dataset, cfg: SelectorConfig, scan_workers: int = 1) -> SelectionTrace:
    """Dispatch on ``cfg.precondition``."""
    if cfg.precondition is Precondition.PRE1:
        return select_pre1(d, cfg, scan_workers=scan_workers)
    if cfg.precondition is Precondition.PRE2:
        return select_pre2(d, cfg, scan_workers=scan_workers)
    return select(d, cfg, scan_workers=scan_workers)


def relevance_scan(d: Dataset, cfg: SelectorConfig | None = None, scan_workers: int = 1) -> list[SelectionTrace]:
    """Repeat selection, deleting the selected columns, until a run selects nothing.

    Returns every trace (the final empty one included) with step indices
    mapped back to the original columns.  The number of distinct indices
    across all traces is the "possibly relevant" covariate count.
    """
    cfg = cfg or SelectorConfig()
    if not d.standardized:
        raise ValueError("relevance_scan requires a standardized dataset")
    pool = np.arange(d.q)
    traces: list[SelectionTrace] = []
    while pool.size:
        sub = d.subset(pool)
        t = select(sub, cfg, scan_workers=scan_workers)
        mapped_steps = tuple(Step(int(pool[s.index]), s.ss, s.p_value) for s in t.steps)
        stop = t.stop_candidate
        if stop is not None:
            stop = Step(int(pool[stop.index]), stop.ss, stop.p_value)
        traces.append(replace(t, steps=mapped_steps, stop_candidate=stop, q=d.q))
        if not t.steps:
            break
        chosen = set(int(pool[s.index]) for s in t.steps)
        pool = np.array([c for c in pool if int(c) not in chosen])
    return traces


@dataclass(frozen=True)
class ConfidenceIntervals:
    """Per-covariate t-intervals given an estimated active set.

    For an active covariate the interval comes from the plain regression
    on the active set; for any other covariate from the regression on the
    active set with that one covariate appended.
    """

    estimate: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    gamma: float
    active: tuple[int, ...]
    singular: tuple[int, ...]

    def length(self) -> np.ndarray:
        return self.upper - self.lower

    def covers(self, beta: np.ndarray) -> np.ndarray:
        return (self.lower <= beta) & (beta <= self.upper)


def confidence_intervals(d: Dataset, active, gamma: float = 0.95) -> ConfidenceIntervals:
    """Confidence intervals for all q covariates around an active set.

    Appended-covariate intervals are computed jointly: orthogonalize every
    column against the active set once, then the appended-fit coefficient,
    residual sum and standard error for each column follow from scalar
    projections.  Covariates numerically inside the active span get NaN
    intervals and are listed in ``singular``.
    """
    active = [int(i) for i in active]
    n, q = d.n, d.q
    if len(active) > n - 3:
        raise ValueError("active set too large for appended-fit intervals")
    y = d.y
    x = d.X
    k = len(active)

    estimate = np.full(q, np.nan)
    lower = np.full(q, np.nan)
    upper = np.full(q, np.nan)
    singular: list[int] = []

    if k:
        a = x[:, active]
        qf, rf = np.linalg.qr(a)
        coef = np.linalg.solve(rf, qf.T @ y)
        resid = y - a @ coef
        rss_a = float(resid @ resid)
        df_a = n - k
        rinv = np.linalg.inv(rf)
        diag_inv = np.einsum("ij,ij->i", rinv, rinv)
        tq = student_t_quantile(gamma, df_a)
        sigma_a = math.sqrt(max(rss_a / df_a, 0.0))
        half = tq * sigma_a * np.sqrt(diag_inv)
        for pos, j in enumerate(active):
            estimate[j] = coef[pos]
            lower[j] = coef[pos] - half[pos]
            upper[j] = coef[pos] + half[pos]
        z = x - qf @ (qf.T @ x)
        r_a = resid
    else:
        rss_a = float(y @ y)
        z = x.copy()
        r_a = y

    df_app = n - k - 1
    if df_app <= 0:
        raise ValueError("no residual degrees of freedom for appended fits")
    sq = np.einsum("ij,ij->j", z, z)
    num = z.T @ r_a
    tq_app = student_t_quantile(gamma, df_app)
    others = np.ones(q, dtype=bool)
    others[active] = False
    bad = others & (sq <= COLLINEARITY_APPEND_TOL * n)
    singular = np.nonzero(bad)[0].tolist()
    ok = others & ~bad
    with np.errstate(invalid="ignore", divide="ignore"):
        b = num / sq
        rss_j = np.clip(rss_a - num * num / sq, 0.0, None)
        half = tq_app * np.sqrt(rss_j / df_app) / np.sqrt(sq)
    estimate[ok] = b[ok]
    lower[ok] = b[ok] - half[ok]
    upper[ok] = b[ok] + half[ok]

    return ConfidenceIntervals(
        estimate=estimate,
        lower=lower,
        upper=upper,
        gamma=gamma,
        active=tuple(active),
        singular=tuple(singular),
    )
