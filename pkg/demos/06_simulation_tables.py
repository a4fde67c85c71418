"""Desk-scale reruns of the published simulation tables.

Runs each built-in scenario at a reduced replication count and prints the
aggregate rows next to the published full-scale values.  Increase the
replication counts (and add --slow cells through the CLI) to tighten the
Monte Carlo error; seeds make every run reproducible.
"""

import warnings

from stepgauss import SelectorConfig
from stepgauss.simulate import (
    builtin_scenario,
    format_sweep_table,
    run_study,
    run_study_sweep,
)

warnings.simplefilter("ignore")
REPS = 200

print("equicorrelated design, n=100, q=500, s0=3 (published: "
      "power 0.60 fwer 0.19 at U(0,2); 0.79/0.07 at U(0,4))")
for hi in (2.0, 4.0):
    spec = builtin_scenario("equicorr-T2", s0=3, coef_hi=hi,
                            replications=REPS, seed=101)
    rep = run_study(spec, "progau", SelectorConfig(alpha=0.01), threads=4,
                    compute_ci=(hi == 2.0))
    extra = ""
    if rep.avgcov_s0 is not None:
        extra = (f"  cover(S0) {rep.avgcov_s0:.2f} length(S0) {rep.avglen_s0:.2f}"
                 "  (published 0.84 / 0.70)")
    print(f"  U(0,{hi:g}): power {rep.power:.2f}  fwer {rep.fwer:.2f}{extra}")

print("\nAR(1)-logit false/correct discoveries, n=500, q=200 "
      "(published false ~ alpha: 0.012/0.051/0.103)")
spec = builtin_scenario("ar1-logit-T1", replications=REPS, seed=202)
sweep = run_study_sweep(spec, "logit-ls", SelectorConfig(),
                        alphas=(0.01, 0.05, 0.10), threads=4)
print(format_sweep_table(sweep))

print("\nToeplitz logistic via Kullback-Leibler, n=100, q=500 "
      "(published power 0.26, fwer 0.03 at U(0,1))")
spec = builtin_scenario("toeplitz-logit-T5", coef_hi=1.0, replications=REPS, seed=303)
rep = run_study(spec, "kl", SelectorConfig(alpha=0.01), threads=4)
print(f"  power {rep.power:.2f}  fwer {rep.fwer:.2f}")

print("\nequicorrelated 0.85 with 20 coefficients of 3, n=250, q=1000 "
      "(a desk-scale slice of the larger-q study)")
spec = builtin_scenario("jia-T4", q=1000, replications=25, seed=404)
for proc in ("progau", "propre2"):
    rep = run_study(spec, proc, SelectorConfig(alpha=0.01), threads=4)
    print(f"  {proc:>8}: false neg {rep.false_neg_mean:.2f}  "
          f"false pos {rep.false_pos_mean:.2f}")
