"""Plan Monte Carlo sample sizes from the sup-norm concentration bound.

The probability that a K-draw estimate of a p-value curve is off by more than
epsilon anywhere is at most min(1, 4 exp(-K eps^2 / 8)), independent of the
experiment's size.  Inverting the bound gives the smallest adequate K, and
enumeration wins whenever the assignment space is no larger.
"""

import numpy as np

from randinf import (
    CRD,
    MCMode,
    PValueKind,
    build_step_function,
    error_bound,
    get_statistic,
    mc_sup_error,
    plan,
    threshold_table,
    total_assignments,
)
from randinf.datasets import toy_experiment

print("draws required so the bound meets a 1% budget:")
print(f"{'epsilon':>9} {'K':>10}")
for eps, k in threshold_table([0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001], delta=0.01):
    print(f"{eps:>9g} {k:>10d}")

print("\nenumerate or sample, by design (epsilon 0.1, delta 0.01):")
for design in (CRD(10, 5), CRD(20, 10), CRD(30, 15)):
    decision = plan(design, epsilon=0.1, delta=0.01)
    print(
        f"  {total_assignments(design):>12d} assignments -> {decision.strategy}"
        + (f" with K={decision.k}" if decision.strategy == "sample" else "")
    )

# how conservative is the bound in practice? measure the exact sup error of
# seeded Monte Carlo curves against the fully enumerated one
data, design = toy_experiment()
stat = get_statistic("diff_means")
exact = build_step_function(data, design, stat, PValueKind.LPLUS)
k = 4794
errors = [
    mc_sup_error(
        build_step_function(data, design, stat, PValueKind.LPLUS, MCMode(k=k, seed=s)),
        exact,
    )
    for s in range(50)
]
print(f"\nK={k} guarantees sup error <= 0.1 except with probability {error_bound(k, 0.1):.4f}")
print(
    f"measured over 50 seeded runs: max {max(errors):.4f}, mean {np.mean(errors):.4f} "
    "(the bound is loose by design; it holds for every experiment size)"
)
