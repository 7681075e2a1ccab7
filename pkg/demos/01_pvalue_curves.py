"""Walk through a randomization test on the ten-unit example dataset.

Shows the exact randomization distribution, the five p-value kinds at a few
hypothesized effects, and the exact step-function representation of the
p-value curve (plot-ready: breakpoints and values).
"""

import numpy as np

from randinf import (
    PValueKind,
    build_step_function,
    get_statistic,
    observed_statistic,
    p_values,
    randomization_distribution,
    total_assignments,
)
from randinf.datasets import toy_experiment

data, design = toy_experiment()
stat = get_statistic("diff_means")

print("observed data (1 = treated):")
for i, (w, y) in enumerate(zip(data.w_obs, data.y_obs), start=1):
    print(f"  unit {i:2d}: w={w} y={y:5.2f}")
print(f"\nassignment space: {total_assignments(design)} vectors (exact enumeration)")

t_obs = observed_statistic(stat, data)
print(f"observed difference of means: {t_obs:.3f}")

dist = randomization_distribution(data, design, stat, theta=0.0)
print(
    f"\nrandomization distribution at theta=0: {dist.values.size} support points, "
    f"largest atom gamma* = {dist.gamma_star:.5f}"
)

print("\np-values of the constant-effect null, by hypothesized effect:")
print(f"{'theta':>6} {'L+':>7} {'U+':>7} {'L-':>7} {'U-':>7} {'two-sided':>10}")
for theta in (-3.0, -1.0, 0.0, 1.0, 3.0):
    pv = p_values(data, design, stat, theta)
    print(
        f"{theta:>6g} {pv[PValueKind.LPLUS]:>7.3f} {pv[PValueKind.UPLUS]:>7.3f} "
        f"{pv[PValueKind.LMINUS]:>7.3f} {pv[PValueKind.UMINUS]:>7.3f} "
        f"{pv[PValueKind.TWO_SIDED_L]:>10.3f}"
    )

f = build_step_function(data, design, stat, PValueKind.LPLUS)
print(
    f"\nexact lower-plus step function: {f.breakpoints.size} breakpoints, "
    f"base mass {f.base:.5f} (the observed assignment is tied at every theta)"
)
print("first five (breakpoint, value) pairs, plot-ready:")
for b, v in zip(f.breakpoints[:5], np.atleast_1d(f.value(f.breakpoints[:5]))):
    print(f"  {b:8.3f}  {v:.5f}")
print("the curve is non-decreasing and right continuous; evaluating it anywhere")
print("reproduces a direct randomization test at that effect, exactly.")
