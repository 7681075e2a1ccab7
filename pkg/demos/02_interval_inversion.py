"""Invert p-value curves into intervals, and see why the construction matters.

The guaranteed method inverts the lower-plus curve at alpha1 for the lower
endpoint and the lower-minus curve at alpha2 for the upper endpoint.  The
traditional shortcut inverts the single lower-plus curve at alpha/2 and
1 - alpha/2; on heavily tied outcomes it undercovers, which the exact audit
makes visible.
"""

from randinf import CRD, confidence_interval, exact_validity_audit, get_statistic, traditional_interval
from randinf.datasets import tied_discrete_population, toy_experiment

stat = get_statistic("diff_means")

data, design = toy_experiment()
proposed = confidence_interval(data, design, stat, alpha1=0.025, alpha2=0.025)
trad = traditional_interval(data, design, stat, alpha=0.05)
print("ten-unit example, 95% intervals for the constant effect (truth = 1):")
print(f"  guaranteed-coverage inversion: [{proposed.lower:.3f}, {proposed.upper:.3f})")
print(f"  traditional two-crossing:      [{trad.lower:.3f}, {trad.upper:.3f})")
print("  the traditional upper endpoint sits one breakpoint lower: it ignores")
print("  the tie atom carried by the observed assignment.")

coarse = traditional_interval(data, design, stat, alpha=0.05, theta_grid=[-3, -1, 0, 1, 3])
print(f"  traditional on a coarse grid of five effects: [{coarse.lower:g}, {coarse.upper:g})")

print("\nexact coverage audit on a heavily tied population")
print("(fifteen units, outcomes 0/1/2 only, zero true effect):")
population = tied_discrete_population()
for n_treated in (7, 8):
    audit = exact_validity_audit(population, CRD(15, n_treated), alphas=(0.05,))
    print(
        f"  CRD(15,{n_treated}): proposed coverage {audit.proposed_coverage[0.05]:.3f}  "
        f"traditional coverage {audit.traditional_coverage[0.05]:.3f}"
    )
print("the guaranteed method holds 95% exactly as a theorem; the traditional")
print("shortcut drops below it whenever ties are heavy.")
