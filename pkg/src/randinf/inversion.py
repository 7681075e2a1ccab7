"""Exact p-value step functions of theta and their inversion into intervals.

For a monotone (effect-increasing) statistic, each assignment ``w`` has one
switch point in theta: the smallest hypothesized effect at which the statistic
on the imputed table under ``w`` reaches (or strictly exceeds, for the
strict-inequality sides) the observed statistic.  The p-value function is a
step function jumping exactly at those points, so it is represented losslessly
by sorted breakpoints with probability weights.  For ``diff_means`` the
statistic is affine in theta and breakpoints are closed form; other monotone
statistics are bisected to an absolute tolerance of ``1e-9 * max(1, scale)``.

Evaluation semantics per side (``b`` a breakpoint):

==========  =================  =========================================
``LPLUS``   ``1{theta >= b}``  non-decreasing, right continuous
``UPLUS``   ``1{theta >  b}``  non-decreasing, left continuous
``LMINUS``  ``1{theta <= b}``  non-increasing, left continuous
``UMINUS``  ``1{theta <  b}``  non-increasing, right continuous
==========  =================  =========================================

Exact for statistics continuous in theta; for rank statistics (which jump in
theta) membership exactly at a breakpoint can be off by one atom within the
bisection tolerance, and is exact elsewhere.

Inverting the lower function at ``alpha1`` and the upper at ``alpha2`` yields
an interval whose exact coverage of the true effect is at least
``1 - alpha1 - alpha2`` over the randomization distribution: the only failure
events are the two valid one-sided tests rejecting at the truth.  With heavily
tied (discrete) outcomes the upper endpoint can land exactly on the true
effect; that boundary point belongs to the inverted acceptance region (neither
one-sided test rejects there), so :meth:`ConfidenceInterval.contains` treats
the upper endpoint as inclusive for the proposed method even though the
interval is reported with the conventional half-open closure.  For continuous
outcome data the distinction occurs with probability zero.
"""

from dataclasses import dataclass

import numpy as np

from ._util import round_sig
from .design import Design
from .randomization import ExactMode, Mode, PValueKind, _replicate_matrix
from .statistics import (
    ObservedData,
    StatisticSpec,
    evaluate_realized,
    observed_statistic,
)

__all__ = [
    "PValueStepFunction",
    "ConfidenceInterval",
    "NonMonotoneStatisticError",
    "BracketingError",
    "LevelTooHighError",
    "build_step_function",
    "invert_lower",
    "invert_upper",
    "confidence_interval",
    "traditional_interval",
]

_GE_SIDES = (PValueKind.LPLUS, PValueKind.UMINUS)  # need the T >= T_obs crossing
_GT_SIDES = (PValueKind.UPLUS, PValueKind.LMINUS)  # need the T > T_obs crossing


class NonMonotoneStatisticError(ValueError):
    """Inversion requested for a statistic without a monotone p-value curve."""


class BracketingError(RuntimeError):
    """Bisection could not bracket a breakpoint."""


class LevelTooHighError(ValueError):
    """Requested tail levels leave no interval (lower would exceed upper)."""


@dataclass(frozen=True)
class PValueStepFunction:
    """A one-sided p-value function of theta in breakpoint form.

    ``breakpoints`` are finite, strictly increasing, rounded to 12 significant
    digits; ``counts[i]/denom`` is the probability mass switching at
    breakpoint ``i``.  ``base_count/denom`` is mass whose indicator holds for
    every theta (for the weak-inequality sides this includes the observed
    assignment, which is tied at all theta); ``never_count/denom`` is mass
    whose indicator never holds.  ``base + sum(counts) + never == denom``.
    """

    side: PValueKind
    breakpoints: np.ndarray
    counts: np.ndarray
    base_count: int
    never_count: int
    denom: int
    statistic: str
    t_obs: float
    mode: Mode

    def __post_init__(self):
        if self.side == PValueKind.TWO_SIDED_L:
            raise ValueError("step functions are one-sided; two-sided values combine LPLUS and LMINUS")
        if self.base_count + int(self.counts.sum()) + self.never_count != self.denom:
            raise ValueError("breakpoint masses do not account for every assignment")

    @property
    def base(self) -> float:
        """Mass active at theta = -inf (LPLUS) resp. +inf (LMINUS)."""
        return self.base_count / self.denom

    def value(self, theta):
        """Evaluate at ``theta`` (scalar or array), exact step semantics."""
        t = round_sig(np.asarray(theta, dtype=float))
        increasing = self.side in (PValueKind.LPLUS, PValueKind.UPLUS)
        if increasing:
            search = "right" if self.side == PValueKind.LPLUS else "left"
            idx = np.searchsorted(self.breakpoints, t, side=search)
            active = self._cum()[idx]
        else:
            search = "left" if self.side == PValueKind.LMINUS else "right"
            idx = np.searchsorted(self.breakpoints, t, side=search)
            active = self._tail()[idx]
        out = (self.base_count + active) / self.denom
        return float(out) if np.ndim(theta) == 0 else out

    def value_from_right(self, theta):
        """Right limit at ``theta``: the value just above it."""
        t = round_sig(np.asarray(theta, dtype=float))
        idx = np.searchsorted(self.breakpoints, t, side="right")
        if self.side in (PValueKind.LPLUS, PValueKind.UPLUS):
            active = self._cum()[idx]
        else:
            active = self._tail()[idx]
        out = (self.base_count + active) / self.denom
        return float(out) if np.ndim(theta) == 0 else out

    def _cum(self):
        return np.concatenate(([0], np.cumsum(self.counts)))

    def _tail(self):
        return np.concatenate((np.cumsum(self.counts[::-1])[::-1], [0]))

    def limit_low(self) -> float:
        """Value as theta -> -inf."""
        if self.side in (PValueKind.LPLUS, PValueKind.UPLUS):
            return self.base_count / self.denom
        return (self.base_count + int(self.counts.sum())) / self.denom

    def limit_high(self) -> float:
        """Value as theta -> +inf."""
        if self.side in (PValueKind.LPLUS, PValueKind.UPLUS):
            return (self.base_count + int(self.counts.sum())) / self.denom
        return self.base_count / self.denom


def _affine_coefficients(data: ObservedData, W: np.ndarray):
    """Intercept and slope of theta -> diff_means(imputed_theta, w), per row.

    The slope counts treatment/control mismatches against the observed
    assignment scaled by arm sizes, so it is >= 0 and vanishes exactly for
    rows equal to the observed assignment (which stay tied at T_obs).
    """
    y = data.y_obs
    w_obs = data.w_obs.astype(float)
    n1 = W.sum(axis=1)
    n0 = W.shape[1] - n1
    a = (W @ y) / n1 - ((1 - W) @ y) / n0
    b = (W @ (1 - w_obs)) / n1 + ((1 - W) @ w_obs) / n0
    return a, b


def _bisect_crossings(data, stat, W, t_obs, strict, scale):
    """Per-row switch points of 1{T(theta, w) >= T_obs} (or > for strict).

    Brackets expand geometrically from the outcome scale; a side whose
    statistic stops changing across a doubling has saturated (rank statistics
    freeze once theta clears the outcome range), which classifies the row as
    never switching (+inf) or always on (-inf).
    """
    tol = 1e-9 * max(1.0, scale)
    y = data.y_obs
    w_obs = data.w_obs.astype(float)
    # realized outcomes under row w at theta: y + theta * d
    D = W * (1 - w_obs) - (1 - W) * w_obs

    def t_at(theta_rows):
        return evaluate_realized(stat, y + theta_rows[:, None] * D, W)

    def on(theta_rows):
        vals = t_at(theta_rows)
        return (vals > t_obs + tol / 2) if strict else (vals >= t_obs - tol / 2)

    k = W.shape[0]
    lo = np.full(k, -2.0 * max(1.0, scale))
    hi = np.full(k, +2.0 * max(1.0, scale))
    never = np.zeros(k, dtype=bool)
    always = np.zeros(k, dtype=bool)
    for _ in range(200):
        on_hi = on(hi)
        on_lo = on(lo)
        grow_hi = ~on_hi & ~never & ~always
        grow_lo = on_lo & ~always & ~never
        if not grow_hi.any() and not grow_lo.any():
            break
        if grow_hi.any():
            old = t_at(hi)
            hi = np.where(grow_hi, hi * 2, hi)
            frozen = grow_hi & (np.abs(t_at(hi) - old) <= tol / 4) & ~on(hi)
            never |= frozen
        if grow_lo.any():
            old = t_at(lo)
            lo = np.where(grow_lo, lo * 2, lo)
            frozen = grow_lo & (np.abs(t_at(lo) - old) <= tol / 4) & on(lo)
            always |= frozen
    else:
        raise BracketingError("no bracket for some assignment after 200 doublings")

    moving = ~never & ~always
    b_lo = lo.copy()
    b_hi = hi.copy()
    while np.max((b_hi - b_lo)[moving], initial=0.0) > tol:
        mid = 0.5 * (b_lo + b_hi)
        is_on = on(mid)
        b_lo = np.where(moving & ~is_on, mid, b_lo)
        b_hi = np.where(moving & is_on, mid, b_hi)
    crossings = np.where(moving, b_hi, np.where(always, -np.inf, np.inf))
    # confirm each resolved switch point behaves like one
    chk = moving.nonzero()[0]
    if chk.size:
        bad = ~on(b_hi)[chk] | on((b_hi - 2 * tol))[chk]
        if bad.any():
            raise BracketingError("a resolved breakpoint failed the +/- tolerance check")
    return crossings


def build_step_function(
    data: ObservedData,
    design: Design,
    stat: StatisticSpec,
    side: PValueKind,
    mode: Mode = ExactMode(),
    validate: bool = False,
) -> PValueStepFunction:
    """Construct the exact breakpoint representation of a p-value curve.

    Refuses statistics not certified monotone and right continuous in theta
    (their curves need not be invertible step functions).  With
    ``validate=True`` the diff_means closed form is cross-checked against the
    bisection path on up to 100 assignments.
    """
    if side == PValueKind.TWO_SIDED_L:
        raise ValueError("build one-sided functions; two-sided values combine LPLUS and LMINUS")
    if not stat.theta_monotone_rightcontinuous:
        raise NonMonotoneStatisticError(
            f"statistic {stat.name!r} is not certified monotone in theta; "
            "its p-value curve can be non-monotone and inversion need not yield an interval"
        )
    W = _replicate_matrix(design, mode)
    t_obs = observed_statistic(stat, data)
    scale = max(1.0, float(np.max(np.abs(data.y_obs))), float(np.ptp(data.y_obs)))
    strict = side in _GT_SIDES

    if stat.name == "diff_means":
        a, b = _affine_coefficients(data, W)
        moving = b > 0
        crossings = np.where(
            moving,
            np.divide(t_obs - a, b, out=np.zeros_like(a), where=moving),
            -np.inf if not strict else np.inf,
        )
        if validate and moving.any():
            idx = np.nonzero(moving)[0][:100]
            ref = _bisect_crossings(data, stat, W[idx], t_obs, strict, scale)
            if not np.allclose(crossings[idx], ref, atol=1e-6 * max(1.0, scale), rtol=0):
                raise AssertionError("closed-form breakpoints disagree with the bisection oracle")
    else:
        crossings = _bisect_crossings(data, stat, W, t_obs, strict, scale)

    denom = W.shape[0]
    n_on_everywhere = int(np.sum(crossings == -np.inf))
    n_on_nowhere = int(np.sum(crossings == np.inf))
    finite = round_sig(crossings[np.isfinite(crossings)])
    breakpoints, counts = np.unique(finite, return_counts=True)

    if side in (PValueKind.LPLUS, PValueKind.UPLUS):
        base_count, never_count = n_on_everywhere, n_on_nowhere
    else:
        # complements: rows whose crossing event always holds never satisfy
        # the <= / < event, and vice versa
        base_count, never_count = n_on_nowhere, n_on_everywhere

    return PValueStepFunction(
        side=side,
        breakpoints=breakpoints,
        counts=counts.astype(np.int64),
        base_count=base_count,
        never_count=never_count,
        denom=denom,
        statistic=stat.name,
        t_obs=t_obs,
        mode=mode,
    )


def invert_lower(f: PValueStepFunction, alpha1: float) -> float:
    """sup{theta : p(theta) <= alpha1} for a LPLUS function.

    Returns ``-inf`` when even the base mass exceeds ``alpha1`` (no theta
    attains so small a p-value) and ``+inf`` when the function never rises
    above ``alpha1``.
    """
    if f.side != PValueKind.LPLUS:
        raise ValueError("lower inversion needs a LPLUS function")
    if not 0 < alpha1 < 1:
        raise ValueError("alpha1 must lie in (0, 1)")
    if f.base_count > alpha1 * f.denom:
        return -np.inf
    cum = (f.base_count + np.cumsum(f.counts)) / f.denom
    j = int(np.searchsorted(cum, alpha1, side="right"))
    if j >= f.breakpoints.size:
        return np.inf
    return float(f.breakpoints[j])


def invert_upper(f: PValueStepFunction, alpha2: float) -> float:
    """inf{theta : p(theta) <= alpha2} for a LMINUS function (mirror of lower)."""
    if f.side != PValueKind.LMINUS:
        raise ValueError("upper inversion needs a LMINUS function")
    if not 0 < alpha2 < 1:
        raise ValueError("alpha2 must lie in (0, 1)")
    if f.base_count > alpha2 * f.denom:
        return np.inf
    if f.breakpoints.size == 0:
        return -np.inf
    at_bp = (f.base_count + np.cumsum(f.counts[::-1])[::-1]) / f.denom  # value at each breakpoint
    above = np.nonzero(at_bp > alpha2)[0]
    if above.size == 0:
        return -np.inf
    return float(f.breakpoints[above[-1]])


@dataclass(frozen=True)
class ConfidenceInterval:
    """An interval for the constant treatment effect, with tail levels.

    Reported with the conventional lower-closed, upper-open closure.  For the
    proposed method, :meth:`contains` additionally counts the exact upper
    endpoint as covered: that point belongs to the inverted acceptance region
    (neither one-sided test rejects there), and excluding it would break the
    guaranteed coverage exactly in heavily tied populations.  Traditional
    intervals use the plain half-open membership and carry no guarantee.
    """

    lower: float
    upper: float
    alpha1: float
    alpha2: float
    method: str
    statistic: str
    mode: Mode
    closure: str = "[)"

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, theta: float) -> bool:
        if self.method == "proposed":
            return bool(self.lower <= theta <= self.upper)
        return bool(self.lower <= theta < self.upper)


def confidence_interval(
    data: ObservedData,
    design: Design,
    stat: StatisticSpec,
    alpha1: float,
    alpha2: float,
    mode: Mode = ExactMode(),
) -> ConfidenceInterval:
    """Interval with guaranteed coverage at least ``1 - alpha1 - alpha2``.

    The lower endpoint inverts the LPLUS function at ``alpha1`` and the upper
    inverts the LMINUS function at ``alpha2``; both functions come from the
    same effect-increasing statistic.  Coverage holds exactly, with no
    tolerance, over the randomization distribution.
    """
    if not (0 < alpha1 < 1 and 0 < alpha2 < 1 and alpha1 + alpha2 < 1):
        raise ValueError("need 0 < alpha1, alpha2 and alpha1 + alpha2 < 1")
    if not stat.ei_certified:
        raise NonMonotoneStatisticError(
            f"statistic {stat.name!r} is not certified effect increasing; "
            "inversion with it has no coverage guarantee"
        )
    f_lo = build_step_function(data, design, stat, PValueKind.LPLUS, mode)
    f_hi = build_step_function(data, design, stat, PValueKind.LMINUS, mode)
    lower = invert_lower(f_lo, alpha1)
    upper = invert_upper(f_hi, alpha2)
    if lower > upper:
        raise LevelTooHighError(
            f"levels alpha1={alpha1}, alpha2={alpha2} leave no interval "
            f"(lower {lower} > upper {upper})"
        )
    return ConfidenceInterval(
        lower=lower, upper=upper, alpha1=alpha1, alpha2=alpha2,
        method="proposed", statistic=stat.name, mode=mode,
    )


def traditional_interval(
    data: ObservedData,
    design: Design,
    stat: StatisticSpec,
    alpha: float,
    mode: Mode = ExactMode(),
    theta_grid=None,
) -> ConfidenceInterval:
    """Interval from the LPLUS curve alone, crossed at alpha/2 and 1 - alpha/2.

    Provided for comparison studies only: because the same one-sided function
    is inverted at both tails, this construction has no coverage guarantee and
    can undercover in small or heavily tied populations.  With ``theta_grid``
    the crossings are read off the grid (first grid point past each level),
    reproducing the coarse-grid workflow; otherwise they are exact.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if not stat.ei_certified:
        raise NonMonotoneStatisticError(
            f"statistic {stat.name!r} is not certified effect increasing; "
            "inversion with it has no coverage guarantee"
        )
    f = build_step_function(data, design, stat, PValueKind.LPLUS, mode)
    half = alpha / 2
    if theta_grid is not None:
        grid = np.sort(np.asarray(theta_grid, dtype=float))
        p = f.value(grid)
        above = np.nonzero(p > half)[0]
        lower = float(grid[above[0]]) if above.size else np.inf
        reach = np.nonzero(p >= 1 - half)[0]
        upper = float(grid[reach[0]]) if reach.size else np.inf
    else:
        lower = invert_lower(f, half)
        cum = (f.base_count + np.cumsum(f.counts)) / f.denom
        j = int(np.searchsorted(cum, 1 - half, side="left"))
        if f.base_count >= (1 - half) * f.denom:
            upper = -np.inf
        elif j >= f.breakpoints.size:
            upper = np.inf
        else:
            upper = float(f.breakpoints[j])
    return ConfidenceInterval(
        lower=lower, upper=upper, alpha1=half, alpha2=half,
        method="traditional", statistic=stat.name, mode=mode,
    )
