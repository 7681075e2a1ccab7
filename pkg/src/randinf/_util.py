"""Shared numeric helpers: significant-digit rounding and seed folding."""

import numpy as np

# Number of significant digits used everywhere tie classification or breakpoint
# comparison happens.  Deterministic across platforms, coarse enough to absorb
# last-ulp noise from different summation orders.
SIG_DIGITS = 12


def round_sig(x, digits: int = SIG_DIGITS):
    """Round to `digits` significant digits, elementwise.

    Zeros, infinities, NaNs and magnitudes below 1e-280 pass through unchanged
    (the scale factor for tinier values would overflow a double; such values
    never arise from real outcome data).
    """
    x = np.asarray(x, dtype=float)
    out = x.copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        ax = np.abs(x)
        normal = np.isfinite(x) & (ax > 1e-280)
        mag = np.floor(np.log10(ax, where=normal, out=np.zeros_like(x)))
        scale = np.power(10.0, digits - 1 - mag, where=normal, out=np.ones_like(x))
        out[normal] = np.round(x[normal] * scale[normal]) / scale[normal]
    if np.ndim(x) == 0:
        return float(out)
    return out


def fold_seed(seed) -> int:
    """Collapse an int or tuple-of-ints seed into one 128-bit integer key.

    Plain non-negative ints below 2**128 are used directly, so documented
    integer seeds map to the same stream everywhere.  Anything else is folded
    through numpy's SeedSequence, which is stable across platforms.
    """
    if isinstance(seed, (int, np.integer)) and 0 <= int(seed) < (1 << 128):
        return int(seed)
    entropy = seed if isinstance(seed, (tuple, list)) else (int(seed),)
    state = np.random.SeedSequence([int(e) & ((1 << 64) - 1) for e in entropy]).generate_state(2, np.uint64)
    return int(state[0]) | (int(state[1]) << 64)
