"""Randomized assignment mechanisms: enumeration, sampling, and probabilities.

Two mechanisms are supported: the completely randomized design (``CRD``),
which treats a fixed number of units, and the randomized block design
(``RBD``), which treats a fixed number of units within each block.  An RBD
with a single block is observationally identical to a CRD.

Assignments are binary numpy vectors (1 = treatment, 0 = control).  The
enumeration order is fixed: treated-index sets in colexicographic order, and
for an RBD the product order over blocks with block 0 varying fastest.  This
order is part of the public contract so that golden results are stable.

Sampling is counter based: draw ``j`` of ``sample_assignments(design, k,
seed)`` depends only on ``(seed, j)``, never on ``k`` or on which other draws
were made, so results are reproducible regardless of batching or parallelism.
Each draw unranks a uniformly chosen index, giving exact uniformity over the
assignment space (no rejection against the space itself).
"""

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterator, Union

import numpy as np

from ._util import fold_seed

__all__ = [
    "CRD",
    "RBD",
    "Design",
    "EnumerationCapError",
    "total_assignments",
    "enumerate_assignments",
    "assignment_matrix",
    "sample_assignments",
    "assignment_probability",
    "assignment_probability_exact",
]

# Vectorized index arithmetic needs headroom below 2**63; larger spaces take
# the arbitrary-precision path.
_INT64_SAFE_TOTAL = 1 << 62


class EnumerationCapError(RuntimeError):
    """Raised when full enumeration would exceed the caller's cap."""


@dataclass(frozen=True)
class CRD:
    """Completely randomized design: ``n_treated`` of ``n_units`` get treatment."""

    n_units: int
    n_treated: int

    def __post_init__(self):
        if not (0 < self.n_treated < self.n_units):
            raise ValueError(
                f"CRD requires 0 < n_treated < n_units, got ({self.n_units}, {self.n_treated})"
            )

    @property
    def blocks(self):
        return ((self.n_units, self.n_treated),)


@dataclass(frozen=True)
class RBD:
    """Randomized block design: per block ``(size, treated)`` with 0 < treated < size."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple((int(k), int(t)) for k, t in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if not blocks:
            raise ValueError("RBD requires at least one block")
        for k, t in blocks:
            if not (0 < t < k):
                raise ValueError(f"block requires 0 < treated < size, got ({k}, {t})")

    @property
    def n_units(self):
        return sum(k for k, _ in self.blocks)


Design = Union[CRD, RBD]


def _block_slices(design: Design):
    """(start, size, treated) for each block; a CRD is one block."""
    out = []
    start = 0
    for k, t in design.blocks:
        out.append((start, k, t))
        start += k
    return out


def total_assignments(design: Design) -> int:
    """Exact number of assignments consistent with the design (big integer)."""
    n = 1
    for k, t in design.blocks:
        n *= comb(k, t)
    return n


# ---------------------------------------------------------------------------
# Colexicographic enumeration and unranking of k-subsets
#
# The rank of a treated-index set {c_1 < ... < c_k} is sum_i C(c_i, i); rank 0
# is {0, ..., k-1}.  Successor and unranking below realize the same order.
# ---------------------------------------------------------------------------


def _colex_first(k):
    return list(range(k))


def _colex_next(c, n):
    """Advance ``c`` (sorted list) to its colex successor in-place; False at end."""
    k = len(c)
    for i in range(k):
        nxt = c[i + 1] if i + 1 < k else n
        if c[i] + 1 < nxt:
            c[i] += 1
            for j in range(i):
                c[j] = j
            return True
    return False


def _colex_unrank(n, k, m):
    """Treated-index set of colex rank ``m`` among k-subsets of range(n)."""
    out = [0] * k
    for i in range(k, 0, -1):
        c = i - 1
        v = 0
        # largest c with C(c, i) <= m
        while c + 1 < n and (nv := comb(c + 1, i)) <= m:
            c += 1
            v = nv
        out[i - 1] = c
        m -= v if c >= i else 0
    return out


def _clipped_binom_table(n, k, clip):
    """C(r, i) for r <= n, i <= k, entries clipped to ``clip`` (int64-safe)."""
    table = np.zeros((n + 1, k + 1), dtype=np.int64)
    for r in range(n + 1):
        for i in range(min(r, k) + 1):
            table[r, i] = min(comb(r, i), clip)
    return table


def _unrank_block_vectorized(n, k, m):
    """Colex-unrank an int64 array of ranks into an (len(m), n) 0/1 matrix."""
    table = _clipped_binom_table(n, k, _INT64_SAFE_TOTAL)
    m = m.astype(np.int64).copy()
    rows = np.arange(m.size)
    w = np.zeros((m.size, n), dtype=np.int8)
    for i in range(k, 0, -1):
        # columns of `table` are non-decreasing in r, so searchsorted finds
        # the largest r with C(r, i) <= m
        c = np.searchsorted(table[:, i], m, side="right") - 1
        np.maximum(c, i - 1, out=c)
        w[rows, c] = 1
        m -= np.where(c >= i, table[c, i], 0)
    return w


def _indices_to_assignments(design: Design, idx) -> np.ndarray:
    """Map global assignment indices to assignment vectors (block 0 fastest)."""
    idx = np.asarray(idx, dtype=np.int64)
    n = design.n_units
    w = np.zeros((idx.size, n), dtype=np.int8)
    rem = idx.copy()
    for start, k, t in _block_slices(design):
        rem, m = np.divmod(rem, comb(k, t))
        w[:, start : start + k] = _unrank_block_vectorized(k, t, m)
    return w


def _index_to_assignment_bigint(design: Design, idx: int) -> np.ndarray:
    w = np.zeros(design.n_units, dtype=np.int8)
    rem = idx
    for start, k, t in _block_slices(design):
        b_total = comb(k, t)
        rem, m = divmod(rem, b_total)
        for c in _colex_unrank(k, t, m):
            w[start + c] = 1
    return w


def enumerate_assignments(design: Design, cap: int | None = None) -> Iterator[np.ndarray]:
    """Yield every assignment exactly once, in the documented colex order.

    Parameters
    ----------
    design : CRD or RBD
    cap : int, optional
        Raise :class:`EnumerationCapError` up front if the assignment space
        exceeds this many vectors.
    """
    total = total_assignments(design)
    if cap is not None and total > cap:
        raise EnumerationCapError(
            f"{total} assignments exceed the enumeration cap of {cap}"
        )
    slices = _block_slices(design)
    states = [_colex_first(t) for _, _, t in slices]
    while True:
        w = np.zeros(design.n_units, dtype=np.int8)
        for (start, _, _), c in zip(slices, states):
            for j in c:
                w[start + j] = 1
        yield w
        for (_, k, t), c in zip(slices, states):
            if _colex_next(c, k):
                break  # block 0 varies fastest
            c[:] = _colex_first(t)
        else:
            return


def assignment_matrix(design: Design, cap: int = 2_000_000) -> np.ndarray:
    """All assignments as one (total, n_units) int8 matrix, in enumeration order."""
    total = total_assignments(design)
    if total > cap:
        raise EnumerationCapError(
            f"{total} assignments exceed the enumeration cap of {cap}"
        )
    return _indices_to_assignments(design, np.arange(total, dtype=np.int64))


def _philox_words(seed, k: int) -> np.ndarray:
    """(k, 8) uint64 block of counter-based random words; row j is f(seed, j)."""
    key = fold_seed(seed)
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.integers(0, 1 << 64, size=(k, 8), dtype=np.uint64, endpoint=False)


def _fallback_index(seed, j: int, total: int) -> int:
    """Exact uniform index on [0, total) from a per-draw generator."""
    key = fold_seed(seed)
    rng = np.random.default_rng((key & ((1 << 64) - 1), key >> 64, j, 0xFA11BACC))
    bits = total.bit_length()
    words = (bits + 31) // 32
    while True:
        draw = 0
        for piece in rng.integers(0, 1 << 32, size=words, dtype=np.uint64):
            draw = (draw << 32) | int(piece)
        draw &= (1 << bits) - 1
        if draw < total:
            return draw


def _sample_indices(design: Design, k: int, seed) -> list:
    """k iid uniform assignment indices; entry j depends only on (seed, j)."""
    total = total_assignments(design)
    words = _philox_words(seed, k)
    if total <= _INT64_SAFE_TOTAL:
        bits = total.bit_length()
        cand = (words & np.uint64((1 << bits) - 1)).astype(np.int64)
        ok = cand < total
        first = np.argmax(ok, axis=1)
        idx = cand[np.arange(k), first]
        out = idx.tolist()
        for j in np.nonzero(~ok.any(axis=1))[0]:
            out[j] = _fallback_index(seed, int(j), total)
        return out
    # huge spaces: arbitrary-precision rejection per draw, still (seed, j)-pure
    bits = total.bit_length()
    if bits > 512:
        return [_fallback_index(seed, j, total) for j in range(k)]
    out = []
    for j in range(k):
        draw = 0
        for piece in words[j]:
            draw = (draw << 64) | int(piece)
        draw &= (1 << bits) - 1
        out.append(draw if draw < total else _fallback_index(seed, j, total))
    return out


def sample_assignments(design: Design, k: int, seed) -> np.ndarray:
    """Draw ``k`` iid uniform assignments with replacement, as a (k, n) matrix.

    Fully reproducible: draw ``j`` is a pure function of ``(seed, j)``, so the
    result is byte-identical however the draws are batched or parallelized.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    idx = _sample_indices(design, k, seed)
    total = total_assignments(design)
    if total <= _INT64_SAFE_TOTAL:
        return _indices_to_assignments(design, np.asarray(idx, dtype=np.int64))
    return np.stack([_index_to_assignment_bigint(design, i) for i in idx])


def _satisfies(design: Design, w: np.ndarray) -> bool:
    for start, k, t in _block_slices(design):
        if int(w[start : start + k].sum()) != t:
            return False
    return True


def assignment_probability(design: Design, w) -> float:
    """P(W = w) under the design: 1/total for valid w, 0 otherwise."""
    return float(assignment_probability_exact(design, w))


def assignment_probability_exact(design: Design, w) -> Fraction:
    """Exact rational assignment probability (for enumeration-based checks)."""
    w = np.asarray(w)
    if w.shape != (design.n_units,):
        raise ValueError(f"assignment has length {w.size}, design has {design.n_units} units")
    if not _satisfies(design, w):
        return Fraction(0)
    return Fraction(1, total_assignments(design))
