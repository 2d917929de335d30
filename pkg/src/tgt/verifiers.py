"""Exhaustive brute-force checkers for the combinatorial matrix properties.

Each verifier either proves the property over every qualifying subset,
returns a Witness naming the first violation in lexicographic enumeration
order, or refuses with InfeasibleError when the projected enumeration
exceeds the budget.  An "ok" answer always means "proven"; randomized
spot checks are the separate spot_check_* entry points.

Enumeration order is lexicographic over combinations; for list-disjunct
the outer loop runs over S2 and the inner (conceptual) loop over S1, and
the first violation in that order is returned.  The list-disjunct checker
prunes with a per-S2 hitting-set search, which is exact and returns the
same witness the naive double loop would.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .bitmat import BitMatrix, mask_of
from .errors import InfeasibleError, ParameterError
from .rng import SplitMix64

DEFAULT_BUDGET = 10**7

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


def popcount_u64(x: np.ndarray) -> np.ndarray:
    """Vectorized population count on uint64 arrays."""
    x = x - ((x >> np.uint64(1)) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return (x * _H01) >> np.uint64(56)


@dataclass(frozen=True)
class Witness:
    """A concrete violation, re-checkable against the bare definition."""

    kind: str
    violating_sets: tuple[tuple[int, ...], ...]
    message: str

    def __str__(self) -> str:
        return self.message


def _iter_row_indices(row_set: int):
    """0-based indices of set bits in a row-set bitmask."""
    while row_set:
        low = row_set & -row_set
        yield low.bit_length() - 1
        row_set ^= low


# ---------------------------------------------------------------------------
# definitional predicates (shared by verifiers, spot checks, and tests)

def covers_pair(m: BitMatrix, s1: tuple[int, ...], s2: tuple[int, ...]) -> bool:
    """True iff some row has 1 on every column of s2 and 0 on every column of s1."""
    s1m = mask_of(s1)
    s2m = mask_of(s2)
    return any(bits & s2m == s2m and not bits & s1m for bits in m.row_bits)


def hits_exactly(m: BitMatrix, d_set: tuple[int, ...], target: int) -> bool:
    """True iff some row intersects d_set in exactly target items."""
    dm = mask_of(d_set)
    return any((bits & dm).bit_count() == target for bits in m.row_bits)


def identity_patterns(m: BitMatrix, columns: tuple[int, ...]) -> int:
    """Number of distinct identity-row patterns in the chosen column submatrix."""
    cm = mask_of(columns)
    seen = 0
    for bits in m.row_bits:
        x = bits & cm
        if x and not x & (x - 1):
            seen |= x
    return seen.bit_count()


# ---------------------------------------------------------------------------
# list-disjunct

def _hitting_set_exists(residues: list[int], k: int) -> bool:
    """Is there a set of <= k columns meeting every residue? (all residues nonzero)"""
    if not residues:
        return True
    if k == 0:
        return False
    pivot = min(residues, key=int.bit_count)
    while pivot:
        low = pivot & -pivot
        pivot ^= low
        remaining = [r for r in residues if not r & low]
        if _hitting_set_exists(remaining, k - 1):
            return True
    return False


def _first_violating_s1(
    others: tuple[int, ...], k: int, residues: list[int]
) -> tuple[int, ...]:
    """Lexicographically first k-subset of `others` hitting every residue."""
    for s1 in combinations(others, k):
        s1m = mask_of(s1)
        if all(r & s1m for r in residues):
            return s1
    raise AssertionError("hitting set vanished during witness search")


def verify_list_disjunct(
    m: BitMatrix, k: int, ell: int, budget: int = DEFAULT_BUDGET
) -> Witness | None:
    """Prove the (k, ell)-list-disjunct property; ell=1 is plain k-disjunctness.

    ok (None) iff for all disjoint S1 (|S1|=k), S2 (|S2|=ell) some row has
    1 on all of S2 and 0 on all of S1.
    """
    n = m.cols
    if k < 1 or ell < 1:
        raise ParameterError(f"need k >= 1 and ell >= 1, got k={k}, ell={ell}")
    if k + ell > n:
        raise ParameterError(f"need k + ell <= cols, got {k} + {ell} > {n}")
    projected = comb(n, ell) * comb(n - ell, k)
    if projected > budget:
        raise InfeasibleError(projected, budget)
    colbits = m.column_bits
    all_cols = range(1, n + 1)
    for s2 in combinations(all_cols, ell):
        covering = -1
        for j in s2:
            covering &= colbits[j - 1]
        s2m = mask_of(s2)
        others = tuple(j for j in all_cols if not (s2m >> (j - 1)) & 1)
        if covering == 0:
            s1 = others[:k]
            return Witness(
                "list-disjunct",
                (s1, s2),
                f"no row covers S2={s2} at all; first S1={s1}",
            )
        residues = []
        exact_row = False
        for r in _iter_row_indices(covering):
            res = m.row_bits[r] & ~s2m
            if res == 0:
                exact_row = True
                break
            residues.append(res)
        if exact_row:
            continue
        if _hitting_set_exists(residues, k):
            s1 = _first_violating_s1(others, k, residues)
            return Witness(
                "list-disjunct",
                (s1, s2),
                f"every row covering S2={s2} meets S1={s1}",
            )
    return None


# ---------------------------------------------------------------------------
# single selector

def verify_single_selector(
    m: BitMatrix, d: int, target: int, budget: int = DEFAULT_BUDGET
) -> Witness | None:
    """Prove that every d-subset D has a row meeting D in exactly `target` items."""
    n = m.cols
    if not 1 <= target <= d <= n:
        raise ParameterError(f"need 1 <= m <= d <= cols, got m={target}, d={d}, n={n}")
    projected = comb(n, d)
    if projected > budget:
        raise InfeasibleError(projected, budget)
    rows = m.row_bits
    for d_set in combinations(range(1, n + 1), d):
        dm = mask_of(d_set)
        for bits in rows:
            if (bits & dm).bit_count() == target:
                break
        else:
            return Witness(
                "single-selector",
                (d_set,),
                f"no row meets D={d_set} in exactly {target} items",
            )
    return None


# ---------------------------------------------------------------------------
# selector

_CHUNK = 2048


def verify_selector(
    m: BitMatrix, k: int, target: int, budget: int = DEFAULT_BUDGET
) -> Witness | None:
    """Prove every k-column submatrix contains >= target distinct identity rows.

    Distinctness counts distinct identity-row patterns (which chosen column
    carries the 1), not distinct matrix rows.
    """
    n = m.cols
    if not 1 <= target <= k <= n:
        raise ParameterError(f"need 1 <= m <= k <= cols, got m={target}, k={k}, n={n}")
    projected = comb(n, k)
    if projected > budget:
        raise InfeasibleError(projected, budget)
    combos = combinations(range(1, n + 1), k)
    if m.rows_u64 is not None:
        rows = m.rows_u64
        while True:
            batch = []
            masks = []
            for choice in combos:
                batch.append(choice)
                masks.append(mask_of(choice))
                if len(batch) == _CHUNK:
                    break
            if not batch:
                return None
            marr = np.fromiter(masks, dtype=np.uint64, count=len(masks))
            x = marr[:, None] & rows[None, :]
            ident = (x != 0) & ((x & (x - np.uint64(1))) == 0)
            marks = np.bitwise_or.reduce(np.where(ident, x, np.uint64(0)), axis=1)
            counts = popcount_u64(marks)
            bad = np.nonzero(counts < target)[0]
            if bad.size:
                choice = batch[int(bad[0])]
                found = int(counts[int(bad[0])])
                return Witness(
                    "selector",
                    (choice,),
                    f"columns {choice} contain only {found} distinct identity rows",
                )
    else:
        for choice in combos:
            found = identity_patterns(m, choice)
            if found < target:
                return Witness(
                    "selector",
                    (choice,),
                    f"columns {choice} contain only {found} distinct identity rows",
                )
        return None


# ---------------------------------------------------------------------------
# randomized spot checks (explicit sampling mode; never a proof)

def _sample_disjoint(n: int, k: int, ell: int, stream: SplitMix64):
    pool = list(range(1, n + 1))
    picked: list[int] = []
    for _ in range(k + ell):
        idx = stream.randint(len(pool)) - 1
        picked.append(pool.pop(idx))
    s2 = tuple(sorted(picked[:ell]))
    s1 = tuple(sorted(picked[ell:]))
    return s1, s2


def spot_check_list_disjunct(
    m: BitMatrix, k: int, ell: int, trials: int, seed: int
) -> Witness | None:
    """Sample random (S1, S2) pairs; a None answer is evidence, not proof."""
    if k + ell > m.cols:
        raise ParameterError(f"need k + ell <= cols, got {k} + {ell} > {m.cols}")
    stream = SplitMix64(seed)
    for _ in range(trials):
        s1, s2 = _sample_disjoint(m.cols, k, ell, stream)
        if not covers_pair(m, s1, s2):
            return Witness("list-disjunct", (s1, s2),
                           f"every row covering S2={s2} meets S1={s1}")
    return None


def spot_check_single_selector(
    m: BitMatrix, d: int, target: int, trials: int, seed: int
) -> Witness | None:
    """Sample random d-subsets; a None answer is evidence, not proof."""
    stream = SplitMix64(seed)
    for _ in range(trials):
        _, d_set = _sample_disjoint(m.cols, 0, d, stream)
        if not hits_exactly(m, d_set, target):
            return Witness("single-selector", (d_set,),
                           f"no row meets D={d_set} in exactly {target} items")
    return None


def spot_check_selector(
    m: BitMatrix, k: int, target: int, trials: int, seed: int
) -> Witness | None:
    """Sample random k-column choices; a None answer is evidence, not proof."""
    stream = SplitMix64(seed)
    for _ in range(trials):
        _, choice = _sample_disjoint(m.cols, 0, k, stream)
        if identity_patterns(m, choice) < target:
            found = identity_patterns(m, choice)
            return Witness("selector", (choice,),
                           f"columns {choice} contain only {found} distinct identity rows")
    return None
