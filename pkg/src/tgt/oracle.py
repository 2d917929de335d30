"""Threshold-test oracle: answers pool queries against hidden ground truth.

A pool is positive iff it contains at least u defective items.  The
Instance (and the sessions wrapping it) are the only objects that hold
the defective set; designs and decoders see outcome bits only.

OracleSession keeps a per-trial test ledger: every test it is asked to
run is charged, including tests whose bits are evaluated lazily (the
plan is charged when submitted, which is when the physical tests would
be run in a non-adaptive stage).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bitmat import BitMatrix, ItemSet
from .errors import DimensionError, ParameterError
from .verifiers import popcount_u64


@dataclass(frozen=True)
class Instance:
    """Hidden ground truth: universe size n, defective set, threshold u."""

    n: int
    defectives: ItemSet
    u: int

    def __post_init__(self):
        if self.defectives.n != self.n:
            raise ParameterError(
                f"defective set universe {self.defectives.n} != n={self.n}"
            )
        if self.u < 1:
            raise ParameterError(f"threshold must be >= 1, got {self.u}")
        if len(self.defectives) < self.u:
            raise ParameterError(
                f"|P| = {len(self.defectives)} smaller than threshold u = {self.u}"
            )

    @property
    def d(self) -> int:
        return len(self.defectives)

    @property
    def mask(self) -> int:
        return self.defectives.mask


@dataclass(frozen=True)
class Layout:
    """Named contiguous segments of an outcome vector."""

    segments: tuple[tuple[str, int], ...]

    @property
    def total(self) -> int:
        return sum(length for _, length in self.segments)

    def offset(self, name: str) -> int:
        off = 0
        for seg, length in self.segments:
            if seg == name:
                return off
            off += length
        raise KeyError(name)

    def length(self, name: str) -> int:
        for seg, length in self.segments:
            if seg == name:
                return length
        raise KeyError(name)


@dataclass(frozen=True)
class OutcomeVector:
    """Ordered test outcomes, one bit per test, with a segment layout."""

    bits: tuple[int, ...]
    layout: Layout

    def __post_init__(self):
        if len(self.bits) != self.layout.total:
            raise DimensionError(
                f"{len(self.bits)} bits do not fill layout of {self.layout.total}"
            )

    @classmethod
    def plain(cls, bits: Sequence[int], name: str = "all") -> "OutcomeVector":
        bits = tuple(int(b) for b in bits)
        return cls(bits, Layout(((name, len(bits)),)))

    def segment(self, name: str) -> tuple[int, ...]:
        off = self.layout.offset(name)
        return self.bits[off : off + self.layout.length(name)]

    def __len__(self) -> int:
        return len(self.bits)


def threshold_test(pool: ItemSet, inst: Instance) -> int:
    """1 iff the pool holds at least u defectives."""
    if pool.n != inst.n:
        raise ParameterError(f"pool universe {pool.n} != instance n={inst.n}")
    return 1 if (pool.mask & inst.mask).bit_count() >= inst.u else 0


def run_matrix(m: BitMatrix, inst: Instance, name: str = "all") -> OutcomeVector:
    """Outcome of every row of m, in row order."""
    if m.cols != inst.n:
        raise DimensionError(f"matrix has {m.cols} columns, instance has n={inst.n}")
    pmask = inst.mask
    u = inst.u
    bits = tuple(1 if (row & pmask).bit_count() >= u else 0 for row in m.row_bits)
    return OutcomeVector(bits, Layout(((name, m.rows),)))


def _as_u64(rows: Sequence[int] | np.ndarray) -> np.ndarray | None:
    if isinstance(rows, np.ndarray):
        return rows
    try:
        return np.fromiter(rows, dtype=np.uint64, count=len(rows))
    except OverflowError:
        return None


class LazyOrBlocks:
    """Outcomes of test(inner_r | outer_i) for all pairs, evaluated per block.

    The full plan is charged when the object is created; block(i) computes
    the inner-row outcomes for outer row i (1-indexed) on demand.
    """

    def __init__(self, session: "OracleSession", outer_rows, inner_rows, cols: int):
        self._session = session
        self._outer = list(outer_rows) if not isinstance(outer_rows, np.ndarray) else outer_rows
        self._inner = list(inner_rows) if not isinstance(inner_rows, np.ndarray) else inner_rows
        self._cols = cols
        self.outer_count = len(self._outer)
        self.inner_count = len(self._inner)

    def block(self, i: int) -> np.ndarray:
        if not 1 <= i <= self.outer_count:
            raise IndexError(f"outer row {i} outside 1..{self.outer_count}")
        outer_bits = int(self._outer[i - 1])
        return self._session._or_row_block(outer_bits, self._inner, self._cols)


class OracleSession:
    """One trial's oracle: threshold tests plus an exact test-count ledger."""

    def __init__(self, instance: Instance):
        self.instance = instance
        self.num_tests = 0

    # -- single pools -------------------------------------------------------

    def test_pool(self, pool: ItemSet) -> int:
        self.num_tests += 1
        return threshold_test(pool, self.instance)

    def test_pair(self, a: int, b: int) -> int:
        pool = ItemSet.from_iterable(self.instance.n, (a, b))
        return self.test_pool(pool)

    # -- whole matrices ------------------------------------------------------

    def run_matrix(self, m: BitMatrix, name: str = "all") -> OutcomeVector:
        self.num_tests += m.rows
        return run_matrix(m, self.instance, name)

    def run_rows(self, rows: Sequence[int] | np.ndarray, cols: int) -> tuple[int, ...]:
        """Outcomes of raw packed rows (the rows are the pools)."""
        self._check_cols(cols)
        self.num_tests += len(rows)
        arr = _as_u64(rows) if cols <= 64 else None
        if arr is None:
            pmask = self.instance.mask
            u = self.instance.u
            return tuple(
                1 if (int(r) & pmask).bit_count() >= u else 0 for r in rows
            )
        counts = popcount_u64(arr & np.uint64(self.instance.mask))
        return tuple((counts >= self.instance.u).astype(np.uint8).tolist())

    # -- OR-augmented grids ---------------------------------------------------

    def run_or_grid(
        self,
        outer_rows: Sequence[int] | np.ndarray,
        inner_rows: Sequence[int] | np.ndarray,
        cols: int,
    ) -> np.ndarray:
        """Boolean grid g[i-1, r-1] = outcome of pool outer_i | inner_r.

        Flattened in C order this matches the stacked block layout: row
        (i-1)*len(inner) + r.
        """
        self._check_cols(cols)
        self.num_tests += len(outer_rows) * len(inner_rows)
        return self._or_grid(outer_rows, inner_rows, cols)

    def plan_or_blocks(
        self,
        outer_rows: Sequence[int] | np.ndarray,
        inner_rows: Sequence[int] | np.ndarray,
        cols: int,
    ) -> LazyOrBlocks:
        """Charge a full outer x inner plan now; evaluate blocks on demand."""
        self._check_cols(cols)
        self.num_tests += len(outer_rows) * len(inner_rows)
        return LazyOrBlocks(self, outer_rows, inner_rows, cols)

    # -- internals ------------------------------------------------------------

    def _check_cols(self, cols: int) -> None:
        if cols != self.instance.n:
            raise DimensionError(f"rows have {cols} columns, instance n={self.instance.n}")

    def _member_columns(self, arr_or_rows, cols: int) -> tuple[np.ndarray, np.ndarray]:
        """(counts, membership) of defectives per row; membership is int8 (rows, d)."""
        members = self.instance.defectives.members
        arr = _as_u64(arr_or_rows) if cols <= 64 else None
        if arr is not None:
            shifts = np.array([j - 1 for j in members], dtype=np.uint64)
            has = ((arr[:, None] >> shifts[None, :]) & np.uint64(1)).astype(np.int8)
        else:
            has = np.zeros((len(arr_or_rows), len(members)), dtype=np.int8)
            for r, bits in enumerate(arr_or_rows):
                bits = int(bits)
                for c, j in enumerate(members):
                    has[r, c] = (bits >> (j - 1)) & 1
        return has.sum(axis=1, dtype=np.int32), has

    def _or_grid(self, outer_rows, inner_rows, cols: int) -> np.ndarray:
        oc, oh = self._member_columns(outer_rows, cols)
        ic, ih = self._member_columns(inner_rows, cols)
        overlap = oh.astype(np.int32) @ ih.astype(np.int32).T
        counts = oc[:, None] + ic[None, :] - overlap
        return counts >= self.instance.u

    def _or_row_block(self, outer_bits: int, inner_rows, cols: int) -> np.ndarray:
        pmask = self.instance.mask
        u = self.instance.u
        fixed = (outer_bits & pmask).bit_count()
        if fixed >= u:
            return np.ones(len(inner_rows), dtype=bool)
        residual = pmask & ~outer_bits
        arr = _as_u64(inner_rows) if cols <= 64 else None
        if arr is None:
            return np.array(
                [fixed + (int(r) & residual).bit_count() >= u for r in inner_rows],
                dtype=bool,
            )
        counts = popcount_u64(arr & np.uint64(residual))
        return (counts + np.uint64(fixed)) >= np.uint64(u)
