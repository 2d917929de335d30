"""Bit-packed binary vectors and matrices with the pooling-design operators.

Items are 1-indexed throughout: bit ``j`` of a vector corresponds to item
``j`` in [1..n] and is stored at integer bit position ``j - 1``.  Rows are
backed by arbitrary-precision ints (little-endian 64-bit words under the
hood); this packing is internal and equality is defined on logical bits
only.

All values are immutable after construction and all operations are pure,
so everything here is safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DimensionError, MatrixFormatError, ParameterError

GTMAT_MAGIC = "GTMAT 1"
MATRIX_KINDS = ("disjunct", "list-disjunct", "single-selector", "selector", "raw")


def mask_of(items: Iterable[int]) -> int:
    """Integer bitmask with bit j-1 set for each item j."""
    m = 0
    for j in items:
        m |= 1 << (j - 1)
    return m


def bits_of(mask: int) -> tuple[int, ...]:
    """Sorted items encoded in a bitmask (inverse of mask_of)."""
    items = []
    while mask:
        low = mask & -mask
        items.append(low.bit_length())
        mask ^= low
    return tuple(items)


@dataclass(frozen=True)
class BitVector:
    """Length-n binary vector; ``bits`` packs entries 1..n."""

    length: int
    bits: int

    def __post_init__(self):
        if self.length < 0:
            raise ParameterError(f"vector length must be >= 0, got {self.length}")
        if self.bits < 0 or self.bits >> self.length:
            raise ParameterError("bits set outside 1..length")

    @classmethod
    def from_items(cls, length: int, items: Iterable[int]) -> "BitVector":
        bits = mask_of(items)
        return cls(length, bits)

    @classmethod
    def from_string(cls, text: str) -> "BitVector":
        """Parse a 0/1 string; character k (from the left) is item k."""
        bits = 0
        for k, ch in enumerate(text):
            if ch == "1":
                bits |= 1 << k
            elif ch != "0":
                raise ParameterError(f"invalid character {ch!r} in bit string")
        return cls(len(text), bits)

    def __getitem__(self, j: int) -> int:
        if not 1 <= j <= self.length:
            raise IndexError(f"item {j} outside 1..{self.length}")
        return (self.bits >> (j - 1)) & 1

    def to_string(self) -> str:
        return "".join("1" if self[j] else "0" for j in range(1, self.length + 1))

    def weight(self) -> int:
        return self.bits.bit_count()

    def __repr__(self) -> str:
        return f"BitVector({self.to_string()!r})"


@dataclass(frozen=True)
class ItemSet:
    """Strictly increasing item indices over a universe [1..n]."""

    n: int
    members: tuple[int, ...]

    def __post_init__(self):
        if self.n < 0:
            raise ParameterError(f"universe size must be >= 0, got {self.n}")
        prev = 0
        for j in self.members:
            if j <= prev:
                raise ParameterError("members must be strictly increasing")
            prev = j
        if self.members and not (1 <= self.members[0] and self.members[-1] <= self.n):
            raise ParameterError(f"members must lie in 1..{self.n}")

    @classmethod
    def from_iterable(cls, n: int, items: Iterable[int]) -> "ItemSet":
        return cls(n, tuple(sorted(set(items))))

    @classmethod
    def from_mask(cls, n: int, mask: int) -> "ItemSet":
        return cls(n, bits_of(mask))

    @property
    def mask(self) -> int:
        return mask_of(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[int]:
        return iter(self.members)

    def __contains__(self, j: int) -> bool:
        return j in set(self.members)

    def union(self, other: "ItemSet") -> "ItemSet":
        self._check_universe(other)
        return ItemSet.from_mask(self.n, self.mask | other.mask)

    def difference(self, other: "ItemSet") -> "ItemSet":
        self._check_universe(other)
        return ItemSet.from_mask(self.n, self.mask & ~other.mask)

    def intersection(self, other: "ItemSet") -> "ItemSet":
        self._check_universe(other)
        return ItemSet.from_mask(self.n, self.mask & other.mask)

    def _check_universe(self, other: "ItemSet") -> None:
        if self.n != other.n:
            raise DimensionError(f"universe mismatch: {self.n} vs {other.n}")

    def __repr__(self) -> str:
        return f"ItemSet(n={self.n}, {{{', '.join(map(str, self.members))}}})"


class BitMatrix:
    """t x n binary matrix stored as one packed int per row."""

    __slots__ = ("rows", "cols", "row_bits", "__dict__")

    def __init__(self, rows: int, cols: int, row_bits: Sequence[int]):
        if cols < 1:
            raise ParameterError(f"matrix must have cols >= 1, got {cols}")
        if rows < 0:
            raise ParameterError(f"matrix must have rows >= 0, got {rows}")
        row_bits = tuple(row_bits)
        if len(row_bits) != rows:
            raise DimensionError(f"expected {rows} rows, got {len(row_bits)}")
        for r, bits in enumerate(row_bits):
            if bits < 0 or bits >> cols:
                raise ParameterError(f"row {r + 1} has bits outside 1..{cols}")
        self.rows = rows
        self.cols = cols
        self.row_bits = row_bits

    @classmethod
    def from_rows(cls, cols: int, row_bits: Sequence[int]) -> "BitMatrix":
        return cls(len(row_bits), cols, row_bits)

    @classmethod
    def from_strings(cls, lines: Sequence[str]) -> "BitMatrix":
        vecs = [BitVector.from_string(line) for line in lines]
        cols = vecs[0].length if vecs else 1
        for v in vecs:
            if v.length != cols:
                raise DimensionError("rows of unequal length")
        return cls(len(vecs), cols, [v.bits for v in vecs])

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, n, [1 << k for k in range(n)])

    def row(self, i: int) -> BitVector:
        """Row i, 1-indexed."""
        if not 1 <= i <= self.rows:
            raise IndexError(f"row {i} outside 1..{self.rows}")
        return BitVector(self.cols, self.row_bits[i - 1])

    @cached_property
    def rows_u64(self) -> np.ndarray | None:
        """Rows as a uint64 array when cols <= 64, else None (fast paths only)."""
        if self.cols > 64:
            return None
        return np.fromiter(self.row_bits, dtype=np.uint64, count=self.rows)

    @cached_property
    def column_bits(self) -> tuple[int, ...]:
        """Per-column bitsets over rows: bit r-1 of entry j-1 marks a 1 at (r, j)."""
        cols = [0] * self.cols
        for r, bits in enumerate(self.row_bits):
            rb = 1 << r
            while bits:
                low = bits & -bits
                cols[low.bit_length() - 1] |= rb
                bits ^= low
        return tuple(cols)

    def to_bool_array(self) -> np.ndarray:
        """Dense (rows, cols) boolean array."""
        out = np.zeros((self.rows, self.cols), dtype=bool)
        for r, bits in enumerate(self.row_bits):
            while bits:
                low = bits & -bits
                out[r, low.bit_length() - 1] = True
                bits ^= low
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and self.row_bits == other.row_bits
        )

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.row_bits))

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"


def support(v: BitVector) -> ItemSet:
    """The set of positions carrying a 1."""
    return ItemSet.from_mask(v.length, v.bits)


def _check_same_length(z: BitVector, z2: BitVector) -> None:
    if z.length != z2.length:
        raise DimensionError(f"length mismatch: {z.length} vs {z2.length}")


def or_vec(z: BitVector, z2: BitVector) -> BitVector:
    """Entrywise OR; the support is the union of the two supports."""
    _check_same_length(z, z2)
    return BitVector(z.length, z.bits | z2.bits)


def exclusion_vec(z: BitVector, z2: BitVector) -> BitVector:
    """Strip z's support out of z2: the result's support is supp(z2) \\ supp(z).

    Note the asymmetry: the FIRST argument is the one subtracted.
    """
    _check_same_length(z, z2)
    return BitVector(z.length, z2.bits & ~z.bits)


def block_row_index(i: int, i_prime: int, inner_count: int) -> int:
    """Row index of block pair (i, i') in a stacked combine, all 1-indexed.

    Outer index i ranges over the right-hand matrix's rows, inner index i'
    over the left-hand matrix's rows; the row is (i-1)*inner_count + i'.
    This index function is normative for every outcome layout downstream.
    """
    return (i - 1) * inner_count + i_prime


def block_row_pair(row: int, inner_count: int) -> tuple[int, int]:
    """Inverse of block_row_index."""
    i, i_prime = divmod(row - 1, inner_count)
    return i + 1, i_prime + 1


def block_combine(left: BitMatrix, right: BitMatrix, op: str) -> BitMatrix:
    """Stack op(left(i',:), right(i,:)) over all pairs, i outer and i' inner.

    With op="exclusion" row (i-1)*b + i' has support supp(right(i,:)) minus
    supp(left(i',:)); with op="or" it is the union.
    """
    if left.cols != right.cols:
        raise DimensionError(f"column mismatch: {left.cols} vs {right.cols}")
    if op == "or":
        rows = [lb | rb for rb in right.row_bits for lb in left.row_bits]
    elif op == "exclusion":
        rows = [rb & ~lb for rb in right.row_bits for lb in left.row_bits]
    else:
        raise ParameterError(f"op must be 'or' or 'exclusion', got {op!r}")
    return BitMatrix(left.rows * right.rows, left.cols, rows)


def complement(m: BitMatrix) -> BitMatrix:
    """Flip every entry; an involution."""
    full = (1 << m.cols) - 1
    return BitMatrix(m.rows, m.cols, [bits ^ full for bits in m.row_bits])


def _format_params(params: dict[str, object] | None) -> str:
    if not params:
        return ""
    return ";".join(f"{k}={params[k]}" for k in params)


def _parse_params(text: str) -> dict[str, str]:
    params: dict[str, str] = {}
    if not text:
        return params
    for chunk in text.split(";"):
        if "=" not in chunk:
            raise MatrixFormatError(f"line 3: malformed params chunk {chunk!r}")
        key, value = chunk.split("=", 1)
        params[key] = value
    return params


def write_matrix(
    path,
    matrix: BitMatrix,
    kind: str = "raw",
    params: dict[str, object] | None = None,
) -> None:
    """Write a matrix in the GTMAT text format (bit-exact round trip).

    Layout::

        GTMAT 1
        rows=<t> cols=<n>
        kind=<disjunct|list-disjunct|single-selector|selector|raw> params=<k=v;...>
        <n chars of 0/1 per row, LF endings>
    """
    if kind not in MATRIX_KINDS:
        raise ParameterError(f"kind must be one of {MATRIX_KINDS}, got {kind!r}")
    lines = [GTMAT_MAGIC, f"rows={matrix.rows} cols={matrix.cols}",
             f"kind={kind} params={_format_params(params)}"]
    lines.extend(matrix.row(i).to_string() for i in range(1, matrix.rows + 1))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_matrix(path) -> tuple[BitMatrix, str, dict[str, str]]:
    """Read a GTMAT file; returns (matrix, kind, params)."""
    with open(path, "r") as fh:
        text = fh.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != GTMAT_MAGIC:
        raise MatrixFormatError(f"line 1: expected {GTMAT_MAGIC!r}")
    if len(lines) < 3:
        raise MatrixFormatError("line 2: missing header")
    m = lines[1].split()
    if len(m) != 2 or not m[0].startswith("rows=") or not m[1].startswith("cols="):
        raise MatrixFormatError(f"line 2: expected 'rows=<t> cols=<n>', got {lines[1]!r}")
    try:
        rows = int(m[0][len("rows="):])
        cols = int(m[1][len("cols="):])
    except ValueError as exc:
        raise MatrixFormatError(f"line 2: non-integer dimensions in {lines[1]!r}") from exc
    k = lines[2].split(" params=", 1)
    if len(k) != 2 or not k[0].startswith("kind="):
        raise MatrixFormatError(f"line 3: expected 'kind=<kind> params=<...>', got {lines[2]!r}")
    kind = k[0][len("kind="):]
    if kind not in MATRIX_KINDS:
        raise MatrixFormatError(f"line 3: unknown kind {kind!r}")
    params = _parse_params(k[1])
    if len(lines) != 3 + rows:
        raise MatrixFormatError(f"expected {rows} row lines, found {len(lines) - 3}")
    row_bits = []
    for r in range(rows):
        line = lines[3 + r]
        lineno = 4 + r
        if len(line) != cols:
            raise MatrixFormatError(
                f"line {lineno}: expected {cols} characters, got {len(line)}"
            )
        bits = 0
        for j, ch in enumerate(line):
            if ch == "1":
                bits |= 1 << j
            elif ch != "0":
                raise MatrixFormatError(f"line {lineno}: invalid character {ch!r}")
        row_bits.append(bits)
    return BitMatrix(rows, cols, row_bits), kind, params
