"""
GF(2) Linear Algebra Service
Bit-packed vectors and matrices: rank, echelon forms, backfill optimization,
null spaces and solution selection
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from app.config.logger import get_logger
from app.exceptions import DimensionMismatchError, UnsatisfiableSystemError

logger = get_logger("gf2_core")

# Brute-force helpers refuse anything wider than this
ENUMERATION_LIMIT = 20


def _parity(value: int) -> int:
    return bin(value).count("1") & 1


@dataclass(frozen=True)
class BitVector:
    """
    Packed GF(2) vector. Index 0 is stored in the most significant bit, so
    `value` is the integer whose binary form reads the vector left to right.
    """

    length: int
    value: int = 0

    def __post_init__(self):
        if self.length < 0:
            raise ValueError(f"BitVector length must be nonnegative, got {self.length}")
        if self.value < 0 or self.value >> self.length:
            raise ValueError(f"Value {self.value} does not fit in {self.length} bits")

    @classmethod
    def zeros(cls, length: int) -> "BitVector":
        return cls(length, 0)

    @classmethod
    def from_int(cls, length: int, value: int) -> "BitVector":
        return cls(length, int(value))

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitVector":
        bits = list(bits)
        value = 0
        for bit in bits:
            value = (value << 1) | (int(bit) & 1)
        return cls(len(bits), value)

    @classmethod
    def from_string(cls, text: str) -> "BitVector":
        text = text.strip()
        if any(ch not in "01" for ch in text):
            raise ValueError(f"Bit string may only contain '0' and '1': {text!r}")
        return cls(len(text), int(text, 2) if text else 0)

    def __len__(self) -> int:
        return self.length

    def __getitem__(self, index: int) -> int:
        if not 0 <= index < self.length:
            raise IndexError(f"Bit index {index} out of range for length {self.length}")
        return (self.value >> (self.length - 1 - index)) & 1

    def __xor__(self, other: "BitVector") -> "BitVector":
        if other.length != self.length:
            raise DimensionMismatchError(
                f"Cannot add vectors of length {self.length} and {other.length}"
            )
        return BitVector(self.length, self.value ^ other.value)

    def to_int(self) -> int:
        return self.value

    def weight(self) -> int:
        return bin(self.value).count("1")

    def to_list(self) -> List[int]:
        return [self[i] for i in range(self.length)]

    def to_string(self) -> str:
        return format(self.value, f"0{self.length}b") if self.length else ""

    def to_array(self) -> np.ndarray:
        return np.array(self.to_list(), dtype=np.uint8)

    def to_signs(self) -> np.ndarray:
        """Map bits to spins with sigma_i = (-1)^x_i"""
        return 1 - 2 * self.to_array().astype(np.int8)

    def __str__(self) -> str:
        return self.to_string()


@dataclass(frozen=True)
class BitMatrix:
    """Row-major packed GF(2) matrix; each row is an int with column 0 as its top bit"""

    n_cols: int
    rows: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.n_cols < 1:
            raise ValueError(f"BitMatrix needs at least one column, got {self.n_cols}")
        object.__setattr__(self, "rows", tuple(int(r) for r in self.rows))
        for row in self.rows:
            if row < 0 or row >> self.n_cols:
                raise ValueError(f"Row {row} does not fit in {self.n_cols} columns")

    # ==================== CONSTRUCTION ====================

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, tuple(1 << (n - 1 - i) for i in range(n)))

    @classmethod
    def zeros(cls, n_rows: int, n_cols: int) -> "BitMatrix":
        return cls(n_cols, (0,) * n_rows)

    @classmethod
    def from_strings(cls, rows: Sequence[str], n_cols: int | None = None) -> "BitMatrix":
        rows = [r.strip() for r in rows]
        if n_cols is None:
            if not rows:
                raise ValueError("Column count is required for a matrix without rows")
            n_cols = len(rows[0])
        for r in rows:
            if len(r) != n_cols or any(ch not in "01" for ch in r):
                raise ValueError(f"Malformed matrix row {r!r} for {n_cols} columns")
        return cls(n_cols, tuple(int(r, 2) for r in rows))

    @classmethod
    def from_rows(cls, rows: Sequence[int], n_cols: int) -> "BitMatrix":
        return cls(n_cols, tuple(rows))

    @classmethod
    def from_vectors(cls, vectors: Sequence[BitVector], n_cols: int) -> "BitMatrix":
        for v in vectors:
            if v.length != n_cols:
                raise DimensionMismatchError(f"Row of length {v.length} in a {n_cols}-column matrix")
        return cls(n_cols, tuple(v.value for v in vectors))

    @classmethod
    def from_array(cls, array) -> "BitMatrix":
        array = np.asarray(array, dtype=np.uint8) % 2
        if array.ndim != 2:
            raise ValueError("Expected a 2D array")
        return cls.from_strings(["".join(str(int(b)) for b in row) for row in array], array.shape[1])

    @classmethod
    def from_text(cls, text: str) -> "BitMatrix":
        """
        Parse the fixture format: a header line "R L" followed by R rows of L
        characters. Lines starting with '#' are ignored.

        Args:
            text: Matrix text

        Returns:
            Parsed matrix
        """
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not lines:
            raise ValueError("Empty matrix text")
        header = lines[0].split()
        if len(header) != 2:
            raise ValueError(f"Matrix header must be 'R L', got {lines[0]!r}")
        n_rows, n_cols = int(header[0]), int(header[1])
        body = lines[1:]
        if len(body) != n_rows:
            raise ValueError(f"Header declares {n_rows} rows but {len(body)} were found")
        return cls.from_strings(body, n_cols)

    def to_text(self) -> str:
        lines = [f"{self.n_rows} {self.n_cols}"]
        lines.extend(self.row_strings())
        return "\n".join(lines) + "\n"

    # ==================== ACCESS ====================

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.n_rows, self.n_cols

    def __getitem__(self, index: Tuple[int, int]) -> int:
        r, c = index
        if not 0 <= c < self.n_cols:
            raise IndexError(f"Column {c} out of range")
        return (self.rows[r] >> (self.n_cols - 1 - c)) & 1

    def row(self, index: int) -> BitVector:
        return BitVector(self.n_cols, self.rows[index])

    def row_strings(self) -> List[str]:
        return [format(r, f"0{self.n_cols}b") for r in self.rows]

    def row_weights(self) -> List[int]:
        return [bin(r).count("1") for r in self.rows]

    def leading_columns(self) -> List[int]:
        """Column index of the first one in each row; -1 for zero rows"""
        return [self.n_cols - r.bit_length() if r else -1 for r in self.rows]

    def head(self, n_rows: int) -> "BitMatrix":
        return BitMatrix(self.n_cols, self.rows[:n_rows])

    def stack(self, other: "BitMatrix") -> "BitMatrix":
        """Rows of self followed by rows of other"""
        if other.n_cols != self.n_cols:
            raise DimensionMismatchError(f"Cannot stack {self.n_cols} and {other.n_cols} columns")
        return BitMatrix(self.n_cols, self.rows + other.rows)

    def to_array(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols), dtype=np.uint8)
        for i, r in enumerate(self.rows):
            for j in range(self.n_cols):
                out[i, j] = (r >> (self.n_cols - 1 - j)) & 1
        return out

    def __str__(self) -> str:
        return "\n".join(self.row_strings())


# ==================== ELIMINATION ====================

def _echelonize(rows: Sequence[int], n_cols: int, reduce: bool = False) -> Tuple[List[int], List[int]]:
    """
    Word-level Gaussian elimination on a copy of `rows`.

    Args:
        rows: Packed rows
        n_cols: Column count
        reduce: Also clear entries above each pivot (reduced row echelon form)

    Returns:
        (echelon rows with zero rows last, pivot columns)
    """
    work = list(rows)
    pivots: List[int] = []
    pivot_row = 0
    for col in range(n_cols):
        if pivot_row == len(work):
            break
        mask = 1 << (n_cols - 1 - col)
        found = next((i for i in range(pivot_row, len(work)) if work[i] & mask), -1)
        if found < 0:
            continue
        work[pivot_row], work[found] = work[found], work[pivot_row]
        pivot = work[pivot_row]
        start = 0 if reduce else pivot_row + 1
        for i in range(start, len(work)):
            if i != pivot_row and work[i] & mask:
                work[i] ^= pivot
        pivots.append(col)
        pivot_row += 1
    return work, pivots


def rank(m: BitMatrix) -> int:
    """GF(2) rank; the input is left untouched"""
    return len(_echelonize(m.rows, m.n_cols)[1])


def row_echelon(m: BitMatrix) -> BitMatrix:
    """
    Row echelon form with row swaps allowed. Row count is preserved and any
    zero rows end up at the bottom.
    """
    rows, _ = _echelonize(m.rows, m.n_cols)
    return BitMatrix(m.n_cols, tuple(rows))


def backfill_optimize(m: BitMatrix) -> BitMatrix:
    """
    Echelonize, drop zero rows, then for each row from the second on add it
    to every earlier row that has a zero at its leading-one column. The
    result has rank(m) rows, the same null space, and ones filling every
    column above each leading one.

    Args:
        m: Any matrix

    Returns:
        The backfill-optimized matrix
    """
    rows, pivots = _echelonize(m.rows, m.n_cols)
    rows = rows[: len(pivots)]
    for i in range(1, len(rows)):
        mask = 1 << (m.n_cols - 1 - pivots[i])
        for k in range(i):
            if not rows[k] & mask:
                rows[k] ^= rows[i]
    return BitMatrix(m.n_cols, tuple(rows))


def has_fill_property(m: BitMatrix) -> bool:
    leads = m.leading_columns()
    for r, c in enumerate(leads):
        if c < 0:
            return False
        if r and leads[r - 1] >= c:
            return False
        if any(not m[k, c] for k in range(r)):
            return False
    return True


def _reduce_basis(vectors: Sequence[int]) -> List[int]:
    """Fully reduce a set of packed vectors; result sorted by leading bit, most significant first"""
    basis: List[int] = []
    for v in vectors:
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis = [min(b, b ^ v) if b & (1 << (v.bit_length() - 1)) else b for b in basis]
            basis.append(v)
    return sorted(basis, reverse=True)


def null_space_basis(m: BitMatrix) -> List[BitVector]:
    """
    Basis of {x : m x = 0} in reduced form: distinct leading bits, and each
    leading bit appears in exactly one basis vector.

    Args:
        m: Any matrix

    Returns:
        L - rank(m) vectors ordered by leading bit
    """
    n = m.n_cols
    rows, pivots = _echelonize(m.rows, n, reduce=True)
    pivot_set = set(pivots)
    vectors = []
    for free in range(n):
        if free in pivot_set:
            continue
        value = 1 << (n - 1 - free)
        free_mask = value
        for row, p in zip(rows, pivots):
            if row & free_mask:
                value |= 1 << (n - 1 - p)
        vectors.append(value)
    return [BitVector(n, v) for v in _reduce_basis(vectors)]


def matvec(m: BitMatrix, x: BitVector) -> BitVector:
    """Parity products m x over GF(2)"""
    if x.length != m.n_cols:
        raise DimensionMismatchError(
            f"Vector of length {x.length} cannot multiply a {m.n_rows}x{m.n_cols} matrix"
        )
    value = 0
    for r in m.rows:
        value = (value << 1) | _parity(r & x.value)
    return BitVector(m.n_rows, value)


def solve_particular(m: BitMatrix, y: BitVector) -> BitVector:
    """
    Any x with m x = y; free variables are set to zero.

    Args:
        m: Coefficient matrix
        y: Parity vector with one bit per row

    Returns:
        A solution

    Raises:
        UnsatisfiableSystemError: If y is outside the column space of m
    """
    if y.length != m.n_rows:
        raise DimensionMismatchError(
            f"Parity vector of length {y.length} for a matrix with {m.n_rows} rows"
        )
    n = m.n_cols
    augmented = [(row << 1) | y[i] for i, row in enumerate(m.rows)]
    rows, pivots = _echelonize(augmented, n + 1, reduce=True)
    if pivots and pivots[-1] == n:
        raise UnsatisfiableSystemError("Parity vector is not reachable from the matrix rows")
    value = 0
    for row, p in zip(rows, pivots):
        if row & 1:
            value |= 1 << (n - 1 - p)
    return BitVector(n, value)


def min_integer_solution(m: BitMatrix, y: BitVector) -> BitVector:
    """
    The solution of m x = y whose binary form (variable 1 most significant)
    is the smallest integer: a particular solution greedily reduced against
    the reduced null-space basis.
    """
    x = solve_particular(m, y).value
    for b in null_space_basis(m):
        x = min(x, x ^ b.value)
    return BitVector(m.n_cols, x)


def enumerate_solutions(m: BitMatrix, y: BitVector) -> List[BitVector]:
    """Brute-force every x in {0,1}^L with m x = y (oracle helper)"""
    if m.n_cols > ENUMERATION_LIMIT:
        raise ValueError(f"Refusing to enumerate 2^{m.n_cols} candidates")
    if y.length != m.n_rows:
        raise DimensionMismatchError("Parity vector length does not match row count")
    found = []
    for bits in product((0, 1), repeat=m.n_cols):
        x = BitVector.from_bits(bits)
        if matvec(m, x) == y:
            found.append(x)
    return found


def span(basis: Sequence[BitVector], length: int) -> List[BitVector]:
    """Every GF(2) combination of `basis`, ordered by integer value"""
    values = {0}
    for b in basis:
        values |= {v ^ b.value for v in values}
    return [BitVector(length, v) for v in sorted(values)]
