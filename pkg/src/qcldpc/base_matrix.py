"""RD-constrained base matrices built from two cyclic subgroups of GF(q)*.

With ``q - 1 = c * n`` and ``gcd(c, n) == 1``, ``beta = alpha**c`` has order
``n`` and ``delta = alpha**n`` has order ``c``. Block ``(i, j)`` is the
``n x n`` matrix with entry ``delta**(j-i) * beta**k - beta**l`` at ``(k, l)``
and the full matrix is the ``c x c`` array of these blocks, row ``i*n + k``
and column ``j*n + l``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import TextIO

import numpy as np

from .field import ZERO_LOG, FieldElement, FieldSpec, build_field


@dataclass(frozen=True)
class SubgroupPair:
    """Subgroups generated by ``beta = alpha**c`` (order n) and ``delta = alpha**n`` (order c).

    Coprime ``c, n`` make the two subgroups meet only in 1, which the RD
    guarantee of the full matrix relies on. ``allow_noncoprime`` lifts the
    check; the full matrix then carries extra zeros and 4-cycles, and only
    individually verified subarrays are usable.
    """

    field: FieldSpec
    c: int
    n: int
    allow_noncoprime: bool = False

    def __post_init__(self):
        q1 = self.field.order
        if self.c < 1 or self.n < 1 or self.c * self.n != q1:
            raise ValueError(f"c*n must equal q-1 = {q1}, got c={self.c}, n={self.n}")
        if gcd(self.c, self.n) != 1 and not self.allow_noncoprime:
            raise ValueError(f"c={self.c} and n={self.n} are not coprime")

    @property
    def coprime(self) -> bool:
        return gcd(self.c, self.n) == 1

    @property
    def beta(self) -> FieldElement:
        return self.field.element(self.c)

    @property
    def delta(self) -> FieldElement:
        return self.field.element(self.n)

    @property
    def g1(self) -> list[FieldElement]:
        return [self.field.element(self.c * k) for k in range(self.n)]

    @property
    def g2(self) -> list[FieldElement]:
        return [self.field.element(self.n * j) for j in range(self.c)]


@dataclass(frozen=True, eq=False)
class BaseMatrix:
    """A matrix over GF(q) stored as discrete logs (``ZERO_LOG`` for zero).

    ``pair`` is set for matrices from the subgroup construction; ``block`` is
    the ``(i, j)`` index when the matrix is a single ``n x n`` block. A plain
    matrix has neither.
    """

    field: FieldSpec
    logs: np.ndarray
    pair: SubgroupPair | None = None
    block: tuple[int, int] | None = None

    def __post_init__(self):
        logs = np.array(self.logs, dtype=np.int64, ndmin=2)
        if logs.ndim != 2:
            raise ValueError("base matrix must be two-dimensional")
        if np.any((logs < ZERO_LOG) | (logs >= self.field.order)):
            raise ValueError("entry out of range for the field")
        logs.setflags(write=False)
        object.__setattr__(self, "logs", logs)

    @classmethod
    def plain(cls, fs: FieldSpec, entries) -> BaseMatrix:
        """Wrap an arbitrary matrix of discrete logs (``-1`` = zero)."""
        return cls(fs, np.asarray(entries))

    @classmethod
    def from_ints(cls, fs: FieldSpec, values) -> BaseMatrix:
        return cls(fs, fs.to_log(values))

    @property
    def shape(self) -> tuple[int, int]:
        return self.logs.shape

    @property
    def block_shape(self) -> tuple[int, int] | None:
        return None if self.pair is None else (self.pair.c, self.pair.n)

    def entry(self, r: int, s: int) -> FieldElement:
        return FieldElement(self.field, int(self.logs[r, s]))

    def ints(self) -> np.ndarray:
        return self.field.to_int(self.logs)

    def rows(self, idx) -> BaseMatrix:
        return BaseMatrix(self.field, self.logs[list(idx)])

    def __eq__(self, other):
        return (isinstance(other, BaseMatrix) and self.field == other.field
                and np.array_equal(self.logs, other.logs))

    def __hash__(self):
        return hash((self.field, self.logs.tobytes()))


def _difference_logs(fs: FieldSpec, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Logs of ``alpha**left[r] - alpha**right[s]`` over a broadcast grid."""
    return fs.to_log(fs.sub_ints(fs.to_int(left), fs.to_int(right)))


def build_block(fs: FieldSpec, sp: SubgroupPair, i: int, j: int) -> BaseMatrix:
    if not (0 <= i < sp.c and 0 <= j < sp.c):
        raise IndexError(f"block index ({i}, {j}) outside 0..{sp.c - 1}")
    if sp.field != fs:
        raise ValueError("subgroup pair belongs to a different field")
    k = np.arange(sp.n)
    left = (sp.n * (j - i) + sp.c * k[:, None]) % fs.order
    right = (sp.c * k[None, :]) % fs.order
    return BaseMatrix(fs, _difference_logs(fs, left, right), pair=sp, block=(i, j))


def build_full(fs: FieldSpec, c: int, n: int, *, allow_noncoprime: bool = False) -> BaseMatrix:
    """The ``(q-1) x (q-1)`` matrix of all ``c*c`` blocks."""
    sp = SubgroupPair(fs, c, n, allow_noncoprime)
    t = np.arange(fs.order)
    blk, k = np.divmod(t, n)
    # row (i, k) -> delta**(-i) beta**k ; column (j, l) -> delta**j and beta**l
    left = (n * (blk[None, :] - blk[:, None]) + c * k[:, None]) % fs.order
    right = (c * k[None, :]) % fs.order
    return BaseMatrix(fs, _difference_logs(fs, left, right), pair=sp)


def build_wstar(fs: FieldSpec, sp: SubgroupPair) -> BaseMatrix:
    """First columns of blocks ``(0, 0) .. (0, c-1)``: entry ``delta**j beta**k - 1``."""
    k = np.arange(sp.n)[:, None]
    j = np.arange(sp.c)[None, :]
    left = (sp.n * j + sp.c * k) % fs.order
    return BaseMatrix(fs, _difference_logs(fs, left, np.zeros_like(left)))


def block_of(w: BaseMatrix, i: int, j: int) -> BaseMatrix:
    """Block ``(i, j)`` of a full subgroup-construction matrix."""
    if w.pair is None or w.block is not None:
        raise ValueError("not a full subgroup-construction matrix")
    n = w.pair.n
    return BaseMatrix(w.field, w.logs[i * n:(i + 1) * n, j * n:(j + 1) * n],
                      pair=w.pair, block=(i, j))


# --- verification ---------------------------------------------------------


@dataclass(frozen=True)
class RdViolation:
    rows: tuple[int, int]
    scalars: tuple[int, int]
    positions: tuple[int, ...]


def verify_rd_constraint(w: BaseMatrix) -> RdViolation | None:
    """Exhaustive row-distance check; ``None`` when the constraint holds.

    For every row pair ``r1 < r2`` and scalar pair ``(alpha**e, alpha**f)``
    the scaled rows must agree in at most one position. The first violation
    in (rows, e, f) order is returned with all agreeing positions.
    """
    logs = w.logs
    rows, width = logs.shape
    if rows < 2:
        raise ValueError("need at least two rows")
    order = w.field.order
    scal = np.arange(order)
    for r1 in range(rows - 1):
        a = logs[r1]
        # (e, pos): alpha**e * row r1
        sa = np.where(a[None, :] < 0, ZERO_LOG, (a[None, :] + scal[:, None]) % order)
        for r2 in range(r1 + 1, rows):
            b = logs[r2]
            sb = np.where(b[None, :] < 0, ZERO_LOG, (b[None, :] + scal[:, None]) % order)
            agree = sa[:, None, :] == sb[None, :, :]  # (e, f, pos)
            counts = agree.sum(axis=2)
            bad = np.argwhere(counts >= 2)
            if len(bad):
                e, f = (int(x) for x in bad[0])
                pos = tuple(int(p) for p in np.flatnonzero(agree[e, f]))
                return RdViolation((r1, r2), (e, f), pos)
    return None


@dataclass(frozen=True)
class StructureReport:
    """Outcome of the six structural properties (``None`` = not applicable)."""

    row_shift: bool | None
    column_shift: bool | None
    distinct_entries: bool
    rows_differ_everywhere: bool
    offdiagonal_nonzero: bool | None
    diagonal_zero_pattern: bool | None
    block_circulant: bool | None = None

    def as_dict(self) -> dict[int, bool | None]:
        return {1: self.row_shift, 2: self.column_shift, 3: self.distinct_entries,
                4: self.rows_differ_everywhere, 5: self.offdiagonal_nonzero,
                6: self.diagonal_zero_pattern}

    @property
    def all_hold(self) -> bool:
        vals = list(self.as_dict().values()) + [self.block_circulant]
        return all(v is not False for v in vals)


def _shift_relations(logs: np.ndarray, beta: int, order: int) -> tuple[bool, bool]:
    scaled = np.where(logs < 0, ZERO_LOG, (logs + beta) % order)
    # row k+1 == beta * (row k shifted right by one); wraps last -> first
    rows_ok = np.array_equal(np.roll(logs, -1, axis=0), np.roll(scaled, 1, axis=1))
    cols_ok = np.array_equal(np.roll(logs, -1, axis=1), np.roll(scaled, 1, axis=0))
    return rows_ok, cols_ok


def _distinct_along(logs: np.ndarray, axis: int) -> bool:
    srt = np.sort(logs, axis=axis)
    return not np.any(np.diff(srt, axis=axis) == 0)


def _rows_differ(m: np.ndarray) -> bool:
    eq = m[:, None, :] == m[None, :, :]
    np.einsum("iij->ij", eq)[...] = False
    return not eq.any()


def _differ_everywhere(logs: np.ndarray) -> bool:
    return _rows_differ(logs) and _rows_differ(logs.T)


def _block_properties(blk: np.ndarray, beta: int, order: int, diagonal: bool):
    rows_ok, cols_ok = _shift_relations(blk, beta, order)
    n = blk.shape[0]
    zero = blk < 0
    off = ~np.eye(n, dtype=bool)
    nonzero_off = not zero[off].any()
    if diagonal:
        return rows_ok, cols_ok, None, bool(zero[~off].all() and nonzero_off)
    return rows_ok, cols_ok, bool(not zero.any()), None


def verify_structural_properties(w: BaseMatrix, beta: int | None = None) -> StructureReport:
    """Check the six block properties literally.

    A single block is checked directly. A full matrix has properties 1, 2, 5
    and 6 checked on every block (5 on off-diagonal blocks, 6 on diagonal
    ones) and 3, 4 on every block plus 4 across the whole matrix. Plain
    matrices without a known ``beta`` report ``None`` for 1, 2, 5, 6.
    """
    logs = w.logs
    order = w.field.order
    if beta is None and w.pair is not None:
        beta = w.pair.c
    if w.pair is None or w.block is not None:
        distinct = _distinct_along(logs, 0) and _distinct_along(logs, 1)
        differ = _differ_everywhere(logs)
        if beta is None:
            return StructureReport(None, None, distinct, differ, None, None)
        rows_ok, cols_ok = _shift_relations(logs, beta, order)
        p5 = p6 = None
        if w.block is not None:
            i, j = w.block
            _, _, p5, p6 = _block_properties(logs, beta, order, i == j)
        return StructureReport(rows_ok, cols_ok, distinct, differ, p5, p6)

    c, n = w.pair.c, w.pair.n
    p1 = p2 = p3 = p4 = p5 = p6 = True
    for i in range(c):
        for j in range(c):
            blk = logs[i * n:(i + 1) * n, j * n:(j + 1) * n]
            r_ok, c_ok, nz, dz = _block_properties(blk, beta, order, i == j)
            p1 &= r_ok
            p2 &= c_ok
            p3 &= _distinct_along(blk, 0) and _distinct_along(blk, 1)
            p4 &= _differ_everywhere(blk)
            if nz is not None:
                p5 &= nz
            if dz is not None:
                p6 &= dz
    # across blocks only the row statement holds
    p4 &= _rows_differ(logs)
    circ = all(
        np.array_equal(logs[((i + 1) % c) * n:((i + 1) % c + 1) * n, ((j + 1) % c) * n:((j + 1) % c + 1) * n],
                       logs[i * n:(i + 1) * n, j * n:(j + 1) * n])
        for i in range(c) for j in range(c))
    return StructureReport(bool(p1), bool(p2), bool(p3), bool(p4), bool(p5), bool(p6), circ)


# --- text format ----------------------------------------------------------


def write_base_matrix(w: BaseMatrix, fh: TextIO) -> None:
    """Header ``q c n rows cols`` then one row of logs per line (``-1`` = zero).

    Plain matrices write ``c = n = 0``.
    """
    c, n = w.block_shape or (0, 0)
    rows, cols = w.shape
    fh.write(f"{w.field.q} {c} {n} {rows} {cols}\n")
    for row in w.logs:
        fh.write(" ".join(str(int(v)) for v in row) + "\n")


def read_base_matrix(fh: TextIO) -> BaseMatrix:
    lines = [ln.split() for ln in fh if ln.strip()]
    if not lines or len(lines[0]) != 5:
        raise ValueError("malformed base-matrix header")
    q, c, n, rows, cols = (int(x) for x in lines[0])
    body = np.array([[int(x) for x in ln] for ln in lines[1:]], dtype=np.int64)
    if body.shape != (rows, cols):
        raise ValueError(f"expected {rows}x{cols} entries, got {body.shape}")
    fs = build_field(q)
    pair = SubgroupPair(fs, c, n, True) if c and rows == cols == fs.order else None
    return BaseMatrix(fs, body, pair=pair)
