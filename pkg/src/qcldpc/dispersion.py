"""Binary dispersion of field matrices into arrays of circulant permutation matrices.

The nonzero element ``alpha**e`` becomes ``P**e``, the ``L x L`` CPM
(``L = q - 1``) whose row ``r`` has its single 1 in column ``(r + e) mod L``;
zero becomes the ``L x L`` zero matrix (ZM). An array is kept in compact form
as a grid of exponents with ``ZM = -1`` and expanded to an explicit sparse
binary matrix only on demand.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field as dc_field
from typing import Iterable, Mapping, TextIO

import numpy as np
import scipy.sparse as sp

from .base_matrix import BaseMatrix

ZM = -1


@dataclass(frozen=True, eq=False)
class CpmArray:
    """Grid of CPM exponents (``ZM`` for zero blocks) with block size ``L``.

    ``provenance`` carries the field size and the row/column block indices of
    the source array, so subarrays and masks can be traced back.
    """

    grid: np.ndarray
    L: int
    provenance: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        g = np.array(self.grid, dtype=np.int64, ndmin=2)
        if g.ndim != 2:
            raise ValueError("grid must be two-dimensional")
        if self.L < 1 or np.any((g < ZM) | (g >= self.L)):
            raise ValueError(f"exponents must lie in [0, {self.L - 1}] or be ZM")
        g.setflags(write=False)
        object.__setattr__(self, "grid", g)

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape

    @property
    def zm_count(self) -> int:
        return int((self.grid == ZM).sum())

    @property
    def is_zm_free(self) -> bool:
        return self.zm_count == 0

    def col_block_weights(self) -> np.ndarray:
        return (self.grid != ZM).sum(axis=0)

    def row_block_weights(self) -> np.ndarray:
        return (self.grid != ZM).sum(axis=1)

    def __eq__(self, other):
        return (isinstance(other, CpmArray) and self.L == other.L
                and np.array_equal(self.grid, other.grid))

    def __hash__(self):
        return hash((self.L, self.grid.tobytes()))


class BinaryMatrix:
    """Sparse GF(2) matrix; rows hold strictly increasing 1-positions.

    Backed by a CSR matrix of ``uint8`` ones.
    """

    def __init__(self, csr: sp.csr_matrix):
        csr = sp.csr_matrix(csr, dtype=np.uint8)
        csr.sum_duplicates()
        csr.data %= 2
        csr.eliminate_zeros()
        csr.sort_indices()
        self._csr = csr

    @classmethod
    def from_dense(cls, a) -> BinaryMatrix:
        a = np.asarray(a, dtype=np.uint8) % 2
        return cls(sp.csr_matrix(np.atleast_2d(a)))

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]], cols: int) -> BinaryMatrix:
        rows = [sorted(set(int(x) for x in r)) for r in rows]
        indptr = np.cumsum([0] + [len(r) for r in rows])
        indices = np.array([x for r in rows for x in r], dtype=np.int64)
        if len(indices) and (indices.min() < 0 or indices.max() >= cols):
            raise ValueError("column index out of range")
        data = np.ones(len(indices), dtype=np.uint8)
        return cls(sp.csr_matrix((data, indices, indptr), shape=(len(rows), cols)))

    @property
    def csr(self) -> sp.csr_matrix:
        return self._csr

    @property
    def shape(self) -> tuple[int, int]:
        return self._csr.shape

    @property
    def rows(self) -> int:
        return self._csr.shape[0]

    @property
    def cols(self) -> int:
        return self._csr.shape[1]

    @property
    def nnz(self) -> int:
        return self._csr.nnz

    def row(self, i: int) -> np.ndarray:
        s = self._csr
        return s.indices[s.indptr[i]:s.indptr[i + 1]]

    def row_lists(self) -> list[list[int]]:
        return [self.row(i).tolist() for i in range(self.rows)]

    def col_lists(self) -> list[list[int]]:
        t = self._csr.T.tocsr()
        t.sort_indices()
        return [t.indices[t.indptr[j]:t.indptr[j + 1]].tolist() for j in range(self.cols)]

    def row_weights(self) -> np.ndarray:
        return np.diff(self._csr.indptr)

    def col_weights(self) -> np.ndarray:
        return np.bincount(self._csr.indices, minlength=self.cols)

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray().astype(np.uint8)

    def packed(self) -> np.ndarray:
        """Rows bit-packed into little-endian ``uint64`` words (bit j of word w = column 64w + j)."""
        words = (self.cols + 63) // 64
        out = np.zeros((self.rows, words), dtype=np.uint64)
        s = self._csr
        r = np.repeat(np.arange(self.rows), np.diff(s.indptr))
        c = s.indices.astype(np.int64)
        np.bitwise_or.at(out, (r, c >> 6), np.left_shift(np.uint64(1), (c & 63).astype(np.uint64)))
        return out

    def multiply(self, v) -> np.ndarray:
        """``H @ v`` over GF(2); ``v`` may be a vector or a (cols, k) array."""
        v = np.asarray(v)
        return (self._csr.astype(np.int64) @ v.astype(np.int64)) % 2

    def __eq__(self, other):
        return (isinstance(other, BinaryMatrix) and self.shape == other.shape
                and (self._csr != other._csr).nnz == 0)

    def __repr__(self):
        return f"BinaryMatrix({self.rows}x{self.cols}, nnz={self.nnz})"


@dataclass(frozen=True, eq=False)
class MaskMatrix:
    bits: np.ndarray
    col_hist: dict[int, int]
    row_hist: dict[int, int]

    def __post_init__(self):
        bits = np.array(self.bits, dtype=np.uint8, ndmin=2)
        if not np.isin(bits, (0, 1)).all():
            raise ValueError("mask entries must be 0 or 1")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)
        if weight_histogram(bits.sum(axis=0)) != _clean_hist(self.col_hist):
            raise ValueError("column weights disagree with the declared histogram")
        if weight_histogram(bits.sum(axis=1)) != _clean_hist(self.row_hist):
            raise ValueError("row weights disagree with the declared histogram")

    @classmethod
    def from_bits(cls, bits) -> MaskMatrix:
        bits = np.asarray(bits, dtype=np.uint8)
        return cls(bits, weight_histogram(bits.sum(axis=0)), weight_histogram(bits.sum(axis=1)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.bits.shape


def weight_histogram(weights) -> dict[int, int]:
    return dict(sorted(Counter(int(w) for w in weights).items()))


def _clean_hist(h: Mapping[int, int]) -> dict[int, int]:
    return dict(sorted((int(k), int(v)) for k, v in h.items() if v))


# --- operations -----------------------------------------------------------


def disperse(w: BaseMatrix) -> CpmArray:
    fs = w.field
    prov = {"q": fs.q, "modulus": fs.modulus,
            "row_blocks": list(range(w.shape[0])), "col_blocks": list(range(w.shape[1]))}
    if w.pair is not None:
        prov.update(c=w.pair.c, n=w.pair.n)
    return CpmArray(w.logs.copy(), fs.order, prov)


def _check_indices(idx, bound: int, what: str) -> list[int]:
    idx = [int(i) for i in idx]
    if len(set(idx)) != len(idx):
        raise ValueError(f"duplicate {what} block indices")
    bad = [i for i in idx if not 0 <= i < bound]
    if bad:
        raise IndexError(f"{what} block index {bad[0]} outside 0..{bound - 1}")
    return idx


def subarray(h: CpmArray, row_blocks, col_blocks) -> CpmArray:
    rows = _check_indices(row_blocks, h.shape[0], "row")
    cols = _check_indices(col_blocks, h.shape[1], "column")
    prov = dict(h.provenance)
    src_rows = prov.get("row_blocks", list(range(h.shape[0])))
    src_cols = prov.get("col_blocks", list(range(h.shape[1])))
    prov["row_blocks"] = [src_rows[i] for i in rows]
    prov["col_blocks"] = [src_cols[j] for j in cols]
    return CpmArray(h.grid[np.ix_(rows, cols)], h.L, prov)


class SelectionError(ValueError):
    pass


def select_zm_free(h: CpmArray, gamma: int, rho: int) -> tuple[list[int], list[int]]:
    """Row blocks ``0..gamma-1`` and column blocks ``gamma..gamma+rho-1`` (mod width).

    Raises :class:`SelectionError` naming the first ZM the rule runs into.
    """
    nrows, ncols = h.shape
    if not (1 <= gamma <= nrows and 1 <= rho <= ncols):
        raise SelectionError(f"gamma={gamma}, rho={rho} do not fit a {nrows}x{ncols} array")
    rows = list(range(gamma))
    cols = [(gamma + t) % ncols for t in range(rho)]
    hit = np.argwhere(h.grid[np.ix_(rows, cols)] == ZM)
    if len(hit):
        r, c = hit[0]
        raise SelectionError(f"row block {rows[r]} meets a ZM in column block {cols[c]}")
    return rows, cols


def mask(h: CpmArray, z: MaskMatrix) -> CpmArray:
    if z.shape != h.shape:
        raise ValueError(f"mask shape {z.shape} does not match array shape {h.shape}")
    prov = dict(h.provenance, masked=True)
    return CpmArray(np.where(z.bits == 1, h.grid, ZM), h.L, prov)


def realizable(col_degrees, row_degrees) -> bool:
    """Gale-Ryser test for a simple bipartite graph with the given degrees."""
    cols = sorted((int(d) for d in col_degrees), reverse=True)
    rows = [int(d) for d in row_degrees]
    if sum(cols) != sum(rows) or any(d < 0 for d in cols + rows):
        return False
    if cols and cols[0] > len(rows):
        return False
    total = 0
    for k, d in enumerate(cols, start=1):
        total += d
        if total > sum(min(r, k) for r in rows):
            return False
    return True


def build_mask_random(gamma: int, rho: int, col_hist: Mapping[int, int],
                      row_hist: Mapping[int, int], seed: int,
                      max_rounds: int = 20) -> MaskMatrix:
    """Random ``gamma x rho`` mask with exactly the given weight histograms.

    Degrees are dealt to columns and rows in random order, stubs are paired
    at random and repeated edges are removed by degree-preserving swaps.
    Deterministic for a given seed.
    """
    col_hist, row_hist = _clean_hist(col_hist), _clean_hist(row_hist)
    if sum(col_hist.values()) != rho or sum(row_hist.values()) != gamma:
        raise ValueError("histogram counts do not match the mask dimensions")
    col_deg = [w for w, cnt in col_hist.items() for _ in range(cnt)]
    row_deg = [w for w, cnt in row_hist.items() for _ in range(cnt)]
    if sum(col_deg) != sum(row_deg):
        raise ValueError(f"column weights sum to {sum(col_deg)}, row weights to {sum(row_deg)}")
    if not realizable(col_deg, row_deg):
        raise ValueError("degree sequences have no simple bipartite realization")

    rng = np.random.default_rng(seed)
    for _ in range(max_rounds):
        cdeg = rng.permutation(col_deg)
        rdeg = rng.permutation(row_deg)
        col_stubs = np.repeat(np.arange(rho), cdeg)
        row_stubs = rng.permutation(np.repeat(np.arange(gamma), rdeg))
        edges = _repair(list(zip(row_stubs.tolist(), col_stubs.tolist())), rng)
        if edges is None:
            continue
        bits = np.zeros((gamma, rho), dtype=np.uint8)
        r, c = zip(*edges) if edges else ((), ())
        bits[list(r), list(c)] = 1
        return MaskMatrix(bits, col_hist, row_hist)
    raise RuntimeError(f"swap repair failed after {max_rounds} rounds")


def _repair(edges: list[tuple[int, int]], rng: np.random.Generator) -> list | None:
    count = Counter(edges)
    n_e = len(edges)
    budget = 200 * max(n_e, 1)
    while budget:
        dups = [i for i, e in enumerate(edges) if count[e] > 1]
        if not dups:
            return edges
        for i in dups:
            r1, c1 = edges[i]
            if count[(r1, c1)] < 2:
                continue
            while budget:
                budget -= 1
                k = int(rng.integers(n_e))
                r2, c2 = edges[k]
                if r2 == r1 or c2 == c1 or count[(r1, c2)] or count[(r2, c1)]:
                    continue
                for e in ((r1, c1), (r2, c2)):
                    count[e] -= 1
                edges[i], edges[k] = (r1, c2), (r2, c1)
                count[(r1, c2)] += 1
                count[(r2, c1)] += 1
                break
    return None


def expand(h: CpmArray) -> BinaryMatrix:
    """Explicit ``(rows*L) x (cols*L)`` binary matrix of a CPM array."""
    L = h.L
    bi, bj = np.nonzero(h.grid != ZM)
    e = h.grid[bi, bj]
    r = np.arange(L)
    rows = (bi[:, None] * L + r[None, :]).ravel()
    cols = (bj[:, None] * L + (r[None, :] + e[:, None]) % L).ravel()
    shape = (h.shape[0] * L, h.shape[1] * L)
    data = np.ones(len(rows), dtype=np.uint8)
    return BinaryMatrix(sp.csr_matrix((data, (rows, cols)), shape=shape))


# --- file formats ---------------------------------------------------------


_PROVENANCE_TAG = "# provenance "


def write_grid(h: CpmArray, fh: TextIO, provenance: bool = True) -> None:
    """Header ``L rows cols`` then one line of exponents per row block (``-1`` = ZM).

    With ``provenance`` the source description goes first as a single
    ``# provenance {json}`` comment line, which plain readers skip.
    """
    if provenance and h.provenance:
        fh.write(_PROVENANCE_TAG + json.dumps(h.provenance, sort_keys=True) + "\n")
    fh.write(f"{h.L} {h.shape[0]} {h.shape[1]}\n")
    for row in h.grid:
        fh.write(" ".join(str(int(v)) for v in row) + "\n")


def read_grid(fh: TextIO) -> CpmArray:
    raw = list(fh)
    prov = {}
    for ln in raw:
        if ln.startswith(_PROVENANCE_TAG):
            prov = json.loads(ln[len(_PROVENANCE_TAG):])
            if prov.get("modulus") is not None:
                prov["modulus"] = tuple(prov["modulus"])
    lines = [ln.split() for ln in raw if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or len(lines[0]) != 3:
        raise ValueError("malformed grid header, expected 'L rows cols'")
    L, rows, cols = (int(x) for x in lines[0])
    body = lines[1:]
    if len(body) != rows or any(len(ln) != cols for ln in body):
        raise ValueError(f"expected {rows} rows of {cols} exponents")
    grid = np.array([[int(x) for x in ln] for ln in body], dtype=np.int64).reshape(rows, cols)
    return CpmArray(grid, L, prov)


def write_alist(hb: BinaryMatrix, fh: TextIO) -> None:
    """MacKay alist: ``N M``, max weights, column then row weights, then
    1-based row lists per column and column lists per row, zero padded."""
    col_lists = hb.col_lists()
    row_lists = hb.row_lists()
    cw = [len(c) for c in col_lists]
    rw = [len(r) for r in row_lists]
    max_c, max_r = max(cw, default=0), max(rw, default=0)
    out = [f"{hb.cols} {hb.rows}", f"{max_c} {max_r}",
           " ".join(map(str, cw)), " ".join(map(str, rw))]
    for c in col_lists:
        out.append(" ".join(str(i + 1) for i in c) + " 0" * (max_c - len(c)))
    for r in row_lists:
        out.append(" ".join(str(j + 1) for j in r) + " 0" * (max_r - len(r)))
    fh.write("\n".join(line.strip() for line in out) + "\n")


def read_alist(fh: TextIO) -> BinaryMatrix:
    tokens = fh.read().split("\n")
    lines = [[int(x) for x in ln.split()] for ln in tokens]
    # keep empty lines only where a weight-zero column/row could sit
    if len(lines) < 4 or len(lines[0]) != 2:
        raise ValueError("malformed alist header")
    n, m = lines[0]
    cw, rw = lines[2], lines[3]
    if len(cw) != n or len(rw) != m:
        raise ValueError("alist weight lines do not match N and M")
    body = lines[4:4 + n + m]
    if len(body) < n + m:
        raise ValueError("alist truncated")
    col_lists = [[x - 1 for x in ln if x] for ln in body[:n]]
    row_lists = [[x - 1 for x in ln if x] for ln in body[n:]]
    hb = BinaryMatrix.from_rows(row_lists, n)
    if [len(c) for c in col_lists] != cw or hb.row_weights().tolist() != rw:
        raise ValueError("alist weights disagree with the index lists")
    if hb.col_lists() != [sorted(c) for c in col_lists]:
        raise ValueError("alist column and row sections disagree")
    return hb
