"""Structural and rank analysis of CPM arrays and their binary expansions."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from math import comb

import numpy as np

from .base_matrix import BaseMatrix
from .dispersion import ZM, BinaryMatrix, CpmArray, expand

# --- GF(2) elimination ----------------------------------------------------


def _bit(col: int) -> tuple[int, np.uint64]:
    return col >> 6, np.uint64(1) << np.uint64(col & 63)


def gf2_eliminate(packed: np.ndarray, ncols: int, reduced: bool = True):
    """Gaussian elimination on bit-packed rows.

    Returns ``(rows, pivots)`` where ``rows[:len(pivots)]`` is the echelon
    form (fully reduced when ``reduced``) and ``pivots`` lists pivot columns.
    The input is not modified.
    """
    a = np.array(packed, dtype=np.uint64, copy=True)
    nrows = a.shape[0]
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        if r == nrows:
            break
        w, b = _bit(col)
        cand = np.flatnonzero(a[r:, w] & b)
        if not len(cand):
            continue
        p = r + int(cand[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
        if reduced:
            hits = np.flatnonzero(a[:, w] & b)
            hits = hits[hits != r]
            if len(hits):
                a[hits] ^= a[r]
        else:
            # rows of a forward echelon form are zero left of their pivot
            hits = r + 1 + np.flatnonzero(a[r + 1:, w] & b)
            if len(hits):
                a[hits, w:] ^= a[r, w:]
        pivots.append(col)
        r += 1
    return a, pivots


def unpack_rows(packed: np.ndarray, ncols: int) -> np.ndarray:
    bits = np.unpackbits(np.ascontiguousarray(packed).view(np.uint8), axis=1, bitorder="little")
    return bits[:, :ncols]


@dataclass(frozen=True)
class RankReport:
    rank: int
    method: str
    per_l_ranks: list[tuple[int, int]] | None = None
    rows: int | None = None

    def __post_init__(self):
        if self.per_l_ranks is not None and sum(r for _, r in self.per_l_ranks) != self.rank:
            raise ValueError("per-l ranks do not sum to the rank")

    @property
    def redundant_rows(self) -> int | None:
        return None if self.rows is None else self.rows - self.rank


def rank_gf2(hb: BinaryMatrix) -> RankReport:
    _, piv = gf2_eliminate(hb.packed(), hb.cols, reduced=False)
    return RankReport(len(piv), "elimination_gf2", rows=hb.rows)


def null_space_basis(hb: BinaryMatrix) -> np.ndarray:
    """Basis of ``{v : H v = 0}`` as rows of a ``(cols - rank) x cols`` uint8 array.

    Basis vector ``t`` is 1 on the ``t``-th non-pivot column of the reduced
    echelon form and zero on every other non-pivot column.
    """
    red, piv = gf2_eliminate(hb.packed(), hb.cols)
    rank = len(piv)
    free = np.setdiff1d(np.arange(hb.cols), piv)
    basis = np.zeros((len(free), hb.cols), dtype=np.uint8)
    basis[np.arange(len(free)), free] = 1
    if rank:
        r = unpack_rows(red[:rank], hb.cols)
        basis[:, piv] = r[:, free].T
    return basis


# --- RC constraint, girth, 4-cycles ---------------------------------------


@dataclass(frozen=True)
class RcViolation:
    row1: int
    row2: int
    pos1: int
    pos2: int


def rc_check(hb: BinaryMatrix, chunk: int = 512) -> RcViolation | None:
    """First pair of rows sharing two or more 1-positions, or ``None``."""
    h = hb.csr.astype(np.int32)
    ht = h.T.tocsc()
    for start in range(0, hb.rows, chunk):
        stop = min(start + chunk, hb.rows)
        overlap = (h[start:stop] @ ht).toarray()
        idx = np.arange(start, stop)
        mask = (overlap >= 2) & (np.arange(hb.rows)[None, :] > idx[:, None])
        hit = np.argwhere(mask)
        if len(hit):
            r1, r2 = int(hit[0][0]) + start, int(hit[0][1])
            shared = np.intersect1d(hb.row(r1), hb.row(r2))
            return RcViolation(r1, r2, int(shared[0]), int(shared[1]))
    return None


@dataclass(frozen=True)
class GirthReport:
    """``girth`` is ``None`` for a forest (no cycle)."""

    girth: int | None
    cycle: list[tuple[str, int]] | None = None

    @property
    def unbounded(self) -> bool:
        return self.girth is None


def _adjacency(hb: BinaryMatrix) -> list[list[int]]:
    """Tanner graph: variable j is node j, check i is node cols + i."""
    n = hb.cols
    adj: list[list[int]] = [[] for _ in range(n + hb.rows)]
    for i, row in enumerate(hb.row_lists()):
        for j in row:
            adj[j].append(n + i)
            adj[n + i].append(j)
    return adj


def girth(hb: BinaryMatrix, roots=None) -> GirthReport:
    """Exact Tanner-graph girth by breadth-first search from each variable node.

    ``roots`` restricts the search to chosen variable nodes; this is exact
    only when every cycle passes through a node equivalent to a root under a
    graph automorphism (see :func:`array_girth`).
    """
    adj = _adjacency(hb)
    n = hb.cols
    best = None
    best_pair = None
    for root in (range(n) if roots is None else roots):
        dist = {root: 0}
        parent = {root: -1}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            d = dist[u]
            if best is not None and 2 * d + 1 >= best:
                break
            for v in adj[u]:
                if v not in dist:
                    dist[v] = d + 1
                    parent[v] = u
                    queue.append(v)
                elif v != parent[u]:
                    length = d + dist[v] + 1
                    if best is None or length < best:
                        best = length
                        best_pair = (_path(parent, u), _path(parent, v))
    if best is None:
        return GirthReport(None)
    pu, pv = best_pair
    nodes = pu + pv[::-1][:-1]
    cycle = [("v", x) if x < n else ("c", x - n) for x in nodes]
    return GirthReport(best, cycle)


def _path(parent: dict, x: int) -> list[int]:
    out = []
    while x != -1:
        out.append(x)
        x = parent[x]
    return out[::-1]


def array_girth(h: CpmArray) -> GirthReport:
    """Girth of the expanded array using one BFS root per column block.

    Shifting every row and column index by one inside its block maps each
    CPM to itself, so every cycle is equivalent to one through the first
    variable of some column block.
    """
    hb = expand(h)
    return girth(hb, roots=[j * h.L for j in range(h.shape[1])])


@dataclass(frozen=True)
class FourCycle:
    rows: tuple[int, int]
    cols: tuple[int, int]


def cpm_four_cycle_check(h: CpmArray) -> FourCycle | None:
    """First block quadruple closing a 4-cycle, or ``None``.

    A 4-cycle exists iff ``e(i1,j1) - e(i1,j2) + e(i2,j2) - e(i2,j1) = 0 mod L``
    for two row blocks and two column blocks, all four nonzero.
    """
    g = h.grid
    rows, _ = g.shape
    for i1 in range(rows - 1):
        for i2 in range(i1 + 1, rows):
            both = np.flatnonzero((g[i1] != ZM) & (g[i2] != ZM))
            if len(both) < 2:
                continue
            d = (g[i1, both] - g[i2, both]) % h.L
            order = np.argsort(d, kind="stable")
            ds = d[order]
            dup = np.flatnonzero(ds[1:] == ds[:-1])
            if len(dup):
                cand = []
                for k in dup:
                    a, b = sorted((int(both[order[k]]), int(both[order[k + 1]])))
                    cand.append((a, b))
                return FourCycle((i1, i2), min(cand))
    return None


# --- ranks over GF(q) -----------------------------------------------------


def hadamard_power(g: BaseMatrix, l: int) -> BaseMatrix:
    if l < 1:
        raise ValueError("Hadamard power needs l >= 1")
    return BaseMatrix(g.field, g.field.pow_logs(g.logs, l))


def rank_gfq(g: BaseMatrix) -> RankReport:
    fs = g.field
    a = g.ints().astype(np.int64)
    nrows, ncols = a.shape
    r = 0
    for col in range(ncols):
        if r == nrows:
            break
        cand = np.flatnonzero(a[r:, col])
        if not len(cand):
            continue
        p = r + int(cand[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
        a[r] = fs.mul_ints(a[r], fs.inv_ints(a[r, col]))
        others = np.flatnonzero(a[:, col])
        others = others[others != r]
        if len(others):
            a[others] = fs.sub_ints(a[others], fs.mul_ints(a[others, col][:, None], a[r][None, :]))
        r += 1
    return RankReport(r, "elimination_gfq", rows=nrows)


def rank_via_hadamard(g: BaseMatrix) -> RankReport:
    """Rank of the binary dispersion of ``g`` as the sum of its Hadamard-power ranks."""
    fs = g.field
    if not fs.is_binary:
        raise ValueError("the Hadamard-power rank decomposition needs GF(2^m)")
    per_l = [(l, rank_gfq(hadamard_power(g, l)).rank) for l in range(1, fs.q)]
    return RankReport(sum(r for _, r in per_l), "hadamard_sum", per_l,
                      rows=g.shape[0] * fs.order)


# --- closed forms ---------------------------------------------------------


def odd_binomial_count(l: int) -> int:
    """Number of odd entries in row ``l`` of Pascal's triangle, counted directly.

    Row parities are built by the recurrence ``C(k+1, t) = C(k, t) + C(k, t-1)``
    mod 2, one row per bit mask.
    """
    if l < 0:
        raise ValueError("row index must be non-negative")
    row = 1
    for _ in range(l):
        row ^= row << 1
    return bin(row).count("1")


def radix2_weight(l: int) -> int:
    return bin(l).count("1")


def lambda_l(l: int, m: int) -> int:
    if not 0 <= l < (1 << m):
        raise ValueError(f"l={l} outside [0, 2^{m})")
    return 1 << radix2_weight(l)


def _check_m_gamma(m: int, gamma: int) -> int:
    if m < 1:
        raise ValueError("m must be positive")
    top = (1 << m) - 1
    if not 1 <= gamma <= top:
        raise ValueError(f"gamma={gamma} outside [1, {top}]")
    return top


def theorem4_rank(m: int, gamma: int, l: int) -> int:
    """Rank of the ``l``-th Hadamard power of the first ``gamma`` rows of ``[a^i + a^j]``."""
    top = _check_m_gamma(m, gamma)
    if not 1 <= l <= top:
        raise ValueError(f"l={l} outside [1, {top}]")
    if l < top:
        return min(gamma, lambda_l(l, m))
    return min(gamma, top - 1)


def rank_formula(m: int, gamma: int) -> int:
    """Closed-form GF(2) rank of the first ``gamma`` row blocks of the
    dispersed ``[a^i + a^j]`` array over GF(2^m)."""
    top = _check_m_gamma(m, gamma)
    if gamma == top:
        return 3 ** m - 3
    t_gamma = gamma.bit_length() - 1
    return gamma * top - sum(comb(m, t) * (gamma - (1 << t)) for t in range(1, t_gamma + 1))


def closed_form_applies(h: CpmArray) -> bool:
    """True for the first ``gamma`` row blocks (all columns) of the ``c = 1`` array over GF(2^m)."""
    prov = h.provenance
    q = prov.get("q")
    if q is None or q & (q - 1) or q < 4 or prov.get("c") != 1 or prov.get("masked"):
        return False
    rows, cols = prov.get("row_blocks"), prov.get("col_blocks")
    return rows == list(range(len(rows))) and cols == list(range(q - 1))


def rank_closed_form(h: CpmArray) -> RankReport:
    if not closed_form_applies(h):
        raise ValueError("closed form needs the first gamma row blocks of the c=1 array over GF(2^m)")
    m = h.provenance["q"].bit_length() - 1
    return RankReport(rank_formula(m, h.shape[0]), "closed_form", rows=h.shape[0] * h.L)
