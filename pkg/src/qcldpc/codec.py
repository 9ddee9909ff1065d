"""Codes from parity-check matrices: parameters, encoding, decoding, AWGN sweeps."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence, TextIO

import numba
import numpy as np
import scipy.sparse as sp

from .analysis import gf2_eliminate, unpack_rows
from .dispersion import BinaryMatrix, CpmArray

log = logging.getLogger(__name__)

LLR_CLAMP = 30.0
_PHI_FLOOR = 1e-12


@dataclass(eq=False)
class LinearCode:
    """Binary linear code given by the null space of ``h``.

    Encoding is systematic on the non-pivot columns (``info_positions``) of
    the reduced echelon form of ``h``; ``parity`` maps message bits to the
    pivot columns.
    """

    h: BinaryMatrix
    rank: int
    pivots: np.ndarray = dc_field(repr=False)
    info_positions: np.ndarray = dc_field(repr=False)
    parity: np.ndarray = dc_field(repr=False)
    dmin_lower_bound: int = 0
    dmin_reason: str = ""
    source: CpmArray | None = dc_field(default=None, repr=False)
    _graph: object = dc_field(default=None, init=False, repr=False)

    @property
    def n(self) -> int:
        return self.h.cols

    @property
    def k(self) -> int:
        return self.n - self.rank

    @property
    def rate(self) -> float:
        return self.k / self.n if self.n else 0.0

    @property
    def col_weight_profile(self) -> dict[int, int]:
        w, c = np.unique(self.h.col_weights(), return_counts=True)
        return {int(a): int(b) for a, b in zip(w, c)}

    @property
    def row_weight_profile(self) -> dict[int, int]:
        w, c = np.unique(self.h.row_weights(), return_counts=True)
        return {int(a): int(b) for a, b in zip(w, c)}

    def basis(self) -> np.ndarray:
        """Null-space basis, one codeword per row (same basis as ``null_space_basis``)."""
        out = np.zeros((self.k, self.n), dtype=np.uint8)
        out[np.arange(self.k), self.info_positions] = 1
        out[:, self.pivots] = self.parity.T
        return out

    def basis_weights(self) -> np.ndarray:
        return 1 + self.parity.sum(axis=0, dtype=np.int64)

    def syndrome(self, words) -> np.ndarray:
        words = np.atleast_2d(np.asarray(words, dtype=np.int64))
        return (self.h.csr.astype(np.int64) @ words.T).T % 2


def _dmin_bound(h: BinaryMatrix, source: CpmArray | None) -> tuple[int, str]:
    min_col = int(h.col_weights().min()) if h.cols else 0
    if source is not None and not source.provenance.get("masked"):
        gamma = source.shape[0]
        if source.is_zm_free:
            if gamma % 2 == 0:
                return gamma + 2, "gamma_plus_2_even"
            return gamma + 1, "gamma_plus_1"
        if source.col_block_weights().min() >= gamma - 1:
            return gamma, "gamma_with_zms"
    return min_col + 1, "min_col_weight_plus_1"


def make_code(h: BinaryMatrix, source: CpmArray | None = None) -> LinearCode:
    red, piv = gf2_eliminate(h.packed(), h.cols)
    rank = len(piv)
    pivots = np.array(piv, dtype=np.int64)
    free = np.setdiff1d(np.arange(h.cols), pivots)
    if rank:
        parity = unpack_rows(red[:rank], h.cols)[:, free]
    else:
        parity = np.zeros((0, len(free)), dtype=np.uint8)
    bound, reason = _dmin_bound(h, source)
    return LinearCode(h, rank, pivots, free, np.ascontiguousarray(parity), bound, reason, source)


def encode(code: LinearCode, message) -> np.ndarray:
    """Codeword(s) carrying ``message`` on ``code.info_positions``.

    ``message`` may be one length-``k`` vector or a ``(batch, k)`` array.
    """
    msg = np.asarray(message, dtype=np.uint8)
    single = msg.ndim == 1
    msg = np.atleast_2d(msg)
    if msg.shape[1] != code.k:
        raise ValueError(f"message length {msg.shape[1]} != k = {code.k}")
    out = np.zeros((msg.shape[0], code.n), dtype=np.uint8)
    out[:, code.info_positions] = msg
    if code.rank:
        # float32 sums are exact below 2**24
        par = msg.astype(np.float32) @ code.parity.T.astype(np.float32)
        out[:, code.pivots] = (par.astype(np.int64) & 1).astype(np.uint8)
    return out[0] if single else out


# --- decoders -------------------------------------------------------------


class _Tanner:
    """Edge layout of a parity-check matrix (edges in row-major order)."""

    def __init__(self, h: BinaryMatrix):
        csr = h.csr
        self.m, self.n = h.shape
        self.var = csr.indices.astype(np.int64)
        self.chk = np.repeat(np.arange(self.m), np.diff(csr.indptr))
        e = len(self.var)
        ones = np.ones(e, dtype=np.float64)
        # (edges x checks) and (edges x vars) incidence for batched sums
        self.to_chk = sp.csr_matrix((ones, (np.arange(e), self.chk)), shape=(e, self.m))
        self.to_var = sp.csr_matrix((ones, (np.arange(e), self.var)), shape=(e, self.n))
        self.h_int = sp.csr_matrix(csr, dtype=np.float64)
        # compiled-kernel layout: check-ordered edges plus a variable-ordered index
        self.chk_ptr = csr.indptr.astype(np.int64)
        self.var_order = np.argsort(self.var, kind="stable").astype(np.int64)
        self.var_ptr = np.concatenate(([0], np.cumsum(np.bincount(self.var, minlength=self.n)))).astype(np.int64)

    @property
    def edges(self) -> int:
        return len(self.var)

    def check_sum(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x @ self.to_chk)

    def var_sum(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x @ self.to_var)

    def syndrome_ok(self, hard: np.ndarray) -> np.ndarray:
        s = np.asarray(hard.astype(np.float64) @ self.h_int.T)
        return ~np.any(s.astype(np.int64) & 1, axis=1)


def _tanner(code: LinearCode) -> _Tanner:
    if code._graph is None:
        code._graph = _Tanner(code.h)
    return code._graph


def _phi(x: np.ndarray) -> np.ndarray:
    # phi(x) = -log(tanh(x/2)) = log((1 + e^-x) / (1 - e^-x)), its own inverse on (0, inf)
    e = np.exp(-x)
    return np.log((1.0 + e) / (1.0 - e))


def _check_update_spa(t: _Tanner, v2c: np.ndarray) -> np.ndarray:
    mag = np.clip(np.abs(v2c), _PHI_FLOOR, LLR_CLAMP)
    ph = _phi(mag)
    total = t.check_sum(ph)
    neg = (v2c < 0).astype(np.float64)
    parity = t.check_sum(neg).astype(np.int64)
    ext = np.maximum(total[:, t.chk] - ph, _PHI_FLOOR)
    out = np.minimum(_phi(ext), LLR_CLAMP)
    flip = (parity[:, t.chk] - neg.astype(np.int64)) & 1
    return np.where(flip == 1, -out, out)


def _check_update_minsum(t: _Tanner, v2c: np.ndarray) -> np.ndarray:
    mag = np.minimum(np.abs(v2c), LLR_CLAMP)
    big = LLR_CLAMP + 1.0
    b, e = mag.shape
    # per-check minimum and second minimum via a padded (batch, checks, degree) view
    order = np.argsort(t.chk, kind="stable")
    deg = np.bincount(t.chk, minlength=t.m)
    width = int(deg.max()) if len(deg) else 0
    slot = np.arange(e) - np.repeat(np.concatenate(([0], np.cumsum(deg)[:-1])), deg)
    pad = np.full((b, t.m, width), big)
    pad[:, t.chk[order], slot] = mag[:, order]
    srt = np.sort(pad, axis=2)
    m1, m2 = srt[:, :, 0], srt[:, :, 1] if width > 1 else np.full((b, t.m), big)
    is_min = mag == m1[:, t.chk]
    out = np.where(is_min, m2[:, t.chk], m1[:, t.chk])
    neg = (v2c < 0).astype(np.float64)
    parity = t.check_sum(neg).astype(np.int64)
    flip = (parity[:, t.chk] - neg.astype(np.int64)) & 1
    out = np.minimum(out, LLR_CLAMP)
    return np.where(flip == 1, -out, out)


@numba.njit(cache=True)
def _phi_scalar(x):
    e = math.exp(-x)
    return math.log((1.0 + e) / (1.0 - e))


@numba.njit(cache=True)
def _bp_kernel(llr, chk_ptr, var, var_ptr, var_order, caps, minsum, clamp, floor):
    """Per-frame flooding BP; ``caps`` is an increasing array of iteration limits.

    Decoding runs to ``caps[-1]`` and the state reached at each smaller cap
    is recorded, which is exactly what a run stopped at that cap returns.
    """
    b, n = llr.shape
    m = len(chk_ptr) - 1
    e = len(var)
    nc = len(caps)
    hard = np.zeros((nc, b, n), dtype=np.uint8)
    iters = np.zeros((nc, b), dtype=np.int64)
    done = np.zeros((nc, b), dtype=np.bool_)
    v2c = np.empty(e)
    c2v = np.empty(e)
    ph = np.empty(e)
    post = np.empty(n)
    dec = np.empty(n, dtype=np.uint8)
    for f in range(b):
        ch = llr[f]
        for k in range(e):
            v2c[k] = min(max(ch[var[k]], -clamp), clamp)
        j = 0
        for it in range(1, caps[nc - 1] + 1):
            for c in range(m):
                lo, hi = chk_ptr[c], chk_ptr[c + 1]
                par = 0
                for k in range(lo, hi):
                    if v2c[k] < 0:
                        par ^= 1
                if minsum:
                    m1 = clamp + 1.0
                    m2 = clamp + 1.0
                    for k in range(lo, hi):
                        a = min(abs(v2c[k]), clamp)
                        ph[k] = a
                        if a < m1:
                            m2 = m1
                            m1 = a
                        elif a < m2:
                            m2 = a
                    for k in range(lo, hi):
                        out = min(m2 if ph[k] == m1 else m1, clamp)
                        neg = 1 if v2c[k] < 0 else 0
                        c2v[k] = -out if (par ^ neg) else out
                else:
                    total = 0.0
                    for k in range(lo, hi):
                        ph[k] = _phi_scalar(min(max(abs(v2c[k]), floor), clamp))
                        total += ph[k]
                    for k in range(lo, hi):
                        out = min(_phi_scalar(max(total - ph[k], floor)), clamp)
                        neg = 1 if v2c[k] < 0 else 0
                        c2v[k] = -out if (par ^ neg) else out
            for v in range(n):
                acc = ch[v]
                for t in range(var_ptr[v], var_ptr[v + 1]):
                    acc += c2v[var_order[t]]
                post[v] = acc
                dec[v] = 1 if acc < 0 else 0
            ok = True
            for c in range(m):
                par = 0
                for k in range(chk_ptr[c], chk_ptr[c + 1]):
                    par ^= dec[var[k]]
                if par:
                    ok = False
                    break
            if ok:
                while j < nc:
                    hard[j, f] = dec
                    iters[j, f] = it
                    done[j, f] = True
                    j += 1
                break
            if it == caps[j]:
                hard[j, f] = dec
                iters[j, f] = it
                j += 1
            for k in range(e):
                v2c[k] = min(max(post[var[k]] - c2v[k], -clamp), clamp)
    return hard, iters, done


def bp_decode_caps(code: LinearCode, llr, caps: Sequence[int], variant: str = "spa"):
    """Compiled BP on a batch, reporting the result for several iteration caps.

    Returns ``(hard, iterations, converged)`` with a leading axis over
    ``sorted(caps)``; slice ``i`` equals ``bp_decode`` with
    ``max_iters=sorted(caps)[i]``.
    """
    if variant not in ("spa", "minsum"):
        raise ValueError(f"unknown BP variant {variant!r}")
    caps_arr = np.array(sorted(set(int(c) for c in caps)), dtype=np.int64)
    if not len(caps_arr) or caps_arr[0] < 1:
        raise ValueError("iteration caps must be positive")
    t = _tanner(code)
    llr = np.ascontiguousarray(np.atleast_2d(np.asarray(llr, dtype=np.float64)))
    return _bp_kernel(llr, t.chk_ptr, t.var, t.var_ptr, t.var_order, caps_arr,
                      variant == "minsum", LLR_CLAMP, _PHI_FLOOR)


def bp_decode(code: LinearCode, llr, max_iters: int = 50, variant: str = "spa",
              engine: str = "compiled"):
    """Flooding belief propagation on a batch of LLR vectors.

    Returns ``(hard, iterations, converged)`` arrays with one entry per
    frame. A frame stops as soon as its hard decision has zero syndrome.
    ``engine="numpy"`` runs the vectorised reference implementation instead
    of the compiled per-frame kernel; both follow the same update rules.
    """
    if variant not in ("spa", "minsum"):
        raise ValueError(f"unknown BP variant {variant!r}")
    if engine not in ("compiled", "numpy"):
        raise ValueError(f"unknown engine {engine!r}")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    t = _tanner(code)
    llr = np.atleast_2d(np.asarray(llr, dtype=np.float64))
    if engine == "compiled":
        hard, iters, done = bp_decode_caps(code, llr, [max_iters], variant)
        return hard[0], iters[0], done[0]
    update = _check_update_spa if variant == "spa" else _check_update_minsum
    b = llr.shape[0]
    hard = (llr < 0).astype(np.uint8)
    iters = np.zeros(b, dtype=np.int64)
    done = np.zeros(b, dtype=bool)
    active = np.arange(b)
    ch = llr
    v2c = np.clip(ch[:, t.var], -LLR_CLAMP, LLR_CLAMP)
    for it in range(1, max_iters + 1):
        c2v = update(t, v2c)
        post = ch + t.var_sum(c2v)
        dec = (post < 0).astype(np.uint8)
        ok = t.syndrome_ok(dec)
        hard[active] = dec
        iters[active] = it
        if ok.any():
            done[active[ok]] = True
            keep = ~ok
            active, ch, post, c2v = active[keep], ch[keep], post[keep], c2v[keep]
            if not len(active):
                break
        v2c = np.clip(post[:, t.var] - c2v, -LLR_CLAMP, LLR_CLAMP)
    return hard, iters, done


def spa_decode(code: LinearCode, llr, max_iters: int = 50, variant: str = "spa"):
    """Sum-product decoding of one LLR vector (positive favours 0).

    Returns ``(hard decision, iterations used, converged)``.
    """
    hard, iters, done = bp_decode(code, np.asarray(llr)[None, :], max_iters, variant)
    return hard[0], int(iters[0]), bool(done[0])


def osmlgd_decode(code: LinearCode, hard):
    """One-step majority-logic decoding.

    A bit flips when more than half of its checks fail. Accepts a single
    word or a ``(batch, n)`` array; returns ``(estimate, flipped count)``.
    """
    words = np.asarray(hard, dtype=np.uint8)
    single = words.ndim == 1
    words = np.atleast_2d(words)
    h = _tanner(code).h_int
    s = np.asarray(words.astype(np.float64) @ h.T).astype(np.int64) & 1
    fails = np.asarray(s.astype(np.float64) @ h).astype(np.int64)
    colw = code.h.col_weights()
    flip = (2 * fails > colw[None, :]).astype(np.uint8)
    est = words ^ flip
    flipped = flip.sum(axis=1)
    if single:
        return est[0], int(flipped[0])
    return est, flipped


# --- AWGN Monte Carlo -----------------------------------------------------


@dataclass
class SimPoint:
    ebno_db: float
    frames: int = 0
    bit_errors: int = 0
    frame_errors: int = 0
    iterations: int = 0
    n: int = 0

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.frames * self.n) if self.frames else float("nan")

    @property
    def bler(self) -> float:
        return self.frame_errors / self.frames if self.frames else float("nan")

    @property
    def avg_iters(self) -> float:
        return self.iterations / self.frames if self.frames else float("nan")


@dataclass
class SimReport:
    points: list[SimPoint]
    seed: int
    max_iters: int
    decoder: str

    CSV_FIELDS = ("ebno_db", "frames", "bit_errors", "frame_errors", "ber", "bler", "avg_iters")

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(self.CSV_FIELDS)
        for p in self.points:
            w.writerow([repr(p.ebno_db), p.frames, p.bit_errors, p.frame_errors,
                        f"{p.ber:.6e}", f"{p.bler:.6e}", f"{p.avg_iters:.4f}"])

    @property
    def ber(self) -> list[float]:
        return [p.ber for p in self.points]

    @property
    def bler(self) -> list[float]:
        return [p.bler for p in self.points]


def read_sim_csv(fh: TextIO) -> list[dict]:
    rows = list(csv.DictReader(fh))
    if rows and tuple(rows[0]) != SimReport.CSV_FIELDS:
        raise ValueError("unexpected CSV header")
    return rows


def noise_sigma(ebno_db: float, rate: float) -> float:
    """Noise standard deviation for BPSK at ``Eb/N0 = ebno_db`` and code rate ``rate``."""
    if math.isinf(ebno_db) and ebno_db > 0:
        return 0.0
    return math.sqrt(1.0 / (2.0 * rate * 10.0 ** (ebno_db / 10.0)))


def _decode_block(code, decoder, llr, caps):
    if decoder in ("spa", "minsum"):
        return bp_decode_caps(code, llr, caps, decoder)
    if decoder == "osmlgd":
        est, _ = osmlgd_decode(code, (llr < 0).astype(np.uint8))
        ok = ~np.any(code.syndrome(est), axis=1)
        return est[None], np.ones((1, len(llr)), dtype=np.int64), ok[None]
    raise ValueError(f"unknown decoder {decoder!r}")


def default_block_size(code: LinearCode) -> int:
    return int(max(1, min(2000, 4_000_000 // max(_tanner(code).edges, 1))))


def awgn_simulate(code: LinearCode, decoder: str = "spa", ebno_db: Sequence[float] = (),
                  seed: int = 0, max_frames: int = 10**6, target_frame_errors: int | None = 100,
                  max_iters: int = 50, all_zero: bool = True, block_size: int | None = None,
                  progress=None) -> SimReport:
    """BPSK over AWGN, one point per ``Eb/N0`` value.

    Frames are drawn in blocks; block ``b`` uses a generator seeded by
    ``(seed, b)``, so identical arguments give identical reports and the
    same noise realisations are shared across SNR points and decoders. A
    point stops after the block in which ``target_frame_errors`` is reached
    or when ``max_frames`` frames have been sent; ``target_frame_errors=None``
    always sends ``max_frames``.
    """
    reports = awgn_simulate_caps(code, decoder, ebno_db, [max_iters], seed=seed,
                                 max_frames=max_frames, target_frame_errors=target_frame_errors,
                                 all_zero=all_zero, block_size=block_size,
                                 progress=None if progress is None else (lambda cap, pt: progress(pt)))
    return reports[max_iters]


def awgn_simulate_caps(code: LinearCode, decoder: str, ebno_db: Sequence[float],
                       iteration_caps: Sequence[int], seed: int = 0, max_frames: int = 10**6,
                       target_frame_errors: int | None = 100, all_zero: bool = True,
                       block_size: int | None = None, progress=None) -> dict[int, SimReport]:
    """Like :func:`awgn_simulate` for several iteration caps over the same frames.

    Each frame is decoded once up to the largest cap, recording the outcome
    at every smaller cap. A point stops once every cap has reached
    ``target_frame_errors``. Returns one report per cap; ``progress`` is
    called as ``progress(cap, point)`` after each point.
    """
    ebno = [float(x) for x in ebno_db]
    if not ebno or any(math.isnan(x) for x in ebno):
        raise ValueError("need a non-empty list of Eb/N0 values")
    if code.k == 0 or code.rate <= 0:
        raise ValueError("zero-rate code cannot be simulated")
    if decoder not in ("spa", "minsum", "osmlgd"):
        raise ValueError(f"unknown decoder {decoder!r}")
    caps = sorted(set(int(c) for c in iteration_caps))
    if not caps or caps[0] < 1:
        raise ValueError("iteration caps must be positive")
    if decoder == "osmlgd" and len(caps) > 1:
        raise ValueError("osmlgd is a single-pass decoder; give one cap")
    bs = block_size or default_block_size(code)
    n = code.n
    points: dict[int, list[SimPoint]] = {c: [] for c in caps}
    for snr in ebno:
        sigma = noise_sigma(snr, code.rate)
        pts = [SimPoint(snr, n=n) for _ in caps]
        block = 0
        while pts[0].frames < max_frames and (
                target_frame_errors is None
                or min(p.frame_errors for p in pts) < target_frame_errors):
            cnt = min(bs, max_frames - pts[0].frames)
            rng = np.random.default_rng([seed, block])
            noise = rng.standard_normal((bs, n))[:cnt]
            if all_zero:
                cw = np.zeros((cnt, n), dtype=np.uint8)
            else:
                cw = encode(code, rng.integers(0, 2, size=(bs, code.k), dtype=np.uint8)[:cnt])
            x = 1.0 - 2.0 * cw
            if sigma == 0.0:
                llr = LLR_CLAMP * x
            else:
                llr = 2.0 * (x + sigma * noise) / sigma ** 2
            est, iters, _ = _decode_block(code, decoder, llr, caps)
            for i, pt in enumerate(pts):
                errs = (est[i] != cw).sum(axis=1)
                pt.frames += cnt
                pt.bit_errors += int(errs.sum())
                pt.frame_errors += int((errs > 0).sum())
                pt.iterations += int(iters[i].sum())
            block += 1
        for cap, pt in zip(caps, pts):
            log.info("Eb/N0 %.2f dB, %d iterations: %d frames, BER %.3e, BLER %.3e",
                     snr, cap, pt.frames, pt.ber, pt.bler)
            if progress is not None:
                progress(cap, pt)
            points[cap].append(pt)
    return {cap: SimReport(points[cap], seed, cap, decoder) for cap in caps}
