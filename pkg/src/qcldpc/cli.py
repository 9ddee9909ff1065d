"""Command-line front end: build, check, rank, export and simulate QC-LDPC codes.

Every subcommand accepts ``--config FILE``: a text file of ``key = value``
lines, where ``key`` is a long option name without the leading dashes
(``-`` and ``_`` are interchangeable), blank lines and ``#`` comments are
ignored, and boolean options take ``true``/``false``. Options given on the
command line override the file.

Exit codes: 0 success, 1 usage or configuration error, 2 constraint
violated (RC failure, rank disagreement under ``--cross-check``, or
decoding failure when ``--expect-clean`` is set), 3 I/O error.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .analysis import (array_girth, closed_form_applies, cpm_four_cycle_check, girth,
                       rank_closed_form, rank_gf2, rank_via_hadamard, rc_check)
from .base_matrix import BaseMatrix, build_full, write_base_matrix
from .codec import awgn_simulate_caps, make_code
from .dispersion import (BinaryMatrix, CpmArray, MaskMatrix, SelectionError, build_mask_random,
                         disperse, expand, mask, read_alist, read_grid, select_zm_free, subarray,
                         weight_histogram, write_alist, write_grid)
from .field import build_field

EXIT_OK, EXIT_USAGE, EXIT_CONSTRAINT, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- parsing helpers ------------------------------------------------------


def int_list(text: str) -> list[int]:
    """``"0,1,5"`` or ranges ``"0-3,7"`` (inclusive)."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def float_grid(text: str) -> list[float]:
    """``"1,2.5,3"`` or ``"start:stop:step"`` (stop included)."""
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise argparse.ArgumentTypeError("grid step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(max(count, 0))]
    return [float(x) for x in text.split(",") if x.strip()]


def histogram(text: str) -> dict[int, int]:
    """``"2:57,3:44"`` maps weight to count."""
    out: dict[int, int] = {}
    for part in text.split(","):
        if part.strip():
            w, cnt = part.split(":")
            out[int(w)] = out.get(int(w), 0) + int(cnt)
    return out


def read_config(path: str) -> dict[str, str]:
    cfg: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (x.strip() for x in line.split("=", 1))
            cfg[key.replace("_", "-")] = value
    return cfg


def _config_argv(parser: argparse.ArgumentParser, cfg: dict[str, str]) -> list[str]:
    """Turn config entries into option tokens placed before the real arguments."""
    actions = {opt[2:]: a for a in parser._actions for opt in a.option_strings if opt.startswith("--")}
    argv: list[str] = []
    for key, value in cfg.items():
        act = actions.get(key)
        if act is None or key == "config":
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(act, argparse.BooleanOptionalAction):
            flag = value.lower()
            if flag not in ("true", "false", "yes", "no", "1", "0"):
                raise UsageError(f"config key {key!r} needs true or false")
            argv.append(f"--{key}" if flag in ("true", "yes", "1") else f"--no-{key}")
        else:
            argv.extend([f"--{key}", value])
    return argv


# --- file helpers ---------------------------------------------------------


def _load_grid(path: str) -> CpmArray:
    with open(path) as fh:
        try:
            return read_grid(fh)
        except ValueError as exc:
            raise InputError(f"{path}: {exc}") from exc


def _sniff(path: str) -> str:
    with open(path) as fh:
        for line in fh:
            if line.strip() and not line.lstrip().startswith("#"):
                return "grid" if len(line.split()) == 3 else "alist"
    raise InputError(f"{path} is empty")


def _load_matrix(path: str) -> tuple[BinaryMatrix, CpmArray | None]:
    if _sniff(path) == "grid":
        h = _load_grid(path)
        return expand(h), h
    with open(path) as fh:
        try:
            return read_alist(fh), None
        except ValueError as exc:
            raise InputError(f"{path}: {exc}") from exc


def _write_text(path: str | None, writer) -> None:
    if path is None or path == "-":
        writer(sys.stdout)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        writer(fh)


def _hist_text(hist: dict[int, int]) -> str:
    return ",".join(f"{w}:{c}" for w, c in sorted(hist.items()))


def _emit(pairs: list[tuple[str, object]], path: str | None = None) -> None:
    text = "".join(f"{k}={v}\n" for k, v in pairs)
    sys.stdout.write(text)
    if path:
        _write_text(path, lambda fh: fh.write(text))


# --- commands -------------------------------------------------------------


def _field(args):
    if args.q is None:
        raise UsageError("--q is required")
    try:
        return build_field(args.q, args.modulus)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_build(args) -> int:
    fs = _field(args)
    if args.c is None or args.n is None:
        raise UsageError("--c and --n are required")
    try:
        w = build_full(fs, args.c, args.n, allow_noncoprime=args.allow_noncoprime)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    h = disperse(w)

    if args.row_blocks is not None or args.col_blocks is not None:
        rows = args.row_blocks if args.row_blocks is not None else list(range(h.shape[0]))
        cols = args.col_blocks if args.col_blocks is not None else list(range(h.shape[1]))
    elif args.gamma is not None:
        rho = args.rho if args.rho is not None else h.shape[1]
        if args.select == "zm-free":
            try:
                rows, cols = select_zm_free(h, args.gamma, rho)
            except SelectionError as exc:
                raise UsageError(f"infeasible ZM-free selection: {exc}") from exc
        else:
            rows, cols = list(range(args.gamma)), list(range(rho))
    else:
        rows, cols = list(range(h.shape[0])), list(range(h.shape[1]))
    try:
        h = subarray(h, rows, cols)
    except (ValueError, IndexError) as exc:
        raise UsageError(str(exc)) from exc

    if args.mask_file:
        try:
            bits = np.loadtxt(args.mask_file, dtype=np.int64, ndmin=2)
        except ValueError as exc:
            raise InputError(f"{args.mask_file}: {exc}") from exc
        try:
            h = mask(h, MaskMatrix.from_bits(bits))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    elif args.mask_col_hist or args.mask_row_hist:
        if not (args.mask_col_hist and args.mask_row_hist):
            raise UsageError("random masking needs both --mask-col-hist and --mask-row-hist")
        try:
            z = build_mask_random(h.shape[0], h.shape[1], args.mask_col_hist,
                                  args.mask_row_hist, args.mask_seed)
            h = mask(h, z)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        if args.mask_out:
            _write_text(args.mask_out, lambda fh: np.savetxt(fh, z.bits, fmt="%d"))

    if args.base_out:
        _write_text(args.base_out, lambda fh: write_base_matrix(w, fh))
    if args.out:
        _write_text(args.out, lambda fh: write_grid(h, fh))

    hb_rows, hb_cols = h.shape[0] * h.L, h.shape[1] * h.L
    colw = weight_histogram(h.col_block_weights())
    roww = weight_histogram(h.row_block_weights())
    _emit([("q", fs.q), ("c", args.c), ("n", args.n),
           ("grid", f"{h.shape[0]}x{h.shape[1]}"), ("L", h.L),
           ("matrix", f"{hb_rows}x{hb_cols}"),
           ("col_weights", _hist_text(colw)), ("row_weights", _hist_text(roww)),
           ("zm_count", h.zm_count)])
    if len(colw) == 1 and len(roww) == 1:
        print(f"summary: {hb_rows}x{hb_cols}, weights {next(iter(colw))}/{next(iter(roww))}")
    return EXIT_OK


def cmd_check(args) -> int:
    if not args.input:
        raise UsageError("--input is required")
    hb, h = _load_matrix(args.input)
    pairs: list[tuple[str, object]] = [
        ("rows", hb.rows), ("cols", hb.cols),
        ("col_weights", _hist_text(weight_histogram(hb.col_weights()))),
        ("row_weights", _hist_text(weight_histogram(hb.row_weights()))),
    ]
    if h is not None:
        pairs += [("grid", f"{h.shape[0]}x{h.shape[1]}"), ("L", h.L), ("zm_count", h.zm_count)]
    viol = rc_check(hb)
    pairs.append(("rc", "holds" if viol is None else "violated"))
    if viol is not None:
        pairs.append(("rc_witness", f"rows {viol.row1},{viol.row2} cols {viol.pos1},{viol.pos2}"))
    if args.girth == "bfs":
        rep = array_girth(h) if h is not None else girth(hb)
        pairs.append(("girth", "UNBOUNDED" if rep.unbounded else rep.girth))
        if rep.cycle:
            pairs.append(("girth_cycle", " ".join(f"{k}{i}" for k, i in rep.cycle)))
    elif args.girth == "screen":
        if h is None:
            raise UsageError("the 4-cycle screen needs a grid file")
        fc = cpm_four_cycle_check(h)
        pairs.append(("four_cycles", "none" if fc is None else
                      f"row blocks {fc.rows[0]},{fc.rows[1]} col blocks {fc.cols[0]},{fc.cols[1]}"))
    _emit(pairs, args.report)
    return EXIT_OK if viol is None else EXIT_CONSTRAINT


def _base_from_grid(h: CpmArray, q: int | None) -> BaseMatrix:
    q = q or h.provenance.get("q")
    if q is None:
        raise UsageError("hadamard_sum needs the field size (--q or grid provenance)")
    fs = build_field(q, h.provenance.get("modulus"))
    if fs.order != h.L:
        raise UsageError(f"grid block size {h.L} does not match GF({q})")
    return BaseMatrix(fs, h.grid)


def _rank(method: str, hb: BinaryMatrix, h: CpmArray | None, q: int | None):
    if method == "elimination":
        return rank_gf2(hb)
    if h is None:
        raise UsageError(f"method {method} needs a grid file")
    if method == "closed_form":
        if not closed_form_applies(h):
            raise UsageError("closed_form applies only to the first gamma row blocks "
                             "of the c=1 array over GF(2^m)")
        return rank_closed_form(h)
    base = _base_from_grid(h, q)
    if not base.field.is_binary:
        raise UsageError("hadamard_sum needs a field of characteristic 2")
    return rank_via_hadamard(base)


def cmd_rank(args) -> int:
    if not args.input:
        raise UsageError("--input is required")
    hb, h = _load_matrix(args.input)
    rep = _rank(args.method, hb, h, args.q)
    pairs: list[tuple[str, object]] = [
        ("method", rep.method), ("rank", rep.rank), ("rows", hb.rows),
        ("redundant_rows", hb.rows - rep.rank), ("n", hb.cols), ("k", hb.cols - rep.rank)]
    if rep.per_l_ranks:
        pairs += [(f"rank_l{l}", r) for l, r in rep.per_l_ranks]
    status = EXIT_OK
    if args.cross_check:
        if args.method != "elimination":
            other = "elimination"
        elif h is not None and closed_form_applies(h):
            other = "closed_form"
        elif h is not None and (args.q or h.provenance.get("q") or 3) % 2 == 0:
            other = "hadamard_sum"
        else:
            raise UsageError("no second rank method applies to this input")
        rep2 = _rank(other, hb, h, args.q)
        agree = rep2.rank == rep.rank
        pairs += [("cross_method", rep2.method), ("cross_rank", rep2.rank),
                  ("cross_check", "agree" if agree else "DISAGREE")]
        status = EXIT_OK if agree else EXIT_CONSTRAINT
    _emit(pairs, args.report)
    return status


def cmd_export(args) -> int:
    if not args.input:
        raise UsageError("--input is required")
    h = _load_grid(args.input)
    hb = expand(h)
    _write_text(args.out, lambda fh: write_alist(hb, fh))
    if args.out and args.out != "-":
        print(f"wrote {hb.rows}x{hb.cols} alist to {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    if not args.input:
        raise UsageError("--input is required")
    hb, h = _load_matrix(args.input)
    code = make_code(hb, h)
    if code.k == 0:
        raise UsageError("zero-rate code cannot be simulated")
    snrs = [math.inf] if args.clean_channel else (args.snr or [])
    if not snrs:
        raise UsageError("empty SNR grid")
    caps = args.max_iters
    target = None if args.target_errors <= 0 else args.target_errors

    def progress(cap, pt):
        print(f"[{args.decoder}-{cap}] Eb/N0={pt.ebno_db:g} frames={pt.frames} "
              f"frame_errors={pt.frame_errors} ber={pt.ber:.3e} bler={pt.bler:.3e}",
              file=sys.stderr, flush=True)

    try:
        reports = awgn_simulate_caps(code, args.decoder, snrs, caps, seed=args.seed,
                                     max_frames=args.max_frames, target_frame_errors=target,
                                     all_zero=not args.random_messages, progress=progress)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    for cap, rep in reports.items():
        out = args.out
        if out and out != "-" and len(reports) > 1:
            p = Path(out)
            out = str(p.with_name(f"{p.stem}.it{cap}{p.suffix}"))
        _write_text(out, rep.write_csv)
    if args.expect_clean and any(p.frame_errors for r in reports.values() for p in r.points):
        return EXIT_CONSTRAINT
    return EXIT_OK


# --- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qcldpc", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--config", help="key = value file; command-line options override it")
        p.set_defaults(func=func)
        return p

    b = add("build", cmd_build, "construct, select and mask a CPM array and write its exponent grid")
    b.add_argument("--q", type=int, help="field size: a prime or 2**m")
    b.add_argument("--modulus", type=lambda x: int(x, 0), help="primitive polynomial bit mask for GF(2**m), e.g. 0x13")
    b.add_argument("--c", type=int, help="order of the first cyclic subgroup's complement")
    b.add_argument("--n", type=int, help="order of the second subgroup; c*n must equal q-1")
    b.add_argument("--allow-noncoprime", action=argparse.BooleanOptionalAction, default=False,
                   help="accept gcd(c, n) > 1")
    b.add_argument("--gamma", type=int, help="number of row blocks to keep")
    b.add_argument("--rho", type=int, help="number of column blocks to keep (default all)")
    b.add_argument("--select", choices=("zm-free", "first"), default="zm-free",
                   help="zm-free: rows 0..gamma-1, columns gamma..gamma+rho-1 mod width; "
                        "first: rows 0..gamma-1, columns 0..rho-1")
    b.add_argument("--row-blocks", type=int_list, help="explicit row block list, e.g. 0-3,7")
    b.add_argument("--col-blocks", type=int_list, help="explicit column block list")
    b.add_argument("--mask-file", help="0/1 matrix with the shape of the selected array")
    b.add_argument("--mask-col-hist", type=histogram, help="random mask column weight histogram, e.g. 2:57,3:44")
    b.add_argument("--mask-row-hist", type=histogram, help="random mask row weight histogram")
    b.add_argument("--mask-seed", type=int, default=0)
    b.add_argument("--mask-out", help="write the random mask here")
    b.add_argument("--base-out", help="write the base matrix (discrete logs) here")
    b.add_argument("--out", help="exponent grid output path ('-' for stdout)")

    c = add("check", cmd_check, "RC constraint, girth and weight profile of a grid or alist file")
    c.add_argument("--input", "-i")
    c.add_argument("--girth", choices=("bfs", "screen", "none"), default="bfs",
                   help="bfs: exact girth; screen: 4-cycle test on the grid only")
    c.add_argument("--report", help="also write the key=value report here")

    r = add("rank", cmd_rank, "GF(2) rank of a grid or alist file")
    r.add_argument("--input", "-i")
    r.add_argument("--method", choices=("elimination", "hadamard_sum", "closed_form"),
                   default="elimination")
    r.add_argument("--q", type=int, help="field size when the grid has no provenance")
    r.add_argument("--cross-check", action=argparse.BooleanOptionalAction, default=False,
                   help="also run a second method and fail (exit 2) on disagreement")
    r.add_argument("--report", help="also write the key=value report here")

    e = add("export", cmd_export, "expand a grid and write it in alist format")
    e.add_argument("--input", "-i")
    e.add_argument("--out", help="alist output path ('-' for stdout)")

    s = add("simulate", cmd_simulate, "BPSK/AWGN Monte-Carlo run written as CSV")
    s.add_argument("--input", "-i")
    s.add_argument("--decoder", choices=("spa", "minsum", "osmlgd"), default="spa")
    s.add_argument("--snr", type=float_grid, help="Eb/N0 grid in dB: '1,2,3' or 'start:stop:step'")
    s.add_argument("--clean-channel", action=argparse.BooleanOptionalAction, default=False,
                   help="noiseless channel with clamped LLRs instead of an SNR grid")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-iters", type=int_list, default="50",
                   help="iteration cap, or a list such as 5,10,50 (one CSV per cap)")
    s.add_argument("--max-frames", type=int, default=10**6)
    s.add_argument("--target-errors", type=int, default=100,
                   help="frame errors per point before stopping; 0 sends --max-frames")
    s.add_argument("--random-messages", action=argparse.BooleanOptionalAction, default=False,
                   help="encode random messages instead of the all-zero codeword")
    s.add_argument("--expect-clean", action=argparse.BooleanOptionalAction, default=False,
                   help="exit 2 if any frame error occurs")
    s.add_argument("--out", help="CSV path ('-' for stdout); caps add .it<cap> before the suffix")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        if args.config:
            sub = parser._subparsers._group_actions[0].choices[args.command]
            pre = _config_argv(sub, read_config(args.config))
            args = parser.parse_args([args.command, *pre, *argv[1:]])
        return args.func(args)
    except SystemExit as exc:  # argparse reports usage errors and --help this way
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"qcldpc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, InputError) as exc:
        print(f"qcldpc: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
