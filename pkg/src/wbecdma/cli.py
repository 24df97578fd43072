"""Command-line front end: ``wbecdma {gen,bounds,enlarge,inject,sim}``.

Exit status is 0 on success, 2 on invalid input and 1 on runtime failure.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .codebook import (
    VARIANTS,
    CodeFormatError,
    build_core,
    check_binary_injectivity,
    classify,
    format_code,
    hadamard,
    kp_bound,
    read_code,
    welch_bound,
    write_code,
)
from .enlarge import Enlargement, enlarge_hadamard
from .sim import ConfigError, format_csv, load_config, run_sweep


def _num(v: float) -> str:
    return f"{v:.12g}"


def _bool(v: bool) -> str:
    return "true" if v else "false"


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _emit(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def cmd_gen(args) -> int:
    code = build_core(args.L, args.K, args.seed, args.variant, args.deleted_row, args.budget)
    rep = classify(code)
    if rep.is_bwbe:
        kind = "BWBE"
    elif rep.is_abwbe:
        kind = "ABWBE"
    else:
        kind = "binary"
    print(
        f"L={code.L} K={code.K} tsc={_num(rep.tsc)} welch={_num(rep.welch)} kp={_num(rep.kp)} "
        f"wbe={_bool(rep.is_wbe)} kp_met={_bool(rep.is_bwbe_candidate)} class={kind}"
    )
    if args.output:
        write_code(code, args.output)
    return 0


def cmd_bounds(args) -> int:
    w, kp = welch_bound(args.L, args.K), kp_bound(args.L, args.K)
    print(f"welch={_num(w)} kp={_num(kp)} equal={_bool(math.isclose(w, kp, rel_tol=0, abs_tol=1e-12))}")
    return 0


def cmd_enlarge(args) -> int:
    core, kron = read_code(args.code)
    if kron is not None:
        raise ValueError("input already carries a Kronecker sidecar; enlarge its core instead")
    if args.hadamard:
        code = enlarge_hadamard(args.d, core)
        e = Enlargement(hadamard(args.d) / math.sqrt(args.d), core)
    else:
        e = Enlargement(np.eye(args.d), core)
        code = e.materialize()
    _emit(format_code(code, e.kron_info()), args.output)
    return 0


def cmd_inject(args) -> int:
    code, _ = read_code(args.code)
    rep = check_binary_injectivity(code)
    print(f"injective={_bool(rep.injective)} pairs={rep.n_pairs} floor={rep.noiseless_floor!r}")
    if args.list:
        for a, b in rep.colliding_pairs:
            print(" ".join(map(str, a)), "|", " ".join(map(str, b)))
    return 0


def cmd_sim(args) -> int:
    cfg = load_config(args.config)
    _emit(format_csv(run_sweep(cfg)), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wbecdma", description="WBE codebooks, Kronecker enlargement and CDMA detection")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="build a binary core code and report its TSC class")
    g.add_argument("L", type=_positive)
    g.add_argument("K", type=_positive)
    g.add_argument("--variant", choices=VARIANTS, default="auto")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--deleted-row", type=int, default=0)
    g.add_argument("--budget", type=_positive, default=20000)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("bounds", help="print Welch and Karystinos-Pados TSC bounds")
    b.add_argument("L", type=_positive)
    b.add_argument("K", type=_positive)
    b.set_defaults(func=cmd_bounds)

    e = sub.add_parser("enlarge", help="Kronecker-enlarge a core code file")
    e.add_argument("-c", "--code", required=True)
    e.add_argument("-d", type=_positive, required=True)
    e.add_argument("--hadamard", action="store_true", help="use H_d/sqrt(d) instead of the identity")
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_enlarge)

    i = sub.add_parser("inject", help="exhaustive binary injectivity check and noiseless error floor")
    i.add_argument("-c", "--code", required=True)
    i.add_argument("--list", action="store_true", help="also print every colliding pair")
    i.set_defaults(func=cmd_inject)

    s = sub.add_parser("sim", help="run a BER sweep and write CSV")
    s.add_argument("-f", "--config", required=True)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_sim)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, CodeFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
