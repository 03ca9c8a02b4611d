"""Command line: ``braidsketch {gen,run,eval,memstat}``.

Exit codes: 0 success, 2 usage, 3 capability (an algorithm asked for a
weight it cannot answer), 4 malformed braid file.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .braidio import BraidReader, atomic_write_text, format_braid
from .core import (
    DEFAULT_U,
    ApproxParams,
    BraidFormatError,
    DomainError,
    PromiseViolationError,
    UnsupportedWeightError,
    Weight,
)
from .datagen import INTERLEAVINGS, KINDS, GenSpec, generate
from .metrics import ALGOS, EvalReport, SketchSettings, evaluate, make_synopsis, memory_report
from .oracle import MaterializedBraid

EXIT_OK, EXIT_USAGE, EXIT_CAPABILITY, EXIT_FORMAT = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _weight(text: str) -> Weight:
    try:
        return Weight.parse(text)
    except DomainError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_sketch_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps", type=float, default=0.01, help="Count-Min error target")
    p.add_argument("--delta", type=float, default=0.01, help="Count-Min failure probability")
    p.add_argument("--rho", type=float, default=0.01, help="bucket granularity")
    p.add_argument("--width", type=int, default=None, help="explicit Count-Min width (overrides --eps)")
    p.add_argument("--depth", type=int, default=None, help="explicit Count-Min depth (overrides --delta)")
    p.add_argument("--seed", type=int, default=0, help="hash seed")
    p.add_argument("--counting", choices=("sum", "union"), default="sum",
                   help="how VariableBucket forms running counts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="braidsketch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic braid file")
    g.add_argument("--dist", choices=KINDS, required=True)
    g.add_argument("--m", type=int, default=1000)
    g.add_argument("--items", type=int, default=5000, help="items per stream")
    g.add_argument("--U", type=int, default=DEFAULT_U)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--interleave", choices=INTERLEAVINGS, default="rr")
    g.add_argument("--a", type=float, default=0.8, help="outlier separation")
    g.add_argument("--t", type=int, default=4, help="players in an adversarial instance")
    g.add_argument("--p", type=int, default=1, help="items per player per stream")
    g.add_argument("--instance", choices=("yes", "no"), default="yes")
    g.add_argument("--out", type=Path, default=None, help="output file (default stdout)")

    r = sub.add_parser("run", help="top-k answer of one algorithm")
    r.add_argument("--algo", choices=ALGOS, required=True)
    r.add_argument("--weight", type=_weight, required=True)
    r.add_argument("--k", type=int, default=10)
    r.add_argument("--in", dest="inp", type=Path, required=True)
    r.add_argument("--out", type=Path, default=None)
    _add_sketch_flags(r)

    e = sub.add_parser("eval", help="score an algorithm against the exact oracle")
    e.add_argument("--algo", choices=ALGOS, required=True)
    e.add_argument("--weight", type=_weight, required=True)
    e.add_argument("--k-list", type=_int_list, default=[10, 20, 50, 100])
    e.add_argument("--in", dest="inp", type=Path, required=True)
    e.add_argument("--dataset", default=None, help="dataset label (default: file stem)")
    e.add_argument("--out", type=Path, default=None)
    _add_sketch_flags(e)

    ms = sub.add_parser("memstat", help="synopsis memory against the number of streams")
    ms.add_argument("--algo", choices=("expb", "varb"), required=True)
    ms.add_argument("--m-list", type=_int_list, required=True)
    ms.add_argument("--items", type=int, default=200)
    ms.add_argument("--dist", choices=("uniform", "outlier", "normal"), default="uniform")
    ms.add_argument("--U", type=int, default=DEFAULT_U)
    ms.add_argument("--gen-seed", type=int, default=0, help="data seed")
    ms.add_argument("--out", type=Path, default=None)
    _add_sketch_flags(ms)
    return parser


def _settings(args, U: int) -> SketchSettings:
    try:
        params = ApproxParams(args.eps, args.delta, args.rho, U)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    if (args.width is not None and args.width < 1) or (args.depth is not None and args.depth < 1):
        raise UsageError("--width and --depth must be positive")
    return SketchSettings(params, args.width, args.depth, args.seed, args.counting)


def _sketch_U(U: int) -> int:
    # Sketch value domains are powers of two; round a braid's U up.
    return max(2, 1 << (int(U) - 1).bit_length())


def _emit(out: Path | None, text: str) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(out, text)


def cmd_gen(args) -> None:
    try:
        spec = GenSpec(kind=args.dist, m=args.m, items_per_stream=args.items, U=args.U,
                       seed=args.seed, interleave=args.interleave, a=args.a, t=args.t,
                       p=args.p, instance=args.instance)
        braid = generate(spec)
    except (DomainError, PromiseViolationError) as exc:
        raise UsageError(str(exc)) from None
    _emit(args.out, format_braid(braid))


def _consume(args, weight: Weight, k: int, keep: bool):
    """Single forward pass: feed a synopsis chunk by chunk, optionally keeping the data."""
    with BraidReader.open(args.inp) as reader:
        h = reader.header
        settings = _settings(args, _sketch_U(h.U))
        syn = None
        if args.algo != "oracle":
            if h.real and args.algo in ("expb", "varb"):
                raise UnsupportedWeightError(f"{args.algo} needs integer values in [1, U]")
            syn = make_synopsis(args.algo, settings, weight, k)
        ids_parts, val_parts = [], []
        for ids, values in reader.chunks():
            if syn is not None:
                syn.ingest_arrays(ids, values)
            if keep or syn is None:
                ids_parts.append(ids)
                val_parts.append(values)
    oracle = None
    if ids_parts:
        oracle = MaterializedBraid(np.concatenate(ids_parts), np.concatenate(val_parts))
    return settings, syn, oracle


def cmd_run(args) -> None:
    if args.k < 1:
        raise UsageError(f"--k must be >= 1, got {args.k}")
    settings, syn, oracle = _consume(args, args.weight, args.k, keep=False)
    if args.algo == "oracle":
        answer = oracle.topk(args.weight, args.k) if oracle is not None else []
    elif args.algo == "extremes":
        answer = syn.topk()[: args.k]
    else:
        answer = syn.topk(args.weight, args.k) if syn.n else []
    lines = ["rank,stream_id,estimate"]
    lines += [f"{i},{sid},{est:.10g}" for i, (sid, est) in enumerate(answer, start=1)]
    _emit(args.out, "\n".join(lines) + "\n")


def cmd_eval(args) -> None:
    if min(args.k_list) < 1:
        raise UsageError("--k-list entries must be >= 1")
    settings, syn, oracle = _consume(args, args.weight, max(args.k_list), keep=True)
    if oracle is None:
        raise BraidFormatError("braid file holds no records")
    dataset = args.dataset or args.inp.stem
    reports = evaluate(args.algo, args.weight, args.k_list, None, None, settings=settings,
                       dataset=dataset, oracle=oracle, synopsis=syn if syn is not None else oracle)
    lines = [EvalReport.csv_header()] + [r.csv_row() for r in reports]
    _emit(args.out, "\n".join(lines) + "\n")


def cmd_memstat(args) -> None:
    settings = _settings(args, args.U)
    lines = ["algo,m,items,counter_bytes,structure_bytes,id_bytes,memory_bytes"]
    for m in args.m_list:
        try:
            braid = generate(GenSpec(kind=args.dist, m=m, items_per_stream=args.items, U=args.U,
                                     seed=args.gen_seed))
        except DomainError as exc:
            raise UsageError(str(exc)) from None
        syn = make_synopsis(args.algo, settings)
        syn.ingest_arrays(braid.stream_ids, braid.values)
        rep = memory_report(syn)
        lines.append(f"{args.algo},{m},{args.items},{rep.counter_bytes},{rep.structure_bytes},"
                     f"{rep.id_bytes},{rep.total}")
    _emit(args.out, "\n".join(lines) + "\n")


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "eval": cmd_eval, "memstat": cmd_memstat}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"braidsketch: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnsupportedWeightError as exc:
        print(f"braidsketch: capability error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except (BraidFormatError, UnicodeDecodeError) as exc:
        print(f"braidsketch: bad braid file: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except FileNotFoundError as exc:
        print(f"braidsketch: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"braidsketch: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
