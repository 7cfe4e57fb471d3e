"""Command-line front-end.

    sampled-card estimate  [INPUT] --algorithm alg1|alg2|naive --m M [--u U] ...
    sampled-card simulate  --table ID [--trials R] [--seed S] [--fast]
    sampled-card analyze   --freq-model MODEL --sampling-rate P --m M (--u U | --l L)
    sampled-card optimize  --budget B --freq-model MODEL --sampling-rate P

Exit codes: 0 ok, 2 bad flags, 3 degenerate sample, 4 empty input.
``SAMPLED_CARD_SEED`` supplies the default ``--seed``.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from typing import BinaryIO, Iterator, Optional, Sequence

import numpy as np
import xxhash

from .analysis import (
    HLL_ARE,
    P0_SOURCES,
    InfeasibleBudget,
    expected_p0,
    expected_unseen_mass,
    optimal_split,
    plugin_probabilities,
    rel_variance_alg1,
    rel_variance_alg2,
)
from .estimators import MIN_RESERVOIR, CardinalityPipeline, DegenerateSample, PipelineConfig
from .goodturing import EmptySample
from .simharness import parse_model
from .sketch import MASK64, nearest_power_of_two
from .tables import COLUMNS, TABLE_IDS, simulate_table

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DEGENERATE = 3
EXIT_EMPTY = 4

SEED_ENV = "SAMPLED_CARD_SEED"
CHUNK_RECORDS = 1 << 20
TEXT_BATCH = 1 << 16


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw, 0)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _probability(text: str) -> float:
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < p <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in (0, 1], got {text}")
    return p


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _model(text: str):
    try:
        return parse_model(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _emit_json(obj: dict, stream=None) -> None:
    stream = stream or sys.stdout
    stream.write(json.dumps(obj, sort_keys=True) + "\n")
    stream.flush()


# ---------------------------------------------------------------- input readers

def _open_input(path: str) -> BinaryIO:
    if path == "-":
        return sys.stdin.buffer
    return open(path, "rb")


def _text_tokens(fh: BinaryIO) -> Iterator[list[bytes]]:
    batch: list[bytes] = []
    for line in fh:
        token = line.rstrip(b"\r\n")
        if not token:
            continue
        batch.append(token)
        if len(batch) >= TEXT_BATCH:
            yield batch
            batch = []
    if batch:
        yield batch


def _ndjson_token(line: bytes) -> bytes:
    value = json.loads(line)
    if isinstance(value, str):
        return value.encode("utf-8")
    if isinstance(value, bool) or value is None:
        return json.dumps(value).encode()
    if isinstance(value, int):
        return (value & MASK64).to_bytes(8, "little")
    return json.dumps(value, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _feed(pipe: CardinalityPipeline, fh: BinaryIO, fmt: str, seed: int) -> None:
    if fmt == "binary-u64":
        rec = 8
        leftover = b""
        while True:
            buf = fh.read(CHUNK_RECORDS * rec)
            if not buf:
                break
            buf = leftover + buf
            usable = len(buf) - len(buf) % rec
            leftover = buf[usable:]
            if usable:
                pipe.offer_u64(np.frombuffer(buf[:usable], dtype="<u8"))
        if leftover:
            raise UsageError(f"binary-u64 input length is not a multiple of 8 ({len(leftover)} trailing bytes)")
        return
    digest = xxhash.xxh64_intdigest
    for batch in _text_tokens(fh):
        if fmt == "ndjson":
            try:
                batch = [_ndjson_token(t) for t in batch]
            except json.JSONDecodeError as exc:
                raise UsageError(f"invalid ndjson record: {exc}") from None
        pipe.offer_hashes(np.fromiter((digest(t, seed) for t in batch), dtype=np.uint64, count=len(batch)))


# ---------------------------------------------------------------- commands

def cmd_estimate(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    if args.algorithm == "alg2":
        if args.u is None:
            raise UsageError("--u is required for alg2")
        if args.u < MIN_RESERVOIR:
            raise UsageError(f"--u must be at least {MIN_RESERVOIR}")
    if args.m < 16 or args.m > 1 << 16 or args.m & (args.m - 1):
        raise UsageError("--m must be a power of two in [16, 65536]")
    if args.freq_model is not None and args.sampling_rate is None:
        raise UsageError("--freq-model needs --sampling-rate")
    config = PipelineConfig(
        mode=args.algorithm, m=args.m, u=args.u if args.algorithm == "alg2" else None,
        hash_seed=seed & MASK64,
        reservoir_seed=None if args.reservoir_seed is None else args.reservoir_seed & MASK64,
    )
    pipe = CardinalityPipeline(config)
    try:
        fh = _open_input(args.input)
    except OSError as exc:
        raise UsageError(f"cannot open input: {exc}") from None
    try:
        _feed(pipe, fh, args.format, config.hash_seed)
    finally:
        if fh is not sys.stdin.buffer:
            fh.close()

    model_probs = None
    if args.freq_model is not None and args.sampling_rate < 1:
        model_probs = plugin_probabilities(args.freq_model.quantile_grid(), args.sampling_rate,
                                           args.p0_source)
    try:
        report = pipe.report(sampling_rate=args.sampling_rate, model_probs=model_probs, are=args.are)
    except EmptySample:
        _emit_json({"error": "EmptySample", "message": "input contained no elements"})
        return EXIT_EMPTY
    except DegenerateSample as exc:
        _emit_json({"error": "DegenerateSample", "message": str(exc), **exc.diagnostics})
        return EXIT_DEGENERATE
    out = report.to_dict()
    out["seed"] = seed
    if args.sampling_rate is not None:
        out["sampling_rate"] = args.sampling_rate
    _emit_json(out)
    return EXIT_OK


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def cmd_simulate(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    rows = simulate_table(args.table, trials=args.trials, seed=seed, fast=args.fast,
                          jobs=args.jobs, p0_source=args.p0_source)
    writer = csv.DictWriter(sys.stdout, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(row[k]) for k in COLUMNS})
    return EXIT_OK


def _model_probs(args) -> tuple[float, float, dict]:
    grid = args.freq_model.quantile_grid()
    P = args.sampling_rate
    p0, p1 = plugin_probabilities(grid, P, args.p0_source)
    info = {
        "freq_model": args.freq_model.label,
        "sampling_rate": P,
        "p0_source": args.p0_source,
        "p0_distinct": expected_p0(grid, P),
        "p0_mass": expected_unseen_mass(grid, P),
    }
    return p0, p1, info


def cmd_analyze(args: argparse.Namespace) -> int:
    p0, p1, info = _model_probs(args)
    out = {**info, "p0": p0, "p1": p1, "m": args.m, "are": args.are}
    if args.u is not None:
        out.update(algorithm="alg2", u=args.u,
                   rel_variance=rel_variance_alg2(p0, p1, args.u, args.m, args.are))
    else:
        l = args.l
        if l is None:
            l = max(1.0, args.sampling_rate * args.n * float(np.mean(args.freq_model.quantile_grid())))
        out.update(algorithm="alg1", l=l,
                   rel_variance=rel_variance_alg1(p0, p1, l, args.m, args.are))
    _emit_json(out)
    return EXIT_OK


def cmd_optimize(args: argparse.Namespace) -> int:
    p0, p1, info = _model_probs(args)
    try:
        split = optimal_split(args.budget, p0, p1, args.are)
    except InfeasibleBudget as exc:
        raise UsageError(str(exc)) from None
    out = {**info, "p0": p0, "p1": p1, "are": args.are, "B": split.B, "m": split.m, "u": split.u,
           "predicted_rel_variance": split.predicted_rel_variance,
           "m_sketch": nearest_power_of_two(split.m)}
    _emit_json(out)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sampled-card",
        description="Distinct-count estimation from a sampled stream, with Good-Turing correction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate the cardinality of the stream the input was sampled from")
    est.add_argument("input", nargs="?", default="-", help="input file (default: stdin)")
    est.add_argument("--algorithm", choices=("alg1", "alg2", "naive"), default="alg1")
    est.add_argument("--m", type=_positive_int, default=1024, help="sketch registers (power of two)")
    est.add_argument("--u", type=_positive_int, default=None, help="reservoir capacity for alg2")
    est.add_argument("--sampling-rate", type=_probability, default=None,
                     help="rate the input was sampled at; enables predicted_rel_variance")
    est.add_argument("--freq-model", type=_model, default=None,
                     help="uniform:LO:HI or pareto:ALPHA:S for an analytic variance prediction")
    est.add_argument("--p0-source", choices=P0_SOURCES, default="mass")
    est.add_argument("--are", type=_positive_float, default=HLL_ARE,
                     help="sketch relative efficiency used in the prediction (default 1/1.08)")
    est.add_argument("--format", choices=("text", "ndjson", "binary-u64"), default="text")
    est.add_argument("--seed", type=lambda s: int(s, 0), default=None)
    est.add_argument("--reservoir-seed", type=lambda s: int(s, 0), default=None)
    est.set_defaults(func=cmd_estimate)

    sim = sub.add_parser("simulate", help="re-run a published experiment table, CSV on stdout")
    sim.add_argument("--table", choices=TABLE_IDS, required=True)
    sim.add_argument("--trials", type=_positive_int, default=200)
    sim.add_argument("--seed", type=lambda s: int(s, 0), default=None)
    sim.add_argument("--fast", action="store_true", help="n=1000 and at most 50 trials")
    sim.add_argument("--jobs", type=_positive_int, default=1)
    sim.add_argument("--p0-source", choices=P0_SOURCES, default="mass")
    sim.set_defaults(func=cmd_simulate)

    for name, helptext in (("analyze", "evaluate the variance formulas for a frequency model"),
                           ("optimize", "best split of a storage budget between sketch and reservoir")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--freq-model", type=_model, required=True)
        p.add_argument("--sampling-rate", type=_probability, required=True)
        p.add_argument("--are", type=_positive_float, default=1.0)
        p.add_argument("--p0-source", choices=P0_SOURCES, default="mass")
        if name == "analyze":
            p.add_argument("--m", type=_positive_int, required=True)
            size = p.add_mutually_exclusive_group()
            size.add_argument("--u", type=_positive_int)
            size.add_argument("--l", type=_positive_float)
            p.add_argument("--n", type=_positive_int, default=10_000,
                           help="distinct elements, used for the expected sample length when --l is absent")
            p.set_defaults(func=cmd_analyze)
        else:
            p.add_argument("--budget", type=int, required=True)
            p.set_defaults(func=cmd_optimize)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sampled-card: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
