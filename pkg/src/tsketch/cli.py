"""Command-line harness: generate, bench, analyze, build, query.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from . import analytics, hashing
from .analytics import AnalyticContext
from .baselines import RSketch
from .config import (
    capacity_improvement_geometry,
    capacity_plan,
    rectangular_geometry,
    solve_extra_layers,
    space_saving_geometry,
    width_for_budget,
)
from .metrics import accuracy_skipping_zeros, compute_resources
from .sketch import SketchGeometry, TSketch, deserialize, serialize
from .workloads import ZipfSpec, ingest_file, rank_items, write_stream, zipf_ranks

VARIANTS = ("cm", "cu", "sp", "ca")

CSV_COLUMNS = [
    "variant", "w", "K", "d", "B", "aae", "are", "aae_corrected", "are_corrected",
    "space_bits", "occupation_ratio", "capacity", "seed", "layer_bits", "query_set",
]

BENCH_EPILOG = """\
CSV columns (one row per variant, header first):
  variant            cm | cu | sp | ca
  w, K, d, B         counters per layer, layer count, width ratio (1 for cm/cu), base counter size
  aae, are           mean absolute / relative error of raw estimates
  aae_corrected,
  are_corrected      same for corrected estimates (empty unless --correct)
  space_bits         total counter bits
  occupation_ratio   fraction of counter bits set to 1
  capacity           counter size of the widest layer (2**bits)
  seed               master seed for hashing (and Zipf sampling)
  layer_bits         per-layer widths, narrowest first, separated by ':'
  query_set          'distinct': errors are averaged over the distinct stream items
"""


class UsageError(Exception):
    pass


def _nonneg_float(text: str) -> float:
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def _add_stream_flags(p: argparse.ArgumentParser, *, allow_input: bool) -> None:
    if allow_input:
        p.add_argument("--input", help="stream file, one item per line")
    p.add_argument("--skew", type=_nonneg_float, default=0.8, help="Zipf skewness (default 0.8)")
    p.add_argument("--distinct", type=_positive_int, default=100_000, help="distinct items")
    p.add_argument("--total", type=_positive_int, default=1_000_000, help="stream length")
    p.add_argument("--seed", type=int, default=1)


def _add_geometry_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--B", type=_positive_int, default=65536, help="base counter size (power of two)")
    p.add_argument("--k", type=_positive_int, default=4, help="base layer count")
    p.add_argument("--d", type=_positive_int, default=2, help="counter size ratio between layers")
    p.add_argument("--w", type=_positive_int, default=4096, help="counters per layer")
    p.add_argument("--ca-k", type=_positive_int, help="fix k for the ca plan instead of optimizing")
    p.add_argument("--ca-d", type=_positive_int, help="fix d for the ca plan instead of optimizing")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsketch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a seeded Zipf stream file")
    _add_stream_flags(p, allow_input=False)
    p.add_argument("--out", required=True)

    p = sub.add_parser(
        "bench",
        help="compare sketch variants against exact counts",
        epilog=BENCH_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _add_stream_flags(p, allow_input=True)
    _add_geometry_flags(p)
    p.add_argument("--variants", default="cm,sp", help="comma list from cm,cu,sp,ca")
    p.add_argument("--memory-bits", type=_positive_int,
                   help="equalize memory: w = floor(budget / bits per row) per variant")
    p.add_argument("--correct", action="store_true", help="also score corrected estimates")
    p.add_argument("--out", default="-", help="CSV path (default stdout)")

    p = sub.add_parser("analyze", help="print closed-form quantities as key=value lines")
    p.add_argument("--w", type=_positive_int, default=1000)
    p.add_argument("--k", type=_positive_int, default=4)
    p.add_argument("--d", type=_positive_int, default=2)
    p.add_argument("--B", type=_positive_int, default=65536)
    p.add_argument("--n", type=_positive_int, default=1000)
    p.add_argument("--N", type=int, default=100_000)
    p.add_argument("--beta", type=float, default=0.01)
    p.add_argument("--i", type=int, default=0, help="saturated layer count")
    p.add_argument("--f", type=int, default=0, help="item frequency for noise/overflow terms")

    p = sub.add_parser("build", help="build a sketch from a stream and save it")
    _add_stream_flags(p, allow_input=True)
    _add_geometry_flags(p)
    p.add_argument("--variant", choices=VARIANTS, default="sp")
    p.add_argument("--out", required=True)

    p = sub.add_parser("query", help="query a saved sketch")
    p.add_argument("--sketch", required=True)
    p.add_argument("--item", action="append", help="item to query (repeatable); else read stdin lines")
    p.add_argument("--n", type=_positive_int, help="distinct-item count for corrected estimates")
    return parser


@dataclass
class Stream:
    """Distinct items with exact counts plus the stream order as indices into them."""

    items: list[bytes]
    counts: np.ndarray
    order: np.ndarray
    fps: np.ndarray

    @property
    def N(self) -> int:
        return int(self.counts.sum())

    @property
    def n(self) -> int:
        return len(self.items)

    def sequence(self) -> np.ndarray:
        return self.fps[self.order]


def load_stream(args) -> Stream:
    if getattr(args, "input", None):
        index: dict[bytes, int] = {}
        order = [index.setdefault(item, len(index)) for item in ingest_file(args.input)]
        order_arr = np.asarray(order, dtype=np.intp)
        items = list(index)
        counts = np.bincount(order_arr, minlength=len(items)).astype(np.int64)
    else:
        ranks = zipf_ranks(ZipfSpec(args.skew, args.distinct, args.total, args.seed))
        keys, order_arr, counts = np.unique(ranks, return_inverse=True, return_counts=True)
        items = [str(int(k)).encode() for k in keys]
    return Stream(items, counts, order_arr, hashing.fingerprints(items))


def make_geometry(variant: str, args, w: int) -> SketchGeometry:
    if variant in ("cm", "cu"):
        return rectangular_geometry(args.B, args.k, w)
    if variant == "sp":
        return space_saving_geometry(args.B, args.k, w, args.d)[0]
    return capacity_improvement_geometry(args.B, w, args.ca_k, args.ca_d)[0]


def make_sketch(variant: str, geometry: SketchGeometry, seed: int) -> TSketch:
    if variant in ("cm", "cu"):
        return RSketch(geometry, seed, variant)
    return TSketch(geometry, seed)


def fill(sketch: TSketch, stream: Stream) -> None:
    if isinstance(sketch, RSketch) and sketch.kind == "cu":
        sketch.update_sequence(stream.sequence())
    else:
        sketch.update_fingerprints(stream.fps, stream.counts.astype(np.uint64))


def _fmt(x: float) -> str:
    return repr(float(x))


def bench_rows(args, stream: Stream) -> list[dict]:
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    if not variants:
        raise UsageError("--variants must name at least one of cm,cu,sp,ca")
    bad = [v for v in variants if v not in VARIANTS]
    if bad:
        raise UsageError(f"unknown variants: {','.join(bad)}")
    if stream.n == 0:
        raise ValueError("stream is empty")

    rows = []
    for variant in variants:
        geometry = make_geometry(variant, args, 1 if args.memory_bits else args.w)
        if args.memory_bits:
            geometry = make_geometry(variant, args, width_for_budget(geometry.row_bits, args.memory_bits))
        sketch = make_sketch(variant, geometry, args.seed)
        fill(sketch, stream)
        q = sketch.query_fingerprints(stream.fps, stream.n if args.correct else None)
        aae, are, _ = accuracy_skipping_zeros(q.raw, stream.counts)
        aae_c = are_c = ""
        if q.corrected is not None:
            aae_c, are_c, _ = accuracy_skipping_zeros(q.corrected, stream.counts)
            aae_c, are_c = _fmt(aae_c), _fmt(are_c)
        space, occupation, capacity = compute_resources(sketch)
        rows.append({
            "variant": variant,
            "w": geometry.w,
            "K": geometry.K,
            "d": geometry.d,
            "B": geometry.B,
            "aae": _fmt(aae),
            "are": _fmt(are),
            "aae_corrected": aae_c,
            "are_corrected": are_c,
            "space_bits": space,
            "occupation_ratio": _fmt(occupation),
            "capacity": capacity,
            "seed": args.seed,
            "layer_bits": ":".join(map(str, geometry.layer_bits)),
            "query_set": "distinct",
        })
    return rows


def cmd_generate(args) -> int:
    spec = ZipfSpec(args.skew, args.distinct, args.total, args.seed)
    ranks = zipf_ranks(spec)
    count = write_stream(rank_items(ranks), args.out)
    distinct = len(np.unique(ranks))
    print(f"N={count}")
    print(f"n={distinct}")
    return 0


def cmd_bench(args) -> int:
    rows = bench_rows(args, load_stream(args))
    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    try:
        writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def analyze_lines(args) -> list[str]:
    lines: list[str] = []

    def emit(key: str, fn: Callable[[], object]) -> object:
        try:
            value = fn()
        except (ValueError, ZeroDivisionError) as exc:
            lines.append(f"{key}=error: {exc}")
            return None
        lines.append(f"{key}={value}")
        return value

    emit("gamma", lambda: space_saving_geometry(args.B, args.k, args.w, args.d)[1].reduction_ratio)
    emit("T_r", lambda: space_saving_geometry(args.B, args.k, args.w, args.d)[1].T_r)
    emit("T_trap", lambda: space_saving_geometry(args.B, args.k, args.w, args.d)[1].T_trap)
    emit("saved_bits", lambda: space_saving_geometry(args.B, args.k, args.w, args.d)[1].saved_bits)
    emit("s_exact", lambda: solve_extra_layers(args.B, args.k, args.d))
    plan = emit("s_tilde", lambda: capacity_plan(args.B, args.k, args.d).s_tilde)
    emit("capacity", lambda: capacity_plan(args.B, args.k, args.d).capacity)
    emit("residual_bits", lambda: capacity_improvement_geometry(args.B, args.w, args.k, args.d)[1].residual_bits)
    s_tilde = plan if isinstance(plan, int) else 0

    ctx = emit("context", lambda: AnalyticContext(args.w, args.k, args.n, args.N, args.beta))
    if ctx is None:
        return lines
    lines[-1] = f"context=w:{ctx.w} K:{ctx.K} n:{ctx.n} N:{ctx.N} beta:{ctx.beta}"
    ctx_ca = ctx.with_layers(args.k + s_tilde)
    rho_sp = emit("rho", lambda: analytics.error_probability(ctx, args.i))
    rho_ca = emit("rho_ca", lambda: analytics.error_probability(ctx_ca, args.i))
    emit("error_bound", lambda: analytics.error_bound(ctx, args.i))
    emit("error_bound_ca", lambda: analytics.error_bound(ctx_ca, args.i))
    emit("corrected_error_bound", lambda: analytics.corrected_error_bound(ctx, args.i))
    emit("phi", lambda: analytics.phi_ratio(ctx, args.i))
    emit("beta1", lambda: analytics.corrected_beta(ctx, args.i))
    emit("corrected_noise_mean", lambda: analytics.corrected_noise_mean(ctx, args.i, args.f))
    emit("overflow_safety", lambda: analytics.overflow_safety_bound(ctx, args.B, args.f))
    emit("mu", lambda: analytics.mu_ratio(ctx, args.i, s_tilde))
    emit("phi_sp_ca", lambda: analytics.phi_pair(rho_sp, rho_ca, ctx.w_beta))
    emit("phi_case", lambda: analytics.phi_compare(rho_sp, rho_ca).value)
    emit("mu_case", lambda: analytics.mu_compare(rho_sp, rho_ca).value)
    return lines


def cmd_analyze(args) -> int:
    for line in analyze_lines(args):
        print(line)
    return 0


def cmd_build(args) -> int:
    stream = load_stream(args)
    sketch = make_sketch(args.variant, make_geometry(args.variant, args, args.w), args.seed)
    fill(sketch, stream)
    with open(args.out, "wb") as fh:
        fh.write(serialize(sketch))
    print(f"N={sketch.total}")
    print(f"n={stream.n}")
    print(f"layer_bits={':'.join(map(str, sketch.geometry.layer_bits))}")
    return 0


def cmd_query(args) -> int:
    with open(args.sketch, "rb") as fh:
        sketch = deserialize(fh.read())
    if args.item is not None:
        items = [x.encode() for x in args.item]
    else:
        items = [line.rstrip(b"\r\n") for line in sys.stdin.buffer]
    if not items:
        raise UsageError("no item given (use --item or stdin)")
    for item in items:
        res = sketch.query(item) if args.n is None else sketch.query_corrected(item, args.n)
        parts = [
            f"item={item.decode(errors='replace')}",
            f"raw_estimate={res.raw_estimate}",
            f"saturated_layers={res.saturated_layers}",
            f"all_saturated={str(res.all_saturated).lower()}",
        ]
        if res.corrected_estimate is not None:
            parts.append(f"corrected_estimate={res.corrected_estimate!r}")
        print(" ".join(parts))
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "bench": cmd_bench,
    "analyze": cmd_analyze,
    "build": cmd_build,
    "query": cmd_query,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"tsketch {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"tsketch {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
