"""Command line entry point: ``run``, ``sweep``, ``classify`` and ``verify``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness
from .blueprint import MODES
from .engine import DEFAULT_MAX_ITERATIONS
from .instances import KINDS, AdversarialInstance, generate, read_instance
from .kernels import mix_seed
from .traceio import read_trace, write_trace


def _nonneg_float(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return v


def _pos_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _sidecar(out: Path, suffix: str) -> Path:
    return out.with_name(out.stem + suffix)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="smoothkmeans", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="generate, perturb, cluster, classify and verify one instance")
    src = r.add_mutually_exclusive_group()
    src.add_argument("--kind", choices=KINDS)
    src.add_argument("--instance", type=Path, help="instance file ('n d' header, then n rows)")
    r.add_argument("--n", type=_pos_int)
    r.add_argument("--d", type=_pos_int)
    r.add_argument("--k", type=_pos_int, required=True)
    r.add_argument("--sigma", type=_nonneg_float, default=0.0)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--max-iters", type=_pos_int, default=DEFAULT_MAX_ITERATIONS)
    r.add_argument("--eps", type=_nonneg_float, default=None)
    r.add_argument("--mode", choices=MODES, default="actual")
    r.add_argument("--out", type=Path, default=Path("trace.json"))

    s = sub.add_parser("sweep", help="run a grid of cells and write one CSV row per cell")
    s.add_argument("--config", type=Path, help="JSON file with SweepConfig fields")
    s.add_argument("--kind", choices=KINDS)
    s.add_argument("--n", type=_pos_int, nargs="+")
    s.add_argument("--d", type=_pos_int, nargs="+")
    s.add_argument("--k", type=_pos_int, nargs="+")
    s.add_argument("--sigma", type=_nonneg_float, nargs="+")
    s.add_argument("--seeds", type=_pos_int)
    s.add_argument("--seed", type=int, help="master seed")
    s.add_argument("--max-iters", type=_pos_int)
    s.add_argument("--eps", type=_nonneg_float)
    s.add_argument("--mode", choices=MODES)
    s.add_argument("--out", type=Path)
    s.add_argument("--threads", type=_pos_int, default=1)

    c = sub.add_parser("classify", help="classify every transition component of a trace")
    c.add_argument("trace", type=Path)
    c.add_argument("--eps", type=_nonneg_float, default=None)
    c.add_argument("--mode", choices=MODES, default="actual")
    c.add_argument("--out", type=Path)

    v = sub.add_parser("verify", help="run every applicable check on a trace")
    v.add_argument("trace", type=Path)
    v.add_argument("--mode", choices=MODES, default=None, help="restrict the bisector check to one mode")
    v.add_argument("--out", type=Path)
    return p


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def cmd_run(args, parser) -> int:
    if args.instance is not None:
        if args.n is not None or args.d is not None:
            parser.error("--n/--d cannot be combined with --instance")
        instance = AdversarialInstance(read_instance(args.instance))
        kind = "file"
    else:
        if args.n is None or args.d is None:
            parser.error("--n and --d are required unless --instance is given")
        kind = args.kind or "uniform"
        instance = generate(kind, args.n, args.d, mix_seed(args.seed, 1))
    if args.k > instance.n:
        parser.error(f"--k {args.k} exceeds the number of points {instance.n}")
    trace_id = args.out.stem
    meta = {"trace_id": trace_id, "kind": kind}
    trace = harness.pipeline(
        instance, args.k, args.sigma, mix_seed(args.seed, 2), mix_seed(args.seed, 3), args.max_iters, meta
    )
    trace.meta["seed"] = args.seed
    write_trace(trace, args.out)
    _sidecar(args.out, ".classify.csv").write_text(harness.classification_csv(trace, trace_id, args.eps, args.mode))
    summary, ok = harness.verification_summary(trace, trace_id)
    head = (
        f"trace={trace_id} n={trace.n} d={trace.d} k={trace.k_initial} k_final={trace.k_final}"
        f" sigma={args.sigma:g} iterations={len(trace.records)} termination={trace.termination}"
        f" final_potential={trace.records[-1].post_state.potential:.17g} in_cube={trace.meta.get('in_cube')}\n"
    )
    _sidecar(args.out, ".summary.txt").write_text(head + summary)
    sys.stdout.write(head + summary)
    return 0 if ok else 1


def cmd_sweep(args, parser) -> int:
    cfg = harness.SweepConfig.from_file(args.config) if args.config else harness.SweepConfig()
    overrides = {
        "kind": args.kind, "n": args.n, "d": args.d, "k": args.k, "sigma": args.sigma, "seeds": args.seeds,
        "master_seed": args.seed, "max_iterations": args.max_iters, "epsilon": args.eps, "mode": args.mode,
        "out": str(args.out) if args.out else None,
    }
    fields = {**harness.config_dict(cfg), **{k: v for k, v in overrides.items() if v is not None}}
    cfg = harness.SweepConfig(**fields)
    rows = harness.sweep(cfg, args.threads)
    _emit(harness.sweep_csv(rows), Path(cfg.out) if cfg.out else None)
    sys.stderr.write(harness.sweep_summary(rows))
    return 0


def cmd_classify(args, parser) -> int:
    trace = read_trace(args.trace)
    trace_id = trace.meta.get("trace_id") or args.trace.stem
    _emit(harness.classification_csv(trace, trace_id, args.eps, args.mode), args.out)
    return 0


def cmd_verify(args, parser) -> int:
    trace = read_trace(args.trace)
    trace_id = trace.meta.get("trace_id") or args.trace.stem
    modes = (args.mode,) if args.mode else MODES
    text, ok = harness.verification_summary(trace, trace_id, modes)
    _emit(text, args.out)
    return 0 if ok else 1


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "classify": cmd_classify, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args, parser)
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"smoothkmeans {args.command}: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
