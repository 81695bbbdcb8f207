"""Command-line entry point: ``infocomplex {eval,transform,brute-cc,bounds}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bounds, search, transforms
from .documents import DocumentError, dumps, load_file, problem_from_doc, protocol_from_doc, protocol_to_doc
from .protocol import (
    CapExceeded,
    Caps,
    alternations,
    cc,
    error_probability,
    exchange_inputs,
    ic_leaves,
    ic_signal_sum,
    ic_transcript,
    sample_run,
)

EXIT_OK, EXIT_VALIDATION, EXIT_CAP, EXIT_BOUND = 0, 2, 3, 4
STAGES = ("make_safe", "split_signals", "round_signals", "bundle", "pipeline")


def _caps(text: str) -> Caps:
    try:
        depth, nodes = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected DEPTH,NODES") from None
    return Caps(depth, nodes)


def _emit(report: dict, fmt: str, out) -> None:
    if fmt == "document":
        out.write(dumps(report, indent=2) + "\n")
        return
    width = max((len(k) for k in report), default=0)
    for key, val in report.items():
        if isinstance(val, float):
            val = f"{val:.12g}"
        elif isinstance(val, (dict, list)):
            val = dumps(val)
        out.write(f"{key:<{width}}  {val}\n")


def _load_problem(path):
    return problem_from_doc(load_file(path))


def _load_protocol(path):
    return protocol_from_doc(load_file(path))


def cmd_eval(args, out) -> int:
    inst = _load_problem(args.problem)
    root = _load_protocol(args.protocol)
    internal = [ic_leaves(root, inst), ic_signal_sum(root, inst), ic_transcript(root, inst)]
    report = {
        "ic_leaves": internal[0],
        "ic_signal_sum": internal[1],
        "ic_transcript": internal[2],
        "ic_external": ic_transcript(root, inst, external=True),
        "cc": cc(root),
        "alternations": alternations(root),
        "error_prob": error_probability(root, inst),
        "max_discrepancy": max(abs(x - y) for x in internal for y in internal),
    }
    if args.seed is not None:
        (a, b), leaf, bits = sample_run(root, inst, args.seed)
        report["sample"] = {"a": a, "b": b, "out": leaf.out, "bits": list(bits)}
    _emit(report, args.format, out)
    return EXIT_OK


def cmd_transform(args, out) -> int:
    inst = _load_problem(args.problem)
    root = _load_protocol(args.protocol) if args.protocol else exchange_inputs(inst)
    caps = args.caps
    if args.stage == "pipeline":
        if args.alpha is None:
            raise ValueError("--alpha is required for the pipeline")
        res = transforms.pipeline(inst, args.alpha, seed=root, T=args.T, caps=caps)
        new, doc = res.protocol, res.to_doc()
        receipts = res.receipts + [res.overall]
    else:
        gamma = args.gamma
        if gamma is None and args.stage in ("make_safe", "split_signals", "round_signals"):
            raise ValueError(f"--gamma is required for {args.stage}")
        if args.stage == "make_safe":
            new, r = transforms.make_safe(root, inst, gamma, caps)
        elif args.stage == "split_signals":
            new, r = transforms.split_signals(root, inst, gamma, args.T, args.delta, caps)
        elif args.stage == "round_signals":
            if args.epsilon is None or args.delta is None:
                raise ValueError("--epsilon and --delta are required for round_signals")
            new, r = transforms.round_signals(root, inst, args.epsilon, gamma, args.delta, caps)
        else:
            if args.epsilon is None:
                raise ValueError("--epsilon is required for bundle")
            new, r = transforms.bundle(root, inst, args.epsilon, caps=caps)
        doc, receipts = r.to_doc(), [r]
    if args.out:
        Path(args.out).write_text(dumps(protocol_to_doc(new), indent=2) + "\n")
    if args.receipt:
        Path(args.receipt).write_text(dumps(doc, indent=2) + "\n")
    summary = {}
    for r in receipts:
        summary[f"{r.stage}.measured"] = r.measured
        summary[f"{r.stage}.certified"] = r.certified
        summary[f"{r.stage}.ok"] = r.ok
    _emit(summary if args.format == "table" else doc, args.format, out)
    return EXIT_OK if all(r.ok for r in receipts) else EXIT_BOUND


def cmd_brute_cc(args, out) -> int:
    inst = _load_problem(args.problem)
    eps = args.epsilon or 0.0
    res = search.ic_sandwich(inst, args.alpha or 0.0, eps, args.n, args.depth)
    if args.witness:
        Path(args.witness).write_text(dumps(protocol_to_doc(res.witness), indent=2) + "\n")
    report = res.as_dict()
    report["witness_cc"] = cc(res.witness)
    _emit(report, args.format, out)
    return EXIT_OK if report["lower"] <= report["upper"] + 1e-9 else EXIT_BOUND


def cmd_bounds(args, out) -> int:
    chain = bounds.full_chain(args.N, args.rho, args.alpha, args.c)
    if args.format == "document":
        _emit(chain.as_dict(), "document", out)
    else:
        width = max(len(k) for k, _ in chain.rows())
        for key, val in chain.rows():
            out.write(f"{key:<{width}}  {val}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="infocomplex", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=("table", "document"), default="table")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--caps", type=_caps, default=Caps(), metavar="DEPTH,NODES")

    p = sub.add_parser("eval", help="cost report of a protocol")
    p.add_argument("--problem", required=True)
    p.add_argument("--protocol", required=True)
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("transform", help="apply one transform stage or the whole pipeline")
    p.add_argument("--problem", required=True)
    p.add_argument("--protocol", help="seed protocol (default: exchange inputs)")
    p.add_argument("--stage", choices=STAGES, default="pipeline")
    p.add_argument("--alpha", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--T", type=int, default=16)
    p.add_argument("--out", help="write the transformed protocol here")
    p.add_argument("--receipt", help="write the receipt document here")
    common(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("brute-cc", help="exhaustive CC and the IC sandwich")
    p.add_argument("--problem", required=True)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--witness", help="write the witness protocol here")
    common(p)
    p.set_defaults(func=cmd_brute_cc)

    p = sub.add_parser("bounds", help="explicit parameter chain")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--c", type=float, default=1.0)
    common(p)
    p.set_defaults(func=cmd_bounds)
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except CapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (DocumentError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except transforms.StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP if isinstance(exc.cause, CapExceeded) else EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
