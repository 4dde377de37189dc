"""Command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 the algorithm terminated
without output, 3 a verified inequality was violated.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..channel import EMPTY, ChannelConfig, derive_rng, sample_trace
from ..exceptions import ReconstructionTerminated
from ..lp_recon import reconstruct_lp_large, reconstruct_lp_small
from ..spider_recon import best_match, reconstruct_spider_large_depth, reconstruct_spider_rows
from ..string_recon import censored_reconstruct, exhaustive_best_match_string
from ..ted_recon import reconstruct_ted_large, reconstruct_ted_small
from ..trees import Node, TreeShape, build_tree, tree_from_obj, tree_to_obj
from .bounds import verify_bounds
from .experiment import load_config, run_experiment

EXIT_OK, EXIT_USAGE, EXIT_TERMINATED, EXIT_VIOLATION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_shape(text: str) -> TreeShape:
    """Inline JSON, a path to a JSON file, or ``kary:k,d`` / ``spider:n,d``."""
    path = Path(text)
    if path.is_file():
        text = path.read_text()
    text = text.strip()
    try:
        if text.startswith("{"):
            return TreeShape.from_dict(json.loads(text))
        kind, _, args = text.partition(":")
        a, b = (int(v) for v in args.split(","))
        if kind == "kary":
            return TreeShape.kary(a, b)
        if kind == "spider":
            return TreeShape.spider(a, b)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot parse shape {text!r}: {exc}") from exc
    raise UsageError(f"cannot parse shape {text!r}")


def parse_labels(text: str, n: int, seed: int = 0) -> np.ndarray:
    """A bit string, ``0x``-prefixed hex (most significant bit first) or ``random``."""
    if text == "random":
        return derive_rng(seed, 0).integers(0, 2, n).astype(np.int8)
    if text.lower().startswith("0x"):
        value = int(text, 16)
        if value >= 2**n:
            raise UsageError(f"hex labels {text} do not fit in {n} bits")
        return np.array([(value >> (n - 1 - b)) & 1 for b in range(n)], dtype=np.int8)
    if len(text) != n or set(text) - {"0", "1"}:
        raise UsageError(f"expected {n} binary labels, got {text!r}")
    return np.array([int(ch) for ch in text], dtype=np.int8)


def bits(labels) -> str:
    return "".join(str(int(b)) for b in labels)


def cmd_generate(args) -> int:
    shape = parse_shape(args.shape)
    labels = parse_labels(args.labels, shape.n, args.seed)
    tree = build_tree(shape, labels)
    print(json.dumps({"shape": shape.to_dict(), "labels": bits(labels), "tree": tree_to_obj(tree)}, separators=(",", ":")))
    return EXIT_OK


def cmd_corrupt(args) -> int:
    shape = parse_shape(args.shape)
    labels = parse_labels(args.labels, shape.n, args.seed)
    tree = build_tree(shape, labels)
    try:
        cfg = ChannelConfig(args.model, args.q, args.gamma, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    for index in range(args.count):
        trace = sample_trace(tree, cfg, derive_rng(args.seed, 1, index))
        print("null" if trace is EMPTY else json.dumps(tree_to_obj(trace), separators=(",", ":")))
    return EXIT_OK


def _read_traces(stream) -> list:
    out = []
    for line in stream:
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        if obj is None:
            out.append(EMPTY)
        elif isinstance(obj, dict):
            out.append(tree_from_obj(obj))
        elif isinstance(obj, list):
            out.append([int(b) for b in obj])
        else:
            raise UsageError(f"unrecognized trace line {line[:40]!r}")
    if not out:
        raise UsageError("no traces on standard input")
    return out


def _path_bits(trace) -> list[int]:
    if not isinstance(trace, Node):
        return list(trace)
    out = []
    node = trace
    while node.children:
        node = node.children[0]
        out.append(node.label)
    return out


def cmd_reconstruct(args) -> int:
    shape = parse_shape(args.shape)
    traces = _read_traces(sys.stdin)
    model, algo = args.model, args.algo
    if model == "string":
        strings = [t if t is EMPTY else _path_bits(t) for t in traces]
        if any(len(s) > shape.n for s in strings if s is not EMPTY):
            raise UsageError(f"a trace is longer than the string length {shape.n}")
        if args.gamma > 0 or any(s is EMPTY for s in strings):
            out = censored_reconstruct(strings, shape.n, args.q, args.gamma)
        else:
            out = exhaustive_best_match_string(strings, shape.n, args.q)
        print(bits(out))
        return EXIT_OK
    trees = [t for t in traces if t is not EMPTY]
    if any(not isinstance(t, Node) for t in trees):
        raise UsageError("tree models need JSON tree traces")
    table = {
        ("ted", "large"): reconstruct_ted_large,
        ("ted", "small"): reconstruct_ted_small,
        ("lp", "large"): reconstruct_lp_large,
        ("lp", "small"): reconstruct_lp_small,
        ("spider", "largedepth"): reconstruct_spider_large_depth,
        ("spider", "rows"): reconstruct_spider_rows,
    }
    if (model, algo) == ("spider", "meanbased"):
        out = best_match(trees, shape, args.q, rng=derive_rng(args.seed, 2)).labels
    elif (model, algo) in table:
        out = table[model, algo](trees, shape, args.q)
    else:
        raise UsageError(f"no algorithm {algo!r} for model {model!r}")
    print(bits(out))
    return EXIT_OK


def cmd_experiment(args) -> int:
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError, TypeError, KeyError) as exc:
        raise UsageError(f"bad experiment config: {exc}") from exc
    if args.workers is not None:
        cfg.workers = args.workers
    report = run_experiment(cfg)
    body = report.csv_body()
    if args.csv:
        Path(args.csv).write_text(body)
    else:
        sys.stdout.write(body)
    if args.json:
        Path(args.json).write_text(report.to_json() + "\n")
    return EXIT_OK


def cmd_verify_bounds(args) -> int:
    grid = {}
    if args.config:
        try:
            grid = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"bad bounds config: {exc}") from exc
    report = verify_bounds(grid)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK if report.total_violations == 0 else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="treetrace", description="tree trace reconstruction toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="build a labeled tree")
    p.add_argument("--shape", required=True)
    p.add_argument("--labels", default="random")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("corrupt", help="emit traces of a labeled tree, one JSON line each")
    p.add_argument("--shape", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--model", choices=["ted", "lp"], default="ted")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=1)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("reconstruct", help="reconstruct labels from traces on standard input")
    p.add_argument("--model", choices=["ted", "lp", "spider", "string"], required=True)
    p.add_argument("--algo", default=None, help="large|small (ted, lp); meanbased|largedepth|rows (spider)")
    p.add_argument("--shape", required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("experiment", help="run a seeded success-rate experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--csv")
    p.add_argument("--json")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("verify-bounds", help="check the analytic inequalities on a grid")
    p.add_argument("--config")
    p.set_defaults(func=cmd_verify_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"treetrace: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ReconstructionTerminated as exc:
        print(f"treetrace: terminated: {exc}", file=sys.stderr)
        return EXIT_TERMINATED
    except ValueError as exc:
        print(f"treetrace: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
