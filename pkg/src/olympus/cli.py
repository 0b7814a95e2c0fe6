"""Command-line driver: parse, verify, run passes, write artifacts.

Exit codes: 0 success, 1 for input or pass failures (diagnostics on stderr
with an `error:` prefix), 2 for usage errors.  Output bytes depend only on
the inputs, never on time or environment.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .emit import emit_build_plan, emit_cfg, emit_dot, emit_host_api, emit_host_api_descriptor
from .errors import OlympusError, ParseError, VerificationError
from .ir import parse_module_lines, print_module, verify_module
from .pipeline import DEFAULT_PIPELINE, parse_pipeline, run_pipeline
from .platform import load_platform
from .plm import load_lifetimes

EMIT_TARGETS = ("ir", "cfg", "dot", "plan", "api", "report")

OUTPUT_FILES = {
    "ir": "out.mlir",
    "cfg": "link.cfg",
    "dot": "graph.dot",
    "plan": "build_plan.json",
    "api": "host_api.h",
    "report": "report.json",
}


def _error_prefix() -> str:
    if os.environ.get("OLYMPUS_COLOR") == "1":
        return "\x1b[31merror:\x1b[0m"
    return "error:"


def _fail(message: str) -> int:
    print(f"{_error_prefix()} {message}", file=sys.stderr)
    return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="olympus-opt",
        description="Analyze and transform a dataflow system graph, then emit build artifacts.",
    )
    parser.add_argument("input", help="module source (.mlir)")
    parser.add_argument("--platform", required=True, help="platform description (.toml)")
    parser.add_argument("--lifetimes", help="buffer lifetime sidecar for plm sharing")
    parser.add_argument(
        "--passes",
        default=None,
        help=f"pass pipeline (default: {DEFAULT_PIPELINE}); empty string runs none",
    )
    parser.add_argument(
        "--emit",
        default="ir",
        help=f"comma-separated artifacts from {{{','.join(EMIT_TARGETS)}}} (default: ir)",
    )
    parser.add_argument("--out", default=".", help="output directory (default: .)")
    parser.add_argument("--seed", type=int, default=0, help="reserved; all passes are deterministic")
    parser.add_argument(
        "--kernel-impl",
        action="append",
        default=[],
        metavar="NAME=PATH",
        help="record a kernel implementation file in the build plan (repeatable)",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    targets = [t for t in (s.strip() for s in args.emit.split(",")) if t]
    if not targets:
        parser.error("--emit needs at least one target")
    for target in targets:
        if target not in EMIT_TARGETS:
            parser.error(f"unknown emit target '{target}' (choose from {', '.join(EMIT_TARGETS)})")

    kernel_impls: dict[str, str] = {}
    for item in args.kernel_impl:
        name, sep, path = item.partition("=")
        if not sep or not name or not path:
            parser.error(f"--kernel-impl wants NAME=PATH, got '{item}'")
        kernel_impls[name] = path

    try:
        with open(args.input, "r", encoding="utf-8") as fh:
            source = fh.read()
    except OSError as exc:
        return _fail(f"cannot read {args.input}: {exc.strerror or exc}")

    try:
        module, op_lines = parse_module_lines(source)
    except ParseError as exc:
        location = args.input
        if exc.line is not None:
            location += f":{exc.line}"
            if exc.col is not None:
                location += f":{exc.col}"
        return _fail(f"{location}: {exc.message}")

    diags = verify_module(module)
    if diags:
        for diag in diags:
            line = op_lines[diag.op_index] if diag.op_index < len(op_lines) else "?"
            print(
                f"{_error_prefix()} {args.input}:{line}: {diag.message} [{diag.rule}]",
                file=sys.stderr,
            )
        return 1

    try:
        platform = load_platform(args.platform)
    except OSError as exc:
        return _fail(f"cannot read {args.platform}: {exc.strerror or exc}")
    except OlympusError as exc:
        return _fail(str(exc))

    lifetimes = None
    if args.lifetimes:
        try:
            lifetimes = load_lifetimes(args.lifetimes)
        except OSError as exc:
            return _fail(f"cannot read {args.lifetimes}: {exc.strerror or exc}")
        except ParseError as exc:
            location = args.lifetimes + (f":{exc.line}" if exc.line is not None else "")
            return _fail(f"{location}: {exc.message}")

    pipeline_text = DEFAULT_PIPELINE if args.passes is None else args.passes
    try:
        pipeline = parse_pipeline(pipeline_text)
        module, report = run_pipeline(module, platform, pipeline, lifetimes=lifetimes)
    except VerificationError as exc:
        return _fail(str(exc))
    except OlympusError as exc:
        return _fail(str(exc))

    try:
        os.makedirs(args.out, exist_ok=True)
        for target in targets:
            path = os.path.join(args.out, OUTPUT_FILES[target])
            if target == "ir":
                text = print_module(module)
            elif target == "cfg":
                text = emit_cfg(module, platform)
            elif target == "dot":
                text = emit_dot(module)
            elif target == "plan":
                text = emit_build_plan(
                    module, platform, sharing=report.sharing, kernel_impls=kernel_impls
                )
            elif target == "api":
                text = emit_host_api(module)
                with open(os.path.join(args.out, "host_api.json"), "w", encoding="utf-8") as fh:
                    fh.write(emit_host_api_descriptor(module))
            else:
                text = json.dumps(report.as_dict(), indent=2) + "\n"
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
    except OlympusError as exc:
        return _fail(str(exc))
    except OSError as exc:
        return _fail(f"cannot write outputs: {exc.strerror or exc}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
