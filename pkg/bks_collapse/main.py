"""
🚀 BKS COLLAPSE - COMMAND LINE
generate, verify, color and repro over certificate files.
Exit codes: 0 pass or uncolorable, 1 fail or colorable, 2 usage error, 3 precision exhausted.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from .algebra.geometry import Frame, Vector3
from .config import GeneratorSettings, PrecisionConfig, configure_logging
from .errors import (
    CertificateError,
    CollapseError,
    ColoringProblemError,
    ContradictoryPinError,
    ExhaustiveLimitError,
    ScalarError,
    TargetError,
    UndecidedSignError,
)
from .services.certificate_io import build_certificate, parse, serialize, unpack, verify_certificate
from .services.coloring_oracle import ColoringMode, check_consistency
from .services.instance_compiler import assemble_instance
from .services.worked_example import run_worked_example

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_PRECISION = 3


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bks-collapse",
                                     description="Collapse certificates for the BKS valuation conditions")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR (default: $BKS_LOG_LEVEL)")
    commands = parser.add_subparsers(dest="command", required=True)

    generate = commands.add_parser("generate", help="build derivations and the compiled instance")
    generate.add_argument("--seed-axis", default="all", choices=["1", "2", "3", "all"])
    generate.add_argument("--target", default=None, help="target vector, e.g. '(1, 1, sqrt(2))'")
    generate.add_argument("--precision-bits", type=int, default=256)
    generate.add_argument("--out", default=None, help="certificate file (default: standard output)")

    verify = commands.add_parser("verify", help="re-check every node, branch and context triple")
    verify.add_argument("file")
    verify.add_argument("--report", default="text", choices=["text", "json"])
    verify.add_argument("--precision-bits", type=int, default=256)
    verify.add_argument("--zero-tolerance", type=float, default=None,
                        help="endpoint tolerance for chain checks (default 1e-30)")

    color = commands.add_parser("color", help="decide 0/1 colorability of the compiled instance")
    color.add_argument("file")
    color.add_argument("--mode", default=ColoringMode.BACKTRACKING.value, choices=[m.value for m in ColoringMode])
    color.add_argument("--seed-axis", type=int, choices=[1, 2, 3], default=None,
                       help="restrict to the sub-instance of one seed")
    color.add_argument("--pin", action="append", default=[], help="id=val, or seed=1 with --seed-axis")

    repro = commands.add_parser("repro", help="print the worked chain example")
    repro.add_argument("--max-n", type=int, default=None)
    repro.add_argument("--build-chain", action="store_true")
    repro.add_argument("--precision-bits", type=int, default=256)
    return parser


def _precision(bits: int, zero_tolerance: Optional[float] = None) -> PrecisionConfig:
    extra = {} if zero_tolerance is None else {"zero_tolerance": zero_tolerance}
    try:
        return PrecisionConfig(precision_bits=bits, max_precision_bits=max(bits, 4096), **extra)
    except ValueError as e:
        raise UsageError(f"bad precision: {e}") from e


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e}") from e


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = _precision(args.precision_bits)
    axes = [1, 2, 3] if args.seed_axis == "all" else [int(args.seed_axis)]
    try:
        target = Vector3.parse(args.target) if args.target else None
        settings = GeneratorSettings(seed_axes=axes, target=str(target) if target else None, precision=cfg)
        frame = Frame.standard(1)
        derivations, instance = assemble_instance(frame, target, cfg, axes)
    except (TargetError, ScalarError) as e:
        raise UsageError(str(e)) from e

    text = serialize(build_certificate(frame, [derivations[axis] for axis in axes], instance, settings))
    points, triples = instance.counts
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"generated seeds {', '.join(map(str, axes))}: {points} points, {triples} triples -> {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = _precision(args.precision_bits, args.zero_tolerance)
    text = _read(args.file)
    try:
        cert = parse(text)
    except (CertificateError, ScalarError) as e:
        logger.error(f"❌ Unreadable certificate: {e}")
        print(f"certificate rejected: {e}")
        return EXIT_FAIL
    report = verify_certificate(cert, cfg)
    if args.report == "json":
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        print("\n".join(report.lines()))
    return EXIT_OK if report.passed else EXIT_FAIL


def _pins(pins: List[str], context, frame: Frame, seed_axis: Optional[int]) -> Dict[int, int]:
    resolved: Dict[int, int] = {}
    for pin in pins:
        name, sep, value = pin.partition("=")
        if not sep or value not in ("0", "1"):
            raise UsageError(f"pin {pin!r} is not id=0 or id=1")
        if name == "seed":
            if seed_axis is None:
                raise UsageError("--pin seed=... needs --seed-axis")
            index = context.index_of(frame.vectors[seed_axis - 1])
            if index is None:
                raise UsageError(f"the sub-instance has no point for seed axis {seed_axis}")
        else:
            try:
                index = context.point_of(name)
            except KeyError:
                raise UsageError(f"no context point holds vector {name!r}") from None
        if resolved.get(index, int(value)) != int(value):
            raise UsageError(f"point {index} pinned to both 0 and 1")
        resolved[index] = int(value)
    return resolved


def cmd_color(args: argparse.Namespace) -> int:
    text = _read(args.file)
    try:
        contents = unpack(parse(text))
    except (CertificateError, ScalarError) as e:
        logger.error(f"❌ Unreadable certificate: {e}")
        print(f"certificate rejected: {e}")
        return EXIT_FAIL
    context = contents.context
    if args.seed_axis is not None:
        context = context.restrict(f"seed{args.seed_axis}")
    pins = _pins(args.pin, context, contents.frame, args.seed_axis)
    problem = context.to_problem(ColoringMode(args.mode))
    cap = PrecisionConfig().exhaustive_point_cap
    try:
        result = check_consistency(problem, pins, cap)
    except (ExhaustiveLimitError, ContradictoryPinError, ColoringProblemError) as e:
        raise UsageError(str(e)) from e

    stats = result.stats
    print(result.verdict)
    print(f"points {problem.point_count}, triples {len(problem.triples)}, mode {problem.mode.value}")
    print(f"nodes {stats.nodes}, propagations {stats.propagations}, wall time {stats.wall_time:.3f}s"
          + (f", solutions {stats.solutions}" if stats.solutions is not None else ""))
    if result.colorable:
        ones = [problem.labels[i] for i, v in enumerate(result.witness) if v == 1]
        print(f"witness ones: {', '.join(ones) if ones else 'none'}")
        return EXIT_FAIL
    return EXIT_OK


def cmd_repro(args: argparse.Namespace) -> int:
    example = run_worked_example(_precision(args.precision_bits), args.max_n, args.build_chain)
    print("\n".join(example.lines()))
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "verify": cmd_verify,
    "color": cmd_color,
    "repro": cmd_repro,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        logger.error(f"❌ {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except UndecidedSignError as e:
        logger.error(f"❌ Precision exhausted: {e}")
        print(f"error: precision exhausted: {e}", file=sys.stderr)
        return EXIT_PRECISION
    except CollapseError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
