"""Command-line front end.

    ringlet [run] FILE.ring
    ringlet --tokens FILE.ring
    ringlet --rules FILE.ring
    ringlet --emit-object FILE.ring OUT.ringo
    ringlet --run-object FILE.ringo
    ringlet --eval CODE
    ringlet to-visual IN.ring OUT.stp
    ringlet to-text IN.stp OUT.ring
    ringlet bench [NAME ...] [--sizes N ...] [--report PATH]
    ringlet --version

Exit codes: 0 success, 1 compile error, 2 runtime error, 3 I/O error,
64 usage error. Diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .errors import (CompileError, ObjectFileError, RingletError, RingRuntimeError, ScanError,
                     StepsError)

EXIT_OK, EXIT_COMPILE, EXIT_RUNTIME, EXIT_IO, EXIT_USAGE = 0, 1, 2, 3, 64

SUBCOMMANDS = ("run", "to-visual", "to-text", "bench")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _stage_parser() -> _Parser:
    p = _Parser(prog="ringlet", description="ringlet language toolchain", add_help=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--tokens", metavar="FILE", help="print the token stream and stop")
    g.add_argument("--rules", metavar="FILE", help="print applied grammar rules and stop")
    g.add_argument("--emit-object", nargs=2, metavar=("FILE", "OUT"),
                   help="compile FILE to an object file")
    g.add_argument("--run-object", metavar="FILE", help="run an object file")
    g.add_argument("--eval", metavar="CODE", help="run CODE")
    g.add_argument("--version", action="store_true", help="print the version")
    return p


def _sub_parser(name: str) -> _Parser:
    p = _Parser(prog=f"ringlet {name}")
    if name == "run":
        p.add_argument("file")
    elif name == "to-visual":
        p.add_argument("source")
        p.add_argument("out")
    elif name == "to-text":
        p.add_argument("stp")
        p.add_argument("out")
    else:
        p.add_argument("names", nargs="*", help="benchmarks to run (default: all)")
        p.add_argument("--sizes", nargs="+", type=int, metavar="N",
                       help="problem sizes (one for all, or one per benchmark)")
        p.add_argument("--report", metavar="PATH", help="write the report table here")
        p.add_argument("--repeat", type=int, default=5, help="timed runs per row")
        p.add_argument("--no-rewriting", action="store_true",
                       help="only run with instruction rewriting off")
    return p


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _finish(state) -> int:
    from .vm import Status
    try:
        if state.status is Status.Errored:
            err = state.error
            _err(f"runtime error: {err}")
            return EXIT_COMPILE if isinstance(err, CompileError) else EXIT_RUNTIME
        return EXIT_OK
    finally:
        sys.stdout.flush()
        state.destroy()


def cmd_run(path: str) -> int:
    from .loader import run_file
    return _finish(run_file(path))


def cmd_eval(code: str) -> int:
    from .vm import LanguageState
    state = LanguageState()
    state.eval(code)
    return _finish(state)


def cmd_run_object(path: str) -> int:
    from .loader import run_object
    return _finish(run_object(path))


def cmd_emit_object(src: str, out: str) -> int:
    from .loader import compile_to_object
    compile_to_object(src, out)
    return EXIT_OK


def cmd_tokens(path: str) -> int:
    from .loader import token_dump
    for line in token_dump(path):
        print(line)
    return EXIT_OK


def cmd_rules(path: str) -> int:
    from .loader import rule_dump
    for name in rule_dump(path):
        print(name)
    return EXIT_OK


def cmd_to_visual(src: str, out: str) -> int:
    from .loader import read_source
    from .scanner import SyntaxConfig, auto_syntax_lookup
    from .steps import text_to_steps
    from .stpfile import write_stp
    config = SyntaxConfig()
    auto_syntax_lookup(src, config)
    tree = text_to_steps(read_source(src), config, source_name=src)
    write_stp(tree, out)
    return EXIT_OK


def cmd_to_text(src: str, out: str) -> int:
    from .steps import steps_to_text
    from .stpfile import read_stp
    text = steps_to_text(read_stp(src))
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return EXIT_OK


def cmd_bench(ns: argparse.Namespace) -> int:
    from .bench import BENCHMARKS, DEFAULT_SIZES, format_report, run_benchmarks
    names = ns.names or list(BENCHMARKS)
    unknown = [n for n in names if n not in BENCHMARKS]
    if unknown:
        raise UsageError(f"unknown benchmark(s): {', '.join(unknown)}; "
                         f"choose from {', '.join(BENCHMARKS)}")
    if ns.sizes is None:
        sizes = {n: DEFAULT_SIZES[n] for n in names}
    elif len(ns.sizes) == 1:
        sizes = {n: ns.sizes[0] for n in names}
    elif len(ns.sizes) == len(names):
        sizes = dict(zip(names, ns.sizes))
    else:
        raise UsageError("--sizes takes one size or one per benchmark")
    flags = (False,) if ns.no_rewriting else (True, False)
    report = run_benchmarks(names, sizes, rewriting=flags, repeat=ns.repeat)
    text = format_report(report)
    if ns.report:
        with open(ns.report, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _dispatch(argv: list[str]) -> int:
    if not argv:
        raise UsageError("ringlet: missing command (try --help)")
    head = argv[0]
    if head in SUBCOMMANDS:
        ns = _sub_parser(head).parse_args(argv[1:])
        if head == "run":
            return cmd_run(ns.file)
        if head == "to-visual":
            return cmd_to_visual(ns.source, ns.out)
        if head == "to-text":
            return cmd_to_text(ns.stp, ns.out)
        return cmd_bench(ns)
    if head.startswith("-"):
        ns = _stage_parser().parse_args(argv)
        if ns.version:
            print(f"ringlet {__version__}")
            return EXIT_OK
        if ns.tokens:
            return cmd_tokens(ns.tokens)
        if ns.rules:
            return cmd_rules(ns.rules)
        if ns.emit_object:
            return cmd_emit_object(*ns.emit_object)
        if ns.run_object:
            return cmd_run_object(ns.run_object)
        return cmd_eval(ns.eval)
    if len(argv) != 1:
        raise UsageError("ringlet: expected a single source file")
    return cmd_run(head)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        return _dispatch(argv)
    except UsageError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    except (CompileError, ScanError) as exc:
        _err(f"compile error: {exc}")
        return EXIT_COMPILE
    except RingRuntimeError as exc:
        _err(f"runtime error: {exc}")
        return EXIT_RUNTIME
    except (OSError, ObjectFileError, StepsError) as exc:
        _err(f"i/o error: {exc}")
        return EXIT_IO
    except RingletError as exc:
        _err(f"error: {exc}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
