"""Benchmark programs, their host-side oracles, and the timing harness.

Each benchmark is generated guest source for a problem size plus an oracle
that computes the expected printed result in Python. A run checks the
guest output against the oracle and records a SHA-256 digest of the output,
so rows with rewriting on and off can be compared directly.
"""

from __future__ import annotations

import hashlib
import io
import os
import platform
import statistics
import time
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

from .values import format_number
from .vm import LanguageState, Status


@dataclass(frozen=True)
class BenchSpec:
    name: str
    size: int
    program: str
    expected: str


def _loop(n: int) -> str:
    return f"for i = 1 to {n} next\n? i - 1\n"


def _math_max(n: int) -> str:
    return f"s = 0\nfor i = 1 to {n}\n    s = s + max(i, {n} - i)\nnext\n? s\n"


def _func_call(n: int) -> str:
    return f"c = 0\nfor i = 1 to {n}\n    c = c + f()\nnext\n? c\n\nfunc f\n    return 1\n"


def _fib_dp(n: int) -> str:
    return (f"f = [1, 1]\nfor i = 3 to {n}\n    add(f, f[i - 1] + f[i - 2])\nnext\n"
            f"? f[{n}]\n")


def _fib_rec(n: int) -> str:
    return (f"? fib({n})\n\nfunc fib n\n    if n <= 2\n        return 1\n    ok\n"
            f"    return fib(n - 1) + fib(n - 2)\n")


def _list_fill(n: int) -> str:
    return f"a = []\nfor i = 1 to {n}\n    add(a, i)\nnext\n? len(a)\n"


def _oracle_fib(n: int) -> float:
    a, b = 1.0, 1.0
    for _ in range(max(0, n - 2)):
        a, b = b, a + b
    return b


def _oracle_math_max(n: int) -> float:
    s = 0.0
    for i in range(1, n + 1):
        s += max(i, n - i)
    return s


# name -> (program generator, oracle returning the printed number)
BENCHMARKS: dict[str, tuple[Callable[[int], str], Callable[[int], float]]] = {
    "Loop": (_loop, lambda n: float(n)),
    "MathMax": (_math_max, _oracle_math_max),
    "FuncCall": (_func_call, lambda n: float(n)),
    "FibDP": (_fib_dp, _oracle_fib),
    "FibRec": (_fib_rec, _oracle_fib),
    "ListFill": (_list_fill, lambda n: float(n)),
}

DEFAULT_SIZES = {"Loop": 500_000, "MathMax": 100_000, "FuncCall": 100_000, "FibDP": 1000,
                 "FibRec": 25, "ListFill": 100_000}


def make_spec(name: str, size: int) -> BenchSpec:
    if name not in BENCHMARKS:
        raise KeyError(f"unknown benchmark {name!r}")
    if size < 1:
        raise ValueError("size must be positive")
    gen, oracle = BENCHMARKS[name]
    return BenchSpec(name, size, gen(size), format_number(oracle(size)) + "\n")


@dataclass
class BenchRow:
    name: str
    size: int
    wall_ms: float
    rewriting: bool
    digest: str
    ok: bool
    error: str = ""


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)
    environment: str = ""


def environment_note() -> str:
    return (f"python {platform.python_version()} on {platform.machine()} "
            f"({platform.system()}), {os.cpu_count()} cpu(s)")


def run_once(spec: BenchSpec, *, rewriting: bool = True, profile: str = "desktop"):
    """Run one benchmark in a fresh state: ``(wall_ms, output, error)``.

    Timing covers execution only; compilation happens first.
    """
    out = io.StringIO()
    state = LanguageState(profile, output=out, rewriting=rewriting)
    try:
        image = state.compile(spec.program)
        start = time.perf_counter()
        status = state.run(image)
        wall = (time.perf_counter() - start) * 1000.0
        error = ""
        if status is Status.Errored:
            err = state.error
            error = getattr(getattr(err, "code", None), "value", None) or type(err).__name__
        return wall, out.getvalue(), error
    finally:
        state.destroy()


def digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def run_benchmarks(names, sizes: dict[str, int] | None = None, *,
                   rewriting=(True, False), repeat: int = 5,
                   profile: str = "desktop") -> BenchReport:
    """Time each benchmark ``repeat`` times per rewriting flag; rows hold the median."""
    sizes = sizes or {}
    report = BenchReport(environment=environment_note() + f", profile {profile}")
    for name in names:
        spec = make_spec(name, sizes.get(name, DEFAULT_SIZES[name]))
        for flag in rewriting:
            times, outputs, error = [], set(), ""
            for _ in range(repeat):
                wall, output, error = run_once(spec, rewriting=flag, profile=profile)
                times.append(wall)
                outputs.add(output)
                if error:
                    break
            output = outputs.pop() if len(outputs) == 1 else ""
            report.rows.append(BenchRow(name, spec.size, statistics.median(times), flag,
                                        digest(output), not error and output == spec.expected
                                        and not outputs, error))
    return report


def format_report(report: BenchReport, sep: str = "\t") -> str:
    lines = [f"# {report.environment}",
             sep.join(("name", "size", "wall_ms", "rewriting", "ok", "digest"))]
    for r in report.rows:
        status = r.error if r.error else ("ok" if r.ok else "MISMATCH")
        lines.append(sep.join((r.name, str(r.size), f"{r.wall_ms:.1f}",
                               "on" if r.rewriting else "off", status, r.digest[:16])))
    return "\n".join(lines) + "\n"


def _worker(args) -> tuple[float, str]:
    name, size, rewriting = args
    wall, output, _ = run_once(make_spec(name, size), rewriting=rewriting)
    return wall, output


def parallel_states(name: str = "FibRec", size: int = 25, states: int = 4, *,
                    repeat: int = 5, mode: str = "process") -> dict:
    """Compare one state against ``states`` states running at once.

    ``mode`` is ``"process"`` (one state per worker process) or ``"thread"``
    (one state per thread; these share the host interpreter lock). Returns
    median wall times in ms, their ratio and the outputs seen.
    """
    spec = make_spec(name, size)
    single = statistics.median(run_once(spec)[0] for _ in range(repeat))
    pool_cls = ProcessPoolExecutor if mode == "process" else ThreadPoolExecutor
    outputs = set()
    walls = []
    with pool_cls(max_workers=states) as ex:
        list(ex.map(_worker, [(name, size, True)] * states))  # warm the workers
        for _ in range(repeat):
            start = time.perf_counter()
            results = list(ex.map(_worker, [(name, size, True)] * states))
            walls.append((time.perf_counter() - start) * 1000.0)
            outputs.update(out for _, out in results)
    parallel = statistics.median(walls)
    return {"single_ms": single, "parallel_ms": parallel, "ratio": parallel / single,
            "states": states, "mode": mode, "cpus": os.cpu_count() or 1,
            "outputs_ok": outputs == {spec.expected}}


# -- steps-tree linearity ---------------------------------------------------

_BLOCKS = (
    "x{k} = {k} * 2\n? x{k}\n",
    "if s > {k}\n    put \"big\"\nbut s = {k}\n    put \"same\"\nelse\n    put \"small\"\nok\n",
    "for i = 1 to 3\n    s = s + i\nnext\n",
    "while s > 100\n    s = s - 100\nend\n",
    "# note {k}\nf(s, {k})\n",
    "switch {k} % 3\non 1\n    ? 1\nother\n    ? 0\noff\n",
)


def generate_steps_program(target_steps: int, seed: int = 0) -> str:
    """Guest source whose steps tree has roughly ``target_steps`` steps."""
    import random
    rng = random.Random(seed)
    weights = (2, 6, 2, 2, 2, 5)  # steps produced by each block
    parts = ["s = 0\n"]
    steps = 2
    k = 0
    while steps < target_steps:
        choice = rng.randrange(len(_BLOCKS))
        parts.append(_BLOCKS[choice].format(k=k))
        steps += weights[choice]
        k += 1
    parts.append("func f a, b\n    return a + b\n")
    return "".join(parts)


def steps_linearity(targets, *, repeat: int = 3, seed: int = 0) -> list[tuple[int, float, int]]:
    """For each target size: ``(steps, conversion seconds, .stp bytes)``.

    Conversion time covers text to steps plus steps back to text. Repeats run
    round-robin over all sizes after one warm-up pass, and each size keeps its
    best time, so a slow spell on the host cannot single out one size. The
    garbage collector is paused while timing, as ``timeit`` does.
    """
    import gc

    from . import stpfile
    from .steps import steps_to_text, text_to_steps
    sources = [generate_steps_program(t, seed + n) for n, t in enumerate(targets)]
    trees = [text_to_steps(src) for src in sources]
    best = [float("inf")] * len(sources)
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        for _ in range(repeat):
            for i, source in enumerate(sources):
                start = time.perf_counter()
                steps_to_text(text_to_steps(source))
                best[i] = min(best[i], time.perf_counter() - start)
    finally:
        if gc_was_enabled:
            gc.enable()
    return [(tree.step_count, secs, len(stpfile.dumps(tree).encode("utf-8")))
            for tree, secs in zip(trees, best)]
