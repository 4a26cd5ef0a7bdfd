"""End-to-end acceptance checks, one test per criterion.

Each test records a ``CRITERION n: PASS|FAIL`` line that is printed in the
terminal summary (see conftest.py) before it asserts.
"""

import io
import os
import random
import time

import numpy as np
import pytest
from conftest import (ACCEPTANCE_LINES, CORPUS, CORPUS_FILES, HEALED_ONLY, expected_output,
                      output_of)

from ringlet import objfile
from ringlet.bench import (BENCHMARKS, DEFAULT_SIZES, digest, make_spec, parallel_states,
                           run_benchmarks, steps_linearity)
from ringlet.bytecode import INSTRUCTION_WIDTH
from ringlet.errors import ErrorCode, Truncated
from ringlet.flexlist import FlexList
from ringlet.loader import compile_file, compile_to_object, run_file, run_object
from ringlet.stats import correlation_report
from ringlet.steps import steps_to_text, text_to_steps
from ringlet.stpfile import dumps, loads
from ringlet.vm import LanguageState, Status

VALID = [p for p in CORPUS_FILES if p.name not in HEALED_ONLY]


def record(number: int, ok: bool, summary: str) -> None:
    line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'}  {summary}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def run_path_text(source: str, path) -> str:
    """Run ``source`` as if it lived at ``path`` (so relative loads resolve)."""
    out = io.StringIO()
    st = LanguageState(output=out)
    st.run(st.compile(source, str(path)))
    assert st.status is Status.Halted, st.error
    st.destroy()
    return out.getvalue()


# -- 1 ------------------------------------------------------------------------

def test_c01_dsl_golden_transcript():
    src = (CORPUS / "13_dsl.ring").read_text(encoding="utf-8")
    start = time.perf_counter()
    out = output_of(src)
    elapsed = time.perf_counter() - start
    exact = out == "Sum: 1520\nImportant:\n400\n600\n"
    ok = exact and elapsed < 1.0
    record(1, ok, f"DSL transcript byte-exact={exact} in {elapsed:.3f} s")
    assert ok


# -- 2 ------------------------------------------------------------------------

AGE_BODY = [
    ("put", ' "Enter your age: "'),
    ("get", " age"),
    ("if", " age < 18"),
    ("put", ' "You are young" + nl'),
    ("but", " age < 60"),
    ("put", ' "You are an adult" + nl'),
    ("", "else"),
    ("put", ' "You are a senior" + nl'),
    ("ok", ""),
]
ARABIC = {"put": "اطبع", "get": "ادخل", "if": "لو", "but": "اولو", "ok": "انتهى"}
REMAPS = "".join(f"ChangeRingKeyword {k} {v}\n" for k, v in ARABIC.items())


def age_program(words: dict) -> str:
    return "".join(words.get(k, k) + rest + "\n" for k, rest in AGE_BODY)


def run_with_input(runner, value: str) -> str:
    out = io.StringIO()
    st = runner(output=out, input=io.StringIO(value + "\n"))
    assert st.status is Status.Halted, st.error
    return out.getvalue()


def test_c02_syntax_translation_equivalence(tmp_path):
    english = age_program({})
    inline = REMAPS + age_program(ARABIC)
    (tmp_path / "ringsyntax.ring").write_text(REMAPS, encoding="utf-8")
    (tmp_path / "age.ring").write_text(age_program(ARABIC), encoding="utf-8")
    checks = []
    for value, expected in (("15", "young"), ("25", "an adult")):
        outs = [
            run_with_input(lambda **kw: _run_text(english, **kw), value),
            run_with_input(lambda **kw: _run_text(inline, **kw), value),
            run_with_input(lambda **kw: run_file(tmp_path / "age.ring", **kw), value),
        ]
        checks.append(outs[0] == f"Enter your age: You are {expected}\n"
                      and outs[0] == outs[1] == outs[2])
    ok = all(checks)
    record(2, ok, f"English, inline-remapped and ringsyntax.ring variants agree for 15 and 25: "
                  f"{checks}")
    assert ok


def _run_text(source, **opts):
    st = LanguageState(**opts)
    st.run(st.compile(source))
    return st


# -- 3 ------------------------------------------------------------------------

SETUP = "a = [10, 20, 30]\n"
CASES = [
    ("PUT 1", "1"),
    ("Put 1", "1"),
    ("pUt 1", "1"),
    ("IF 1 PUT 1 OK", "1"),
    ("If 0 put 1 Else put 2 Ok", "2"),
    ("FOR i = 1 TO 3 put i NEXT", "123"),
    ("For I = 1 To 2 put i Next", "12"),
    ("x = 5 put X", "5"),
    ("i = 0 WHILE i < 2 i = i + 1 END put I", "2"),
    ("SWITCH 2 ON 2 put 2 OFF", "2"),
    ("F()\nFUNC f put 1", "1"),
    ("o = NEW c put o.X\nCLASS C x = 7", "7"),
    (SETUP + "put a[1]", "10"),
    (SETUP + "put A[len(a)]", "30"),
    (SETUP + "put a[3]", "30"),
    (SETUP + "put a[0]", ErrorCode.IndexOutOfRange),
    (SETUP + "put a[len(a) + 1]", ErrorCode.IndexOutOfRange),
    ('b = ["x"] put b[1]', "x"),
    ('b = ["x"] put b[2]', ErrorCode.IndexOutOfRange),
    ("b = [] put b[1]", ErrorCode.IndexOutOfRange),
]


def test_c03_case_and_indexing_laws():
    assert len(CASES) == 20
    failures = []
    for src, expected in CASES:
        out = io.StringIO()
        st = LanguageState(output=out)
        st.run(st.compile(src))
        if isinstance(expected, ErrorCode):
            good = st.status is Status.Errored and st.error.code is expected
        else:
            good = st.status is Status.Halted and out.getvalue() == expected
        if not good:
            failures.append(src)
    ok = not failures
    record(3, ok, f"{len(CASES) - len(failures)}/{len(CASES)} case and index cases hold")
    assert ok, failures


# -- 4 ------------------------------------------------------------------------

def _list_workload(configure, ops: int = 100_000, seed: int = 7):
    rng = random.Random(seed)
    oracle = list(range(300))
    lst = FlexList(oracle)
    configure(lst)
    rebuild = getattr(configure, "rebuild", None)
    for step in range(ops):
        n = len(oracle)
        r = rng.random()
        if n == 0 or (n < 600 and r < 0.3) or n < 100:
            pos = rng.randint(0, n)  # insert after item ``pos``
            value = rng.randint(-10**6, 10**6)
            lst.insert(pos, value)
            oracle.insert(pos, value)
        elif r < 0.6 or n > 600:
            pos = rng.randint(1, n)
            lst.delete(pos)
            del oracle[pos - 1]
        else:
            pos = rng.randint(1, n)
            if lst.get(pos) != oracle[pos - 1]:
                return False
        if rebuild and step % 64 == 0:
            rebuild(lst)
    return lst.to_list() == oracle and len(lst) == len(oracle)


def _cache_off(lst):
    lst.configure(cache=False)


def _index_on(lst):
    lst.configure(build_index=True)


# mutations drop the index table, so the workload rebuilds it periodically
_index_on.rebuild = _index_on


def _shared_on(lst):
    lst.configure(shared_mode=True)


def test_c04_list_oracle_equivalence():
    configs = {"cache on": lambda lst: None, "cache off": _cache_off,
               "index_table on": _index_on, "shared_mode on": _shared_on}
    results = {}
    for name, configure in configs.items():
        start = time.perf_counter()
        same = _list_workload(configure)
        results[name] = (same, time.perf_counter() - start)
    ok = all(same and secs < 10 for same, secs in results.values())
    record(4, ok, "10^5 ops vs dynamic-array oracle: " + ", ".join(
        f"{k}={'match' if s else 'MISMATCH'} {t:.1f}s" for k, (s, t) in results.items()))
    assert ok


# -- 5 ------------------------------------------------------------------------

def test_c05_rewrite_transparency():
    start = time.perf_counter()
    report = run_benchmarks(list(BENCHMARKS), DEFAULT_SIZES, rewriting=(True, False), repeat=1)
    elapsed = time.perf_counter() - start
    same = {}
    for name in BENCHMARKS:
        rows = [r for r in report.rows if r.name == name]
        same[name] = len({r.digest for r in rows}) == 1 and all(r.ok for r in rows)
    fib20 = make_spec("FibRec", 20)
    fib_ok = run_benchmarks(["FibRec"], {"FibRec": 20}, rewriting=(True,), repeat=1).rows[0]
    spot = fib_ok.ok and fib_ok.digest == digest("6765\n") and fib20.expected == "6765\n"
    ok = all(same.values()) and spot and elapsed < 60
    record(5, ok, f"digests equal on/off for {sum(same.values())}/6 benchmarks at full size, "
                  f"FibRec(20)=6765 {spot}, {elapsed:.1f} s")
    assert ok, same


# -- 6 ------------------------------------------------------------------------

def _hardware_threads() -> int:
    if hasattr(os, "sched_getaffinity"):
        return len(os.sched_getaffinity(0))
    return os.cpu_count() or 1


def test_c06_parallel_states():
    threads = _hardware_threads()
    result = parallel_states("FibRec", 25, 4, repeat=5, mode="process")
    ratio = result["ratio"]
    ok = threads >= 4 and ratio < 2.0 and result["outputs_ok"]
    summary = (f"4 x FibRec(25) in parallel took {ratio:.2f}x one state "
               f"({result['parallel_ms']:.0f} ms vs {result['single_ms']:.0f} ms), "
               f"{threads} hardware thread(s)")
    if threads < 4:
        summary += "; needs >= 4 hardware threads, here the 4 states time-share one core"
    record(6, ok, summary)
    assert result["outputs_ok"]
    if threads < 4:
        pytest.xfail(f"only {threads} hardware thread(s); criterion requires 4")
    assert ok, summary


# -- 7 ------------------------------------------------------------------------

CONSOLE = ('put "Name: " get name\n'
           'put "Age: " get age\n'
           '? "Hello " + name + ", next year you will be " + (1 + age)\n')


def test_c07_suspend_resume():
    out = io.StringIO()
    st = LanguageState(output=out)
    st.register_builtin("get", lambda state, name: state.suspend(name))
    first = st.run_source(CONSOLE)
    asked = dict(st.suspend_request)
    second = st.resume({"name": "Mona"})
    third = st.resume({"age": "41"})
    want = [Status.Ready, Status.Running, Status.Suspended, Status.Running, Status.Halted]
    it = iter(st.history)
    in_order = all(s in it for s in want)
    ok = (first is Status.Suspended and asked == {"awaiting_variable": "name"}
          and second is Status.Suspended and third is Status.Halted and in_order
          and out.getvalue() == "Name: Age: Hello Mona, next year you will be 42\n")
    record(7, ok, "two inputs injected via resume; history "
                  + "->".join(s.value for s in st.history))
    assert ok


# -- 8 ------------------------------------------------------------------------

def test_c08_eval_stability():
    out = io.StringIO()
    st = LanguageState(output=out)
    st.run_source("total = 0\nfor i = 1 to 3 bump(i) next\n"
                  "func bump n\n    total = total + n\n    return total\n")
    before_used = st.image.used_count
    snapshot = st.image.code.records[:before_used].tobytes()
    unchanged = True
    for k in range(100):
        # every tenth eval is long enough to force the code block to grow
        body = f"bump({k})\n" + ("x = x + 1\n" * 40 if k % 10 == 0 else "")
        st.eval(("x = 0\n" if k == 0 else "") + body)
        if st.image.code.records[:before_used].tobytes() != snapshot:
            unchanged = False
    total_ok = st.get_global("total") == 6 + sum(range(100))
    grew = st.events["GrewCapacity"]

    remapped = output_of('eval("ChangeRingKeyword put اطبع" + nl + "اطبع 7")\n'
                         'eval("اطبع 9")\n')
    ok = unchanged and total_ok and remapped == "79"
    record(8, ok, f"100 evals left the original {before_used} records bit-identical={unchanged} "
                  f"(block grew {grew}x); remapped-keyword eval output {remapped!r}")
    assert ok


# -- 9 ------------------------------------------------------------------------

def test_c09_transcoder_round_trip():
    names = [p.name for p in CORPUS_FILES]
    assert len(names) >= 20 and "16_tolerant.ring" in names
    assert "15_component_view.ring" in names
    failures = []
    for path in CORPUS_FILES:
        src = path.read_text(encoding="utf-8")
        tree = text_to_steps(src, source_name=path.name)
        back = steps_to_text(tree)
        want = expected_output(path) if path.name in HEALED_ONLY else run_path_text(src, path)
        if run_path_text(back, path) != want:
            failures.append(f"{path.name}: output")
        text = dumps(tree)
        if loads(text) != tree or dumps(loads(text)) != text:
            failures.append(f"{path.name}: stp")
    ok = not failures
    record(9, ok, f"{len(CORPUS_FILES) - len(failures)}/{len(CORPUS_FILES)} corpus programs "
                  f"round-trip through steps and .stp")
    assert ok, failures


# -- 10 -----------------------------------------------------------------------

STEPS = [74, 234, 330, 330, 401, 418, 429, 432, 457, 513, 530, 549, 586, 588, 653, 677, 700, 701,
         757, 1139, 1253, 1307, 1453, 1555, 1560]
CGT = [3, 9, 13, 13, 14, 17, 17, 17, 15, 20, 21, 21, 20, 22, 25, 22, 24, 24, 30, 39, 43, 43, 47, 51,
       52]


def test_c10_linearity_statistics():
    published = correlation_report(zip(STEPS, CGT))
    part_a = abs(published["pearson"] - 0.9947) <= 0.001 \
        and abs(published["spearman"] - 0.9855) <= 0.001
    start = time.perf_counter()
    targets = np.linspace(50, 5000, 25).round().astype(int)
    rows = steps_linearity(targets, repeat=3)
    elapsed = time.perf_counter() - start
    steps = [r[0] for r in rows]
    timing = correlation_report([(s, t) for s, t, _ in rows])
    size = correlation_report([(s, b) for s, _, b in rows])
    part_b = min(steps) <= 60 and max(steps) >= 4900 and timing["pearson"] >= 0.95 \
        and size["pearson"] >= 0.95 and elapsed < 30
    ok = part_a and part_b
    record(10, ok, f"(a) pearson {published['pearson']:.4f} spearman {published['spearman']:.4f}; "
                   f"(b) time r={timing['pearson']:.4f} bytes r={size['pearson']:.4f} over "
                   f"{min(steps)}-{max(steps)} steps in {elapsed:.1f} s")
    assert ok


# -- 11 -----------------------------------------------------------------------

def test_c11_object_file_round_trip(tmp_path):
    failures = []
    for path in VALID:
        obj = tmp_path / (path.stem + ".ringo")
        compile_to_object(path, obj)
        outs = []
        for runner, target in ((run_file, path), (run_object, obj)):
            buf = io.StringIO()
            st = runner(target, output=buf)
            outs.append((st.status, buf.getvalue()))
        if outs[0] != outs[1] or outs[0][0] is not Status.Halted:
            failures.append(path.name)
    obj = tmp_path / "13_dsl.ringo"
    try:
        objfile.loads(obj.read_bytes()[:-1])
        truncated = False
    except Truncated:
        truncated = True
    ok = not failures and truncated
    record(11, ok, f"{len(VALID) - len(failures)}/{len(VALID)} object files re-run identically; "
                   f"1-byte truncation rejected={truncated}")
    assert ok, failures


# -- 12 -----------------------------------------------------------------------

def test_c12_instruction_width_law():
    bad = []
    for path in VALID:
        st = LanguageState()
        image = compile_file(path, st)
        section = image.code.to_bytes()
        if len(section) != image.used_count * INSTRUCTION_WIDTH \
                or objfile.canonical_records(image).nbytes != image.used_count * 24:
            bad.append(path.name)
        st.destroy()
    ok = not bad and INSTRUCTION_WIDTH == 24
    record(12, ok, f"code section = used_count x 24 bytes for {len(VALID) - len(bad)}/{len(VALID)} "
                   f"compiled corpus programs")
    assert ok, bad
