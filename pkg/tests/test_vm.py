import io
import re

import pytest
from conftest import CORPUS_FILES, HEALED_ONLY, output_of, run_source

from ringlet.bytecode import F_REWRITTEN, Op
from ringlet.errors import (CompileError, ErrorCode, ResumeWithoutSuspend, StateDestroyed,
                            StateError)
from ringlet.loader import run_file
from ringlet.scanner import SyntaxConfig
from ringlet.vm import LanguageState, Status

VALID = [p for p in CORPUS_FILES if p.name not in HEALED_ONLY]


# -- lifecycle and isolation ------------------------------------------------

def test_states_are_isolated():
    a, b = LanguageState(output=io.StringIO()), LanguageState(output=io.StringIO())
    a.run_source("x = 1")
    assert a.get_global("x") == 1
    with pytest.raises(KeyError):
        b.get_global("x")


def test_destroyed_state_rejects_use():
    st = LanguageState()
    st.destroy()
    assert st.destroyed
    with pytest.raises(StateDestroyed):
        st.run_source("put 1")
    st.destroy()  # idempotent


def test_create_destroy_cycles_balance_pools():
    for _ in range(100):
        st = LanguageState(output=io.StringIO())
        st.run_source("a = [1, 2, 3] o = new C\nclass C x = 1")
        pool = st.pool
        st.destroy()
        assert pool.stats.allocated == pool.stats.freed and pool.live == 0


def test_interleaved_states_do_not_interfere():
    outs = [io.StringIO(), io.StringIO()]
    states = [LanguageState(output=o) for o in outs]
    progs = ["x = 0 for i = 1 to 50 x = x + i next ? x", "x = 100 for i = 1 to 10 x = x - 1 next ? x"]
    images = [s.compile(p) for s, p in zip(states, progs)]
    for _ in range(3):
        for s, img in zip(states, images):
            s.run(img)
    assert outs[0].getvalue() == "1275\n" * 3 and outs[1].getvalue() == "90\n" * 3


# -- run ----------------------------------------------------------------------

def test_status_history_for_plain_run():
    out, st = run_source("put 1")
    assert st.history == [Status.Ready, Status.Running, Status.Halted]


def test_loop_with_nested_if_transcript():
    src = 'for x = 1 to 10 if x = 3 ? "Three" else ? x ok next'
    assert output_of(src) == "1\n2\nThree\n4\n5\n6\n7\n8\n9\n10\n"


def test_division_by_zero_is_located():
    out, st = run_source("x = 1\ny = 0\n? x / y\n? 2")
    assert st.status is Status.Errored
    assert st.error.code is ErrorCode.DivisionByZero and st.error.line == 3
    assert out == ""


@pytest.mark.parametrize("src,code", [
    ("? nosuch", ErrorCode.UndefinedVariable),
    ("nosuch()", ErrorCode.UndefinedFunction),
    ("o = new C ? o.zz\nclass C x = 1", ErrorCode.UndefinedMember),
    ("? [1] - 1", ErrorCode.TypeMismatch),
    ("a = [1, 2] ? a[3]", ErrorCode.IndexOutOfRange),
    ("a = [1, 2] ? a[0]", ErrorCode.IndexOutOfRange),
    ("? 5 % 0", ErrorCode.DivisionByZero),
    ("f(1)\nfunc f n f(n + 1)", ErrorCode.StackOverflow),
    ("o = new Nope", ErrorCode.UndefinedClass),
    ("f(1, 2)\nfunc f a return a", ErrorCode.TypeMismatch),
])
def test_runtime_error_codes(src, code):
    _, st = run_source(src)
    assert st.status is Status.Errored and st.error.code is code


def test_state_usable_after_error():
    st = LanguageState(output=io.StringIO())
    st.run_source("? 1 / 0")
    assert st.status is Status.Errored
    st.run_source("put 7")
    assert st.status is Status.Halted


def test_list_assignment_copies_and_objects_share():
    assert output_of("a = [1] b = a b[1] = 2 ? a[1]") == "1\n"
    assert output_of("a = new C b = a b.x = 2 ? a.x\nclass C x = 1") == "2\n"


def test_output_sink_callable():
    chunks = []
    st = LanguageState(output=chunks.append)
    st.run_source('put "a" ? "b"')
    assert "".join(chunks) == "ab\n"


def test_input_from_stream():
    st = LanguageState(output=io.StringIO(), input=io.StringIO("Ann\n"))
    st.run_source('get name ? "Hi " + name')
    assert st._write.__self__.getvalue() == "Hi Ann\n"


def test_builtins():
    assert output_of("? max(3, 9) ? min(3, 9) ? len(\"abc\") ? space(2) + \"|\"") == "9\n3\n3\n  |\n"
    assert output_of("? type(clock()) ? number(\"4\") + 1 ? string(4) + 1") == "NUMBER\n5\n41\n"


def test_register_builtin_override():
    st = LanguageState(output=io.StringIO())
    st.register_builtin("twice", lambda state, x: x * 2)
    st.register_builtin("len", lambda state, x: -1)
    st.run_source("? twice(21) ? len([1])")
    assert st._write.__self__.getvalue() == "42\n-1\n"


def test_host_globals():
    st = LanguageState(output=io.StringIO())
    st.set_global("Limit", 3)
    st.run_source("for i = 1 to limit put i next")
    assert st._write.__self__.getvalue() == "123"
    assert st.globals["i"] == 4


# -- eval ---------------------------------------------------------------------

def test_eval_sequence_and_growth_of_used_count():
    st = LanguageState(output=io.StringIO())
    st.eval("put 5")
    used = st.image.used_count
    st.eval("put 6")
    assert st._write.__self__.getvalue() == "56"
    assert st.image.used_count > used


def test_eval_compile_error_keeps_state():
    st = LanguageState(output=io.StringIO())
    st.run_source("x = 1")
    used = st.image.used_count
    with pytest.raises(CompileError):
        st.eval("for")
    assert st.get_global("x") == 1 and st.image.used_count == used
    st.eval("put x")
    assert st._write.__self__.getvalue() == "1"


def test_eval_honors_current_config():
    st = LanguageState(output=io.StringIO())
    st.run_source("ChangeRingKeyword put print\nprint 1")
    st.eval("print 2")
    assert st._write.__self__.getvalue() == "12"


def test_eval_bad_code_leaves_config_unchanged():
    st = LanguageState(output=io.StringIO())
    before = st.config.copy()
    with pytest.raises(CompileError):
        st.eval("ChangeRingKeyword put print\nif")
    assert st.config == before


def test_guest_eval_builtin():
    assert output_of('x = 2 eval("x = x * 10") ? x') == "20\n"


def test_eval_grows_block_when_reserve_runs_out():
    st = LanguageState(output=io.StringIO())
    st.run_source("x = 0")
    for _ in range(80):
        st.eval("x = x + 1\n" * 10)
    assert st.get_global("x") == 800
    assert st.events["GrewCapacity"] >= 1


# -- suspend / resume -------------------------------------------------------

def _suspending_state():
    out = io.StringIO()
    st = LanguageState(output=out)
    st.register_builtin("get", lambda state, name: state.suspend(name))
    return st, out


def test_suspend_resume_single_input():
    st, out = _suspending_state()
    status = st.run_source('put "age?" get x if x > 18 put "adult" ok')
    assert status is Status.Suspended and out.getvalue() == "age?"
    assert st.suspend_request == {"awaiting_variable": "x"}
    assert st.resume({"x": 25}) is Status.Halted
    assert out.getvalue() == "age?adult"


def test_suspend_resume_twice():
    st, out = _suspending_state()
    st.run_source('get a get b ? a + "," + b')
    st.resume({"a": "first"})
    st.resume({"b": "second"})
    assert out.getvalue() == "first,second\n"
    assert st.history == [Status.Ready, Status.Running, Status.Suspended, Status.Running,
                          Status.Suspended, Status.Running, Status.Halted]


def test_suspend_inside_function_binds_local():
    st, out = _suspending_state()
    st.run_source("ask()\nfunc ask\n    get v\n    ? v * 2")
    st.resume({"v": 21})
    assert out.getvalue() == "42\n"
    assert "v" not in st.globals


def test_resume_without_suspend():
    st = LanguageState()
    with pytest.raises(ResumeWithoutSuspend):
        st.resume({})


def test_suspend_outside_run_rejected():
    st = LanguageState()
    with pytest.raises(StateError):
        st.suspend()


# -- rewriting ----------------------------------------------------------------

def test_global_reads_become_fast_after_first_iteration():
    st = LanguageState(output=io.StringIO(), instrument=True)
    st.run_source("g = 5 s = 0\nfor i = 1 to 1000 s = s + g next")
    assert st.op_counts[Op.PUSHV_FAST] > 0
    # each global-site PUSHV ran once before being rewritten
    n_sites = sum(1 for pc in range(1, st.image.used_count + 1)
                  if st.image.code.ops[pc] == Op.PUSHV_FAST)
    assert st.op_counts[Op.PUSHV] <= n_sites + 1
    assert st.op_counts[Op.FOR_STEP] >= 999


def test_no_rewrites_when_disabled():
    st = LanguageState(output=io.StringIO(), rewriting=False)
    st.run_source("g = 5 s = 0\nfor i = 1 to 100 s = s + g next")
    flags = st.image.code.records["flags"][:st.image.used_count]
    assert not (flags & F_REWRITTEN).any() and st.events["Rewrites"] == 0


@pytest.mark.parametrize("path", VALID, ids=lambda p: p.stem)
def test_rewrite_transparency_on_corpus(path):
    outs = []
    for flag in (True, False):
        buf = io.StringIO()
        st = run_file(path, output=buf, rewriting=flag, instrument=True)
        assert st.status is Status.Halted, st.error
        assert st.stack_violations == []
        outs.append(buf.getvalue())
    assert outs[0] == outs[1]


def test_stack_balance_at_statement_boundaries():
    st = LanguageState(output=io.StringIO(), instrument=True)
    st.run_source("x = [1, 2] ? x[1] + 2 f(3) o = new C { 4 }\nfunc f a a + 1\nclass C y = 1")
    assert st.status is Status.Halted and st.stack_violations == []


def test_resolution_order_brace_local_this_global():
    src = """
x = "global"
o = new C
o.m()
class C
    x = "attr"
    func m
        ? x
        x = "local-shadow?"
        ? this.x
        b = new B
        b { ? x }
class B
    x = "brace"
"""
    assert output_of(src) == "attr\nlocal-shadow?\nbrace\n"


def test_undefined_name_inside_brace_without_hook():
    _, st = run_source("o = new C\no { nosuch }\nclass C x = 1")
    assert st.error.code is ErrorCode.UndefinedMember


def test_config_is_per_state():
    cfg = SyntaxConfig()
    a = LanguageState(config=cfg, output=io.StringIO())
    a.run_source("ChangeRingKeyword put print")
    assert cfg == SyntaxConfig()
    b = LanguageState(output=io.StringIO())
    b.run_source("put 1")
    assert b.status is Status.Halted


def test_guest_regex_free_error_message_has_line():
    _, st = run_source("x = 1\n\n? y")
    assert re.search(r"\by\b", str(st.error)) and st.error.line == 3
