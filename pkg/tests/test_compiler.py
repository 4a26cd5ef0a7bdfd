import math

import pytest
from conftest import CORPUS_FILES, HEALED_ONLY, output_of
from gen import programs
from hypothesis import given, settings

from ringlet.bytecode import INSTRUCTION_WIDTH, JUMP_OPS, Op, eval_reserve
from ringlet.compiler import compile_tokens, trace_rules
from ringlet.errors import CompileError
from ringlet.objfile import canonical_records
from ringlet.scanner import SyntaxConfig, scan
from ringlet.vm import LanguageState

VALID = [p for p in CORPUS_FILES if p.name not in HEALED_ONLY]


def compile_src(src):
    return compile_tokens(scan(src, SyntaxConfig()))


def test_put_arithmetic():
    assert output_of("put 1+2") == "3"


def test_dsl_class_compiles():
    image = compile_src((CORPUS_FILES[0].parent / "13_dsl.ring").read_text(encoding="utf-8"))
    assert "dsl" in image.classes
    assert set(image.classes["dsl"].methods) == {"braceexpreval", "getimportant", "getstop",
                                                  "braceend"}


def test_truncated_for_reports_expression():
    with pytest.raises(CompileError) as info:
        compile_src("for x = 1 to")
    assert info.value.expected == "expression" and info.value.line == 1


def test_trace_rules_print():
    assert trace_rules(scan("put 5")) == ["Program", "Statement", "PrintStmt", "Expr", "Term",
                                          "Factor"]


def test_trace_rules_empty():
    assert trace_rules(scan("")) == ["Program"]


def test_trace_rules_assignment():
    rules = trace_rules(scan("x = 1 + 2"))
    assert rules[:4] == ["Program", "Statement", "Designator", "AssignStmt"]


def test_trace_matches_compile_error_line():
    src = "x = 1\nif x\nput (1 +\n"
    with pytest.raises(CompileError) as a:
        compile_src(src)
    with pytest.raises(CompileError) as b:
        trace_rules(scan(src))
    assert a.value.line == b.value.line


@pytest.mark.parametrize("src,expected", [
    ("? 2 + 3 * 4", "14\n"),
    ("? (2 + 3) * 4", "20\n"),
    ("? 1 < 2 and 2 < 1 or 1", "1\n"),
    ("? not 1 = 2", "1\n"),
    ("? -3 * -3", "9\n"),
    ("? 7 % 4 + 10 / 4", "5.5\n"),
    ('? "n" + 1 + 2', "n12\n"),
    ("x = 5 if x = 5 ? \"eq\" ok", "eq\n"),
])
def test_precedence_and_equality(src, expected):
    assert output_of(src) == expected


def test_short_circuit():
    src = "func boom ? \"called\" return 1\n"
    assert output_of("? 0 and boom()\n" + src) == "0\n"
    assert output_of("? 1 or boom()\n" + src) == "1\n"


def test_return_value_only_from_same_line():
    assert output_of("? f()\nfunc f\n    return\n    5\n") == "\n"


def test_eval_reserve_rule():
    assert eval_reserve(10) == 256
    assert eval_reserve(2000) == 500
    image = compile_src("x = 1\n" * 700)
    assert image.reserved_capacity - image.used_count >= max(256, math.ceil(0.25 * image.used_count))


def test_undefined_parent_class_is_compile_error():
    with pytest.raises(CompileError):
        compile_src("class A from Missing\n")


def test_rules_do_not_execute():
    state = LanguageState()
    trace_rules(scan("put 1"))
    assert state.globals == {"nl": "\n"}


@pytest.mark.parametrize("path", VALID, ids=lambda p: p.stem)
def test_width_and_jump_closure_on_corpus(path):
    state = LanguageState()
    from ringlet.loader import compile_file
    image = compile_file(path, state)
    assert len(image.code.to_bytes()) == image.used_count * INSTRUCTION_WIDTH
    assert image.validate_jumps() == []
    state.destroy()


@settings(max_examples=60, deadline=None)
@given(programs)
def test_compile_is_deterministic(src):
    a, b = compile_src(src), compile_src(src)
    assert canonical_records(a).tobytes() == canonical_records(b).tobytes()
    assert a.constants == b.constants


@settings(max_examples=60, deadline=None)
@given(programs)
def test_jump_closure(src):
    image = compile_src(src)
    for pc in range(1, image.used_count + 1):
        if image.code.ops[pc] in JUMP_OPS:
            assert 1 <= image.code.a[pc] <= image.used_count
    assert image.validate_jumps() == []


@settings(max_examples=60, deadline=None)
@given(programs)
def test_width_law(src):
    image = compile_src(src)
    assert canonical_records(image).nbytes == image.used_count * 24


@settings(max_examples=60, deadline=None)
@given(programs)
def test_trace_agrees_with_compile(src):
    trace_rules(scan(src))
    compile_src(src)


def test_trace_and_compile_fail_together():
    for src in ("if", "for x = ", "put (1", "class", "x = [1, 2"):
        with pytest.raises(CompileError):
            trace_rules(scan(src))
        with pytest.raises(CompileError):
            compile_src(src)


def test_opcode_encoding_is_stable():
    image = compile_src("put 1")
    assert image.code.ops[1] == Op.PUSHC and image.code.ops[2] == Op.PRINT
