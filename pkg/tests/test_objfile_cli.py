import io
import subprocess
import sys

import pytest
from conftest import CORPUS, CORPUS_FILES, HEALED_ONLY, expected_output

from ringlet import objfile
from ringlet.cli import main
from ringlet.errors import BadMagic, CompileError, ObjectFileError, Truncated, UnsupportedVersion
from ringlet.loader import compile_file, compile_to_object, run_file, run_object
from ringlet.vm import LanguageState, Status

VALID = [p for p in CORPUS_FILES if p.name not in HEALED_ONLY]


def _run(runner, path):
    out = io.StringIO()
    st = runner(path, output=out)
    assert st.status is Status.Halted, st.error
    return out.getvalue()


# -- object files -----------------------------------------------------------

@pytest.mark.parametrize("path", VALID, ids=lambda p: p.stem)
def test_object_round_trip_preserves_output(path, tmp_path):
    obj = tmp_path / (path.stem + ".ringo")
    compile_to_object(path, obj)
    assert _run(run_object, obj) == _run(run_file, path) == expected_output(path)


@pytest.mark.parametrize("path", VALID, ids=lambda p: p.stem)
def test_object_canonical_form(path, tmp_path):
    obj = tmp_path / "x.ringo"
    compile_to_object(path, obj)
    data = obj.read_bytes()
    assert objfile.dumps(objfile.loads(data)) == data


def test_object_after_run_is_unrewritten():
    st = LanguageState(output=io.StringIO())
    image = compile_file(CORPUS / "23_quicksort.ring", st)
    before = objfile.dumps(image)
    st.run(image)
    assert st.events["Rewrites"] > 0
    assert objfile.dumps(image) == before


def test_dsl_object_prints_sum(tmp_path):
    obj = tmp_path / "dsl.ringo"
    compile_to_object(CORPUS / "13_dsl.ring", obj)
    assert _run(run_object, obj).startswith("Sum: 1520\n")


def test_truncation_by_one_byte(tmp_path):
    obj = tmp_path / "t.ringo"
    compile_to_object(CORPUS / "01_hello.ring", obj)
    with pytest.raises(Truncated):
        objfile.loads(obj.read_bytes()[:-1])


@pytest.mark.parametrize("cut", [0, 3, 8, 12, 20])
def test_short_prefixes_rejected(cut, tmp_path):
    obj = tmp_path / "t.ringo"
    compile_to_object(CORPUS / "01_hello.ring", obj)
    with pytest.raises(ObjectFileError):
        objfile.loads(obj.read_bytes()[:cut])


def test_bad_magic_and_version(tmp_path):
    obj = tmp_path / "t.ringo"
    compile_to_object(CORPUS / "01_hello.ring", obj)
    data = obj.read_bytes()
    with pytest.raises(BadMagic):
        objfile.loads(b"NOTRINGO" + data[8:])
    bumped = data[:8] + (objfile.FORMAT_VERSION + 1).to_bytes(4, "little") + data[12:]
    with pytest.raises(UnsupportedVersion):
        objfile.loads(bumped)


def test_trailing_bytes_rejected(tmp_path):
    obj = tmp_path / "t.ringo"
    compile_to_object(CORPUS / "01_hello.ring", obj)
    with pytest.raises(ObjectFileError):
        objfile.loads(obj.read_bytes() + b"\0")


# -- loader ---------------------------------------------------------------------

def test_include_resolves_relative_to_includer(tmp_path):
    (tmp_path / "sub").mkdir()
    (tmp_path / "sub" / "a.ring").write_text('load "b.ring"\n? fromb()\n', encoding="utf-8")
    (tmp_path / "sub" / "b.ring").write_text('func fromb return "b"\n', encoding="utf-8")
    assert _run(run_file, tmp_path / "sub" / "a.ring") == "b\n"


def test_include_cycle(tmp_path):
    (tmp_path / "a.ring").write_text('load "b.ring"\n', encoding="utf-8")
    (tmp_path / "b.ring").write_text('load "a.ring"\n', encoding="utf-8")
    with pytest.raises(CompileError) as info:
        run_file(tmp_path / "a.ring", output=io.StringIO())
    assert "a.ring" in str(info.value) and "b.ring" in str(info.value)


def test_include_runs_top_level_in_order(tmp_path):
    (tmp_path / "lib.ring").write_text('? "lib"\n', encoding="utf-8")
    (tmp_path / "main.ring").write_text('? "before"\nload "lib.ring"\n? "after"\n',
                                        encoding="utf-8")
    assert _run(run_file, tmp_path / "main.ring") == "before\nlib\nafter\n"


def test_directory_syntax_file_applies_first(tmp_path):
    (tmp_path / "ringsyntax.ring").write_text("ChangeRingKeyword put print\n", encoding="utf-8")
    (tmp_path / "main.ring").write_text("print 5\n", encoding="utf-8")
    assert _run(run_file, tmp_path / "main.ring") == "5"


def test_compile_error_carries_file(tmp_path):
    (tmp_path / "bad.ring").write_text("x = 1\nif\n", encoding="utf-8")
    with pytest.raises(CompileError) as info:
        run_file(tmp_path / "bad.ring", output=io.StringIO())
    assert info.value.line == 2 and "bad.ring" in str(info.value)


# -- command line ---------------------------------------------------------------

def cli(capsys, *args):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def test_cli_eval(capsys):
    assert cli(capsys, "--eval", "put 1+1")[:2] == (0, "2")


def test_cli_run_default_and_subcommand(capsys):
    path = CORPUS / "01_hello.ring"
    assert cli(capsys, path)[:2] == (0, expected_output(path))
    assert cli(capsys, "run", path)[:2] == (0, expected_output(path))


def test_cli_missing_file(capsys, tmp_path):
    missing = tmp_path / "missing.ring"
    code, _, err = cli(capsys, "run", missing)
    assert code == 3 and str(missing) in err


def test_cli_exit_codes(capsys, tmp_path):
    (tmp_path / "c.ring").write_text("if\n", encoding="utf-8")
    (tmp_path / "r.ring").write_text("? 1 / 0\n", encoding="utf-8")
    code, _, err = cli(capsys, tmp_path / "c.ring")
    assert code == 1 and err
    code, _, err = cli(capsys, tmp_path / "r.ring")
    assert code == 2 and "DivisionByZero" in err
    assert cli(capsys, "--bogus")[0] == 64
    assert cli(capsys)[0] == 64
    assert cli(capsys, "bench", "NoSuchBench")[0] == 64


def test_cli_version(capsys):
    code, out, _ = cli(capsys, "--version")
    assert code == 0 and out.startswith("ringlet ")


def test_cli_tokens_format(capsys, tmp_path):
    (tmp_path / "hello.ring").write_text('PUT "Hi"\n', encoding="utf-8")
    code, out, _ = cli(capsys, "--tokens", tmp_path / "hello.ring")
    assert code == 0
    assert out.splitlines() == ["1:1 Keyword PUT [put]", "1:5 Literal \"Hi\" [Hi]",
                                "1:9 EndOfLine \\n", "2:1 EndOfFile <eof>"]


SENTINEL = "guest-code-ran"


@pytest.mark.parametrize("flag", ["--tokens", "--rules"])
def test_stage_stop_purity(flag, capsys, tmp_path, monkeypatch):
    def refuse(*args, **kwargs):
        raise AssertionError("guest code executed")

    monkeypatch.setattr(LanguageState, "run", refuse)
    monkeypatch.setattr(LanguageState, "eval", refuse)
    prog = tmp_path / "p.ring"
    prog.write_text(f'put "{SENTINEL}"\n', encoding="utf-8")
    code, out, _ = cli(capsys, flag, prog)
    assert code == 0 and out
    # the sentinel text can appear inside a token line, never as program output
    assert all(line != SENTINEL for line in out.splitlines())
    assert not out.startswith(SENTINEL)


def test_cli_rules(capsys, tmp_path):
    (tmp_path / "p.ring").write_text("put 5\n", encoding="utf-8")
    code, out, _ = cli(capsys, "--rules", tmp_path / "p.ring")
    assert code == 0 and out.split() == ["Program", "Statement", "PrintStmt", "Expr", "Term",
                                         "Factor"]


def test_cli_object_round_trip(capsys, tmp_path):
    obj = tmp_path / "d.ringo"
    assert cli(capsys, "--emit-object", CORPUS / "13_dsl.ring", obj)[0] == 0
    code, out, _ = cli(capsys, "--run-object", obj)
    assert code == 0 and out == expected_output(CORPUS / "13_dsl.ring")
    obj.write_bytes(obj.read_bytes()[:-1])
    assert cli(capsys, "--run-object", obj)[0] == 3


def test_cli_visual_round_trip(capsys, tmp_path):
    src = CORPUS / "06_switch.ring"
    stp, back = tmp_path / "s.stp", tmp_path / "s.ring"
    assert cli(capsys, "to-visual", src, stp)[0] == 0
    assert stp.read_text(encoding="utf-8").startswith("STP1 ")
    assert cli(capsys, "to-text", stp, back)[0] == 0
    assert cli(capsys, back)[1] == expected_output(src)


def test_cli_to_text_bad_file(capsys, tmp_path):
    bad = tmp_path / "bad.stp"
    bad.write_text("nonsense\n", encoding="utf-8")
    assert cli(capsys, "to-text", bad, tmp_path / "o.ring")[0] == 3


def test_cli_bench_report(capsys, tmp_path):
    report = tmp_path / "r.tsv"
    code, _, _ = cli(capsys, "bench", "Loop", "FibRec", "--sizes", "200", "10",
                     "--repeat", "1", "--report", report)
    assert code == 0
    rows = [ln.split("\t") for ln in report.read_text(encoding="utf-8").splitlines()
            if ln and not ln.startswith("#")]
    body = [r for r in rows[1:]]
    assert {r[0] for r in body} == {"Loop", "FibRec"} and len(body) == 4


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "ringlet", "--eval", "? 6 * 7"],
                          capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0 and proc.stdout == "42\n"
