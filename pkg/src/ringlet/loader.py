"""File-level entry points: source files, object files, token and rule dumps."""

from __future__ import annotations

import os
from pathlib import Path

from .bytecode import ProgramImage
from .compiler import compile_tokens
from .objfile import emit_object, load_object
from .scanner import SyntaxConfig, Token, TokenKind, auto_syntax_lookup, scan
from .vm import LanguageState


def read_source(path: str | os.PathLike) -> str:
    return Path(path).read_text(encoding="utf-8")


def scan_path(path: str | os.PathLike, config: SyntaxConfig) -> list[Token]:
    """Apply the directory's ``ringsyntax.ring`` (if any), then scan the file."""
    auto_syntax_lookup(path, config)
    return scan(read_source(path), config, path=str(Path(path).resolve()))


def compile_file(path: str | os.PathLike, state: LanguageState, *,
                 trace: bool = False) -> ProgramImage:
    tokens = scan_path(path, state.config)
    canonical = str(Path(path).resolve())
    return compile_tokens(tokens, path=canonical, trace=trace, resolver=state._resolve_include,
                          source_name=str(path))


def run_file(path: str | os.PathLike, state: LanguageState | None = None, **state_opts):
    """Compile and run ``path`` in ``state`` (a fresh one by default).

    Returns the state; its ``status`` and ``error`` describe the outcome.
    Compile errors and missing files raise.
    """
    if state is None:
        state = LanguageState(**state_opts)
    image = compile_file(path, state)
    state.run(image)
    return state


def run_object(path: str | os.PathLike, state: LanguageState | None = None, **state_opts):
    if state is None:
        state = LanguageState(**state_opts)
    state.run(load_object(path))
    return state


def compile_to_object(source_path: str | os.PathLike, out_path: str | os.PathLike) -> ProgramImage:
    state = LanguageState()
    try:
        image = compile_file(source_path, state)
        emit_object(image, out_path)
        return image
    finally:
        state.destroy()


def format_token(tok: Token) -> str:
    """``LINE:COL KIND surface [canonical]``; canonical only when it differs."""
    if tok.kind is TokenKind.EndOfLine:
        surface = "\\n"
    elif tok.kind is TokenKind.EndOfFile:
        surface = "<eof>"
    else:
        surface = tok.surface
    text = f"{tok.line}:{tok.column} {tok.kind.value} {surface}"
    if tok.kind in (TokenKind.Keyword, TokenKind.Operator, TokenKind.Literal) \
            and tok.canonical != tok.surface:
        text += f" [{tok.canonical}]"
    return text


def token_dump(path: str | os.PathLike, config: SyntaxConfig | None = None) -> list[str]:
    config = config if config is not None else SyntaxConfig()
    return [format_token(t) for t in scan_path(path, config)]


def rule_dump(path: str | os.PathLike) -> list[str]:
    state = LanguageState()
    try:
        return compile_file(path, state, trace=True).rules
    finally:
        state.destroy()
