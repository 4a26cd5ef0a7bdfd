"""Tokenizer with in-source syntax customization.

Keywords and operators are looked up through a :class:`SyntaxConfig`, so a
program can rename them while it is being scanned::

    ChangeRingKeyword put اطبع
    اطبع "Hi"

Scanner commands are recognized only as the first word of a line. They emit
no tokens; their effect lasts for everything scanned afterwards with the same
config (including other files scanned by the same language state).
"""

from __future__ import annotations

import enum
import os
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (KeywordConflict, ScanError, SyntaxFileMalformed, SyntaxFileNotFound,
                     UnknownCharacter, UnknownKeyword, UnknownOperator, UnterminatedLiteral)

KEYWORDS = (
    "put", "get", "if", "but", "else", "ok", "for", "to", "step", "next", "while", "end",
    "func", "return", "class", "from", "new", "load", "switch", "on", "other", "off",
    "and", "or", "not", "true", "false", "self", "this",
)

OPERATORS = (
    "+", "-", "*", "/", "%", "=", "!=", "<", ">", "<=", ">=",
    "(", ")", "[", "]", "{", "}", ",", ".", "?", "!",
)

COMMANDS = {
    "changeringkeyword": "ChangeRingKeyword",
    "changeringoperator": "ChangeRingOperator",
    "loadsyntax": "LoadSyntax",
    "enablehashcomments": "EnableHashComments",
    "disablehashcomments": "DisableHashComments",
}

COMMAND_ARITY = {
    "ChangeRingKeyword": 2,
    "ChangeRingOperator": 2,
    "LoadSyntax": 1,
    "EnableHashComments": 0,
    "DisableHashComments": 0,
}

AUTO_SYNTAX_FILE = "ringsyntax.ring"


class TokenKind(enum.Enum):
    Keyword = "Keyword"
    Identifier = "Identifier"
    Number = "Number"
    Literal = "Literal"
    Operator = "Operator"
    EndOfLine = "EndOfLine"
    EndOfFile = "EndOfFile"


@dataclass(frozen=True, slots=True)
class Token:
    kind: TokenKind
    canonical: str
    surface: str
    line: int
    column: int

    def is_kw(self, word: str) -> bool:
        return self.kind is TokenKind.Keyword and self.canonical == word

    def is_op(self, op: str) -> bool:
        return self.kind is TokenKind.Operator and self.canonical == op

    def describe(self) -> str:
        if self.kind is TokenKind.EndOfFile:
            return "end of file"
        if self.kind is TokenKind.EndOfLine:
            return "end of line"
        return repr(self.surface)


@dataclass(frozen=True)
class ScannerCommand:
    name: str
    args: tuple[str, ...] = ()
    path: str | None = None
    line: int = 0


def _fold(word: str) -> str:
    return word.casefold()


@dataclass
class SyntaxConfig:
    keyword_map: dict[str, str] = field(default_factory=lambda: {k: k for k in KEYWORDS})
    operator_map: dict[str, str] = field(default_factory=lambda: {o: o for o in OPERATORS})
    hash_comments: bool = True
    applied_commands: list[ScannerCommand] = field(default_factory=list)
    auto_loaded: set[str] = field(default_factory=set)
    _symbol_ops: tuple[str, ...] | None = field(default=None, repr=False, compare=False)

    def copy(self) -> "SyntaxConfig":
        return SyntaxConfig(dict(self.keyword_map), dict(self.operator_map), self.hash_comments,
                            list(self.applied_commands), set(self.auto_loaded))

    def surfaces_of(self, canonical: str) -> list[str]:
        return [s for s, c in self.keyword_map.items() if c == canonical]

    def symbol_operators(self) -> tuple[str, ...]:
        if self._symbol_ops is None:
            syms = [s for s in self.operator_map if not _is_ident_start(s[0])]
            self._symbol_ops = tuple(sorted(syms, key=len, reverse=True))
        return self._symbol_ops

    def change_keyword(self, old: str, new: str) -> None:
        fold_old, fold_new = _fold(old), _fold(new)
        if fold_old not in self.keyword_map:
            raise UnknownKeyword(f"{old!r} is not a keyword")
        canonical = self.keyword_map[fold_old]
        taken = self.keyword_map.get(fold_new)
        if taken is not None and taken != canonical:
            raise KeywordConflict(f"{new!r} already spells keyword {taken!r}")
        if fold_new in self.operator_map:
            raise KeywordConflict(f"{new!r} already spells an operator")
        del self.keyword_map[fold_old]
        self.keyword_map[fold_new] = canonical

    def change_operator(self, old: str, new: str) -> None:
        key_old = _fold(old) if _is_ident_start(old[0]) else old
        key_new = _fold(new) if _is_ident_start(new[0]) else new
        if key_old not in self.operator_map:
            raise UnknownOperator(f"{old!r} is not an operator")
        canonical = self.operator_map[key_old]
        taken = self.operator_map.get(key_new)
        if (taken is not None and taken != canonical) or key_new in self.keyword_map:
            raise KeywordConflict(f"{new!r} is already in use")
        del self.operator_map[key_old]
        self.operator_map[key_new] = canonical
        self._symbol_ops = None


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch == "_"


def _is_ident_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_" or unicodedata.category(ch).startswith("M")


def apply_scanner_command(config: SyntaxConfig, command: ScannerCommand) -> None:
    """Apply one parsed scanner command to ``config``."""
    name = command.name
    if name not in COMMAND_ARITY:
        raise ScanError(f"unknown scanner command {name!r}", command.line, path=command.path)
    if len(command.args) != COMMAND_ARITY[name]:
        raise ScanError(f"{name} takes {COMMAND_ARITY[name]} argument(s)", command.line,
                        path=command.path)
    if name == "ChangeRingKeyword":
        try:
            config.change_keyword(*command.args)
        except ScanError as exc:
            raise type(exc)(str(exc), command.line, path=command.path) from None
    elif name == "ChangeRingOperator":
        try:
            config.change_operator(*command.args)
        except ScanError as exc:
            raise type(exc)(str(exc), command.line, path=command.path) from None
    elif name == "LoadSyntax":
        target = Path(command.args[0])
        if not target.is_absolute() and command.path:
            target = Path(command.path).parent / target
        load_syntax_file(target, config)
    elif name == "EnableHashComments":
        config.hash_comments = True
    else:
        config.hash_comments = False
    config.applied_commands.append(command)


def load_syntax_file(path: str | os.PathLike, config: SyntaxConfig) -> None:
    """Apply every command of a syntax file, in order."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise SyntaxFileNotFound(f"syntax file not found: {path}", path=str(path)) from None
    except UnicodeDecodeError:
        raise SyntaxFileMalformed("syntax file is not valid UTF-8", path=str(path)) from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#") or stripped.startswith("//"):
            continue
        words = _split_command_words(stripped)
        name = COMMANDS.get(_fold(words[0]))
        if name is None:
            raise SyntaxFileMalformed(f"not a scanner command: {stripped!r}", lineno,
                                      path=str(path))
        if len(words) - 1 != COMMAND_ARITY[name]:
            raise SyntaxFileMalformed(f"{name} takes {COMMAND_ARITY[name]} argument(s)", lineno,
                                      path=str(path))
        apply_scanner_command(config, ScannerCommand(name, tuple(words[1:]), str(path), lineno))


def _split_command_words(line: str) -> list[str]:
    words = []
    i, n = 0, len(line)
    while i < n:
        ch = line[i]
        if ch in " \t":
            i += 1
        elif ch in "\"'":
            j = line.find(ch, i + 1)
            if j < 0:
                raise UnterminatedLiteral("unterminated literal in scanner command")
            words.append(line[i + 1:j])
            i = j + 1
        else:
            j = i
            while j < n and line[j] not in " \t":
                j += 1
            words.append(line[i:j])
            i = j
    return words


def auto_syntax_lookup(source_path: str | os.PathLike, config: SyntaxConfig) -> bool:
    """Apply ``ringsyntax.ring`` from the source file's directory, once per config.

    Returns True when a syntax file was applied by this call.
    """
    directory = Path(source_path).resolve().parent
    candidate = directory / AUTO_SYNTAX_FILE
    if not candidate.is_file():
        return False
    key = str(candidate)
    if key in config.auto_loaded:
        return False
    load_syntax_file(candidate, config)
    config.auto_loaded.add(key)
    return True


class _Scanner:
    def __init__(self, source: str, config: SyntaxConfig, path: str | None,
                 comments: list | None, commands: list | None):
        self.src = source
        self.config = config
        self.path = path
        self.comments = comments
        self.commands = commands
        self.pos = 0
        self.line = 1
        self.col = 1
        self.tokens: list[Token] = []
        self.at_start = True

    def error(self, cls, message: str, line: int | None = None, col: int | None = None):
        return cls(message, self.line if line is None else line,
                   self.col if col is None else col, path=self.path)

    def advance(self, n: int = 1) -> None:
        self.pos += n
        self.col += n

    def emit(self, kind: TokenKind, canonical: str, surface: str, line: int, col: int) -> None:
        self.tokens.append(Token(kind, canonical, surface, line, col))
        self.at_start = kind is TokenKind.EndOfLine

    def run(self) -> list[Token]:
        src = self.src
        n = len(src)
        cfg = self.config
        while self.pos < n:
            ch = src[self.pos]
            if ch == "\n":
                self.emit(TokenKind.EndOfLine, "\n", "\n", self.line, self.col)
                self.pos += 1
                self.line += 1
                self.col = 1
                continue
            if ch in " \t\r﻿":
                self.advance()
                continue
            if ch == "#" and cfg.hash_comments:
                self.skip_comment(1)
                continue
            if ch == "/" and src.startswith("//", self.pos):
                self.skip_comment(2)
                continue
            if ch.isdigit():
                self.scan_number()
                continue
            if ch in "\"'":
                self.scan_literal(ch)
                continue
            if _is_ident_start(ch):
                self.scan_word()
                continue
            if ch == ":" and self.pos + 1 < n and _is_ident_start(src[self.pos + 1]):
                line, col = self.line, self.col
                j = self.pos + 1
                while j < n and _is_ident_char(src[j]):
                    j += 1
                surface = src[self.pos:j]
                self.emit(TokenKind.Literal, surface[1:], surface, line, col)
                self.advance(j - self.pos)
                continue
            for sym in cfg.symbol_operators():
                if src.startswith(sym, self.pos):
                    self.emit(TokenKind.Operator, cfg.operator_map[sym], sym, self.line, self.col)
                    self.advance(len(sym))
                    break
            else:
                raise self.error(UnknownCharacter, f"unknown character {ch!r}")
        if n and not src.endswith("\n"):
            # every line ends with EndOfLine, including an unterminated last one
            self.emit(TokenKind.EndOfLine, "\n", "\n", self.line, self.col)
        self.emit(TokenKind.EndOfFile, "", "", self.line, self.col)
        return self.tokens

    def skip_comment(self, width: int) -> None:
        start = self.pos
        end = self.src.find("\n", start)
        if end < 0:
            end = len(self.src)
        if self.comments is not None:
            self.comments.append((self.line, self.col, self.src[start + width:end].strip()))
        self.advance(end - start)

    def scan_number(self) -> None:
        src, j, n = self.src, self.pos, len(self.src)
        while j < n and src[j].isdigit():
            j += 1
        if j + 1 < n and src[j] == "." and src[j + 1].isdigit():
            j += 1
            while j < n and src[j].isdigit():
                j += 1
        text = src[self.pos:j]
        self.emit(TokenKind.Number, text, text, self.line, self.col)
        self.advance(j - self.pos)

    def scan_literal(self, quote: str) -> None:
        src, n = self.src, len(self.src)
        line, col = self.line, self.col
        j = self.pos + 1
        parts = []
        while True:
            if j >= n or src[j] == "\n":
                raise self.error(UnterminatedLiteral, "unterminated literal", line, col)
            if src[j] == quote:
                if j + 1 < n and src[j + 1] == quote:
                    parts.append(quote)
                    j += 2
                    continue
                break
            parts.append(src[j])
            j += 1
        surface = src[self.pos:j + 1]
        self.emit(TokenKind.Literal, "".join(parts), surface, line, col)
        self.advance(j + 1 - self.pos)

    def scan_word(self) -> None:
        src, j, n = self.src, self.pos, len(self.src)
        while j < n and _is_ident_char(src[j]):
            j += 1
        word = src[self.pos:j]
        folded = _fold(word)
        line, col = self.line, self.col
        if self.at_start and folded in COMMANDS:
            self.advance(j - self.pos)
            self.scan_command(COMMANDS[folded], line, col)
            return
        self.advance(j - self.pos)
        cfg = self.config
        canonical = cfg.keyword_map.get(folded)
        if canonical is not None:
            self.emit(TokenKind.Keyword, canonical, word, line, col)
            return
        op = cfg.operator_map.get(folded)
        if op is not None:
            self.emit(TokenKind.Operator, op, word, line, col)
            return
        self.emit(TokenKind.Identifier, word, word, line, col)

    def read_arg(self) -> str | None:
        src, n = self.src, len(self.src)
        while self.pos < n and src[self.pos] in " \t\r":
            self.advance()
        if self.pos >= n or src[self.pos] == "\n":
            return None
        ch = src[self.pos]
        if ch in "\"'":
            end = src.find(ch, self.pos + 1)
            nl = src.find("\n", self.pos + 1)
            if end < 0 or (0 <= nl < end):
                raise self.error(UnterminatedLiteral, "unterminated literal")
            arg = src[self.pos + 1:end]
            self.advance(end + 1 - self.pos)
            return arg
        j = self.pos
        while j < n and src[j] not in " \t\r\n":
            j += 1
        arg = src[self.pos:j]
        self.advance(j - self.pos)
        return arg

    def scan_command(self, name: str, line: int, col: int) -> None:
        args = []
        for _ in range(COMMAND_ARITY[name]):
            arg = self.read_arg()
            if arg is None:
                raise self.error(ScanError, f"{name} needs {COMMAND_ARITY[name]} argument(s)",
                                 line, col)
            args.append(arg)
        if self.commands is not None:
            text = " ".join([name, *args])
            self.commands.append((line, col, text))
        apply_scanner_command(self.config, ScannerCommand(name, tuple(args), self.path, line))
        self.at_start = True


def scan(source: str, config: SyntaxConfig | None = None, *, path: str | None = None,
         comments: list | None = None, commands: list | None = None) -> list[Token]:
    """Tokenize ``source``; ``config`` is mutated by embedded scanner commands.

    ``comments`` and ``commands``, when given, collect ``(line, column, text)``
    for every comment and consumed scanner command.
    """
    if config is None:
        config = SyntaxConfig()
    return _Scanner(source, config, path, comments, commands).run()


def scan_file(path: str | os.PathLike, config: SyntaxConfig, *, auto_syntax: bool = True,
              **kwargs) -> list[Token]:
    if auto_syntax:
        auto_syntax_lookup(path, config)
    text = Path(path).read_text(encoding="utf-8")
    return scan(text, config, path=str(path), **kwargs)
