"""Steps trees: the visual form of a program, and conversion to and from text.

A steps tree holds one step per statement, nested the way control flows:
an ``if`` step contains the steps of its branches, a ``for`` step its body.
Each step records which *component* generated it and that component's
parameters (the expression, loop bounds...). Steps keep canonical English
spellings, so text generated from a tree never depends on keyword remaps.

Text to steps is tolerant. It scans and parses like the compiler, but
instead of stopping at the first problem it:

* closes blocks left open at end of file, innermost first;
* lets a block keyword (``ok``, ``next``, ``end``, ``off``, ``but``...)
  close any blocks opened inside the block it belongs to;
* turns a block keyword with nothing to close, or a line it cannot parse,
  into a Comment step holding the raw text, flagged as ``healed``.

Comments and consumed scanner-command lines become ordinary Comment steps.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import Irrecoverable, ScanError, UnknownComponent
from .scanner import SyntaxConfig, Token, TokenKind, scan

INDENT = "    "


class StepType(enum.Enum):
    StartPoint = "R"
    Comment = "C"
    First = "F"
    AllowsInteraction = "A"
    Leaf = "L"


# component -> parameter names, in order
COMPONENTS: dict[str, tuple[str, ...]] = {
    "Print": ("expr",),
    "PrintLn": ("expr",),
    "Input": ("var",),
    "Assignment": ("target", "expr"),
    "If": ("cond",),
    "Else": ("cond",),
    "ForLoop": ("var", "start", "end", "step"),
    "WhileLoop": ("cond",),
    "Switch": ("expr",),
    "Case": ("value",),
    "DefineFunction": ("name", "params"),
    "CallFunction": ("name", "args"),
    "DefineClass": ("name", "parent"),
    "NewObject": ("target", "class", "args", "brace"),
    "BraceAccess": ("target", "expr"),
    "CallMethod": ("object", "method", "args"),
    "LoadFile": ("file",),
    "Return": ("expr",),
    "Expression": ("expr",),
}

BLOCK_COMPONENTS = frozenset({"If", "ForLoop", "WhileLoop", "Switch", "DefineFunction",
                              "DefineClass", "BraceAccess"})
BRANCH_COMPONENTS = frozenset({"Else", "Case"})


@dataclass(eq=False)
class StepNode:
    id: int
    parent_id: int
    step_type: StepType
    component: str
    params: dict[str, str] = field(default_factory=dict)
    caption: str = ""
    children: list["StepNode"] = field(default_factory=list)
    span: tuple[int, int] | None = None  # source lines; in memory only

    def __eq__(self, other) -> bool:
        if not isinstance(other, StepNode):
            return NotImplemented
        return (self.id == other.id and self.parent_id == other.parent_id
                and self.step_type is other.step_type and self.component == other.component
                and self.params == other.params and self.caption == other.caption
                and self.children == other.children)

    __hash__ = None

    @property
    def healed(self) -> bool:
        return self.params.get("healed") == "1"

    def walk(self):
        """Pre-order traversal."""
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(eq=False)
class StepsTree:
    root: StepNode
    source_name: str = ""

    def __eq__(self, other) -> bool:
        if not isinstance(other, StepsTree):
            return NotImplemented
        return self.source_name == other.source_name and self.root == other.root

    __hash__ = None

    def steps(self) -> list[StepNode]:
        return list(self.root.walk())

    @property
    def step_count(self) -> int:
        return sum(1 for _ in self.root.walk())

    @property
    def component_count(self) -> int:
        return sum(1 for s in self.root.walk() if s.component)

    def renumber(self) -> None:
        """Assign ids 1, 2, ... in pre-order and refresh parent ids."""
        counter = 0

        def visit(node: StepNode, parent_id: int) -> None:
            nonlocal counter
            counter += 1
            node.id = counter
            node.parent_id = parent_id
            for child in node.children:
                visit(child, node.id)

        visit(self.root, 0)


def new_tree(source_name: str = "") -> StepsTree:
    return StepsTree(StepNode(1, 0, StepType.StartPoint, "", {}, "Start Here"), source_name)


def tree_stats(tree: StepsTree) -> dict[str, int]:
    """Component instantiations, all steps, and steps visible to a user."""
    steps = tree.steps()
    return {
        "components": sum(1 for s in steps if s.component),
        "steps": len(steps),
        "visible_steps": sum(1 for s in steps
                             if not (s.step_type is StepType.Comment and s.healed)),
    }


# -- token rendering --------------------------------------------------------

_NO_SPACE_AFTER = frozenset({"(", "[", "."})
_NO_SPACE_BEFORE = frozenset({")", "]", ",", "."})
_VALUE_KEYWORDS = frozenset({"true", "false", "self", "this"})


def quote(text: str) -> str:
    return '"' + text.replace('"', '""') + '"'


def token_text(tok: Token) -> str:
    kind = tok.kind
    if kind is TokenKind.Literal:
        return tok.surface if tok.surface.startswith(":") else quote(tok.canonical)
    if kind is TokenKind.Identifier:
        return tok.surface
    return tok.canonical


def _is_unary(prev: Token | None) -> bool:
    if prev is None:
        return True
    if prev.kind is TokenKind.Operator:
        return prev.canonical not in (")", "]", "}")
    return prev.kind is TokenKind.Keyword and prev.canonical not in _VALUE_KEYWORDS


def render(tokens: list[Token]) -> str:
    """Canonical text for a run of tokens that re-scans to the same tokens."""
    parts: list[str] = []
    prev: Token | None = None
    prev_unary = False
    for i, tok in enumerate(tokens):
        if prev is not None:
            space = True
            if prev.kind is TokenKind.Operator and prev.canonical in _NO_SPACE_AFTER:
                space = False
            elif prev_unary:
                space = False
            elif tok.kind is TokenKind.Operator:
                c = tok.canonical
                if c in _NO_SPACE_BEFORE:
                    space = False
                elif c == "(" and prev.kind is TokenKind.Identifier:
                    space = False
                elif c == "[" and (prev.kind is TokenKind.Identifier
                                   or (prev.kind is TokenKind.Operator
                                       and prev.canonical in (")", "]"))):
                    space = False
            if space:
                parts.append(" ")
        parts.append(token_text(tok))
        prev_unary = (tok.kind is TokenKind.Operator and tok.canonical in ("-", "!")
                      and _is_unary(prev))
        prev = tok
    return "".join(parts)


# -- tolerant recognizer ----------------------------------------------------

class _Unparseable(Exception):
    pass


_RELOPS = frozenset({"=", "!=", "<", ">", "<=", ">="})
_BINOPS = frozenset({"+", "-", "*", "/", "%"}) | _RELOPS
_EXPR_KEYWORDS = frozenset({"not", "true", "false", "self", "this", "new"})
_CLOSERS = frozenset({"ok", "but", "else", "next", "end", "on", "other", "off"})


class _Recognizer:
    """Finds statement and expression extents over a token list without emitting code."""

    def __init__(self, toks: list[Token], nl: list[bool]):
        self.toks = toks
        self.nl = nl

    def kind(self, i: int) -> TokenKind:
        return self.toks[i].kind

    def is_op(self, i: int, *ops: str) -> bool:
        t = self.toks[i]
        return t.kind is TokenKind.Operator and t.canonical in ops

    def is_kw(self, i: int, *words: str) -> bool:
        t = self.toks[i]
        return t.kind is TokenKind.Keyword and t.canonical in words

    def same_line(self, i: int) -> bool:
        return not self.nl[i]

    def expect_op(self, i: int, op: str) -> int:
        if not self.is_op(i, op):
            raise _Unparseable(op)
        return i + 1

    def match_brace(self, i: int) -> int | None:
        """Index of the ``}`` matching the ``{`` at ``i``, or None."""
        depth = 0
        for j in range(i, len(self.toks)):
            t = self.toks[j]
            if t.kind is TokenKind.Operator:
                if t.canonical == "{":
                    depth += 1
                elif t.canonical == "}":
                    depth -= 1
                    if depth == 0:
                        return j
            elif t.kind is TokenKind.EndOfFile:
                return None
        return None

    def continues(self, j: int) -> bool:
        """Does the token at ``j`` extend an expression that ended just before it?"""
        t = self.toks[j]
        if t.kind is TokenKind.Operator:
            if t.canonical == "{":
                return True
            if t.canonical in _BINOPS or t.canonical in (".", "["):
                return self.same_line(j)
        if t.kind is TokenKind.Keyword and t.canonical in ("and", "or"):
            return self.same_line(j)
        return False

    # expression := operands joined by binary operators on the operator's left line
    def expr(self, i: int) -> int:
        i = self.operand(i)
        while True:
            t = self.toks[i]
            if not self.same_line(i):
                return i
            if t.kind is TokenKind.Operator and t.canonical in _BINOPS:
                i = self.operand(i + 1)
            elif t.kind is TokenKind.Keyword and t.canonical in ("and", "or"):
                i = self.operand(i + 1)
            else:
                return i

    def operand(self, i: int) -> int:
        while self.is_op(i, "-", "+", "!") or self.is_kw(i, "not"):
            i += 1
        i = self.primary(i)
        return self.postfix(i, chain=True)

    def primary(self, i: int) -> int:
        t = self.toks[i]
        k = t.kind
        if k in (TokenKind.Number, TokenKind.Literal, TokenKind.Identifier):
            return i + 1
        if k is TokenKind.Keyword:
            if t.canonical in _VALUE_KEYWORDS:
                return i + 1
            if t.canonical == "new":
                if self.kind(i + 1) is not TokenKind.Identifier:
                    raise _Unparseable("class name")
                i += 2
                if self.is_op(i, "(") and self.same_line(i):
                    i = self.args(i)
                return i
        if k is TokenKind.Operator:
            if t.canonical == "(":
                return self.expect_op(self.expr(i + 1), ")")
            if t.canonical == "[":
                i += 1
                if self.is_op(i, "]"):
                    return i + 1
                i = self.expr(i)
                while self.is_op(i, ","):
                    i = self.expr(i + 1)
                return self.expect_op(i, "]")
        raise _Unparseable("expression")

    def args(self, i: int) -> int:
        i = self.expect_op(i, "(")
        if self.is_op(i, ")"):
            return i + 1
        i = self.expr(i)
        while self.is_op(i, ","):
            i = self.expr(i + 1)
        return self.expect_op(i, ")")

    def postfix(self, i: int, chain: bool) -> int:
        while True:
            if self.is_op(i, "(") and self.same_line(i) and self.kind(i - 1) is TokenKind.Identifier:
                i = self.args(i)
            elif self.is_op(i, "[") and self.same_line(i):
                i = self.expect_op(self.expr(i + 1), "]")
            elif self.is_op(i, ".") and self.same_line(i):
                if self.kind(i + 1) is not TokenKind.Identifier:
                    raise _Unparseable("member name")
                i += 2
            elif self.is_op(i, "{"):
                end = self.match_brace(i)
                if end is None:
                    raise _Unparseable("}")
                i = end + 1
            else:
                return i

    def chain_until_brace(self, i: int) -> tuple[int, int | None]:
        """Extent of an operand whose trailing ``{ ... }`` may open a block.

        Returns ``(end, brace)``: when ``brace`` is set the operand ends at the
        ``{`` token at that index and its body should become child steps.
        """
        start = i
        while self.is_op(i, "-", "+", "!") or self.is_kw(i, "not"):
            i += 1
        unary = i != start
        i = self.primary(i)
        while True:
            if self.is_op(i, "{") and not unary:
                end = self.match_brace(i)
                if end is None or not self.continues(end + 1):
                    return i, i
                i = end + 1
            elif (self.is_op(i, "(") and self.same_line(i)
                  and self.kind(i - 1) is TokenKind.Identifier):
                i = self.args(i)
            elif self.is_op(i, "[") and self.same_line(i):
                i = self.expect_op(self.expr(i + 1), "]")
            elif self.is_op(i, ".") and self.same_line(i):
                if self.kind(i + 1) is not TokenKind.Identifier:
                    raise _Unparseable("member name")
                i += 2
            else:
                return i, None


@dataclass
class _Open:
    step: StepNode
    kind: str  # If, Else, ForLoop, WhileLoop, Switch, Case, DefineFunction, DefineClass, brace


class _Converter:
    def __init__(self, source: str, config: SyntaxConfig, source_name: str):
        comments: list = []
        commands: list = []
        try:
            tokens = scan(source, config, comments=comments, commands=commands)
        except ScanError as exc:
            tokens = self._scan_tolerantly(source, config, comments, commands, exc)
        self.lines = source.splitlines()
        self.notes = sorted([(ln, col, text, False) for ln, col, text in comments]
                            + [(ln, col, text, False) for ln, col, text in commands])
        self.note_i = 0
        toks, nl = [], []
        newline = True
        for t in tokens:
            if t.kind is TokenKind.EndOfLine:
                newline = True
                continue
            toks.append(t)
            nl.append(newline)
            newline = False
        self.toks, self.nl = toks, nl
        self.rec = _Recognizer(toks, nl)
        self.tree = new_tree(source_name)
        self.stack: list[_Open] = [_Open(self.tree.root, "root")]

    @staticmethod
    def _scan_tolerantly(source, config, comments, commands, first_error):
        """Scan line by line so one bad line becomes a comment instead of an error."""
        tokens: list[Token] = []
        bad: list = []
        for lineno, text in enumerate(source.splitlines(), start=1):
            c1: list = []
            c2: list = []
            try:
                line_toks = scan(text, config, comments=c1, commands=c2)
            except ScanError:
                bad.append((lineno, 1, text.strip()))
                continue
            for t in line_toks:
                if t.kind in (TokenKind.EndOfLine, TokenKind.EndOfFile):
                    continue
                tokens.append(Token(t.kind, t.canonical, t.surface, lineno, t.column))
            comments.extend((lineno, col, txt) for _, col, txt in c1)
            commands.extend((lineno, col, txt) for _, col, txt in c2)
            tokens.append(Token(TokenKind.EndOfLine, "\n", "\n", lineno, len(text) + 1))
        tokens.append(Token(TokenKind.EndOfFile, "", "", len(source.splitlines()) + 1, 1))
        comments.extend((ln, col, "\0" + txt) for ln, col, txt in bad)
        return tokens

    # -- tree building ------------------------------------------------------

    @property
    def top(self) -> _Open:
        return self.stack[-1]

    def add(self, component: str, params: dict[str, str], caption: str, line: int,
            step_type: StepType | None = None) -> StepNode:
        if step_type is None:
            step_type = StepType.AllowsInteraction if component in BLOCK_COMPONENTS \
                else StepType.Leaf
        step = StepNode(0, 0, step_type, component, params, caption, [], (line, line))
        self.top.step.children.append(step)
        return step

    def add_comment(self, text: str, line: int, healed: bool) -> None:
        params = {"text": text}
        if healed:
            params["healed"] = "1"
        step = StepNode(0, 0, StepType.Comment, "", params, text, [], (line, line))
        self.top.step.children.append(step)

    def flush_notes(self, line: int, col: int) -> None:
        notes = self.notes
        while self.note_i < len(notes) and (notes[self.note_i][0], notes[self.note_i][1]) < (line, col):
            ln, _, text, _ = notes[self.note_i]
            if text.startswith("\0"):
                self.add_comment(text[1:], ln, healed=True)
            else:
                self.add_comment(text, ln, healed=False)
            self.note_i += 1

    def close_top(self, line: int) -> None:
        opened = self.stack.pop()
        if opened.step.span is not None:
            opened.step.span = (opened.step.span[0], max(opened.step.span[1], line))

    def close_to(self, kinds: set[str], barrier: set[str], line: int) -> bool:
        """Close blocks down to the innermost of ``kinds`` (left open); False if none."""
        for depth in range(len(self.stack) - 1, 0, -1):
            k = self.stack[depth].kind
            if k in kinds:
                while len(self.stack) - 1 > depth:
                    self.close_top(line)
                return True
            if k in barrier:
                return False
        return False

    # -- main loop ----------------------------------------------------------

    def convert(self) -> StepsTree:
        toks = self.toks
        i = 0
        while toks[i].kind is not TokenKind.EndOfFile:
            t = toks[i]
            self.flush_notes(t.line, t.column)
            try:
                i = self.statement(i)
            except _Unparseable:
                i = self.heal_line(i)
        eof = toks[i]
        self.flush_notes(eof.line + 1, 0)
        while len(self.stack) > 1:
            self.close_top(eof.line)
        self.tree.renumber()
        return self.tree

    def heal_line(self, i: int) -> int:
        """Turn the rest of token ``i``'s line into a healed Comment step."""
        t = self.toks[i]
        raw = self.lines[t.line - 1][t.column - 1:].strip() if t.line <= len(self.lines) else ""
        self.add_comment(raw or t.surface, t.line, healed=True)
        j = i + 1
        while self.toks[j].kind is not TokenKind.EndOfFile and not self.nl[j]:
            j += 1
        return j

    def text(self, i: int, j: int) -> str:
        return render(self.toks[i:j])

    def statement(self, i: int) -> int:
        t = self.toks[i]
        rec = self.rec
        line = t.line
        if self.top.kind == "Switch" and not (
                t.kind is TokenKind.Keyword and t.canonical in ("on", "other", "off")):
            # nothing but branches may sit before the first on/other: end the empty switch
            self.close_top(line)
        if t.kind is TokenKind.Keyword:
            w = t.canonical
            if w == "put":
                j = rec.expr(i + 1)
                expr = self.text(i + 1, j)
                self.add("Print", {"expr": expr}, f"put {expr}", line)
                return j
            if w == "get":
                if rec.kind(i + 1) is not TokenKind.Identifier:
                    raise _Unparseable("identifier")
                var = self.toks[i + 1].surface
                self.add("Input", {"var": var}, f"get {var}", line)
                return i + 2
            if w == "if":
                j = rec.expr(i + 1)
                cond = self.text(i + 1, j)
                step = self.add("If", {"cond": cond}, f"if {cond}", line)
                self.stack.append(_Open(step, "If"))
                return j
            if w in ("but", "else"):
                return self.branch_if(i, w)
            if w == "ok":
                return self.close_keyword(i, {"If"}, close_also={"Else"})
            if w == "for":
                return self.for_header(i)
            if w == "next":
                return self.close_keyword(i, {"ForLoop"})
            if w == "while":
                j = rec.expr(i + 1)
                cond = self.text(i + 1, j)
                step = self.add("WhileLoop", {"cond": cond}, f"while {cond}", line)
                self.stack.append(_Open(step, "WhileLoop"))
                return j
            if w == "end":
                return self.close_keyword(i, {"WhileLoop"})
            if w == "switch":
                j = rec.expr(i + 1)
                expr = self.text(i + 1, j)
                step = self.add("Switch", {"expr": expr}, f"switch {expr}", line)
                self.stack.append(_Open(step, "Switch"))
                return j
            if w in ("on", "other"):
                return self.branch_switch(i, w)
            if w == "off":
                return self.close_keyword(i, {"Switch"}, close_also={"Case"})
            if w == "return":
                nxt = self.toks[i + 1]
                if rec.same_line(i + 1) and nxt.kind is not TokenKind.EndOfFile and not (
                        nxt.kind is TokenKind.Keyword and nxt.canonical not in _EXPR_KEYWORDS) \
                        and not (nxt.kind is TokenKind.Operator and nxt.canonical == "}"):
                    j = rec.expr(i + 1)
                    expr = self.text(i + 1, j)
                    self.add("Return", {"expr": expr}, f"return {expr}", line)
                    return j
                self.add("Return", {"expr": ""}, "return", line)
                return i + 1
            if w == "load":
                lit = self.toks[i + 1]
                if lit.kind is not TokenKind.Literal or lit.surface.startswith(":"):
                    raise _Unparseable("file name")
                self.add("LoadFile", {"file": lit.canonical}, f"load {quote(lit.canonical)}",
                         line)
                return i + 2
            if w == "func":
                return self.func_header(i)
            if w == "class":
                return self.class_header(i)
            if w in _EXPR_KEYWORDS:
                return self.expression_statement(i)
            raise _Unparseable("statement")
        if t.kind is TokenKind.Operator:
            if t.canonical == "?":
                j = rec.expr(i + 1)
                expr = self.text(i + 1, j)
                self.add("PrintLn", {"expr": expr}, f"? {expr}", line)
                return j
            if t.canonical == "}":
                if self.close_to({"brace"}, {"DefineFunction", "DefineClass"}, line):
                    self.close_top(line)
                else:
                    self.add_comment("}", line, healed=True)
                return i + 1
        if t.kind is TokenKind.Identifier:
            return self.identifier_statement(i)
        return self.expression_statement(i)

    # -- block structure ----------------------------------------------------

    def close_keyword(self, i: int, kinds: set[str], close_also: set[str] = frozenset()) -> int:
        t = self.toks[i]
        barrier = {"brace", "DefineFunction", "DefineClass"}
        if self.close_to(kinds | close_also, barrier, t.line):
            if self.top.kind in close_also:
                self.close_top(t.line)
            self.close_top(t.line)
        else:
            self.add_comment(t.surface, t.line, healed=True)
        return i + 1

    def branch_owner(self, block: str, branch: str, key: str, line: int) -> bool:
        """Close down to the innermost ``block`` that can still take a branch.

        A block whose last branch is the catch-all (``else``/``other``) is
        finished, so the search moves past it to an enclosing one.
        """
        barrier = {"brace", "DefineFunction", "DefineClass"}
        depth = len(self.stack) - 1
        while depth > 0:
            o = self.stack[depth]
            if o.kind in barrier:
                return False
            if o.kind == branch and not o.step.params.get(key):
                depth -= 2  # skip the branch and its finished block
                continue
            if o.kind in (block, branch):
                while len(self.stack) - 1 > depth:
                    self.close_top(line)
                if o.kind == branch:
                    self.close_top(line)
                return True
            depth -= 1
        return False

    def branch_if(self, i: int, word: str) -> int:
        t = self.toks[i]
        if not self.branch_owner("If", "Else", "cond", t.line):
            self.add_comment(t.surface, t.line, healed=True)
            return i + 1
        if word == "but":
            j = self.rec.expr(i + 1)
            cond = self.text(i + 1, j)
            caption = f"but {cond}"
        else:
            j, cond, caption = i + 1, "", "else"
        step = self.add("Else", {"cond": cond}, caption, t.line, StepType.First)
        self.stack.append(_Open(step, "Else"))
        return j

    def branch_switch(self, i: int, word: str) -> int:
        t = self.toks[i]
        if not self.branch_owner("Switch", "Case", "value", t.line):
            self.add_comment(t.surface, t.line, healed=True)
            return i + 1
        if word == "on":
            j = self.rec.expr(i + 1)
            value = self.text(i + 1, j)
            caption = f"on {value}"
        else:
            j, value, caption = i + 1, "", "other"
        step = self.add("Case", {"value": value}, caption, t.line, StepType.First)
        self.stack.append(_Open(step, "Case"))
        return j

    def for_header(self, i: int) -> int:
        rec = self.rec
        line = self.toks[i].line
        if rec.kind(i + 1) is not TokenKind.Identifier or not rec.is_op(i + 2, "="):
            raise _Unparseable("for header")
        var = self.toks[i + 1].surface
        j = rec.expr(i + 3)
        start = self.text(i + 3, j)
        if not rec.is_kw(j, "to"):
            raise _Unparseable("to")
        k = rec.expr(j + 1)
        end = self.text(j + 1, k)
        step = ""
        if rec.is_kw(k, "step"):
            m = rec.expr(k + 1)
            step = self.text(k + 1, m)
            k = m
        caption = f"for {var} = {start} to {end}" + (f" step {step}" if step else "")
        node = self.add("ForLoop", {"var": var, "start": start, "end": end, "step": step},
                        caption, line)
        self.stack.append(_Open(node, "ForLoop"))
        return k

    def func_header(self, i: int) -> int:
        rec = self.rec
        line = self.toks[i].line
        if rec.kind(i + 1) is not TokenKind.Identifier:
            raise _Unparseable("function name")
        name = self.toks[i + 1].surface
        j = i + 2
        if rec.is_op(j, "(") and rec.same_line(j):
            k = j + 1
            while not rec.is_op(k, ")"):
                if rec.kind(k) not in (TokenKind.Identifier,) and not rec.is_op(k, ","):
                    raise _Unparseable("parameter")
                k += 1
            params = self.text(j, k + 1)
            j = k + 1
        elif rec.kind(j) is TokenKind.Identifier and rec.same_line(j):
            k = j + 1
            while rec.is_op(k, ",") and rec.same_line(k) and rec.kind(k + 1) is TokenKind.Identifier:
                k += 2
            params = self.text(j, k)
            j = k
        else:
            params = ""
        # a function ends every block except an enclosing class
        while len(self.stack) > 1 and self.top.kind != "DefineClass":
            self.close_top(line)
        caption = f"func {name}" + (params if params.startswith("(") else
                                    (" " + params if params else ""))
        node = self.add("DefineFunction", {"name": name, "params": params}, caption, line)
        self.stack.append(_Open(node, "DefineFunction"))
        return j

    def class_header(self, i: int) -> int:
        rec = self.rec
        line = self.toks[i].line
        if rec.kind(i + 1) is not TokenKind.Identifier:
            raise _Unparseable("class name")
        name = self.toks[i + 1].surface
        j = i + 2
        parent = ""
        if rec.is_kw(j, "from"):
            if rec.kind(j + 1) is not TokenKind.Identifier:
                raise _Unparseable("parent class")
            parent = self.toks[j + 1].surface
            j += 2
        while len(self.stack) > 1:
            self.close_top(line)
        caption = f"class {name}" + (f" from {parent}" if parent else "")
        node = self.add("DefineClass", {"name": name, "parent": parent}, caption, line)
        self.stack.append(_Open(node, "DefineClass"))
        return j

    # -- simple statements --------------------------------------------------

    def open_brace(self, step: StepNode) -> None:
        self.stack.append(_Open(step, "brace"))

    def expression_statement(self, i: int, target: str = "") -> int:
        """A statement (or assignment right-hand side) that is an expression."""
        rec = self.rec
        line = self.toks[i].line
        end, brace = rec.chain_until_brace(i)
        if brace is None and rec.continues(end):
            end, brace = rec.expr(i), None
        prefix = f"{target} = " if target else ""
        if brace is not None:
            if rec.is_kw(i, "new") and self._is_plain_new(i, brace):
                return self._new_object(i, brace, target, line, with_brace=True)
            expr = self.text(i, brace)
            node = self.add("BraceAccess", {"target": target, "expr": expr},
                            f"{prefix}{expr} {{", line)
            self.open_brace(node)
            return brace + 1
        if rec.is_kw(i, "new") and self._is_plain_new(i, end):
            return self._new_object(i, end, target, line, with_brace=False)
        expr = self.text(i, end)
        if target:
            self.add("Assignment", {"target": target, "expr": expr}, f"{target} = {expr}", line)
            return end
        toks = self.toks
        if toks[i].kind is TokenKind.Identifier and rec.is_op(i + 1, "(") and rec.same_line(i + 1) \
                and rec.args(i + 1) == end:
            name = toks[i].surface
            args = self.text(i + 2, end - 1)
            self.add("CallFunction", {"name": name, "args": args}, expr, line)
            return end
        method = self._method_call(i, end)
        if method is not None:
            obj_end, mname = method
            obj = self.text(i, obj_end)
            args = self.text(obj_end + 3, end - 1)
            self.add("CallMethod", {"object": obj, "method": mname, "args": args}, expr, line)
            return end
        self.add("Expression", {"expr": expr}, expr, line)
        return end

    def _is_plain_new(self, i: int, end: int) -> bool:
        """``new C`` or ``new C(args)`` exactly spanning ``i..end``."""
        rec = self.rec
        j = i + 2
        if rec.is_op(j, "(") and rec.same_line(j):
            j = rec.args(j)
        return j == end

    def _new_object(self, i: int, end: int, target: str, line: int, with_brace: bool) -> int:
        cls = self.toks[i + 1].surface
        args = self.text(i + 2, end) if end > i + 2 else ""
        prefix = f"{target} = " if target else ""
        caption = f"{prefix}new {cls}{args}" + (" {" if with_brace else "")
        node = self.add("NewObject", {"target": target, "class": cls, "args": args,
                                      "brace": "1" if with_brace else ""}, caption, line,
                        StepType.AllowsInteraction if with_brace else StepType.Leaf)
        if with_brace:
            self.open_brace(node)
            return end + 1
        return end

    def _method_call(self, i: int, end: int):
        """``(object_end, method)`` when ``i..end`` is ``obj.method(args)``."""
        rec = self.rec
        toks = self.toks
        if not rec.is_op(end - 1, ")"):
            return None
        # find the last '.' at nesting depth 0
        depth = 0
        last_dot = None
        for j in range(i, end):
            t = toks[j]
            if t.kind is TokenKind.Operator:
                if t.canonical in ("(", "[", "{"):
                    depth += 1
                elif t.canonical in (")", "]", "}"):
                    depth -= 1
                elif t.canonical == "." and depth == 0:
                    last_dot = j
                elif depth == 0 and t.canonical not in (".",):
                    return None
            elif depth == 0 and t.kind is TokenKind.Keyword and t.canonical not in \
                    _VALUE_KEYWORDS:
                return None
        if last_dot is None or toks[last_dot + 1].kind is not TokenKind.Identifier:
            return None
        if not rec.is_op(last_dot + 2, "(") or rec.args(last_dot + 2) != end:
            return None
        return last_dot, toks[last_dot + 1].surface

    def identifier_statement(self, i: int) -> int:
        rec = self.rec
        # an assignment target is a designator chain followed by '='
        j = rec.postfix(i + 1, chain=True) if not rec.is_op(i + 1, "{") else i + 1
        if rec.is_op(j, "=") and self._assignable(i, j):
            target = self.text(i, j)
            return self.expression_statement(j + 1, target=target)
        return self.expression_statement(i)

    def _assignable(self, i: int, j: int) -> bool:
        """A chain ending in a call or brace cannot be assigned to."""
        last = self.toks[j - 1]
        if last.kind is TokenKind.Operator and last.canonical in (")", "}"):
            return False
        return True


def text_to_steps(source: str | bytes, config: SyntaxConfig | None = None, *,
                  source_name: str = "") -> StepsTree:
    """Convert program text to a steps tree, healing what it can."""
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise Irrecoverable(f"source is not valid UTF-8: {exc}") from None
    config = config.copy() if config is not None else SyntaxConfig()
    return _Converter(source, config, source_name).convert()


# -- steps to text ----------------------------------------------------------

def _line(step: StepNode) -> str:
    p = step.params
    c = step.component
    if c == "Print":
        return f"put {p['expr']}"
    if c == "PrintLn":
        return f"? {p['expr']}"
    if c == "Input":
        return f"get {p['var']}"
    if c == "Assignment":
        return f"{p['target']} = {p['expr']}"
    if c == "If":
        return f"if {p['cond']}"
    if c == "Else":
        return f"but {p['cond']}" if p.get("cond") else "else"
    if c == "ForLoop":
        text = f"for {p['var']} = {p['start']} to {p['end']}"
        return text + (f" step {p['step']}" if p.get("step") else "")
    if c == "WhileLoop":
        return f"while {p['cond']}"
    if c == "Switch":
        return f"switch {p['expr']}"
    if c == "Case":
        return f"on {p['value']}" if p.get("value") else "other"
    if c == "DefineFunction":
        params = p.get("params", "")
        if params and not params.startswith("("):
            params = " " + params
        return f"func {p['name']}{params}"
    if c == "CallFunction":
        return f"{p['name']}({p.get('args', '')})"
    if c == "DefineClass":
        return f"class {p['name']}" + (f" from {p['parent']}" if p.get("parent") else "")
    if c == "NewObject":
        prefix = f"{p['target']} = " if p.get("target") else ""
        return f"{prefix}new {p['class']}{p.get('args', '')}" + (" {" if p.get("brace") else "")
    if c == "BraceAccess":
        prefix = f"{p['target']} = " if p.get("target") else ""
        return f"{prefix}{p['expr']} {{"
    if c == "CallMethod":
        return f"{p['object']}.{p['method']}({p.get('args', '')})"
    if c == "LoadFile":
        return f"load {quote(p['file'])}"
    if c == "Return":
        return f"return {p['expr']}" if p.get("expr") else "return"
    if c == "Expression":
        return p["expr"]
    raise UnknownComponent(f"unknown component {c!r}")


_TERMINATOR = {"If": "ok", "ForLoop": "next", "WhileLoop": "end", "Switch": "off",
               "BraceAccess": "}"}


def steps_to_text(tree: StepsTree) -> str:
    """Generate program text; every block is explicitly terminated."""
    out: list[str] = []

    def emit(step: StepNode, level: int) -> None:
        pad = INDENT * level
        if step.step_type is StepType.Comment:
            text = step.params.get("text", step.caption)
            out.append(f"{pad}# {text}".rstrip() if text else f"{pad}#")
            return
        if step.component not in COMPONENTS:
            raise UnknownComponent(f"unknown component {step.component!r}")
        out.append(pad + _line(step))
        c = step.component
        if c == "If" or c == "Switch":
            for child in step.children:
                if child.component in BRANCH_COMPONENTS:
                    emit(child, level)
                else:
                    emit(child, level + 1)
        else:
            for child in step.children:
                emit(child, level + 1)
        term = _TERMINATOR.get(c)
        if c == "NewObject" and step.params.get("brace"):
            term = "}"
        if term is not None:
            out.append(pad + term)

    for child in tree.root.children:
        emit(child, 0)
    return "".join(line + "\n" for line in out)
