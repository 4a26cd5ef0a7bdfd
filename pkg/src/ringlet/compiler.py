"""Single-pass compiler: parsing and bytecode emission are interleaved.

Each grammar routine emits its instructions as soon as it has recognized
enough input; there is no syntax tree. Forward jumps are emitted with a zero
target and patched once the target is known. The grammar is documented in
``docs/grammar.md``; ``trace`` mode records the name of every production the
parser commits to, in order.

Line breaks only matter in four places: a binary operator, ``(``, ``[`` or
``.`` must sit on the same line as its left operand, ``return`` takes a value
only from its own line, and unparenthesized ``func`` parameters end at the
line break. Everything else is free-form, so ``10 20 30`` is three
statements.
"""

from __future__ import annotations

import os
from typing import Callable

from .bytecode import (F_GLOBAL_SITE, F_LOOP_HEAD, F_STMT, STACK_EFFECT, ClassDef, FuncDef,
                       LoopInfo, Op, ProgramImage, eval_reserve)
from .errors import CompileError
from .scanner import Token, TokenKind

# (tokens, canonical path) for a ``load`` target, resolved relative to the includer
IncludeResolver = Callable[[str, "str | None"], "tuple[list[Token], str]"]

_RELOPS = {"=": Op.EQ, "!=": Op.NEQ, "<": Op.LT, ">": Op.GT, "<=": Op.LE, ">=": Op.GE}
_ADDOPS = {"+": Op.ADD, "-": Op.SUB}
_MULOPS = {"*": Op.MUL, "/": Op.DIV, "%": Op.MOD}

# keywords that may begin an expression
_EXPR_KEYWORDS = frozenset({"not", "true", "false", "self", "this", "new"})
# keywords that close a block
_BLOCK_END = frozenset({"ok", "but", "else", "next", "end", "on", "other", "off", "func", "class"})

# expression shapes that never feed braceExprEval when used as a statement
_NO_EVAL_KINDS = frozenset({"name", "call", "member", "new", "brace"})


class Compiler:
    def __init__(self, image: ProgramImage, *, path: str | None = None, trace: bool = False,
                 resolver: IncludeResolver | None = None, context: str = "root"):
        self.image = image
        self.code = image.code
        self.path = path
        self.trace_enabled = trace
        self.rules: list[str] = []
        self.resolver = resolver
        self.context = context
        self.include_stack: list[str] = [os.path.realpath(path)] if path else []
        # per-unit parse state
        self.toks: list[Token] = []
        self.nl: list[bool] = []
        self.i = 0
        self.file_id = 0
        # compile context
        self.in_func = False
        self.class_name: str | None = None
        self.brace_depth = 0
        self.depth = 0
        self.pending_parents: list[tuple[str, str, int]] = []

    # -- token access -------------------------------------------------------

    def _load_tokens(self, tokens: list[Token]) -> None:
        toks, nl = [], []
        newline = True
        for t in tokens:
            if t.kind is TokenKind.EndOfLine:
                newline = True
                continue
            toks.append(t)
            nl.append(newline)
            newline = False
        if not toks or toks[-1].kind is not TokenKind.EndOfFile:
            last = toks[-1] if toks else None
            toks.append(Token(TokenKind.EndOfFile, "", "", last.line if last else 1, 1))
            nl.append(True)
        self.toks, self.nl, self.i = toks, nl, 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def same_line(self) -> bool:
        """True when the current token continues the previous token's line."""
        return not self.nl[self.i]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind is not TokenKind.EndOfFile:
            self.i += 1
        return t

    def at_kw(self, *words: str) -> bool:
        t = self.tok
        return t.kind is TokenKind.Keyword and t.canonical in words

    def at_op(self, *ops: str) -> bool:
        t = self.tok
        return t.kind is TokenKind.Operator and t.canonical in ops

    def at_eof(self) -> bool:
        return self.tok.kind is TokenKind.EndOfFile

    def error(self, expected: str, tok: Token | None = None) -> CompileError:
        t = tok or self.tok
        line = t.line
        if t.kind is TokenKind.EndOfFile:
            # blame the last line with content, not the phantom line after it
            j = self.i - 1
            while j >= 0 and self.toks[j].kind in (TokenKind.EndOfLine, TokenKind.EndOfFile):
                j -= 1
            if j >= 0:
                line = self.toks[j].line
        return CompileError(line, expected, t.describe(), self.path)

    def expect_kw(self, word: str) -> Token:
        if not self.at_kw(word):
            raise self.error(repr(word))
        return self.advance()

    def expect_op(self, op: str) -> Token:
        if not self.at_op(op):
            raise self.error(repr(op))
        return self.advance()

    def expect_ident(self) -> str:
        if self.tok.kind is not TokenKind.Identifier:
            raise self.error("identifier")
        return self.advance().canonical.casefold()

    def rule(self, name: str) -> None:
        if self.trace_enabled:
            self.rules.append(name)

    # -- emission -----------------------------------------------------------

    def emit(self, op: Op, a: int = 0, b: int = 0, flags: int = 0, line: int | None = None) -> int:
        idx = self.code.append(op, a, b, flags)
        if line is None:
            # operators are emitted after their operands: use the last consumed token
            line = self.toks[self.i - 1].line if self.i else self.tok.line
        self.image.lines.append(line)
        self.image.file_ids.append(self.file_id)
        if op in (Op.CALL, Op.NEWOBJ, Op.NEWLIST):
            self.depth += 1 - b
        elif op == Op.CALLMETHOD:
            self.depth -= b
        else:
            self.depth += STACK_EFFECT[op]
        return idx

    def const(self, value) -> int:
        return self.image.constant(value)

    def here(self) -> int:
        return self.code.used + 1

    def patch(self, idx: int, target: int | None = None) -> None:
        self.code.set_a(idx, self.here() if target is None else target)

    @property
    def global_site(self) -> bool:
        return not self.in_func and self.class_name is None and self.brace_depth == 0

    def site_flags(self) -> int:
        return F_GLOBAL_SITE if self.global_site else 0

    def emit_load(self, name: str) -> None:
        self.emit(Op.PUSHV, self.const(name), 0, self.site_flags())

    def emit_store(self, name: str) -> None:
        self.emit(Op.ASSIGN, self.const(name), 0, self.site_flags())

    # -- entry points -------------------------------------------------------

    def compile_unit(self, tokens: list[Token]) -> int:
        """Compile one top-level unit; returns its entry index."""
        self._load_tokens(tokens)
        self.file_id = self.image.file_id(self.path or self.image.source_name)
        entry = self.here()
        self.rule("Program")
        self.parse_block(top=True)
        if self.context == "root":
            self.emit(Op.HALT)
        else:
            self.emit(Op.PUSHC, self.const(""))
            self.emit(Op.RET, 0)
        self.parse_definitions()
        if not self.at_eof():
            raise self.error("end of file")
        self.check_classes()
        return entry

    def check_classes(self) -> None:
        classes = self.image.classes
        for name, parent, line in self.pending_parents:
            if parent not in classes:
                raise CompileError(line, "defined parent class", repr(parent), self.path,
                                   f"class {name!r} inherits from undefined class {parent!r}")
        for name in classes:
            seen = set()
            cur: str | None = name
            while cur is not None:
                if cur in seen:
                    raise CompileError(classes[name].line, "acyclic inheritance", repr(name),
                                       self.path, f"inheritance cycle through class {name!r}")
                seen.add(cur)
                cur = classes[cur].parent if cur in classes else None

    # -- blocks and statements ---------------------------------------------

    def parse_block(self, top: bool = False) -> None:
        while True:
            t = self.tok
            if t.kind is TokenKind.EndOfFile:
                return
            if t.kind is TokenKind.Keyword and t.canonical in _BLOCK_END:
                return
            if t.kind is TokenKind.Operator and t.canonical == "}":
                return
            self.parse_statement()

    def parse_statement(self) -> None:
        self.rule("Statement")
        start = self.here()
        balanced = self.depth == 0
        t = self.tok
        kind = t.kind
        if kind is TokenKind.Keyword:
            word = t.canonical
            handler = _STATEMENT_KEYWORDS.get(word)
            if handler is not None:
                handler(self)
            elif word in _EXPR_KEYWORDS:
                self.parse_expr_statement()
            else:
                raise self.error("statement")
        elif kind is TokenKind.Operator and t.canonical == "?":
            self.parse_println()
        elif kind is TokenKind.Identifier:
            self.parse_designator_statement()
        else:
            self.parse_expr_statement()
        if balanced and self.here() > start:
            self.code.add_flags(start, F_STMT)

    def parse_print(self) -> None:
        self.rule("PrintStmt")
        line = self.advance().line
        self.parse_condition()
        self.emit(Op.PRINT, line=line)

    def parse_println(self) -> None:
        self.rule("PrintLnStmt")
        line = self.advance().line
        self.parse_condition()
        self.emit(Op.PRINTLN, line=line)

    def parse_input(self) -> None:
        self.rule("InputStmt")
        line = self.advance().line
        name = self.expect_ident()
        self.emit(Op.INPUT, self.const(name), 0, self.site_flags(), line=line)

    def parse_if(self) -> None:
        self.rule("IfStmt")
        self.advance()
        end_jumps = []
        self.parse_condition()
        jz = self.emit(Op.JZ)
        self.parse_block()
        while self.at_kw("but"):
            self.rule("ButClause")
            end_jumps.append(self.emit(Op.JMP))
            self.patch(jz)
            self.advance()
            self.parse_condition()
            jz = self.emit(Op.JZ)
            self.parse_block()
        if self.at_kw("else"):
            self.rule("ElseClause")
            end_jumps.append(self.emit(Op.JMP))
            self.patch(jz)
            jz = None
            self.advance()
            self.parse_block()
        self.expect_kw("ok")
        if jz is not None:
            self.patch(jz)
        for j in end_jumps:
            self.patch(j)

    def parse_for(self) -> None:
        self.rule("ForStmt")
        line = self.advance().line
        var = self.expect_ident()
        self.expect_op("=")
        self.parse_condition()
        self.emit_store(var)
        self.expect_kw("to")
        self.parse_condition()
        k = len(self.image.loops)
        lim, stp = f"$lim{k}", f"$step{k}"
        self.emit_store(lim)
        direction = 1
        if self.at_kw("step"):
            self.advance()
            first = self.here()
            self.parse_condition()
            direction = self._literal_sign(first)
        else:
            self.emit(Op.PUSHC, self.const(1.0))
        self.emit_store(stp)
        loop = LoopInfo(self.const(var), self.const(lim), self.const(stp), 0, 0)
        self.image.loops.append(loop)
        test = self.here()
        if direction:
            self.emit_load(var)
            self.emit_load(lim)
            self.emit(Op.LE if direction > 0 else Op.GE)
        else:
            # sign of the step is only known at run time
            self.emit_load(stp)
            self.emit(Op.PUSHC, self.const(0.0))
            self.emit(Op.GE)
            self.emit_load(var)
            self.emit_load(lim)
            self.emit(Op.LE)
            self.emit(Op.AND)
            self.emit_load(stp)
            self.emit(Op.PUSHC, self.const(0.0))
            self.emit(Op.LT)
            self.emit_load(var)
            self.emit_load(lim)
            self.emit(Op.GE)
            self.emit(Op.AND)
            self.emit(Op.OR)
        exit_jump = self.emit(Op.JZ)
        loop.body = self.here()
        self.parse_block()
        nline = self.expect_kw("next").line
        self.emit(Op.PUSHV, self.const(var), k, self.site_flags() | F_LOOP_HEAD, line=nline)
        self.emit_load(stp)
        self.emit(Op.ADD, line=nline)
        self.emit_store(var)
        self.emit(Op.JMP, test, line=nline)
        self.patch(exit_jump)
        loop.exit = self.here()
        del line

    def _literal_sign(self, first: int) -> int:
        """+1/-1 when the code emitted since ``first`` is a numeric literal, else 0."""
        code = self.code
        n = code.used - first + 1
        if n in (1, 2) and code.ops[first] == Op.PUSHC:
            value = self.image.constants[code.a[first]]
            if isinstance(value, float):
                if n == 2:
                    if code.ops[first + 1] != Op.NEG:
                        return 0
                    value = -value
                return 1 if value >= 0 else -1
        return 0

    def parse_while(self) -> None:
        self.rule("WhileStmt")
        self.advance()
        test = self.here()
        self.parse_condition()
        jz = self.emit(Op.JZ)
        self.parse_block()
        line = self.expect_kw("end").line
        self.emit(Op.JMP, test, line=line)
        self.patch(jz)

    def parse_switch(self) -> None:
        self.rule("SwitchStmt")
        self.advance()
        self.parse_condition()
        tmp = f"$sw{self.code.used}"
        self.emit_store(tmp)
        end_jumps = []
        while self.at_kw("on"):
            self.rule("OnClause")
            self.advance()
            self.emit_load(tmp)
            self.parse_condition()
            self.emit(Op.EQ)
            jz = self.emit(Op.JZ)
            self.parse_block()
            end_jumps.append(self.emit(Op.JMP))
            self.patch(jz)
        if self.at_kw("other"):
            self.rule("OtherClause")
            self.advance()
            self.parse_block()
        self.expect_kw("off")
        for j in end_jumps:
            self.patch(j)

    def parse_return(self) -> None:
        self.rule("ReturnStmt")
        line = self.advance().line
        t = self.tok
        has_value = self.same_line() and t.kind is not TokenKind.EndOfFile and not (
            t.kind is TokenKind.Keyword and t.canonical not in _EXPR_KEYWORDS) and not (
            t.kind is TokenKind.Operator and t.canonical == "}")
        if has_value:
            self.parse_condition()
            self.emit(Op.RET, 1, line=line)
        else:
            self.emit(Op.PUSHC, self.const(""), line=line)
            self.emit(Op.RET, 0, line=line)

    def parse_load(self) -> None:
        self.rule("LoadStmt")
        line = self.advance().line
        if self.tok.kind is not TokenKind.Literal or self.tok.surface.startswith(":"):
            raise self.error("file name literal")
        target = self.advance().canonical
        if self.resolver is None:
            raise CompileError(line, "include support", repr(target), self.path,
                               "load is not available in this context")
        try:
            tokens, canonical = self.resolver(target, self.path)
        except CompileError:
            raise
        except OSError as exc:
            raise CompileError(line, "readable file", repr(target), self.path,
                               f"cannot load {target!r}: {exc}") from None
        if canonical in self.include_stack:
            chain = " -> ".join(self.include_stack + [canonical])
            raise CompileError(line, "acyclic load", repr(target), self.path,
                               f"load cycle: {chain}")
        self.emit(Op.LOADFILE, self.const(canonical), line=line)
        saved = (self.toks, self.nl, self.i, self.path, self.file_id, self.in_func,
                 self.class_name, self.brace_depth)
        self.include_stack.append(canonical)
        self.path = canonical
        self.file_id = self.image.file_id(canonical)
        self._load_tokens(tokens)
        self.parse_block(top=True)
        if not self.at_eof() and self.at_kw("func", "class"):
            skip = self.emit(Op.JMP)
            self.in_func, self.class_name, self.brace_depth = False, None, 0
            depth = self.depth
            self.depth = 0
            self.parse_definitions()
            self.depth = depth
            self.patch(skip)
        if not self.at_eof():
            raise self.error("end of file")
        self.include_stack.pop()
        (self.toks, self.nl, self.i, self.path, self.file_id, self.in_func,
         self.class_name, self.brace_depth) = saved

    # -- definitions --------------------------------------------------------

    def parse_definitions(self) -> None:
        while True:
            if self.at_kw("func"):
                self.parse_func()
            elif self.at_kw("class"):
                self.parse_class()
            else:
                return

    def parse_func(self) -> None:
        self.rule("FuncDef")
        line = self.advance().line
        name = self.expect_ident()
        params: list[str] = []
        if self.at_op("(") and self.same_line():
            self.advance()
            if not self.at_op(")"):
                params.append(self.expect_ident())
                while self.at_op(","):
                    self.advance()
                    params.append(self.expect_ident())
            self.expect_op(")")
        elif self.tok.kind is TokenKind.Identifier and self.same_line():
            params.append(self.expect_ident())
            while self.at_op(",") and self.same_line():
                self.advance()
                params.append(self.expect_ident())
        fdef = FuncDef(name, params, self.here(), self.class_name)
        if self.class_name is not None:
            self.image.classes[self.class_name].methods[name] = fdef
        else:
            self.image.functions[name] = fdef
        saved_func, saved_depth = self.in_func, self.depth
        self.in_func, self.depth = True, 0
        self.parse_block()
        if not (self.at_eof() or self.at_kw("func", "class")):
            raise self.error("'func', 'class' or end of file")
        self.emit(Op.PUSHC, self.const(""))
        self.emit(Op.RET, 0)
        self.in_func, self.depth = saved_func, saved_depth
        del line

    def parse_class(self) -> None:
        self.rule("ClassDef")
        line = self.advance().line
        name = self.expect_ident()
        parent = None
        if self.at_kw("from"):
            self.advance()
            parent = self.expect_ident()
            self.pending_parents.append((name, parent, line))
        if name in self.image.classes and self.context == "root":
            raise CompileError(line, "new class name", repr(name), self.path,
                               f"class {name!r} is already defined")
        cdef = ClassDef(name, parent, line=line)
        self.image.classes[name] = cdef
        self.class_name = name
        saved_func, saved_depth = self.in_func, self.depth
        self.in_func, self.depth = False, 0
        cdef.init_entry = self.here()
        while not (self.at_eof() or self.at_kw("func", "class")):
            t = self.tok
            if t.kind is TokenKind.Identifier:
                # assignment targets and bare names declare attributes
                nxt = self.peek()
                if nxt.kind is not TokenKind.Operator or nxt.canonical == "=" or self.nl[self.i + 1]:
                    ident = t.canonical.casefold()
                    if ident not in cdef.attributes:
                        cdef.attributes.append(ident)
            elif t.kind is TokenKind.Keyword and t.canonical in _BLOCK_END:
                raise self.error("class member")
            elif t.kind is TokenKind.Operator and t.canonical == "}":
                raise self.error("class member")
            self.parse_statement()
        self.emit(Op.PUSHC, self.const(""))
        self.emit(Op.RET, 0)
        self.in_func, self.depth = saved_func, saved_depth
        self.parse_methods(cdef)

    def parse_methods(self, cdef: ClassDef) -> None:
        while self.at_kw("func"):
            self.parse_func()

    # -- statements headed by an identifier ---------------------------------

    def parse_designator_statement(self) -> None:
        self.rule("Designator")
        pending, kind = self.parse_chain_head()
        if self.at_op("="):
            self.rule("AssignStmt")
            line = self.advance().line
            self.emit_assignment(pending, line)
            return
        self.flush(pending)
        self.rule("ExprStmt")
        kind = self.parse_condition(pre=kind)
        self.finish_expr_statement(kind)

    def emit_assignment(self, pending, line: int) -> None:
        if pending is None:
            raise CompileError(line, "assignable target", "'='", self.path,
                               "cannot assign to a call or brace expression")
        form = pending[0]
        self.parse_condition()
        if form == "var":
            self.emit(Op.ASSIGN, self.const(pending[1]), 0, self.site_flags(), line=line)
        elif form == "index":
            self.emit(Op.SETINDEX, line=line)
        else:
            self.emit(Op.SETMEMBER, self.const(pending[1]), line=line)

    def parse_expr_statement(self) -> None:
        self.rule("ExprStmt")
        kind = self.parse_condition()
        self.finish_expr_statement(kind)

    def finish_expr_statement(self, kind: str) -> None:
        if kind in _NO_EVAL_KINDS:
            self.emit(Op.POP)
        else:
            self.emit(Op.EVALSTMT)

    # -- expressions --------------------------------------------------------
    #
    # Every routine takes ``pre``: when set, the leftmost operand has already
    # been compiled (a statement head that turned out not to be an
    # assignment) and ``pre`` is its shape. Routines return the shape of what
    # they compiled: one of name/call/member/index/new/brace/value/op.

    def parse_condition(self, pre: str | None = None) -> str:
        kind = self.parse_conjunct(pre)
        while self.at_kw("or") and self.same_line():
            self.rule("Or")
            self.advance()
            j = self.emit(Op.JNZ_KEEP)
            self.parse_conjunct()
            self.emit(Op.OR)
            self.patch(j)
            kind = "op"
        return kind

    def parse_conjunct(self, pre: str | None = None) -> str:
        kind = self.parse_negation(pre)
        while self.at_kw("and") and self.same_line():
            self.rule("And")
            self.advance()
            j = self.emit(Op.JZ_KEEP)
            self.parse_negation()
            self.emit(Op.AND)
            self.patch(j)
            kind = "op"
        return kind

    def parse_negation(self, pre: str | None = None) -> str:
        if pre is None and (self.at_kw("not") or self.at_op("!")):
            self.rule("Not")
            self.advance()
            self.parse_negation()
            self.emit(Op.NOT)
            return "op"
        return self.parse_relation(pre)

    def parse_relation(self, pre: str | None = None) -> str:
        kind = self.parse_sum(pre)
        while self.tok.kind is TokenKind.Operator and self.tok.canonical in _RELOPS \
                and self.same_line():
            self.rule("Comparison")
            op = _RELOPS[self.advance().canonical]
            self.parse_sum()
            self.emit(op)
            kind = "op"
        return kind

    def parse_sum(self, pre: str | None = None) -> str:
        self.rule("Expr")
        kind = self.parse_term(pre)
        while self.tok.kind is TokenKind.Operator and self.tok.canonical in _ADDOPS \
                and self.same_line():
            op = _ADDOPS[self.advance().canonical]
            self.parse_term()
            self.emit(op)
            kind = "op"
        return kind

    def parse_term(self, pre: str | None = None) -> str:
        self.rule("Term")
        kind = self.parse_factor(pre)
        while self.tok.kind is TokenKind.Operator and self.tok.canonical in _MULOPS \
                and self.same_line():
            op = _MULOPS[self.advance().canonical]
            self.parse_factor()
            self.emit(op)
            kind = "op"
        return kind

    def parse_factor(self, pre: str | None = None) -> str:
        self.rule("Factor")
        if pre is not None:
            return pre
        if self.at_op("-"):
            self.advance()
            self.parse_factor()
            self.emit(Op.NEG)
            return "op"
        if self.at_op("+"):
            self.advance()
            return self.parse_factor()
        if self.tok.kind is TokenKind.Identifier:
            pending, kind = self.parse_chain_head()
        else:
            pending, kind = self.parse_chain_rest(None, self.parse_primary())
        self.flush(pending)
        return kind

    def parse_primary(self) -> str:
        t = self.tok
        kind = t.kind
        if kind is TokenKind.Number:
            self.advance()
            self.emit(Op.PUSHC, self.const(float(t.canonical)), line=t.line)
            return "value"
        if kind is TokenKind.Literal:
            self.advance()
            self.emit(Op.PUSHC, self.const(t.canonical), line=t.line)
            return "value"
        if kind is TokenKind.Keyword:
            word = t.canonical
            if word in ("true", "false"):
                self.advance()
                self.emit(Op.PUSHC, self.const(1.0 if word == "true" else 0.0), line=t.line)
                return "value"
            if word in ("self", "this"):
                self.advance()
                self.emit(Op.PUSHSELF, 0 if word == "self" else 1, line=t.line)
                return "name"
            if word == "new":
                return self.parse_new()
        if kind is TokenKind.Operator:
            if t.canonical == "(":
                self.advance()
                self.parse_condition()
                self.expect_op(")")
                return "value"
            if t.canonical == "[":
                return self.parse_list()
        raise self.error("expression")

    def parse_list(self) -> str:
        self.rule("List")
        self.advance()
        n = 0
        if not self.at_op("]"):
            self.parse_condition()
            n = 1
            while self.at_op(","):
                self.advance()
                self.parse_condition()
                n += 1
        self.expect_op("]")
        self.emit(Op.NEWLIST, 0, n)
        return "value"

    def parse_new(self) -> str:
        self.rule("New")
        line = self.advance().line
        cname = self.expect_ident()
        argc = 0
        if self.at_op("(") and self.same_line():
            argc = self.parse_args()
        self.emit(Op.NEWOBJ, self.const(cname), argc, line=line)
        return "new"

    def parse_args(self) -> int:
        self.expect_op("(")
        n = 0
        if not self.at_op(")"):
            self.parse_condition()
            n = 1
            while self.at_op(","):
                self.advance()
                self.parse_condition()
                n += 1
        self.expect_op(")")
        return n

    def parse_chain_head(self):
        """Compile an identifier-headed postfix chain, deferring its last access.

        Returns ``(pending, kind)`` where ``pending`` describes an access not yet
        emitted: ``("var", name)``, ``("index",)`` or ``("member", name)``; or
        None when the chain ended in a call or brace (its value is on the stack).
        """
        t = self.advance()
        name = t.canonical.casefold()
        if self.at_op("(") and self.same_line():
            self.rule("Call")
            argc = self.parse_args()
            self.emit(Op.CALL, self.const(name), argc, line=t.line)
            pending, kind = None, "call"
        else:
            pending, kind = ("var", name), "name"
        return self.parse_chain_rest(pending, kind)

    def parse_chain_rest(self, pending, kind):
        while True:
            if self.at_op("[") and self.same_line():
                self.rule("Index")
                self.flush(pending)
                self.advance()
                self.parse_condition()
                self.expect_op("]")
                pending, kind = ("index",), "index"
            elif self.at_op(".") and self.same_line():
                self.rule("Member")
                self.flush(pending)
                self.advance()
                line = self.tok.line
                member = self.expect_ident()
                if self.at_op("(") and self.same_line():
                    self.rule("Call")
                    argc = self.parse_args()
                    self.emit(Op.CALLMETHOD, self.const(member), argc, line=line)
                    pending, kind = None, "call"
                else:
                    pending, kind = ("member", member), "member"
            elif self.at_op("{"):
                self.flush(pending)
                self.parse_brace()
                pending, kind = None, "brace"
            else:
                return pending, kind

    def parse_brace(self) -> None:
        self.rule("Brace")
        line = self.advance().line
        self.emit(Op.BRACESTART, line=line)
        self.brace_depth += 1
        self.parse_block()
        self.brace_depth -= 1
        line = self.expect_op("}").line
        self.emit(Op.BRACEEND, line=line)

    def flush(self, pending) -> None:
        if pending is None:
            return
        form = pending[0]
        if form == "var":
            self.emit_load(pending[1])
        elif form == "index":
            self.emit(Op.GETINDEX)
        else:
            self.emit(Op.GETMEMBER, self.const(pending[1]))


_STATEMENT_KEYWORDS = {
    "put": Compiler.parse_print,
    "get": Compiler.parse_input,
    "if": Compiler.parse_if,
    "for": Compiler.parse_for,
    "while": Compiler.parse_while,
    "switch": Compiler.parse_switch,
    "return": Compiler.parse_return,
    "load": Compiler.parse_load,
}


def compile_tokens(tokens: list[Token], *, path: str | None = None, trace: bool = False,
                   resolver: IncludeResolver | None = None,
                   source_name: str | None = None) -> ProgramImage:
    """Compile a complete program into a fresh image."""
    image = ProgramImage(source_name or path or "<source>")
    comp = Compiler(image, path=path, trace=trace, resolver=resolver)
    image.entry = comp.compile_unit(tokens)
    image.code.ensure_spare(eval_reserve(image.code.used))
    image.rules = comp.rules if trace else None
    return image


def trace_rules(tokens: list[Token], **kwargs) -> list[str]:
    """Grammar productions applied while compiling ``tokens``."""
    image = compile_tokens(tokens, trace=True, **kwargs)
    return image.rules


def compile_into(image: ProgramImage, tokens: list[Token], *, path: str | None = None,
                 resolver: IncludeResolver | None = None) -> int:
    """Append a unit that returns to its caller; used by eval.

    On a compile error the image is rolled back to its previous contents.
    """
    cp = image.checkpoint()
    grew = image.code.grew
    try:
        comp = Compiler(image, path=path, resolver=resolver, context="eval")
        entry = comp.compile_unit(tokens)
    except Exception:
        image.rollback(cp)
        raise
    image.code.ensure_spare(eval_reserve(image.code.used))
    image.grew_during_eval += image.code.grew - grew
    return entry
