"""Stack virtual machine and the host embedding surface.

A :class:`LanguageState` is one isolated interpreter: its own syntax config,
memory pool, globals, stacks and program image. States never share mutable
data, so any number of them can exist side by side.

The dispatch loop runs from the decoded instruction lists of the image's
:class:`~ringlet.bytecode.CodeBlock`. When rewriting is enabled it replaces
instructions in place with faster forms the first time they execute:

* ``PUSHV`` at a global-scope site becomes ``PUSHV_FAST`` carrying the
  variable's global slot in operand b;
* ``ASSIGN`` at a global-scope site becomes ``ASSIGN_FAST`` likewise;
* the first instruction of a ``for`` increment becomes ``FOR_STEP``, which
  increments, tests and jumps in one step and falls back to plain
  ``PUSHV`` behavior whenever its operands are not all numbers.

Guest functions called by ``CALL``/``CALLMETHOD`` run in the same loop.
Hooks (getters, setters, brace hooks, ``init``) and ``eval`` run in a nested
loop that returns when their frame does.
"""

from __future__ import annotations

import enum
import sys
from pathlib import Path
from typing import Callable

from . import errors
from .builtins import BUILTINS
from .bytecode import (F_GLOBAL_SITE, F_LOOP_HEAD, F_STMT, FuncDef, Op, ProgramImage)
from .compiler import compile_into, compile_tokens
from .errors import (CompileError, ErrorCode, ResumeWithoutSuspend, RingRuntimeError, StateDestroyed,
                     StateError)
from .flexlist import FlexList
from .objects import ClassInfo, ObjectInstance
from .pool import PROFILES, MemoryPool
from .scanner import SyntaxConfig, auto_syntax_lookup, scan
from .values import from_host, to_number, to_text, truthy

MAX_FRAMES = 10_000


class Status(enum.Enum):
    Ready = "Ready"
    Running = "Running"
    Suspended = "Suspended"
    Halted = "Halted"
    Errored = "Errored"


class Frame:
    __slots__ = ("locals", "this", "braces", "ret_pc", "base", "host", "func")

    def __init__(self, locals_, this, ret_pc: int, base: int, host: bool, func: str | None):
        self.locals = locals_      # None for top-level code: names live in globals
        self.this = this
        self.braces: list | None = None
        self.ret_pc = ret_pc
        self.base = base
        self.host = host
        self.func = func


class _Signal:
    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name


_HALT = _Signal("HALT")
_SUSPEND = _Signal("SUSPEND")

# opcodes as plain ints for the dispatch loop
_PUSHC, _PUSHV, _PUSHV_FAST = int(Op.PUSHC), int(Op.PUSHV), int(Op.PUSHV_FAST)
_ASSIGN, _ASSIGN_FAST = int(Op.ASSIGN), int(Op.ASSIGN_FAST)
_ADD, _SUB, _MUL, _DIV, _MOD, _NEG = (int(Op.ADD), int(Op.SUB), int(Op.MUL), int(Op.DIV),
                                      int(Op.MOD), int(Op.NEG))
_EQ, _NEQ, _LT, _GT, _LE, _GE = (int(Op.EQ), int(Op.NEQ), int(Op.LT), int(Op.GT), int(Op.LE),
                                 int(Op.GE))
_AND, _OR, _NOT = int(Op.AND), int(Op.OR), int(Op.NOT)
_JMP, _JZ, _FOR_STEP, _JZ_KEEP, _JNZ_KEEP = (int(Op.JMP), int(Op.JZ), int(Op.FOR_STEP),
                                             int(Op.JZ_KEEP), int(Op.JNZ_KEEP))
_CALL, _RET, _CALLMETHOD = int(Op.CALL), int(Op.RET), int(Op.CALLMETHOD)
_PRINT, _PRINTLN, _INPUT = int(Op.PRINT), int(Op.PRINTLN), int(Op.INPUT)
_NEWLIST, _GETINDEX, _SETINDEX = int(Op.NEWLIST), int(Op.GETINDEX), int(Op.SETINDEX)
_NEWOBJ, _GETMEMBER, _SETMEMBER = int(Op.NEWOBJ), int(Op.GETMEMBER), int(Op.SETMEMBER)
_BRACESTART, _BRACEEND, _EVALSTMT = int(Op.BRACESTART), int(Op.BRACEEND), int(Op.EVALSTMT)
_POP, _PUSHSELF, _LOADFILE, _HALT_OP = int(Op.POP), int(Op.PUSHSELF), int(Op.LOADFILE), int(Op.HALT)


def _rt(code: ErrorCode, message: str) -> RingRuntimeError:
    return RingRuntimeError(code, message)


class LanguageState:
    """One isolated interpreter instance."""

    def __init__(self, profile: str = "desktop", config: SyntaxConfig | None = None, *,
                 output=None, input=None, rewriting: bool = True, instrument: bool = False):
        if profile not in PROFILES:
            raise ValueError(f"unknown profile {profile!r}")
        self.profile = PROFILES[profile]
        self.config = config.copy() if config is not None else SyntaxConfig()
        self.pool = MemoryPool.for_profile(self.profile)
        self.gnames: dict[str, int] = {}
        self.gvals: list = []
        self.image: ProgramImage | None = None
        self.stack: list = []
        self.frames: list[Frame] = []
        self.pc = 0
        self.status = Status.Ready
        self.history: list[Status] = [Status.Ready]
        self.builtin_overrides: dict[str, Callable] = {}
        self.suspend_request: dict | None = None
        self.error: Exception | None = None
        self.rewriting = rewriting
        self.instrument = instrument
        self.op_counts = [0] * (max(Op) + 1)
        self.stack_violations: list[int] = []
        self.events = {"GrewCapacity": 0, "Rewrites": 0}
        self._nest = 0
        self._explicit = False
        self._active: set = set()
        self._classes: dict[str, ClassInfo] = {}
        self._loop_slots: dict[int, tuple] = {}
        self._destroyed = False
        self.set_output(output)
        self.set_input(input)
        self._define_global("nl", "\n")

    # -- host surface -------------------------------------------------------

    def _check(self) -> None:
        if self._destroyed:
            raise StateDestroyed("language state has been destroyed")

    def _set_status(self, status: Status) -> None:
        self.status = status
        self.history.append(status)

    def set_output(self, sink) -> None:
        """Route guest output to ``sink``: a callable taking text or a writable stream."""
        self._check()
        if sink is None:
            self._write = lambda text: sys.stdout.write(text)
        elif callable(sink) and not hasattr(sink, "write"):
            self._write = sink
        else:
            self._write = sink.write

    def set_input(self, source) -> None:
        """Where ``get`` reads lines from: a callable returning text or a readable stream."""
        self._check()
        if source is None:
            self._readline = lambda: sys.stdin.readline()
        elif callable(source) and not hasattr(source, "readline"):
            self._readline = source
        else:
            self._readline = source.readline

    def register_builtin(self, name: str, callback: Callable) -> None:
        """Override or add a builtin. ``callback(state, *args)`` returns a host value.

        The special name ``get`` overrides the input statement; its callback is
        called as ``callback(state, variable_name)``.
        """
        self._check()
        self.builtin_overrides[name.casefold()] = callback

    @property
    def globals(self) -> dict:
        """Snapshot of user-visible globals."""
        return {k: self.gvals[s] for k, s in self.gnames.items() if not k.startswith("$")}

    def get_global(self, name: str):
        slot = self.gnames.get(name.casefold())
        if slot is None:
            raise KeyError(name)
        return self.gvals[slot]

    def set_global(self, name: str, value) -> None:
        self._define_global(name.casefold(), from_host(value))

    def _define_global(self, name: str, value) -> int:
        slot = self.gnames.get(name)
        if slot is None:
            slot = len(self.gvals)
            self.gnames[name] = slot
            self.gvals.append(value)
        else:
            self.gvals[slot] = value
        return slot

    def _resolve_include(self, target: str, from_path: str | None):
        base = Path(from_path).parent if from_path else Path.cwd()
        path = Path(target)
        if not path.is_absolute():
            path = base / path
        path = Path(str(path))
        auto_syntax_lookup(path, self.config)
        text = path.read_text(encoding="utf-8")
        canonical = str(path.resolve())
        return scan(text, self.config, path=canonical), canonical

    def compile(self, source: str, path: str | None = None, *, trace: bool = False) -> ProgramImage:
        """Scan and compile ``source`` with this state's syntax config."""
        self._check()
        tokens = scan(source, self.config, path=path)
        return compile_tokens(tokens, path=path, trace=trace, resolver=self._resolve_include)

    def run(self, image: ProgramImage) -> Status:
        """Execute ``image`` from its entry until HALT, an error, or suspension."""
        self._check()
        if self.status in (Status.Running, Status.Suspended):
            raise StateError(f"cannot run a state that is {self.status.value}")
        self.image = image
        self._classes.clear()
        self._loop_slots.clear()
        self.stack.clear()
        self.frames = [Frame(None, None, 0, 0, False, None)]
        self.error = None
        self.suspend_request = None
        self._set_status(Status.Running)
        return self._drive(image.entry)

    def run_source(self, source: str, path: str | None = None) -> Status:
        return self.run(self.compile(source, path))

    def eval(self, code: str) -> Status:
        """Compile ``code`` into the image's spare capacity and run it globally.

        Compile errors propagate and leave the state as it was.
        """
        self._check()
        if self.status in (Status.Running, Status.Suspended):
            raise StateError(f"cannot eval while the state is {self.status.value}")
        if self.image is None:
            self.image = compile_tokens([], source_name="<eval>")
        entry = self._compile_eval(code)
        self.stack.clear()
        self.frames = [Frame(None, None, 0, 0, False, None)]
        self.error = None
        self._set_status(Status.Running)
        try:
            self._eval_frame(entry)
        except Exception as exc:
            return self._fail(exc)
        self._set_status(Status.Halted)
        return self.status

    def _compile_eval(self, code: str) -> int:
        image = self.image
        config_backup = self.config.copy()
        grew = image.grew_during_eval
        try:
            tokens = scan(code, self.config, path=None)
            entry = compile_into(image, tokens, resolver=self._resolve_include)
        except Exception:
            self.config = config_backup
            raise
        self.events["GrewCapacity"] += image.grew_during_eval - grew
        self._classes.clear()
        return entry

    def _eval_frame(self, entry: int):
        self.frames.append(Frame(None, None, 0, len(self.stack), True, "<eval>"))
        self._nest += 1
        try:
            return self._execute(entry)
        finally:
            self._nest -= 1

    def suspend(self, awaiting_variable: str | None = None) -> None:
        """Request suspension; only valid from a builtin override while running."""
        self._check()
        if self.status is not Status.Running:
            raise StateError("suspend is only valid while the state is running")
        self.suspend_request = {"awaiting_variable": awaiting_variable}

    def resume(self, bindings: dict | None = None) -> Status:
        """Install ``bindings`` in the current scope and continue from the frozen pc."""
        self._check()
        if self.status is not Status.Suspended:
            raise ResumeWithoutSuspend(f"state is {self.status.value}, not Suspended")
        frame = self.frames[-1]
        for name, value in (bindings or {}).items():
            self._assign_name(frame, name.casefold(), from_host(value))
        self.suspend_request = None
        self._set_status(Status.Running)
        return self._drive(self.pc)

    def destroy(self) -> None:
        if self._destroyed:
            return
        self.stack.clear()
        self.frames.clear()
        self.gvals.clear()
        self.gnames.clear()
        self._classes.clear()
        self.image = None
        self.pool.close()
        self._destroyed = True

    @property
    def destroyed(self) -> bool:
        return self._destroyed

    # -- driving ------------------------------------------------------------

    def _drive(self, pc: int) -> Status:
        try:
            result = self._execute(pc)
        except Exception as exc:
            return self._fail(exc)
        if result is _SUSPEND:
            self._set_status(Status.Suspended)
        else:
            self._set_status(Status.Halted)
        return self.status

    def _fail(self, exc: Exception) -> Status:
        if isinstance(exc, (RingRuntimeError, CompileError, errors.RingletError)):
            self.error = exc
        elif isinstance(exc, RecursionError):
            self.error = _rt(ErrorCode.StackOverflow, "host recursion limit reached")
        else:
            raise exc
        self._nest = 0
        self._active.clear()
        self._set_status(Status.Errored)
        return self.status

    def _located(self, exc: Exception, pc: int) -> Exception:
        """Convert host-level faults to guest runtime errors carrying a location."""
        if isinstance(exc, errors.IndexOutOfRange):
            exc = _rt(ErrorCode.IndexOutOfRange, str(exc))
        elif isinstance(exc, errors.PoolExhausted):
            exc = _rt(ErrorCode.OutOfMemory, str(exc))
        elif isinstance(exc, RecursionError):
            exc = _rt(ErrorCode.StackOverflow, "host recursion limit reached")
        if isinstance(exc, RingRuntimeError) and not exc.line and self.image is not None:
            exc.path, exc.line = self.image.location(pc)
        return exc

    # -- the dispatch loop --------------------------------------------------

    def _execute(self, pc: int):
        image = self.image
        code = image.code
        ops, A, B, FL = code.ops, code.a, code.b, code.flags
        consts = image.constants
        functions = image.functions
        loops = image.loops
        stack = self.stack
        push, pop = stack.append, stack.pop
        gvals, gnames = self.gvals, self.gnames
        frames = self.frames
        frame = frames[-1]
        rewriting = self.rewriting
        instrument = self.instrument
        counts = self.op_counts
        write = self._write
        flexlist = FlexList
        try:
            while True:
                op = ops[pc]
                if instrument:
                    counts[op] += 1
                    if FL[pc] & F_STMT and len(stack) != frame.base:
                        self.stack_violations.append(pc)
                if op == _PUSHV_FAST:
                    push(gvals[B[pc]])
                    pc += 1
                elif op == _PUSHC:
                    push(consts[A[pc]])
                    pc += 1
                elif op == _FOR_STEP:
                    if frame.braces is None:
                        loc = frame.locals
                        k = B[pc]
                        if loc is None:
                            slots = self._loop_slots.get(k)
                            if slots is None:
                                lp = loops[k]
                                slots = (gnames.get(consts[lp.var]), gnames.get(consts[lp.limit]),
                                         gnames.get(consts[lp.step]), lp.body, lp.exit)
                                if None not in slots:
                                    self._loop_slots[k] = slots
                            vs, ls, ss, body, exit_ = slots
                            if vs is not None and ls is not None and ss is not None:
                                x, lim, s = gvals[vs], gvals[ls], gvals[ss]
                                if type(x) is float and type(lim) is float and type(s) is float:
                                    x += s
                                    gvals[vs] = x
                                    if (x <= lim) if s >= 0 else (x >= lim):
                                        pc = body
                                    else:
                                        pc = exit_
                                    continue
                        else:
                            lp = loops[k]
                            vn, ln, sn = consts[lp.var], consts[lp.limit], consts[lp.step]
                            if vn in loc and ln in loc and sn in loc:
                                x, lim, s = loc[vn], loc[ln], loc[sn]
                                if type(x) is float and type(lim) is float and type(s) is float:
                                    x += s
                                    loc[vn] = x
                                    if (x <= lim) if s >= 0 else (x >= lim):
                                        pc = lp.body
                                    else:
                                        pc = lp.exit
                                    continue
                    push(self._read_name(frame, consts[A[pc]]))
                    pc += 1
                elif op == _PUSHV:
                    name = consts[A[pc]]
                    loc = frame.locals
                    if loc is not None and frame.braces is None and name in loc:
                        push(loc[name])
                        pc += 1
                        continue
                    if rewriting:
                        flags = FL[pc]
                        if flags & F_LOOP_HEAD:
                            code.rewrite(pc, Op.FOR_STEP)
                            self.events["Rewrites"] += 1
                            continue
                        if flags & F_GLOBAL_SITE and loc is None and frame.braces is None:
                            slot = gnames.get(name)
                            if slot is not None:
                                code.rewrite(pc, Op.PUSHV_FAST, slot)
                                self.events["Rewrites"] += 1
                                push(gvals[slot])
                                pc += 1
                                continue
                    push(self._read_name(frame, name))
                    pc += 1
                elif op == _ASSIGN_FAST:
                    v = pop()
                    gvals[B[pc]] = v.copy() if type(v) is flexlist else v
                    pc += 1
                elif op == _ASSIGN:
                    name = consts[A[pc]]
                    v = pop()
                    if type(v) is flexlist:
                        v = v.copy()
                    loc = frame.locals
                    if loc is not None and frame.braces is None and name in loc:
                        loc[name] = v
                    elif (rewriting and FL[pc] & F_GLOBAL_SITE and loc is None
                          and frame.braces is None):
                        slot = gnames.get(name)
                        if slot is None:
                            slot = self._define_global(name, v)
                        else:
                            gvals[slot] = v
                        code.rewrite(pc, Op.ASSIGN_FAST, slot)
                        self.events["Rewrites"] += 1
                    else:
                        self._assign_name(frame, name, v)
                    pc += 1
                elif op == _ADD:
                    b = pop()
                    a = stack[-1]
                    if type(a) is float and type(b) is float:
                        stack[-1] = a + b
                    else:
                        stack[-1] = self._add(a, b)
                    pc += 1
                elif op == _SUB:
                    b = pop()
                    a = stack[-1]
                    if type(a) is float and type(b) is float:
                        stack[-1] = a - b
                    else:
                        stack[-1] = to_number(a) - to_number(b)
                    pc += 1
                elif op == _LT or op == _GT or op == _LE or op == _GE:
                    b = pop()
                    a = stack[-1]
                    if type(a) is not float or type(b) is not float:
                        a, b = _coerce_pair(a, b)
                    if op == _LT:
                        r = a < b
                    elif op == _GT:
                        r = a > b
                    elif op == _LE:
                        r = a <= b
                    else:
                        r = a >= b
                    stack[-1] = 1.0 if r else 0.0
                    pc += 1
                elif op == _JZ:
                    v = pop()
                    if (v == 0.0) if type(v) is float else not truthy(v):
                        pc = A[pc]
                    else:
                        pc += 1
                elif op == _JMP:
                    pc = A[pc]
                elif op == _CALL:
                    name = consts[A[pc]]
                    argc = B[pc]
                    if frame.braces is None and frame.this is None:
                        fdef = functions.get(name)
                        this = None
                    else:
                        fdef, this = self._find_callable(frame, name)
                    if fdef is not None and argc == len(fdef.params):
                        if len(frames) >= MAX_FRAMES:
                            raise _rt(ErrorCode.StackOverflow,
                                      f"call depth exceeded {MAX_FRAMES} frames")
                        if argc:
                            args = stack[-argc:]
                            del stack[-argc:]
                            loc = dict(zip(fdef.params, args))
                        else:
                            loc = {}
                        frame = Frame(loc, this, pc + 1, len(stack), False, name)
                        frames.append(frame)
                        pc = fdef.entry
                    else:
                        self.pc = pc
                        push(self._call_other(frame, name, argc, fdef))
                        pc += 1
                elif op == _RET:
                    v = pop()
                    done = frames.pop()
                    if len(stack) != done.base:
                        del stack[done.base:]
                    if done.host:
                        self._explicit = A[pc] == 1
                        return v
                    push(v)
                    frame = frames[-1]
                    pc = done.ret_pc
                elif op == _EQ or op == _NEQ:
                    b = pop()
                    a = stack[-1]
                    r = _equal(a, b)
                    stack[-1] = 1.0 if r == (op == _EQ) else 0.0
                    pc += 1
                elif op == _MUL:
                    b = pop()
                    a = stack[-1]
                    if type(a) is float and type(b) is float:
                        stack[-1] = a * b
                    else:
                        stack[-1] = to_number(a) * to_number(b)
                    pc += 1
                elif op == _DIV or op == _MOD:
                    b = to_number(pop())
                    a = to_number(stack[-1])
                    if b == 0.0:
                        raise _rt(ErrorCode.DivisionByZero, "division by zero")
                    stack[-1] = a / b if op == _DIV else _fmod(a, b)
                    pc += 1
                elif op == _POP:
                    pop()
                    pc += 1
                elif op == _EVALSTMT:
                    v = pop()
                    braces = frame.braces
                    if braces:
                        obj = braces[-1]
                        hook = obj.cls.methods.get("braceexpreval")
                        if hook is not None:
                            self.pc = pc
                            self._invoke(hook, obj, [v], hook=True)
                    pc += 1
                elif op == _PRINT:
                    write(to_text(pop()))
                    pc += 1
                elif op == _PRINTLN:
                    write(to_text(pop()) + "\n")
                    pc += 1
                elif op == _NEG:
                    stack[-1] = -to_number(stack[-1])
                    pc += 1
                elif op == _NOT:
                    stack[-1] = 0.0 if truthy(stack[-1]) else 1.0
                    pc += 1
                elif op == _AND:
                    b = pop()
                    stack[-1] = 1.0 if truthy(stack[-1]) and truthy(b) else 0.0
                    pc += 1
                elif op == _OR:
                    b = pop()
                    stack[-1] = 1.0 if truthy(stack[-1]) or truthy(b) else 0.0
                    pc += 1
                elif op == _JZ_KEEP:
                    if truthy(stack[-1]):
                        pc += 1
                    else:
                        stack[-1] = 0.0
                        pc = A[pc]
                elif op == _JNZ_KEEP:
                    if truthy(stack[-1]):
                        stack[-1] = 1.0
                        pc = A[pc]
                    else:
                        pc += 1
                elif op == _GETINDEX:
                    idx = pop()
                    stack[-1] = _get_index(stack[-1], idx)
                    pc += 1
                elif op == _SETINDEX:
                    v = pop()
                    idx = pop()
                    container = pop()
                    if type(container) is not flexlist:
                        raise _rt(ErrorCode.TypeMismatch, "only list items can be assigned")
                    container.set(_as_index(idx), v.copy() if type(v) is flexlist else v)
                    pc += 1
                elif op == _NEWLIST:
                    n = B[pc]
                    lst = flexlist(pool=self.pool)
                    if n:
                        for v in stack[-n:]:
                            lst.append(v.copy() if type(v) is flexlist else v)
                        del stack[-n:]
                    push(lst)
                    pc += 1
                elif op == _CALLMETHOD:
                    name = consts[A[pc]]
                    argc = B[pc]
                    obj = stack[-argc - 1]
                    if not isinstance(obj, ObjectInstance):
                        raise _rt(ErrorCode.TypeMismatch, f"cannot call method {name!r} on a "
                                                          f"non-object")
                    fdef = obj.cls.methods.get(name)
                    if fdef is None:
                        raise _rt(ErrorCode.UndefinedMember,
                                  f"class {obj.cls.name!r} has no method {name!r}")
                    if argc != len(fdef.params):
                        raise _rt(ErrorCode.TypeMismatch, f"method {name!r} takes "
                                                          f"{len(fdef.params)} argument(s)")
                    if len(frames) >= MAX_FRAMES:
                        raise _rt(ErrorCode.StackOverflow, f"call depth exceeded {MAX_FRAMES} frames")
                    args = stack[len(stack) - argc:]
                    del stack[len(stack) - argc - 1:]
                    frame = Frame(dict(zip(fdef.params, args)), obj, pc + 1, len(stack), False, name)
                    frames.append(frame)
                    pc = fdef.entry
                elif op == _GETMEMBER:
                    self.pc = pc
                    stack[-1] = self._get_member(stack[-1], consts[A[pc]])
                    pc += 1
                elif op == _SETMEMBER:
                    v = pop()
                    obj = pop()
                    self.pc = pc
                    self._set_member(obj, consts[A[pc]], v)
                    pc += 1
                elif op == _NEWOBJ:
                    argc = B[pc]
                    args = stack[len(stack) - argc:] if argc else []
                    if argc:
                        del stack[-argc:]
                    self.pc = pc
                    push(self._new_object(consts[A[pc]], args))
                    pc += 1
                elif op == _BRACESTART:
                    obj = pop()
                    if not isinstance(obj, ObjectInstance):
                        raise _rt(ErrorCode.TypeMismatch, "braces need an object")
                    if frame.braces is None:
                        frame.braces = [obj]
                    else:
                        frame.braces.append(obj)
                    hook = obj.cls.methods.get("bracestart")
                    if hook is not None:
                        self.pc = pc
                        self._invoke(hook, obj, [], hook=True)
                    pc += 1
                elif op == _BRACEEND:
                    obj = frame.braces.pop()
                    if not frame.braces:
                        frame.braces = None
                    hook = obj.cls.methods.get("braceend")
                    if hook is not None:
                        self.pc = pc
                        self._invoke(hook, obj, [], hook=True)
                    push(obj)
                    pc += 1
                elif op == _PUSHSELF:
                    if A[pc] == 0 and frame.braces:
                        push(frame.braces[-1])
                    elif frame.this is not None:
                        push(frame.this)
                    else:
                        raise _rt(ErrorCode.UndefinedVariable,
                                  "'self'/'this' used outside of an object")
                    pc += 1
                elif op == _INPUT:
                    self.pc = pc
                    if self._input(frame, consts[A[pc]]):
                        self.pc = pc + 1
                        return _SUSPEND
                    pc += 1
                elif op == _LOADFILE:
                    pc += 1
                elif op == _HALT_OP:
                    self.pc = pc
                    return _HALT
                else:
                    raise StateError(f"bad opcode {op} at {pc}")
        except Exception as exc:
            located = self._located(exc, pc)
            if located is exc:
                raise
            raise located from exc

    # -- name resolution ----------------------------------------------------

    def _read_name(self, frame: Frame, name: str):
        braces = frame.braces
        if braces:
            obj = braces[-1]
            if name in obj.attrs:
                return self._get_attr(obj, name)
        loc = frame.locals
        if loc is not None and name in loc:
            return loc[name]
        this = frame.this
        if this is not None and name in this.attrs:
            return this.attrs[name]
        slot = self.gnames.get(name)
        if slot is not None:
            return self.gvals[slot]
        if braces:
            obj = braces[-1]
            hook = obj.cls.methods.get("braceerror")
            if hook is not None:
                self._invoke(hook, obj, [name], hook=True)
                return ""
            raise _rt(ErrorCode.UndefinedMember,
                      f"{name!r} is not a member of {obj.cls.name!r} or a variable")
        raise _rt(ErrorCode.UndefinedVariable, f"variable {name!r} is not defined")

    def _assign_name(self, frame: Frame, name: str, value) -> None:
        if type(value) is FlexList:
            value = value.copy()
        braces = frame.braces
        if braces:
            obj = braces[-1]
            if name in obj.attrs:
                self._set_attr(obj, name, value)
                return
        loc = frame.locals
        if loc is not None and name in loc:
            loc[name] = value
            return
        this = frame.this
        if this is not None and name in this.attrs:
            this.attrs[name] = value
            return
        slot = self.gnames.get(name)
        if slot is not None:
            self.gvals[slot] = value
        elif loc is not None:
            loc[name] = value
        else:
            self._define_global(name, value)

    def _find_callable(self, frame: Frame, name: str):
        braces = frame.braces
        if braces:
            obj = braces[-1]
            fdef = obj.cls.methods.get(name)
            if fdef is not None:
                return fdef, obj
        this = frame.this
        if this is not None:
            fdef = this.cls.methods.get(name)
            if fdef is not None:
                return fdef, this
        return self.image.functions.get(name), None

    def _call_other(self, frame: Frame, name: str, argc: int, fdef: FuncDef | None):
        stack = self.stack
        args = stack[len(stack) - argc:] if argc else []
        if argc:
            del stack[-argc:]
        if fdef is not None:
            raise _rt(ErrorCode.TypeMismatch,
                      f"{name}() takes {len(fdef.params)} argument(s), got {argc}")
        override = self.builtin_overrides.get(name)
        if override is not None and name != "get":
            return from_host(override(self, *args))
        if name == "eval":
            if argc != 1 or type(args[0]) is not str:
                raise _rt(ErrorCode.TypeMismatch, "eval() takes one text argument")
            entry = self._compile_eval(args[0])
            self._eval_frame(entry)
            return ""
        builtin = BUILTINS.get(name)
        if builtin is None:
            raise _rt(ErrorCode.UndefinedFunction, f"function {name!r} is not defined")
        return builtin(self, args)

    # -- objects ------------------------------------------------------------

    def class_info(self, name: str) -> ClassInfo:
        info = self._classes.get(name)
        if info is None:
            info = self._classes[name] = ClassInfo(self.image, name)
        return info

    def _new_object(self, name: str, args: list) -> ObjectInstance:
        info = self.class_info(name)
        obj = ObjectInstance(info, self.pool)
        for entry in info.init_entries:
            self._invoke(FuncDef("<class body>", [], entry, name), obj, [])
        init = info.methods.get("init")
        if init is not None:
            self._invoke(init, obj, args, hook=True)
        return obj

    def _invoke(self, fdef: FuncDef, this, args: list, hook: bool = False):
        """Run ``fdef`` to completion in a nested loop and return its value.

        Hooks get their arguments trimmed or padded to the declared count.
        """
        params = fdef.params
        if len(args) != len(params):
            if not hook:
                raise _rt(ErrorCode.TypeMismatch,
                          f"{fdef.name}() takes {len(params)} argument(s), got {len(args)}")
            args = (list(args) + [""] * len(params))[:len(params)]
        if len(self.frames) >= MAX_FRAMES:
            raise _rt(ErrorCode.StackOverflow, f"call depth exceeded {MAX_FRAMES} frames")
        self.frames.append(Frame(dict(zip(params, args)), this, 0, len(self.stack), True,
                                 fdef.name))
        self._nest += 1
        try:
            return self._execute(fdef.entry)
        finally:
            self._nest -= 1

    def _get_attr(self, obj: ObjectInstance, name: str):
        getter = obj.cls.getters.get(name)
        if getter is not None:
            key = (obj.ident, name, "get")
            if key not in self._active:
                self._active.add(key)
                try:
                    value = self._invoke(getter, obj, [], hook=True)
                finally:
                    self._active.discard(key)
                if self._explicit:
                    return value
        return obj.attrs[name]

    def _set_attr(self, obj: ObjectInstance, name: str, value) -> None:
        setter = obj.cls.setters.get(name)
        if setter is not None:
            key = (obj.ident, name, "set")
            if key not in self._active:
                self._active.add(key)
                try:
                    self._invoke(setter, obj, [value], hook=True)
                finally:
                    self._active.discard(key)
                return
        obj.attrs[name] = value

    def _get_member(self, obj, name: str):
        if not isinstance(obj, ObjectInstance):
            raise _rt(ErrorCode.TypeMismatch, f"cannot read member {name!r} of a non-object")
        if name in obj.attrs:
            return self._get_attr(obj, name)
        getter = obj.cls.getters.get(name)
        if getter is not None:
            return self._invoke(getter, obj, [], hook=True)
        raise _rt(ErrorCode.UndefinedMember, f"{obj.cls.name!r} has no member {name!r}")

    def _set_member(self, obj, name: str, value) -> None:
        if not isinstance(obj, ObjectInstance):
            raise _rt(ErrorCode.TypeMismatch, f"cannot set member {name!r} of a non-object")
        if type(value) is FlexList:
            value = value.copy()
        self._set_attr(obj, name, value)

    # -- input --------------------------------------------------------------

    def _input(self, frame: Frame, name: str) -> bool:
        """Execute ``get name``; returns True when the state must suspend."""
        override = self.builtin_overrides.get("get")
        if override is not None:
            result = override(self, name)
            if self.suspend_request is not None:
                if self._nest:
                    raise StateError("cannot suspend inside a hook, method call from a hook, "
                                     "or eval")
                if self.suspend_request.get("awaiting_variable") is None:
                    self.suspend_request["awaiting_variable"] = name
                return True
            value = from_host(result)
        else:
            line = self._readline()
            value = line[:-1] if line.endswith("\n") else line
        self._assign_name(frame, name, value)
        return False


# -- value helpers ----------------------------------------------------------

def _fmod(a: float, b: float) -> float:
    import math
    return math.fmod(a, b)


def _coerce_pair(a, b):
    ta, tb = type(a), type(b)
    if ta is float and tb is str:
        return a, to_number(b)
    if ta is str and tb is float:
        return to_number(a), b
    if ta is str and tb is str:
        return a, b
    raise _rt(ErrorCode.TypeMismatch, "values cannot be compared")


def _equal(a, b) -> bool:
    ta, tb = type(a), type(b)
    if ta is tb:
        if ta is float or ta is str:
            return a == b
        if ta is FlexList:
            return a == b
        return a is b
    if ta is float and tb is str:
        try:
            return a == to_number(b)
        except RingRuntimeError:
            return False
    if ta is str and tb is float:
        try:
            return to_number(a) == b
        except RingRuntimeError:
            return False
    return False


def _as_index(idx) -> int:
    n = to_number(idx)
    i = int(n)
    if i != n:
        raise _rt(ErrorCode.TypeMismatch, f"index {n} is not a whole number")
    return i


def _get_index(container, idx):
    t = type(container)
    if t is FlexList:
        return container.get(_as_index(idx))
    if t is str:
        i = _as_index(idx)
        if i < 1 or i > len(container):
            raise _rt(ErrorCode.IndexOutOfRange, f"index {i} outside 1..{len(container)}")
        return container[i - 1]
    raise _rt(ErrorCode.TypeMismatch, "only lists and text can be indexed")


def _addition(a, b):
    ta = type(a)
    if ta is str:
        return a + to_text(b)
    if ta is float:
        return a + to_number(b)
    raise _rt(ErrorCode.TypeMismatch, "'+' needs numbers or text")


LanguageState._add = staticmethod(_addition)
