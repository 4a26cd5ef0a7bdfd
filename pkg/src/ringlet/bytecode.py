"""Fixed-width writable bytecode.

Every instruction is one 24-byte little-endian record::

    offset  size  field
    0       2     opcode
    2       2     flags      bit0 rewritten at runtime, bit1 global-scope site,
                             bit2 loop-increment head, bit3 statement start
    4       4     pad        reserved, always zero
    8       8     operand_a
    16      8     operand_b

All records of a program live in one contiguous numpy block that keeps spare
capacity for code appended later by eval. The VM executes from decoded
Python lists kept in lock-step with the block; runtime rewrites update both.
Instruction indices are 1-based.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

INSTRUCTION_DTYPE = np.dtype([
    ("opcode", "<u2"),
    ("flags", "<u2"),
    ("pad", "<u4"),
    ("a", "<i8"),
    ("b", "<i8"),
])
INSTRUCTION_WIDTH = INSTRUCTION_DTYPE.itemsize
assert INSTRUCTION_WIDTH == 24

F_REWRITTEN = 1
F_GLOBAL_SITE = 2
F_LOOP_HEAD = 4
F_STMT = 8


class Op(enum.IntEnum):
    HALT = 0
    PUSHC = 1
    PUSHV = 2
    PUSHV_FAST = 3
    ASSIGN = 4
    ASSIGN_FAST = 5
    ADD = 6
    SUB = 7
    MUL = 8
    DIV = 9
    MOD = 10
    NEG = 11
    EQ = 12
    NEQ = 13
    LT = 14
    GT = 15
    LE = 16
    GE = 17
    AND = 18
    OR = 19
    NOT = 20
    JMP = 21
    JZ = 22
    FOR_STEP = 23
    CALL = 24
    RET = 25
    PRINT = 26
    PRINTLN = 27
    INPUT = 28
    NEWLIST = 29
    GETINDEX = 30
    SETINDEX = 31
    NEWOBJ = 32
    GETMEMBER = 33
    SETMEMBER = 34
    CALLMETHOD = 35
    BRACESTART = 36
    BRACEEND = 37
    LOADFILE = 38
    POP = 39
    EVALSTMT = 40
    PUSHSELF = 41
    JNZ_KEEP = 42
    JZ_KEEP = 43


# Net operand-stack effect, for opcodes whose effect does not depend on operands.
STACK_EFFECT = {
    Op.HALT: 0, Op.PUSHC: 1, Op.PUSHV: 1, Op.PUSHV_FAST: 1, Op.ASSIGN: -1, Op.ASSIGN_FAST: -1,
    Op.ADD: -1, Op.SUB: -1, Op.MUL: -1, Op.DIV: -1, Op.MOD: -1, Op.NEG: 0,
    Op.EQ: -1, Op.NEQ: -1, Op.LT: -1, Op.GT: -1, Op.LE: -1, Op.GE: -1,
    Op.AND: -1, Op.OR: -1, Op.NOT: 0, Op.JMP: 0, Op.JZ: -1, Op.FOR_STEP: 0,
    Op.RET: -1, Op.PRINT: -1, Op.PRINTLN: -1, Op.INPUT: 0, Op.GETINDEX: -1,
    Op.SETINDEX: -3, Op.GETMEMBER: 0, Op.SETMEMBER: -2, Op.BRACESTART: -1,
    Op.BRACEEND: 1, Op.LOADFILE: 0, Op.POP: -1, Op.EVALSTMT: -1, Op.PUSHSELF: 1,
    Op.JNZ_KEEP: 0, Op.JZ_KEEP: 0,
}

JUMP_OPS = frozenset({Op.JMP, Op.JZ, Op.JNZ_KEEP, Op.JZ_KEEP})


def eval_reserve(used: int) -> int:
    """Minimum number of spare instruction slots kept for eval."""
    return max(256, math.ceil(0.25 * used))


class CodeBlock:
    """Contiguous instruction storage with decoded views for the VM."""

    def __init__(self, capacity: int = 256):
        self.records = np.zeros(max(capacity, 1), dtype=INSTRUCTION_DTYPE)
        self.used = 0
        # index 0 is a dummy so that instruction i lives at position i
        self.ops: list[int] = [Op.HALT]
        self.flags: list[int] = [0]
        self.a: list[int] = [0]
        self.b: list[int] = [0]
        self.grew = 0

    @property
    def capacity(self) -> int:
        return len(self.records)

    @property
    def spare(self) -> int:
        return self.capacity - self.used

    def _grow(self, minimum: int) -> None:
        new_cap = max(minimum, self.capacity * 2)
        block = np.zeros(new_cap, dtype=INSTRUCTION_DTYPE)
        block[:self.used] = self.records[:self.used]
        self.records = block
        self.grew += 1

    def ensure_spare(self, spare: int) -> None:
        if self.spare < spare:
            self._grow(self.used + spare)

    def append(self, op: int, a: int = 0, b: int = 0, flags: int = 0) -> int:
        if self.used >= self.capacity:
            self._grow(self.used + 1)
        self.records[self.used] = (op, flags, 0, a, b)
        self.used += 1
        self.ops.append(int(op))
        self.flags.append(flags)
        self.a.append(a)
        self.b.append(b)
        return self.used

    def set_a(self, index: int, a: int) -> None:
        self.records[index - 1]["a"] = a
        self.a[index] = a

    def set_b(self, index: int, b: int) -> None:
        self.records[index - 1]["b"] = b
        self.b[index] = b

    def add_flags(self, index: int, flags: int) -> None:
        f = self.flags[index] | flags
        self.records[index - 1]["flags"] = f
        self.flags[index] = f

    def rewrite(self, index: int, op: int, b: int | None = None) -> None:
        """Overwrite instruction ``index`` in place with a faster form."""
        rec = self.records[index - 1]
        rec["opcode"] = op
        f = self.flags[index] | F_REWRITTEN
        rec["flags"] = f
        self.ops[index] = int(op)
        self.flags[index] = f
        if b is not None:
            rec["b"] = b
            self.b[index] = b

    def truncate(self, used: int) -> None:
        self.records[used:self.used] = np.zeros(self.used - used, dtype=INSTRUCTION_DTYPE)
        self.used = used
        del self.ops[used + 1:], self.flags[used + 1:], self.a[used + 1:], self.b[used + 1:]

    def to_bytes(self, start: int = 1, stop: int | None = None) -> bytes:
        """Serialized records ``start..stop`` (1-based, inclusive)."""
        stop = self.used if stop is None else stop
        return self.records[start - 1:stop].tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, spare: int | None = None) -> "CodeBlock":
        if len(data) % INSTRUCTION_WIDTH:
            raise ValueError("instruction section is not a multiple of the record width")
        recs = np.frombuffer(data, dtype=INSTRUCTION_DTYPE)
        used = len(recs)
        spare = eval_reserve(used) if spare is None else spare
        block = cls(used + spare)
        block.records[:used] = recs
        block.used = used
        block.ops.extend(int(x) for x in recs["opcode"])
        block.flags.extend(int(x) for x in recs["flags"])
        block.a.extend(int(x) for x in recs["a"])
        block.b.extend(int(x) for x in recs["b"])
        return block


@dataclass
class FuncDef:
    name: str
    params: list[str]
    entry: int
    owner: str | None = None


@dataclass
class ClassDef:
    name: str
    parent: str | None
    attributes: list[str] = field(default_factory=list)
    init_entry: int = 0
    methods: dict[str, FuncDef] = field(default_factory=dict)
    line: int = 0


@dataclass
class LoopInfo:
    """Operands of a fused loop increment (FOR_STEP)."""
    var: int
    limit: int
    step: int
    body: int
    exit: int


class ProgramImage:
    """Everything the VM needs to run one program (and code eval'd into it)."""

    def __init__(self, source_name: str = "<source>"):
        self.source_name = source_name
        self.constants: list = []
        self._const_index: dict = {}
        self.code = CodeBlock(256)
        self.lines: list[int] = [0]
        self.file_ids: list[int] = [0]
        self.files: list[str] = [source_name]
        self.functions: dict[str, FuncDef] = {}
        self.classes: dict[str, ClassDef] = {}
        self.loops: list[LoopInfo] = []
        self.entry = 1
        self.rules: list[str] | None = None
        self.grew_during_eval = 0

    @property
    def used_count(self) -> int:
        return self.code.used

    @property
    def reserved_capacity(self) -> int:
        return self.code.capacity

    def constant(self, value) -> int:
        key = (type(value), value)
        idx = self._const_index.get(key)
        if idx is None:
            idx = len(self.constants)
            self.constants.append(value)
            self._const_index[key] = idx
        return idx

    def file_id(self, name: str) -> int:
        try:
            return self.files.index(name)
        except ValueError:
            self.files.append(name)
            return len(self.files) - 1

    def location(self, pc: int) -> tuple[str, int]:
        if 1 <= pc <= self.code.used:
            return self.files[self.file_ids[pc]], self.lines[pc]
        return self.source_name, 0

    def checkpoint(self) -> tuple:
        return (self.code.used, len(self.constants), dict(self.functions), dict(self.classes),
                len(self.loops), len(self.files))

    def rollback(self, cp: tuple) -> None:
        used, nconst, funcs, classes, nloops, nfiles = cp
        self.code.truncate(used)
        del self.lines[used + 1:], self.file_ids[used + 1:]
        for v in self.constants[nconst:]:
            self._const_index.pop((type(v), v), None)
        del self.constants[nconst:]
        self.functions.clear()
        self.functions.update(funcs)
        self.classes.clear()
        self.classes.update(classes)
        del self.loops[nloops:]
        del self.files[nfiles:]

    def validate_jumps(self) -> list[int]:
        """Indices of jump instructions whose target is outside the code."""
        code = self.code
        bad = [i for i in range(1, code.used + 1)
               if code.ops[i] in JUMP_OPS and not 1 <= code.a[i] <= code.used]
        for loop in self.loops:
            for target in (loop.body, loop.exit):
                if not 1 <= target <= code.used:
                    bad.append(target)
        return bad

    def disassemble(self) -> str:
        out = []
        code = self.code
        for i in range(1, code.used + 1):
            op = Op(code.ops[i])
            a, b = code.a[i], code.b[i]
            note = ""
            if op in (Op.PUSHC, Op.PUSHV, Op.ASSIGN, Op.CALL, Op.GETMEMBER, Op.SETMEMBER,
                      Op.CALLMETHOD, Op.NEWOBJ, Op.INPUT):
                note = f"  ; {self.constants[a]!r}"
            out.append(f"{i:5d} {op.name:<11} {a:>6} {b:>6} f={code.flags[i]:#x}{note}")
        return "\n".join(out)
