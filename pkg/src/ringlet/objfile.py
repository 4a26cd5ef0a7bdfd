"""Object files: a compiled :class:`ProgramImage` on disk.

Layout (all integers little-endian)::

    "RNGLETOB"            8-byte magic
    u32 version
    seven sections, in order, each  u64 byte-length + payload:
      constants      u32 count, then per constant u8 kind (0 number: f64,
                     1 text: u32 length + UTF-8)
      instructions   u32 used_count, then used_count 24-byte records
      lines          file names (a name list), then used_count u32 line
                     numbers, then used_count u16 file indexes
      functions      u32 count, then name, u32 entry, params
      classes        u32 count, then name, parent ("" for none), u32 line,
                     u32 init entry, attributes, methods (name, entry, params)
      loops          u32 count, then five u32 (var, limit, step, body, exit)
      meta           source name, u32 entry

Strings are u32 length + UTF-8; name lists are u32 count + strings.

Records are always written in their compiled form: any in-place rewrite a
run has applied is undone first, so an image can be saved before or after
it has run and the file is the same.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .bytecode import (F_REWRITTEN, INSTRUCTION_DTYPE, INSTRUCTION_WIDTH, ClassDef, CodeBlock,
                       FuncDef, LoopInfo, Op, ProgramImage)
from .errors import BadMagic, ObjectFileError, Truncated, UnsupportedVersion

MAGIC = b"RNGLETOB"
FORMAT_VERSION = 1


class _Writer:
    def __init__(self):
        self.parts: list[bytes] = []

    def u8(self, v: int) -> None:
        self.parts.append(struct.pack("<B", v))

    def u16(self, v: int) -> None:
        self.parts.append(struct.pack("<H", v))

    def u32(self, v: int) -> None:
        self.parts.append(struct.pack("<I", v))

    def f64(self, v: float) -> None:
        self.parts.append(struct.pack("<d", v))

    def text(self, s: str) -> None:
        data = s.encode("utf-8")
        self.u32(len(data))
        self.parts.append(data)

    def names(self, items) -> None:
        items = list(items)
        self.u32(len(items))
        for s in items:
            self.text(s)

    def raw(self, data: bytes) -> None:
        self.parts.append(data)

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data: bytes, what: str = "object file"):
        self.data = data
        self.pos = 0
        self.what = what

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise Truncated(f"{self.what} ends after {len(self.data)} bytes, "
                            f"needed {self.pos + n}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def text(self) -> str:
        raw = self.take(self.u32())
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            raise ObjectFileError("string is not valid UTF-8") from None

    def names(self) -> list[str]:
        return [self.text() for _ in range(self.u32())]

    def done(self) -> bool:
        return self.pos == len(self.data)


def canonical_records(image: ProgramImage) -> np.ndarray:
    """Instruction records with every runtime rewrite undone."""
    recs = image.code.records[:image.code.used].copy()
    rewritten = (recs["flags"] & F_REWRITTEN) != 0
    if rewritten.any():
        ops = recs["opcode"]
        fast_load = rewritten & (ops == Op.PUSHV_FAST)
        fast_store = rewritten & (ops == Op.ASSIGN_FAST)
        loop_head = rewritten & (ops == Op.FOR_STEP)
        recs["b"][fast_load | fast_store] = 0
        ops[fast_load | loop_head] = Op.PUSHV
        ops[fast_store] = Op.ASSIGN
        recs["flags"][rewritten] &= ~F_REWRITTEN & 0xFFFF
    return recs


def _func(w: _Writer, f: FuncDef) -> None:
    w.text(f.name)
    w.u32(f.entry)
    w.names(f.params)


def dumps(image: ProgramImage) -> bytes:
    sections = []

    w = _Writer()
    w.u32(len(image.constants))
    for c in image.constants:
        if isinstance(c, float):
            w.u8(0)
            w.f64(c)
        else:
            w.u8(1)
            w.text(c)
    sections.append(w.getvalue())

    w = _Writer()
    used = image.code.used
    w.u32(used)
    w.raw(canonical_records(image).tobytes())
    sections.append(w.getvalue())

    w = _Writer()
    w.names(image.files)
    w.raw(np.asarray(image.lines[1:used + 1], dtype="<u4").tobytes())
    w.raw(np.asarray(image.file_ids[1:used + 1], dtype="<u2").tobytes())
    sections.append(w.getvalue())

    w = _Writer()
    w.u32(len(image.functions))
    for f in image.functions.values():
        _func(w, f)
    sections.append(w.getvalue())

    w = _Writer()
    w.u32(len(image.classes))
    for c in image.classes.values():
        w.text(c.name)
        w.text(c.parent or "")
        w.u32(c.line)
        w.u32(c.init_entry)
        w.names(c.attributes)
        w.u32(len(c.methods))
        for m in c.methods.values():
            _func(w, m)
    sections.append(w.getvalue())

    w = _Writer()
    w.u32(len(image.loops))
    for lp in image.loops:
        for v in (lp.var, lp.limit, lp.step, lp.body, lp.exit):
            w.u32(v)
    sections.append(w.getvalue())

    w = _Writer()
    w.text(image.source_name)
    w.u32(image.entry)
    sections.append(w.getvalue())

    out = _Writer()
    out.raw(MAGIC)
    out.u32(FORMAT_VERSION)
    for s in sections:
        out.raw(struct.pack("<Q", len(s)))
        out.raw(s)
    return out.getvalue()


def _read_func(r: _Reader, owner: str | None) -> FuncDef:
    name = r.text()
    entry = r.u32()
    return FuncDef(name, r.names(), entry, owner)


def loads(data: bytes) -> ProgramImage:
    head = _Reader(data)
    magic = data[:len(MAGIC)]
    if len(data) < len(MAGIC):
        raise Truncated("object file is shorter than its magic number")
    if magic != MAGIC:
        raise BadMagic(f"not an object file (magic {magic!r})")
    head.take(len(MAGIC))
    version = head.u32()
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"object format version {version}, expected {FORMAT_VERSION}")
    secs = [_Reader(head.take(head.u64()), f"section {i + 1}") for i in range(7)]
    if not head.done():
        raise ObjectFileError(f"{len(data) - head.pos} trailing bytes after the last section")

    r = secs[0]
    constants = []
    for _ in range(r.u32()):
        kind = r.u8()
        if kind == 0:
            constants.append(r.f64())
        elif kind == 1:
            constants.append(r.text())
        else:
            raise ObjectFileError(f"unknown constant kind {kind}")

    r = secs[1]
    used = r.u32()
    code = CodeBlock.from_bytes(r.take(used * INSTRUCTION_WIDTH))
    if int(np.max(code.records["opcode"][:used], initial=0)) > max(Op):
        raise ObjectFileError("unknown opcode in instruction section")

    r = secs[2]
    files = r.names()
    lines = np.frombuffer(r.take(4 * used), dtype="<u4")
    file_ids = np.frombuffer(r.take(2 * used), dtype="<u2")

    r = secs[3]
    functions = {}
    for _ in range(r.u32()):
        f = _read_func(r, None)
        functions[f.name] = f

    r = secs[4]
    classes = {}
    for _ in range(r.u32()):
        name = r.text()
        parent = r.text() or None
        line = r.u32()
        init_entry = r.u32()
        cdef = ClassDef(name, parent, r.names(), init_entry, line=line)
        for _ in range(r.u32()):
            m = _read_func(r, name)
            cdef.methods[m.name] = m
        classes[name] = cdef

    r = secs[5]
    loops = [LoopInfo(*(r.u32() for _ in range(5))) for _ in range(r.u32())]

    r = secs[6]
    source_name = r.text()
    entry = r.u32()
    for i, s in enumerate(secs):
        if not s.done():
            raise ObjectFileError(f"section {i + 1} has trailing bytes")

    image = ProgramImage(source_name)
    for c in constants:
        image.constants.append(c)
        image._const_index.setdefault((type(c), c), len(image.constants) - 1)
    image.code = code
    image.files = files
    image.lines = [0] + [int(x) for x in lines]
    image.file_ids = [0] + [int(x) for x in file_ids]
    image.functions = functions
    image.classes = classes
    image.loops = loops
    image.entry = entry
    bad = image.validate_jumps()
    if bad:
        raise ObjectFileError(f"jump targets outside the code: {bad[:5]}")
    return image


def emit_object(image: ProgramImage, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(image))


def load_object(path: str | os.PathLike) -> ProgramImage:
    with open(path, "rb") as fh:
        return loads(fh.read())


__all__ = ["MAGIC", "FORMAT_VERSION", "dumps", "loads", "emit_object", "load_object",
           "canonical_records", "INSTRUCTION_DTYPE"]
