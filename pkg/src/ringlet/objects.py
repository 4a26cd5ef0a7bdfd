"""Guest objects and resolved class layouts."""

from __future__ import annotations

import itertools

from .bytecode import ClassDef, FuncDef, ProgramImage
from .errors import ErrorCode, RingRuntimeError

OBJECT_CELL_BYTES = 64

_ids = itertools.count(1)


class ClassInfo:
    """A class with its parent chain flattened.

    ``methods`` maps every callable name to the most-derived definition;
    ``attributes`` lists attribute names parent-first; ``init_entries`` are
    the class-body regions to run on instantiation, parent-first.
    """

    __slots__ = ("name", "chain", "methods", "attributes", "init_entries", "getters", "setters")

    def __init__(self, image: ProgramImage, name: str):
        classes = image.classes
        if name not in classes:
            raise RingRuntimeError(ErrorCode.UndefinedClass, f"class {name!r} is not defined")
        chain: list[ClassDef] = []
        cur: str | None = name
        while cur is not None:
            cdef = classes.get(cur)
            if cdef is None:
                raise RingRuntimeError(ErrorCode.UndefinedClass, f"class {cur!r} is not defined")
            chain.append(cdef)
            cur = cdef.parent
        chain.reverse()
        self.name = name
        self.chain = chain
        self.methods: dict[str, FuncDef] = {}
        self.attributes: list[str] = []
        seen = set()
        for cdef in chain:
            self.methods.update(cdef.methods)
            for attr in cdef.attributes:
                if attr not in seen:
                    seen.add(attr)
                    self.attributes.append(attr)
        self.init_entries = [c.init_entry for c in chain if c.init_entry]
        self.getters = {m[3:]: f for m, f in self.methods.items() if m.startswith("get") and len(m) > 3}
        self.setters = {m[3:]: f for m, f in self.methods.items() if m.startswith("set") and len(m) > 3}

    def is_a(self, name: str) -> bool:
        return any(c.name == name for c in self.chain)


class ObjectInstance:
    __slots__ = ("cls", "attrs", "ident", "cell", "_pool", "__weakref__")

    def __init__(self, cls: ClassInfo, pool=None):
        self.cls = cls
        self.attrs: dict = dict.fromkeys(cls.attributes, "")
        self.ident = next(_ids)
        self._pool = pool
        self.cell = pool.alloc(OBJECT_CELL_BYTES) if pool is not None else None

    @property
    def class_name(self) -> str:
        return self.cls.name

    def describe(self) -> str:
        from .values import to_text
        return "\n".join(f"{k}: {to_text(v)}" for k, v in self.attrs.items())

    def __repr__(self) -> str:
        return f"<{self.cls.name} object #{self.ident}>"

    def __del__(self):
        pool = self._pool
        if pool is not None and self.cell is not None and not pool.closed:
            try:
                pool.release(self.cell)
            except ValueError:
                pass
            self.cell = None
