"""Host implementations of the guest's built-in functions.

Each builtin receives the calling state and a list of guest values and
returns a guest value.
"""

from __future__ import annotations

import time

from .errors import ErrorCode, RingRuntimeError
from .flexlist import FlexList
from .values import NativeHandle, tag_of, to_number, to_text


def _arity(name: str, args: list, *counts: int) -> None:
    if len(args) not in counts:
        want = " or ".join(str(c) for c in counts)
        raise RingRuntimeError(ErrorCode.TypeMismatch,
                               f"{name}() takes {want} argument(s), got {len(args)}")


def _need_list(name: str, value) -> FlexList:
    if type(value) is not FlexList:
        raise RingRuntimeError(ErrorCode.TypeMismatch, f"{name}() expects a list")
    return value


def bi_len(state, args):
    _arity("len", args, 1)
    v = args[0]
    if type(v) is FlexList or type(v) is str:
        return float(len(v))
    raise RingRuntimeError(ErrorCode.TypeMismatch, "len() expects a list or text")


def _extreme(name: str, args, pick):
    if len(args) == 1:
        items = list(_need_list(name, args[0]))
        if not items:
            raise RingRuntimeError(ErrorCode.IndexOutOfRange, f"{name}() of an empty list")
    elif len(args) >= 2:
        items = args
    else:
        raise RingRuntimeError(ErrorCode.TypeMismatch, f"{name}() needs arguments")
    best = to_number(items[0])
    for v in items[1:]:
        n = to_number(v)
        if pick(n, best):
            best = n
    return best


def bi_max(state, args):
    return _extreme("max", args, lambda n, best: n > best)


def bi_min(state, args):
    return _extreme("min", args, lambda n, best: n < best)


def bi_sort(state, args):
    _arity("sort", args, 1)
    items = list(_need_list("sort", args[0]))
    if all(type(v) is float for v in items):
        items.sort()
    elif all(type(v) is str for v in items):
        items.sort()
    else:
        raise RingRuntimeError(ErrorCode.TypeMismatch, "sort() needs all numbers or all text")
    return FlexList(items, pool=state.pool)


def bi_type(state, args):
    _arity("type", args, 1)
    return tag_of(args[0]).value


def bi_number(state, args):
    _arity("number", args, 1)
    return to_number(args[0])


def bi_string(state, args):
    _arity("string", args, 1)
    return to_text(args[0])


def bi_clock(state, args):
    _arity("clock", args, 0)
    return float(time.perf_counter_ns() // 1_000_000)


def bi_space(state, args):
    _arity("space", args, 1)
    return " " * max(0, int(to_number(args[0])))


def bi_add(state, args):
    _arity("add", args, 2)
    lst = _need_list("add", args[0])
    item = args[1]
    lst.append(item.copy() if type(item) is FlexList else item)
    return lst


def bi_del(state, args):
    _arity("del", args, 2)
    lst = _need_list("del", args[0])
    lst.delete(int(to_number(args[1])))
    return lst


BUILTINS = {
    "len": bi_len,
    "max": bi_max,
    "min": bi_min,
    "sort": bi_sort,
    "type": bi_type,
    "number": bi_number,
    "string": bi_string,
    "clock": bi_clock,
    "space": bi_space,
    "add": bi_add,
    "del": bi_del,
}

# one line per builtin, rendered into the docs
DESCRIPTIONS = {
    "len": "len(x): item count of a list or character count of text",
    "max": "max(a, b, ...) or max(list): largest number",
    "min": "min(a, b, ...) or min(list): smallest number",
    "sort": "sort(list): new list sorted ascending (all numbers or all text)",
    "type": "type(x): NUMBER, STRING, LIST, OBJECT or CPOINTER",
    "number": "number(x): text converted to a number",
    "string": "string(x): value converted to text",
    "clock": "clock(): monotonic milliseconds",
    "space": "space(n): text of n spaces",
    "add": "add(list, item): append item in place (lists are copied in)",
    "del": "del(list, index): remove item in place",
    "eval": "eval(text): compile and run text in the global scope",
}

__all__ = ["BUILTINS", "DESCRIPTIONS", "NativeHandle"]
