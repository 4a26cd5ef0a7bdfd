"""Guest values and their conversions.

Guest values map onto host types directly:

=============  ===============================
Number         ``float`` (64-bit)
Text           ``str``
List           :class:`~ringlet.flexlist.FlexList`
Object         :class:`~ringlet.objects.ObjectInstance`
NativeHandle   :class:`NativeHandle`
=============  ===============================
"""

from __future__ import annotations

import enum
import math

from .errors import ErrorCode, RingRuntimeError
from .flexlist import FlexList


class Tag(enum.Enum):
    Number = "NUMBER"
    Text = "STRING"
    List = "LIST"
    Object = "OBJECT"
    NativeHandle = "CPOINTER"


class NativeHandle:
    """Opaque host pointer passed through guest code untouched."""

    __slots__ = ("payload", "kind")

    def __init__(self, payload, kind: str = "native"):
        self.payload = payload
        self.kind = kind

    def __repr__(self) -> str:
        return f"NativeHandle({self.kind})"


def tag_of(value) -> Tag:
    t = type(value)
    if t is float:
        return Tag.Number
    if t is str:
        return Tag.Text
    if t is FlexList:
        return Tag.List
    if t is NativeHandle:
        return Tag.NativeHandle
    from .objects import ObjectInstance
    if isinstance(value, ObjectInstance):
        return Tag.Object
    raise TypeError(f"not a guest value: {value!r}")


def from_host(value):
    """Convert a host Python value into a guest value."""
    if isinstance(value, bool):
        return 1.0 if value else 0.0
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        return value
    if isinstance(value, (list, tuple)):
        return FlexList(from_host(v) for v in value)
    if value is None:
        return ""
    return value


def to_host(value):
    if type(value) is FlexList:
        return [to_host(v) for v in value]
    return value


def format_number(x: float) -> str:
    if x != x:
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def to_text(value) -> str:
    t = type(value)
    if t is str:
        return value
    if t is float:
        return format_number(value)
    if t is FlexList:
        return "\n".join(to_text(v) for v in value)
    from .objects import ObjectInstance
    if isinstance(value, ObjectInstance):
        return value.describe()
    if t is NativeHandle:
        return f"<{value.kind}>"
    return str(value)


def to_number(value) -> float:
    t = type(value)
    if t is float:
        return value
    if t is str:
        s = value.strip()
        if not s:
            return 0.0
        try:
            return float(s)
        except ValueError:
            raise RingRuntimeError(ErrorCode.TypeMismatch,
                                   f"cannot convert {value!r} to a number") from None
    raise RingRuntimeError(ErrorCode.TypeMismatch, f"expected a number, got {tag_of(value).value}")


def truthy(value) -> bool:
    t = type(value)
    if t is float:
        return value != 0.0
    if t is str:
        return value != ""
    return True


def copy_value(value):
    """Assignment semantics: lists copy deeply, everything else is shared."""
    return value.copy() if type(value) is FlexList else value
