"""Exception hierarchy shared by every ringlet subsystem."""

from __future__ import annotations

import enum


class RingletError(Exception):
    """Base class for all errors raised by ringlet."""


# -- core runtime -----------------------------------------------------------

class IndexOutOfRange(RingletError, IndexError):
    pass


class PositionOutOfRange(RingletError, IndexError):
    pass


class PoolExhausted(RingletError, MemoryError):
    """A strict pool ran out of arena space and may not fall back."""


# -- scanner ----------------------------------------------------------------

class ScanError(RingletError):
    def __init__(self, message: str, line: int = 0, column: int = 0, path: str | None = None):
        self.line = line
        self.column = column
        self.path = path
        where = f"{path}:" if path else ""
        super().__init__(f"{where}{line}:{column}: {message}" if line else f"{where}{message}")


class UnterminatedLiteral(ScanError):
    pass


class UnknownCharacter(ScanError):
    pass


class UnknownKeyword(ScanError):
    pass


class KeywordConflict(ScanError):
    pass


class UnknownOperator(ScanError):
    pass


class SyntaxFileNotFound(ScanError):
    pass


class SyntaxFileMalformed(ScanError):
    pass


# -- compiler ---------------------------------------------------------------

class CompileError(RingletError):
    def __init__(self, line: int, expected: str, found: str, path: str | None = None,
                 message: str | None = None):
        self.line = line
        self.expected = expected
        self.found = found
        self.path = path
        where = f"{path}:" if path else ""
        text = message or f"expected {expected}, found {found}"
        super().__init__(f"{where}{line}: {text}")


# -- virtual machine --------------------------------------------------------

class ErrorCode(enum.Enum):
    UndefinedVariable = "UndefinedVariable"
    UndefinedFunction = "UndefinedFunction"
    UndefinedMember = "UndefinedMember"
    UndefinedClass = "UndefinedClass"
    TypeMismatch = "TypeMismatch"
    IndexOutOfRange = "IndexOutOfRange"
    DivisionByZero = "DivisionByZero"
    StackOverflow = "StackOverflow"
    OutOfMemory = "OutOfMemory"


class RingRuntimeError(RingletError):
    """A guest-level runtime fault; ``line`` is filled in by the VM."""

    def __init__(self, code: ErrorCode, message: str, line: int = 0, path: str | None = None):
        self.code = code
        self.message = message
        self.line = line
        self.path = path
        super().__init__(message)

    def __str__(self) -> str:
        where = f"{self.path}:" if self.path else ""
        return f"{where}{self.line}: {self.code.value}: {self.message}"


class StateError(RingletError):
    """Misuse of the host embedding API (destroyed state, bad status...)."""


class StateDestroyed(StateError):
    pass


class ResumeWithoutSuspend(StateError):
    pass


# -- object files -----------------------------------------------------------

class ObjectFileError(RingletError):
    pass


class BadMagic(ObjectFileError):
    pass


class UnsupportedVersion(ObjectFileError):
    pass


class Truncated(ObjectFileError):
    pass


# -- steps tree -------------------------------------------------------------

class StepsError(RingletError):
    pass


class UnknownComponent(StepsError):
    pass


class BadHeader(StepsError):
    pass


class BadRecord(StepsError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class Irrecoverable(StepsError):
    pass


# -- statistics -------------------------------------------------------------

class InsufficientData(RingletError, ValueError):
    pass
