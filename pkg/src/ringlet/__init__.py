"""ringlet: an embeddable dynamic-language toolchain.

The pieces, bottom-up: :mod:`~ringlet.flexlist` and :mod:`~ringlet.pool`
(runtime data structures), :mod:`~ringlet.scanner` (remappable tokenizer),
:mod:`~ringlet.compiler` (single-pass compiler to 24-byte writable
bytecode), :mod:`~ringlet.vm` (language states and the dispatch loop),
:mod:`~ringlet.loader` and :mod:`~ringlet.cli` (files, object files, command
line), :mod:`~ringlet.steps` (text to steps-tree transcoding) and
:mod:`~ringlet.bench` / :mod:`~ringlet.stats` (benchmarks and statistics).
"""

from .errors import CompileError, RingletError, RingRuntimeError, ErrorCode
from .flexlist import FlexList
from .pool import MemoryPool
from .scanner import SyntaxConfig, Token, TokenKind, scan
from .vm import LanguageState, Status

__version__ = "0.1.0"

__all__ = [
    "CompileError", "ErrorCode", "FlexList", "LanguageState", "MemoryPool", "RingRuntimeError",
    "RingletError", "Status", "SyntaxConfig", "Token", "TokenKind", "scan", "__version__",
]
