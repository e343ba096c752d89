"""objlog: a logic-programming runtime with an embedded soft-typed object
kernel, joined by a four-predicate bridge (new/2, send/2, get/3, free/1).

Quick start:

    >>> from objlog import Runtime, term_text
    >>> rt = Runtime()
    >>> term_text(rt.once("new(X, box(100, 100))")["X"])
    '@3'
"""

from .errors import (
    CyclicTermError,
    DeadRecordError,
    FrameOrderError,
    LogicError,
    ReaderError,
    StaleTermRefError,
    TermSizeLimitError,
)
from .reader import parse_term
from .runtime import Runtime
from .terms import Atom, ObjRef, Struct, Var, mk, mk_list
from .writer import term_text

__all__ = [
    "Runtime",
    "parse_term",
    "term_text",
    "Atom",
    "Struct",
    "Var",
    "ObjRef",
    "mk",
    "mk_list",
    "LogicError",
    "ReaderError",
    "CyclicTermError",
    "DeadRecordError",
    "FrameOrderError",
    "StaleTermRefError",
    "TermSizeLimitError",
]

__version__ = "0.1.0"
