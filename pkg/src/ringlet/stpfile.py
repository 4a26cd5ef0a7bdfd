"""The ``.stp`` text format for steps trees.

    STP1 <source name>
    S <id> <parent id> <type letter> <component or -> <caption>
    P <name>=<value>

One ``S`` record per step in pre-order, each followed by its ``P``
parameter records. Captions and values escape backslash, newline and tab
as ``\\\\``, ``\\n`` and ``\\t``. Every line ends with a newline.
"""

from __future__ import annotations

import os

from .errors import BadHeader, BadRecord
from .steps import COMPONENTS, StepNode, StepsTree, StepType

MAGIC = "STP1"
_LETTERS = {t.value: t for t in StepType}


def escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace("\n", "\\n").replace("\t", "\\t")


def unescape(text: str, line: int = 0) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\":
            if i + 1 >= len(text):
                raise BadRecord(line, "dangling backslash")
            nxt = text[i + 1]
            if nxt == "n":
                out.append("\n")
            elif nxt == "t":
                out.append("\t")
            elif nxt == "\\":
                out.append("\\")
            else:
                raise BadRecord(line, f"unknown escape \\{nxt}")
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def dumps(tree: StepsTree) -> str:
    """Serialize; a tree holding only its start point serializes to nothing."""
    if not tree.root.children:
        return ""
    lines = [f"{MAGIC} {escape(tree.source_name)}"]
    for step in tree.root.walk():
        comp = step.component or "-"
        lines.append(f"S {step.id} {step.parent_id} {step.step_type.value} {comp} "
                     f"{escape(step.caption)}")
        for name, value in step.params.items():
            lines.append(f"P {name}={escape(value)}")
    return "".join(line + "\n" for line in lines)


def loads(text: str) -> StepsTree:
    if text == "":
        from .steps import new_tree
        return new_tree()
    lines = text.split("\n")
    if lines[-1] != "":
        raise BadRecord(len(lines), "missing final newline")
    lines.pop()
    header = lines[0]
    if not header.startswith(MAGIC + " ") and header != MAGIC:
        raise BadHeader(f"expected '{MAGIC} <source name>', found {header[:40]!r}")
    tree = None
    path: list[StepNode] = []
    seen: set[int] = set()
    current: StepNode | None = None
    for lineno, line in enumerate(lines[1:], start=2):
        if line.startswith("S "):
            parts = line.split(" ", 5)
            if len(parts) != 6:
                raise BadRecord(lineno, "step record needs six fields")
            _, sid, pid, letter, comp, caption = parts
            try:
                sid, pid = int(sid), int(pid)
            except ValueError:
                raise BadRecord(lineno, "step ids must be integers") from None
            if letter not in _LETTERS:
                raise BadRecord(lineno, f"unknown step type {letter!r}")
            stype = _LETTERS[letter]
            comp = "" if comp == "-" else comp
            if sid <= 0 or sid in seen:
                raise BadRecord(lineno, f"step id {sid} is not positive and unique")
            if stype is StepType.StartPoint:
                if tree is not None:
                    raise BadRecord(lineno, "duplicate start point")
                if pid != 0 or comp:
                    raise BadRecord(lineno, "start point must have parent 0 and no component")
            else:
                if tree is None:
                    raise BadRecord(lineno, "first step must be the start point")
                if stype is StepType.Comment:
                    if comp:
                        raise BadRecord(lineno, "comment steps have no component")
                elif comp not in COMPONENTS:
                    raise BadRecord(lineno, f"unknown component {comp!r}")
                while path and path[-1].id != pid:
                    path.pop()
                if not path:
                    raise BadRecord(lineno, f"parent {pid} is not an open ancestor")
                if path[-1].step_type in (StepType.Leaf, StepType.Comment):
                    raise BadRecord(lineno, f"step {pid} cannot have children")
            seen.add(sid)
            node = StepNode(sid, pid, stype, comp, {}, unescape(caption, lineno))
            if tree is None:
                tree = StepsTree(node, unescape(header[len(MAGIC) + 1:], 1))
            else:
                path[-1].children.append(node)
            path.append(node)
            current = node
        elif line.startswith("P "):
            if current is None:
                raise BadRecord(lineno, "parameter before any step")
            name, sep, value = line[2:].partition("=")
            if not sep or not name or " " in name:
                raise BadRecord(lineno, "parameter record needs name=value")
            if name in current.params:
                raise BadRecord(lineno, f"duplicate parameter {name!r}")
            current.params[name] = unescape(value, lineno)
        else:
            raise BadRecord(lineno, f"unknown record {line[:20]!r}")
    if tree is None:
        raise BadRecord(len(lines), "no start point")
    return tree


def write_stp(tree: StepsTree, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dumps(tree))


def read_stp(path: str | os.PathLike) -> StepsTree:
    with open(path, encoding="utf-8", newline="") as fh:
        return loads(fh.read())
