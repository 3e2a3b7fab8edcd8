"""Pass 1: normalize archetype source into one canonical token stream.

The normalizer plays the role the standard C preprocessor plays ahead of the
accumulation pass: object-like macros are substituted, includes expanded
through a caller-supplied resolver, comments stripped, and conditional
blocks resolved, with ``# <line> "<file>"`` linemarkers keeping every output
line traceable to its origin.  ``#pragma cyclus`` lines pass through
untouched so later passes see them exactly as written.

Deliberate limits (they raise :class:`MalformedDirective` rather than
misbehave): no function-like macros, and conditionals only over integer
literals, ``defined(...)`` tests, and macros that expand to integers.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .errors import MalformedDirective, UnresolvableInclude

ENTER_FILE = "enter_file"
RETURN_FILE = "return_file"
_FLAG_NUMBERS = {ENTER_FILE: 1, RETURN_FILE: 2}
_NUMBER_FLAGS = {1: ENTER_FILE, 2: RETURN_FILE}

_LINEMARKER_RE = re.compile(r'^#\s+(\d+)\s+"([^"]*)"((?:\s+\d+)*)\s*$')
_DIRECTIVE_RE = re.compile(r"^\s*#\s*([A-Za-z_]\w*)\b\s*(.*)$")
_PRAGMA_CYCLUS_RE = re.compile(r"^\s*#\s*pragma\s+cyclus\b")
_DEFINE_RE = re.compile(r"^([A-Za-z_]\w*)(\(?)(.*)$")
_NAME_RE = re.compile(r"^[A-Za-z_]\w*$")
_IDENT_RE = re.compile(r"[A-Za-z_]\w*")
_INT_LITERAL_RE = re.compile(r"^[+-]?\d+[uUlL]*$")
_DEFINED_RE = re.compile(r"^defined\s*(?:\(\s*([A-Za-z_]\w*)\s*\)|([A-Za-z_]\w*))$")
_INCLUDE_RE = re.compile(r'^(?:"([^"]+)"|<([^>]+)>)$')

_MAX_INCLUDE_DEPTH = 50
_MAX_EXPANSIONS = 64

IncludeResolver = Mapping[str, str] | Callable[[str], "str | None"] | None


@dataclass(frozen=True)
class Linemarker:
    """A parsed ``# <line> "<file>" [flags]`` bookkeeping line."""

    line_number: int
    file_name: str
    flags: frozenset[str] = frozenset()


def parse_linemarker(line: str):
    """Structured marker, or ``None`` when the line is not a linemarker."""
    m = _LINEMARKER_RE.match(line)
    if m is None:
        return None
    numbers = [int(tok) for tok in m.group(3).split()]
    flags = frozenset(_NUMBER_FLAGS[n] for n in numbers if n in _NUMBER_FLAGS)
    return Linemarker(int(m.group(1)), m.group(2), flags)


def render_linemarker(line_number: int, file_name: str,
                      flags: frozenset[str] = frozenset()) -> str:
    suffix = "".join(f" {_FLAG_NUMBERS[f]}"
                     for f in (ENTER_FILE, RETURN_FILE) if f in flags)
    return f'# {line_number} "{file_name}"{suffix}'


@dataclass(frozen=True)
class SourceLine:
    """One normalized line plus the origin it came from."""

    text: str
    file: str
    line: int


@dataclass
class NormalizedSource:
    """Normalizer output: origin-tagged lines and their rendered text."""

    lines: list[SourceLine]
    text: str

    def render(self) -> str:
        return self.text


class _CommentStripper:
    """Strips both comment styles outside string literals; block comments
    may span lines and collapse to a single space."""

    def __init__(self) -> None:
        self.in_block = False

    def strip(self, line: str) -> str:
        out: list[str] = []
        quote: str | None = None
        i = 0
        n = len(line)
        while i < n:
            ch = line[i]
            if self.in_block:
                if ch == "*" and i + 1 < n and line[i + 1] == "/":
                    self.in_block = False
                    out.append(" ")
                    i += 2
                else:
                    i += 1
                continue
            if quote is not None:
                out.append(ch)
                if ch == "\\" and i + 1 < n:
                    out.append(line[i + 1])
                    i += 2
                    continue
                if ch == quote:
                    quote = None
                i += 1
                continue
            if ch in ('"', "'"):
                quote = ch
                out.append(ch)
                i += 1
                continue
            if ch == "/" and i + 1 < n:
                if line[i + 1] == "/":
                    break
                if line[i + 1] == "*":
                    self.in_block = True
                    i += 2
                    continue
            out.append(ch)
            i += 1
        return "".join(out)


def _substitute_once(line: str, macros: Mapping[str, str]) -> str:
    out: list[str] = []
    quote: str | None = None
    i = 0
    n = len(line)
    prev_word = False
    while i < n:
        ch = line[i]
        if quote is not None:
            out.append(ch)
            if ch == "\\" and i + 1 < n:
                out.append(line[i + 1])
                i += 2
                continue
            if ch == quote:
                quote = None
            i += 1
            continue
        if ch in ('"', "'"):
            quote = ch
            out.append(ch)
            prev_word = False
            i += 1
            continue
        if not prev_word:
            m = _IDENT_RE.match(line, i)
            if m is not None:
                word = m.group(0)
                out.append(macros[word] if word in macros else word)
                prev_word = False
                i = m.end()
                # a substitution may end in a word character; never glue it
                # onto a following identifier
                prev_word = bool(out[-1]) and (out[-1][-1].isalnum() or out[-1][-1] == "_")
                continue
        out.append(ch)
        prev_word = ch.isalnum() or ch == "_"
        i += 1
    return "".join(out)


def _substitute(line: str, macros: Mapping[str, str]) -> str:
    if not macros:
        return line
    for _ in range(_MAX_EXPANSIONS):
        expanded = _substitute_once(line, macros)
        if expanded == line:
            return expanded
        line = expanded
    return line


@dataclass
class _Conditional:
    parent_active: bool
    active: bool
    branch_taken: bool
    saw_else: bool = False


class _Emitter:
    def __init__(self) -> None:
        self.rendered: list[str] = []
        self.lines: list[SourceLine] = []
        self.cur_file: str | None = None
        self.next_line: int | None = None

    def marker(self, line_number: int, file_name: str,
               flags: frozenset[str] = frozenset()) -> None:
        self.rendered.append(render_linemarker(line_number, file_name, flags))
        self.cur_file = file_name
        self.next_line = line_number

    def content(self, text: str, file_name: str, line_number: int) -> None:
        if file_name != self.cur_file or line_number != self.next_line:
            self.marker(line_number, file_name)
        self.rendered.append(text)
        self.lines.append(SourceLine(text, file_name, line_number))
        self.next_line = line_number + 1


class _Normalizer:
    def __init__(self, include_resolver: IncludeResolver,
                 predefines: Mapping[str, str] | None) -> None:
        self.resolver = include_resolver
        self.macros: dict[str, str] = dict(predefines or {})
        self.emitter = _Emitter()
        self.conditionals: list[_Conditional] = []
        self.include_stack: list[str] = []

    # -- helpers -----------------------------------------------------------

    def _active(self) -> bool:
        return all(c.active for c in self.conditionals)

    def _resolve_include(self, name: str) -> str | None:
        if self.resolver is None:
            return None
        if callable(self.resolver):
            return self.resolver(name)
        return self.resolver.get(name)

    def _eval_condition(self, expr: str, fname: str, lineno: int) -> bool:
        expr = expr.strip()
        negate = False
        while expr.startswith("!"):
            negate = not negate
            expr = expr[1:].lstrip()
        m = _DEFINED_RE.match(expr)
        if m is not None:
            result = (m.group(1) or m.group(2)) in self.macros
        elif _INT_LITERAL_RE.match(expr):
            result = int(expr.rstrip("uUlL")) != 0
        elif _NAME_RE.match(expr) and expr in self.macros:
            expansion = _substitute(expr, self.macros).strip()
            if not _INT_LITERAL_RE.match(expansion):
                raise MalformedDirective(
                    f"macro {expr!r} does not expand to an integer in a "
                    "conditional", file=fname, line=lineno)
            result = int(expansion.rstrip("uUlL")) != 0
        else:
            raise MalformedDirective(
                f"unsupported conditional expression {expr!r}",
                file=fname, line=lineno)
        return result != negate

    # -- directive handlers ---------------------------------------------------

    def _handle_define(self, body: str, fname: str, lineno: int) -> None:
        m = _DEFINE_RE.match(body.strip())
        if m is None:
            raise MalformedDirective("malformed #define", file=fname, line=lineno)
        name, paren, rest = m.groups()
        if paren:
            raise MalformedDirective(
                f"function-like macro {name!r} is not supported",
                file=fname, line=lineno)
        self.macros[name] = rest.strip()

    def _handle_undef(self, body: str, fname: str, lineno: int) -> None:
        body = body.strip()
        if not _NAME_RE.match(body):
            raise MalformedDirective(
                f"garbage after #undef: {body!r}", file=fname, line=lineno)
        self.macros.pop(body, None)

    def _handle_include(self, body: str, fname: str, lineno: int) -> None:
        target = _substitute(body.strip(), self.macros).strip()
        m = _INCLUDE_RE.match(target)
        if m is None:
            raise MalformedDirective(
                f"malformed #include: {body.strip()!r}", file=fname, line=lineno)
        name = m.group(1) or m.group(2)
        text = self._resolve_include(name)
        if text is None:
            warnings.warn(
                f"{fname}:{lineno}: cannot resolve include {name!r}; dropped",
                UnresolvableInclude, stacklevel=2)
            return
        if name in self.include_stack:
            raise MalformedDirective(
                f"#include cycle through {name!r}", file=fname, line=lineno)
        if len(self.include_stack) >= _MAX_INCLUDE_DEPTH:
            raise MalformedDirective(
                "includes nested too deeply", file=fname, line=lineno)
        self.emitter.marker(1, name, frozenset({ENTER_FILE}))
        self.include_stack.append(name)
        try:
            self._process(text, name)
        finally:
            self.include_stack.pop()
        self.emitter.marker(lineno + 1, fname, frozenset({RETURN_FILE}))

    def _handle_conditional(self, directive: str, body: str,
                            fname: str, lineno: int) -> bool:
        """Returns True when the directive was a conditional one."""
        if directive in ("if", "ifdef", "ifndef"):
            parent_active = self._active()
            if directive == "ifdef":
                body = f"defined({body.strip()})"
            elif directive == "ifndef":
                body = f"!defined({body.strip()})"
            taken = parent_active and self._eval_condition(body, fname, lineno)
            self.conditionals.append(
                _Conditional(parent_active, taken, taken))
            return True
        if directive == "elif":
            frame = self._frame(directive, fname, lineno)
            if frame.saw_else:
                raise MalformedDirective(
                    "#elif after #else", file=fname, line=lineno)
            take = (frame.parent_active and not frame.branch_taken
                    and self._eval_condition(body, fname, lineno))
            frame.active = take
            frame.branch_taken = frame.branch_taken or take
            return True
        if directive == "else":
            frame = self._frame(directive, fname, lineno)
            if frame.saw_else:
                raise MalformedDirective(
                    "duplicate #else", file=fname, line=lineno)
            frame.saw_else = True
            frame.active = frame.parent_active and not frame.branch_taken
            frame.branch_taken = True
            return True
        if directive == "endif":
            self._frame(directive, fname, lineno)
            self.conditionals.pop()
            return True
        return False

    def _frame(self, directive: str, fname: str, lineno: int) -> _Conditional:
        if not self.conditionals:
            raise MalformedDirective(
                f"#{directive} without matching #if", file=fname, line=lineno)
        return self.conditionals[-1]

    # -- main loop ------------------------------------------------------------------

    def _process(self, text: str, fname: str) -> None:
        stripper = _CommentStripper()
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()  # the final newline is a terminator, not a line
        index = 0
        lineno = 0
        cur_name = fname
        while index < len(lines):
            raw = lines[index]
            index += 1
            lineno += 1
            start = lineno
            while raw.endswith("\\") and index < len(lines):
                raw = raw[:-1] + lines[index]
                index += 1
                lineno += 1
            if raw.endswith("\\"):
                raise MalformedDirective(
                    "line continuation at end of file", file=cur_name, line=start)

            was_in_block = stripper.in_block
            stripped = stripper.strip(raw)
            if was_in_block and not stripped.strip():
                continue

            if self._active() and _PRAGMA_CYCLUS_RE.match(stripped):
                self.emitter.content(stripped, cur_name, start)
                continue

            marker = parse_linemarker(stripped)
            if marker is not None:
                cur_name = marker.file_name
                lineno = marker.line_number - 1
                continue

            m = _DIRECTIVE_RE.match(stripped)
            if m is not None:
                directive, body = m.group(1), m.group(2)
                if self._handle_conditional(directive, body, cur_name, start):
                    continue
                if not self._active():
                    continue
                if directive == "define":
                    self._handle_define(body, cur_name, start)
                elif directive == "undef":
                    self._handle_undef(body, cur_name, start)
                elif directive == "include":
                    self._handle_include(body, cur_name, start)
                elif directive == "pragma":
                    self.emitter.content(stripped, cur_name, start)
                else:
                    raise MalformedDirective(
                        f"unsupported directive #{directive}",
                        file=cur_name, line=start)
                continue

            if not self._active():
                continue
            self.emitter.content(
                _substitute(stripped, self.macros), cur_name, start)


def normalize(source: str, include_resolver: IncludeResolver = None,
              predefines: Mapping[str, str] | None = None, *,
              filename: str = "<source>") -> NormalizedSource:
    """Normalize one translation unit.

    ``include_resolver`` maps include names to their text (a mapping or a
    callable); unresolvable includes are dropped with an
    :class:`UnresolvableInclude` warning.  ``predefines`` seeds the macro
    table, as ``-D`` flags would.
    """
    worker = _Normalizer(include_resolver, predefines)
    worker.emitter.marker(1, filename)
    worker._process(source, filename)
    if worker.conditionals:
        raise MalformedDirective("unterminated conditional block", file=filename)
    text = "\n".join(worker.emitter.rendered)
    if text and not text.endswith("\n"):
        text += "\n"
    return NormalizedSource(lines=worker.emitter.lines, text=text)
