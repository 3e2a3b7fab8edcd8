"""Pass 2: run the filter chain over normalized source and build the registry.

Each logical statement of the normalized source is offered to an ordered
chain of filters; the first filter whose pattern matches runs its
transformation against the accumulator state and no later filter sees the
statement.  Unmatched statements pass through untouched.  Multi-line
declarations are joined into one statement ahead of the chain, so the filter
patterns can stay line-oriented.

The result is a registry of :class:`ArchetypeInfo`: one entry per class that
carried at least one ``#pragma cyclus`` directive, with its superclasses,
entity classification, accumulated notes, and state variables in
declaration order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import annotations as anno
from .errors import DanglingDecoration, MalformedDirective
from .normalizer import NormalizedSource, parse_linemarker
from .typesystem import CanonicalType, TypeScope, canonicalize

ENTITY_PRIORITY = (
    ("cyclus::Region", "region"),
    ("cyclus::Institution", "institution"),
    ("cyclus::Facility", "facility"),
)
AGENT_BASE = "cyclus::Agent"

_CLASS_RE = re.compile(
    r"^\s*(?:template\s*<[^{;]*>\s*)?(class|struct)\s+([A-Za-z_]\w*)\s*"
    r"(?::\s*([^{;]+?))?\s*([{;])\s*$")
_ACCESS_RE = re.compile(r"^\s*(public|private|protected)\s*:\s*$")
_EXEC_RE = re.compile(r"^\s*#\s*pragma\s+cyclus\s+exec\s+(.*)$")
_USING_NAMESPACE_RE = re.compile(r"^\s*using\s+namespace\s+([A-Za-z_][\w:]*)\s*;\s*$")
_NAMESPACE_ALIAS_RE = re.compile(
    r"^\s*namespace\s+([A-Za-z_]\w*)\s*=\s*([A-Za-z_][\w:]*)\s*;\s*$")
_NAMESPACE_RE = re.compile(r"^\s*namespace(?:\s+([A-Za-z_]\w*))?\s*\{\s*$")
_TYPEDEF_RE = re.compile(r"^\s*typedef\s+(.+?)\s+([A-Za-z_]\w*)\s*;\s*$")
_USING_RE = re.compile(r"^\s*using\s+((?:[A-Za-z_]\w*::)+)([A-Za-z_]\w*)\s*;\s*$")
_NOTE_RE = re.compile(r"^\s*#\s*pragma\s+cyclus\s+note\s+(.+)$")
_VAR_DECORATION_RE = re.compile(r"^\s*#\s*pragma\s+cyclus\s+var\s+(.+)$")
_VAR_DECLARATION_RE = re.compile(
    r"^\s*([A-Za-z_][\w:<>,\s*&]*?)(?:\s+|(?<=[*&])\s*)"
    r"([A-Za-z_]\w*)\s*(?:=[^;]*)?;\s*$")
_PRAGMA_CYCLUS_RE = re.compile(r"^\s*#\s*pragma\s+cyclus\b\s*(.*)$")
_BASE_KEYWORDS = frozenset({"public", "protected", "private", "virtual"})


@dataclass
class StateVar:
    """One accumulated state variable."""

    name: str
    type: CanonicalType
    annotation: dict
    access: str


@dataclass
class ArchetypeInfo:
    """Everything pass 2 learns about one archetype class."""

    name: str
    namespace: tuple[str, ...]
    parents: list[str] = field(default_factory=list)
    all_parents: list[str] = field(default_factory=list)
    entity: str = "unknown"
    state_vars: list[StateVar] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def qualified_name(self) -> str:
        return "::".join((*self.namespace, self.name))

    def vars_annotation(self) -> dict:
        return {var.name: var.annotation for var in self.state_vars}

    def annotation(self) -> dict:
        """The archetype's full metadata object."""
        return anno.finalize_archetype(
            self.notes, name=self.name, entity=self.entity,
            parents=self.parents, all_parents=self.all_parents,
            vars=self.vars_annotation())


def exec_directive(code: str, env: dict) -> dict:
    """Run an exec directive's assignments against the shared namespace."""
    return anno.exec_statements(code, env)


def _entity_from_names(names) -> str:
    found = set(names)
    for base, label in ENTITY_PRIORITY:
        if base in found:
            return label
    if AGENT_BASE in found:
        return "archetype"
    return "unknown"


def classify_entity(info: ArchetypeInfo, registry=None) -> str:
    """Entity classification from declared ancestry, transitively through
    any classes present in ``registry``."""
    seen: set[str] = set()
    queue = list(info.parents)
    names: list[str] = []
    while queue:
        name = queue.pop(0)
        if name in seen:
            continue
        seen.add(name)
        names.append(name)
        if registry is not None:
            target = registry.get(name)
            if target is None:
                for candidate in registry.values():
                    if candidate.name == name:
                        target = candidate
                        break
            if target is not None:
                queue.extend(target.parents)
    return _entity_from_names(names)


# -- statement joining ----------------------------------------------------------

def _scan_code(text: str):
    """Yield characters of ``text`` that sit outside string/char literals."""
    quote = None
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if quote is not None:
            if ch == "\\":
                i += 2
                continue
            if ch == quote:
                quote = None
            i += 1
            continue
        if ch in ('"', "'"):
            quote = ch
            i += 1
            continue
        yield ch
        i += 1


def _paren_depth(text: str) -> int:
    depth = 0
    for ch in _scan_code(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
    return depth


def _brace_delta(text: str) -> int:
    delta = 0
    for ch in _scan_code(text):
        if ch == "{":
            delta += 1
        elif ch == "}":
            delta -= 1
    return delta


def _statement_complete(text: str) -> bool:
    if _paren_depth(text) > 0:
        return False
    if text.endswith(("{", "}", ";")):
        return True
    return _ACCESS_RE.match(text) is not None


def iter_statements(lines):
    """Join physical lines into logical statements.

    Yields ``(statement, physical_line_count)``. Directives, linemarkers,
    and blank lines always stand alone; other lines merge until braces,
    parens, and the trailing terminator balance out.
    """
    buf: list[str] = []
    count = 0
    for raw in lines:
        stripped = raw.strip()
        if stripped.startswith("#") or not stripped:
            if buf:
                yield " ".join(buf), count
                buf, count = [], 0
            yield stripped, 1
            continue
        buf.append(stripped)
        count += 1
        joined = " ".join(buf)
        if _statement_complete(joined):
            yield joined, count
            buf, count = [], 0
    if buf:
        yield " ".join(buf), count


# -- filters --------------------------------------------------------------------

class _Filter:
    """One window of the chain: a pattern plus a state transformation."""

    name = "Filter"

    def match(self, acc: "StateAccumulator", stmt: str):
        raise NotImplementedError

    def transform(self, acc: "StateAccumulator", match, stmt: str) -> None:
        raise NotImplementedError


class ClassAndSuperclassFilter(_Filter):
    """Records class declarations and their superclass lists."""

    name = "ClassAndSuperclassFilter"

    def match(self, acc, stmt):
        return _CLASS_RE.match(stmt)

    def transform(self, acc, match, stmt):
        keyword, name, bases_text, tail = match.groups()
        if tail == ";":
            acc.note_forward_declaration(name)
            return
        default_access = "public" if keyword == "struct" else "private"
        bases = _parse_bases(bases_text or "", default_access)
        acc.open_class(name, bases, default_access)


def _split_top_level(text: str, sep: str = ","):
    parts = []
    depth = 0
    current = []
    for ch in text:
        if ch in "<([":
            depth += 1
        elif ch in ">)]":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    if current:
        parts.append("".join(current))
    return parts


def _parse_bases(text: str, default_access: str):
    """Public base names, in declaration order."""
    bases = []
    for chunk in _split_top_level(text):
        tokens = chunk.split()
        if not tokens:
            continue
        access = default_access
        name_tokens = []
        for tok in tokens:
            if tok in _BASE_KEYWORDS:
                if tok != "virtual":
                    access = tok
            else:
                name_tokens.append(tok)
        if name_tokens and access == "public":
            bases.append(" ".join(name_tokens))
    return bases


class AccessFilter(_Filter):
    """Tracks the current access level inside a class body."""

    name = "AccessFilter"

    def match(self, acc, stmt):
        return _ACCESS_RE.match(stmt)

    def transform(self, acc, match, stmt):
        frame = acc.current_class()
        if frame is not None:
            frame.access = match.group(1)


class ExecFilter(_Filter):
    """Binds names usable in later annotation literals."""

    name = "ExecFilter"

    def match(self, acc, stmt):
        return _EXEC_RE.match(stmt)

    def transform(self, acc, match, stmt):
        anno.exec_statements(match.group(1), acc.env)


class UsingNamespaceFilter(_Filter):
    """Adds a namespace to unqualified lookup until the scope closes."""

    name = "UsingNamespaceFilter"

    def match(self, acc, stmt):
        return _USING_NAMESPACE_RE.match(stmt)

    def transform(self, acc, match, stmt):
        acc.scope.add_using_namespace(match.group(1))


class NamespaceAliasFilter(_Filter):
    """Registers ``namespace short = long::path;`` aliases."""

    name = "NamespaceAliasFilter"

    def match(self, acc, stmt):
        return _NAMESPACE_ALIAS_RE.match(stmt)

    def transform(self, acc, match, stmt):
        acc.scope.add_namespace_alias(match.group(1), match.group(2))


class NamespaceFilter(_Filter):
    """Opens a namespace scope (reverted when its brace closes)."""

    name = "NamespaceFilter"

    def match(self, acc, stmt):
        return _NAMESPACE_RE.match(stmt)

    def transform(self, acc, match, stmt):
        acc.open_namespace(match.group(1) or "")


class TypedefFilter(_Filter):
    """Adds a typedef alias edge in the current scope."""

    name = "TypedefFilter"

    def match(self, acc, stmt):
        if "(" in stmt:
            return None
        return _TYPEDEF_RE.match(stmt)

    def transform(self, acc, match, stmt):
        acc.scope.add_alias(match.group(2), match.group(1))


class UsingFilter(_Filter):
    """Strips scope from a name via ``using ns::name;``."""

    name = "UsingFilter"

    def match(self, acc, stmt):
        return _USING_RE.match(stmt)

    def transform(self, acc, match, stmt):
        acc.scope.add_alias(match.group(2), match.group(1) + match.group(2))


class LinemarkerFilter(_Filter):
    """Keeps diagnostics pointing at original files and lines."""

    name = "LinemarkerFilter"

    def match(self, acc, stmt):
        return parse_linemarker(stmt)

    def transform(self, acc, marker, stmt):
        acc.file = marker.file_name
        acc.line = marker.line_number
        acc.line_rebased = True


class NoteDecorationFilter(_Filter):
    """Merges a note dictionary into the enclosing archetype annotations."""

    name = "NoteDecorationFilter"

    def match(self, acc, stmt):
        return _NOTE_RE.match(stmt)

    def transform(self, acc, match, stmt):
        frame = acc.current_class()
        if frame is None:
            raise MalformedDirective("note directive outside a class body")
        value = anno.parse_annotation_literal(match.group(1), acc.env)
        acc.ensure_info(frame).notes.update(value)


class VarDecorationFilter(_Filter):
    """Queues a var dictionary for the next state-variable declaration."""

    name = "VarDecorationFilter"

    def match(self, acc, stmt):
        return _VAR_DECORATION_RE.match(stmt)

    def transform(self, acc, match, stmt):
        if acc.pending is not None:
            raise DanglingDecoration(
                "two var directives with no declaration between them")
        frame = acc.current_class()
        if frame is None:
            raise MalformedDirective("var directive outside a class body")
        acc.ensure_info(frame)
        acc.pending = anno.parse_annotation_literal(match.group(1), acc.env)


class VarDeclarationFilter(_Filter):
    """Binds the queued decoration to a member declaration."""

    name = "VarDeclarationFilter"

    def match(self, acc, stmt):
        if acc.pending is None or acc.current_class() is None or "(" in stmt:
            return None
        return _VAR_DECLARATION_RE.match(stmt)

    def transform(self, acc, match, stmt):
        type_text, var_name = match.group(1), match.group(2)
        frame = acc.current_class()
        info = acc.ensure_info(frame)
        ctype = canonicalize(type_text, acc.scope)
        annotation = anno.finalize_var(acc.pending, ctype, len(info.state_vars))
        info.state_vars.append(
            StateVar(var_name, ctype, annotation, frame.access))
        acc.pending = None


class PragmaCyclusErrorFilter(_Filter):
    """Validates any remaining cyclus pragma; malformed ones stop the run."""

    name = "PragmaCyclusErrorFilter"

    def match(self, acc, stmt):
        return _PRAGMA_CYCLUS_RE.match(stmt)

    def transform(self, acc, match, stmt):
        from .codegen import parse_directive

        parse_directive(stmt)  # raises MalformedDirective on bad grammar
        frame = acc.current_class()
        if frame is not None:
            acc.ensure_info(frame)


FILTER_CHAIN = (
    ClassAndSuperclassFilter(),
    AccessFilter(),
    ExecFilter(),
    UsingNamespaceFilter(),
    NamespaceAliasFilter(),
    NamespaceFilter(),
    TypedefFilter(),
    UsingFilter(),
    LinemarkerFilter(),
    NoteDecorationFilter(),
    VarDecorationFilter(),
    VarDeclarationFilter(),
    PragmaCyclusErrorFilter(),
)

FILTER_ORDER = tuple(f.name for f in FILTER_CHAIN)


# -- the state machine -------------------------------------------------------------

@dataclass
class _Frame:
    kind: str                 # "class" | "namespace"
    name: str
    close_depth: int
    access: str = "private"
    using_mark: int = 0
    info: ArchetypeInfo | None = None
    path: tuple[str, ...] = ()
    bases: list = field(default_factory=list)     # (declared, candidates)


class StateAccumulator:
    """Feeds statements through the filter chain and gathers archetypes."""

    def __init__(self, filters=FILTER_CHAIN) -> None:
        self.filters = filters
        self.scope = TypeScope()
        self.env: dict = {}
        self.pending: dict | None = None
        self.registry: dict[str, ArchetypeInfo] = {}
        self.class_graph: dict[str, list] = {}
        self.frames: list[_Frame] = []
        self.depth = 0
        self.file = "<source>"
        self.line = 1
        self.line_rebased = False
        self.transform_log: list[tuple[str, str]] = []

    # -- scope plumbing ----------------------------------------------------

    def current_class(self) -> _Frame | None:
        for frame in reversed(self.frames):
            if frame.kind == "class":
                return frame
        return None

    def note_forward_declaration(self, name: str) -> None:
        key = "::".join((*self.scope.path(), name))
        self.class_graph.setdefault(key, [])

    def open_class(self, name: str, bases: list[str], default_access: str) -> None:
        path = self.scope.path()
        frame = _Frame(
            kind="class", name=name, close_depth=self.depth,
            access=default_access, using_mark=self.scope.using_mark(),
            path=path,
            bases=[(b, self.scope.candidates(b)) for b in bases])
        self.scope.push_class(name)
        key = "::".join((*path, name))
        self.class_graph[key] = frame.bases
        self.frames.append(frame)

    def open_namespace(self, name: str) -> None:
        self.frames.append(_Frame(
            kind="namespace", name=name, close_depth=self.depth,
            using_mark=self.scope.using_mark()))
        self.scope.push_namespace(name)

    def ensure_info(self, frame: _Frame) -> ArchetypeInfo:
        if frame.info is None:
            info = ArchetypeInfo(
                name=frame.name, namespace=frame.path,
                parents=[declared for declared, _ in frame.bases])
            frame.info = info
            self.registry[info.qualified_name] = info
        return frame.info

    def _pop_frame(self) -> None:
        frame = self.frames.pop()
        if frame.kind == "class":
            if self.pending is not None:
                raise DanglingDecoration(
                    f"var directive in {frame.name!r} has no declaration "
                    "to attach to", file=self.file, line=self.line)
            self.scope.pop_class()
        else:
            self.scope.pop_namespace()
        self.scope.truncate_using(frame.using_mark)

    # -- the chain ------------------------------------------------------------

    def apply_filters(self, stmt: str) -> str | None:
        """Offer one statement to the chain; returns the matching filter's
        name, or ``None`` for a pass-through."""
        for filt in self.filters:
            match = filt.match(self, stmt)
            if match:
                try:
                    filt.transform(self, match, stmt)
                except Exception as exc:
                    if hasattr(exc, "at"):
                        raise exc.at(self.file, self.line)
                    raise
                self.transform_log.append((stmt, filt.name))
                return filt.name
        return None

    def feed(self, text: str) -> None:
        for stmt, physical in iter_statements(text.splitlines()):
            self.line_rebased = False
            self.apply_filters(stmt)
            self.depth += _brace_delta(stmt)
            while self.frames and self.depth <= self.frames[-1].close_depth:
                self._pop_frame()
            if not self.line_rebased:
                self.line += physical

    def finish(self) -> dict[str, ArchetypeInfo]:
        if self.pending is not None:
            raise DanglingDecoration(
                "var directive has no declaration to attach to",
                file=self.file, line=self.line)
        for info in self.registry.values():
            info.all_parents = self._closure(info.qualified_name)
            info.entity = _entity_from_names(info.all_parents)
        return self.registry

    def _closure(self, start_key: str) -> list[str]:
        entity_names = {name for name, _ in ENTITY_PRIORITY} | {AGENT_BASE}
        out: list[str] = []
        visited_keys = {start_key}

        def walk(key: str) -> None:
            for declared, candidates in self.class_graph.get(key, []):
                resolved_key = next(
                    (c for c in candidates if c in self.class_graph), None)
                display = next(
                    (c for c in candidates
                     if c in entity_names or c in self.class_graph), declared)
                if display not in out:
                    out.append(display)
                if resolved_key is not None and resolved_key not in visited_keys:
                    visited_keys.add(resolved_key)
                    walk(resolved_key)

        walk(start_key)
        return out


def accumulate(src: NormalizedSource | str) -> dict[str, ArchetypeInfo]:
    """Build the archetype registry from normalized source."""
    text = src.render() if isinstance(src, NormalizedSource) else src
    acc = StateAccumulator()
    acc.feed(text)
    return acc.finish()


def registry_to_json(registry: dict[str, ArchetypeInfo]) -> str:
    """Canonical JSON's view of a registry, for the debug dump."""
    return anno.render_json(
        {key: info.annotation() for key, info in registry.items()})
