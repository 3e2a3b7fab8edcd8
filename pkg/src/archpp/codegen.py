"""Pass 3: replace code-generation directives with member-function bodies.

The generator walks the original source (not the normalized stream), tracks
which class body each line sits in, and swaps every code-generation
directive line for its generated block.  Every other line, including the
var/note/exec directives themselves, is copied through byte-identical.

Generated code is formatted deterministically: two-space indent for member
functions, four for their bodies, one blank line between functions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import schema as rngschema
from .accumulator import (
    _CLASS_RE,
    _NAMESPACE_RE,
    ArchetypeInfo,
    _brace_delta,
    _statement_complete,
    accumulate,
)
from .annotations import render_json
from .errors import (
    AmbiguousClass,
    MalformedDirective,
    OverrideShapeMismatch,
    UnknownClass,
)
from .normalizer import IncludeResolver, normalize
from .typesystem import cpp_spelling

GENERATED_FUNCTIONS = (
    "initfromcopy",
    "initfromdb",
    "infiletodb",
    "clone",
    "schema",
    "annotations",
    "initinv",
    "snapshotinv",
    "snapshot",
)
DIRECTIVE_FORMS = ("decl", "def", "impl")

_PRAGMA_RE = re.compile(r"^\s*#\s*pragma\s+cyclus\b\s*(.*?)\s*$")
_CLASS_NAME_RE = re.compile(r"^[A-Za-z_][\w:]*$")
_ANNOTATION_CHUNK_WIDTH = 60


@dataclass(frozen=True)
class Directive:
    """One parsed ``#pragma cyclus ...`` line."""

    kind: str                       # prime | targeted | var | note | exec
    form: str | None = None         # decl | def | impl
    function: str | None = None     # a generated function name, or "all"
    class_name: str | None = None
    payload: str | None = None      # var/note dictionary or exec code


def parse_directive(line: str) -> Directive:
    """Parse any cyclus pragma; raises :class:`MalformedDirective`."""
    m = _PRAGMA_RE.match(line)
    if m is None:
        raise MalformedDirective(f"not a cyclus pragma: {line.strip()!r}")
    rest = m.group(1)
    if not rest:
        return Directive("prime")
    head, _, payload = rest.partition(" ")
    if head in ("var", "note"):
        if not payload.strip():
            raise MalformedDirective(f"{head} directive needs a dictionary")
        return Directive(head, payload=payload.strip())
    if head == "exec":
        return Directive("exec", payload=payload.strip())
    tokens = rest.split()
    if tokens[0] not in DIRECTIVE_FORMS:
        raise MalformedDirective(
            f"unknown cyclus directive {tokens[0]!r}")
    if len(tokens) > 3:
        raise MalformedDirective(
            f"too many arguments in cyclus directive: {rest!r}")
    function = "all"
    class_name = None
    if len(tokens) >= 2:
        if tokens[1] not in GENERATED_FUNCTIONS:
            raise MalformedDirective(
                f"unknown generated function {tokens[1]!r}")
        function = tokens[1]
    if len(tokens) == 3:
        if not _CLASS_NAME_RE.match(tokens[2]):
            raise MalformedDirective(f"bad class name {tokens[2]!r}")
        class_name = tokens[2]
    return Directive("targeted", form=tokens[0], function=function,
                     class_name=class_name)


# -- C++ fragments -----------------------------------------------------------------

def _cpp_literal(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return "%g" % value
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, list):
        return "{" + ", ".join(_cpp_literal(v) for v in value) + "}"
    if isinstance(value, dict):
        entries = ", ".join(
            "{%s, %s}" % (_cpp_literal(k), _cpp_literal(v))
            for k, v in value.items())
        return "{" + entries + "}"
    return "NULL"


def _escape_string_literal(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _chunk_literal(text: str, width: int = _ANNOTATION_CHUNK_WIDTH) -> list[str]:
    """Fixed-width chop that never splits an escape pair."""
    if not text:
        return [""]
    chunks = []
    pos = 0
    while pos < len(text):
        end = min(pos + width, len(text))
        while end < len(text) and end > pos + 1 \
                and _trailing_backslash_run(text, pos, end) % 2 == 1:
            end -= 1
        chunks.append(text[pos:end])
        pos = end
    return chunks


def _trailing_backslash_run(text: str, start: int, end: int) -> int:
    count = 0
    i = end - 1
    while i >= start and text[i] == "\\":
        count += 1
        i -= 1
    return count


def _splice(code: str) -> list[str]:
    return code.rstrip("\n").split("\n")


# -- per-function generation --------------------------------------------------------

def _signature(func: str, info: ArchetypeInfo) -> str:
    cls = info.name
    return {
        "initfromcopy": f"virtual void InitFrom({cls}* m)",
        "initfromdb": "virtual void InitFrom(cyclus::QueryableBackend* b)",
        "infiletodb": ("virtual void InfileToDb(cyclus::InfileTree* tree, "
                       "cyclus::DbInit di)"),
        "clone": "virtual cyclus::Agent* Clone()",
        "schema": "virtual std::string schema()",
        "annotations": "virtual Json::Value annotations()",
        "initinv": "virtual void InitInv(cyclus::Inventories& inv)",
        "snapshotinv": "virtual cyclus::Inventories SnapshotInv()",
        "snapshot": "virtual void Snapshot(cyclus::DbInit di)",
    }[func]


def _body_initfromcopy(info: ArchetypeInfo) -> list[str]:
    lines: list[str] = []
    for var in info.state_vars:
        override = var.annotation.get("initfromcopy")
        if override is not None:
            lines.extend(_splice(override))
        else:
            lines.append(f"    {var.name} = m->{var.name};")
    return lines


def _body_initfromdb(info: ArchetypeInfo) -> list[str]:
    lines = ['    cyclus::QueryResult qr = b->Query("Info", NULL);']
    for var in info.state_vars:
        override = var.annotation.get("initfromdb")
        if override is not None:
            lines.extend(_splice(override))
        else:
            cpp = cpp_spelling(var.type)
            lines.append(f'    {var.name} = qr.GetVal<{cpp}>("{var.name}");')
    return lines


def _datum_block(info: ArchetypeInfo, override_key: str | None) -> list[str]:
    lines = ['    di.NewDatum("Info")']
    for var in info.state_vars:
        override = var.annotation.get(override_key) if override_key else None
        if override is not None:
            lines.extend(_splice(override))
        else:
            lines.append(f'    ->AddVal("{var.name}", {var.name})')
    lines.append("    ->Record();")
    return lines


def _body_infiletodb(info: ArchetypeInfo) -> list[str]:
    lines = [
        '    tree = tree->SubTree("config/*");',
        "    cyclus::InfileTree* sub;",
        "    int i;",
        "    int n;",
    ]
    writes: dict[str, str] = {}
    for var in info.state_vars:
        override = var.annotation.get("infiletodb")
        if override is not None:
            if (not isinstance(override, dict)
                    or "read" not in override or "write" not in override):
                raise OverrideShapeMismatch(
                    f"infiletodb override for {var.name!r} needs both "
                    "'read' and 'write' entries")
            lines.extend(_splice(override["read"]))
            writes[var.name] = override["write"]
            continue
        cpp = cpp_spelling(var.type)
        if "default" in var.annotation:
            default = _cpp_literal(var.annotation["default"])
            lines.append(f'    {var.name} = cyclus::OptionalQuery<{cpp}>'
                         f'(tree, "{var.name}", {default});')
        else:
            lines.append(f'    {var.name} = cyclus::Query<{cpp}>'
                         f'(tree, "{var.name}");')
    lines.append('    di.NewDatum("Info")')
    for var in info.state_vars:
        if var.name in writes:
            lines.extend(_splice(writes[var.name]))
        else:
            lines.append(f'    ->AddVal("{var.name}", {var.name})')
    lines.append("    ->Record();")
    return lines


def _body_clone(info: ArchetypeInfo) -> list[str]:
    cls = info.name
    return [
        f"    {cls}* m = new {cls}(context());",
        "    m->InitFrom(this);",
        "    return m;",
    ]


def _schema_string_lines(info: ArchetypeInfo) -> list[str]:
    # the schema() string carries only the element's content; each state
    # variable's block starts flush left inside the interleave
    full = rngschema.build_archetype_schema(info)
    content = full.children[0]
    lines = ["<interleave>"]
    for child in content.children:
        lines.extend(rngschema.rng_lines(child, indent=4))
    lines.append("</interleave>")
    return lines


def _body_schema(info: ArchetypeInfo) -> list[str]:
    lines = ['    return ""']
    for xml_line in _schema_string_lines(info):
        lines.append(f'      "{_escape_string_literal(xml_line)}\\n"')
    lines.append("      ;")
    return lines


def gen_annotations_literal(info: ArchetypeInfo) -> str:
    """The parse-and-error boilerplate embedding the escaped metadata JSON."""
    return "\n".join(_body_annotations(info))


def _body_annotations(info: ArchetypeInfo) -> list[str]:
    escaped = _escape_string_literal(render_json(info.annotation()))
    chunks = _chunk_literal(escaped)
    lines = [
        "    Json::Value root;",
        "    Json::Reader reader;",
        "    bool parsed_ok = reader.parse(",
    ]
    for chunk in chunks[:-1]:
        lines.append(f'      "{chunk}"')
    lines.append(f'      "{chunks[-1]}", root);')
    lines.extend([
        "    if (!parsed_ok) {",
        ('      throw cyclus::ValueError("failed to parse annotations '
         f'for {info.name}.");'),
        "    }",
        "    return root;",
    ])
    return lines


def _body_initinv(info: ArchetypeInfo) -> list[str]:
    lines: list[str] = []
    for var in info.state_vars:
        override = var.annotation.get("initinv")
        if override is not None:
            lines.extend(_splice(override))
    return lines


def _body_snapshotinv(info: ArchetypeInfo) -> list[str]:
    lines = ["    cyclus::Inventories invs;"]
    for var in info.state_vars:
        override = var.annotation.get("snapshotinv")
        if override is not None:
            lines.extend(_splice(override))
    lines.append("    return invs;")
    return lines


_BODY_BUILDERS = {
    "initfromcopy": _body_initfromcopy,
    "initfromdb": _body_initfromdb,
    "infiletodb": _body_infiletodb,
    "clone": _body_clone,
    "schema": _body_schema,
    "annotations": _body_annotations,
    "initinv": _body_initinv,
    "snapshotinv": _body_snapshotinv,
    "snapshot": lambda info: _datum_block(info, "snapshot"),
}


def gen_member(func: str, form: str, info: ArchetypeInfo) -> str:
    """Generate one member function as declaration, definition, or body."""
    if func not in GENERATED_FUNCTIONS:
        raise MalformedDirective(f"unknown generated function {func!r}")
    signature = _signature(func, info)
    if form == "decl":
        return f"  {signature};"
    body = _BODY_BUILDERS[func](info)
    if form == "impl":
        return "\n".join(body)
    if form != "def":
        raise MalformedDirective(f"unknown directive form {form!r}")
    return "\n".join([f"  {signature} {{", *body, "  };"])


def gen_block(directive: Directive, info: ArchetypeInfo) -> str:
    """The replacement text for one code-generation directive."""
    form = directive.form or "def"
    function = directive.function or "all"
    if directive.kind == "prime":
        form, function = "def", "all"
    if function != "all":
        return gen_member(function, form, info)
    parts = [gen_member(func, form, info) for func in GENERATED_FUNCTIONS]
    separator = "\n\n" if form != "decl" else "\n"
    return separator.join(part for part in parts if part)


# -- walking the original source -------------------------------------------------------

def _line_contexts(lines: list[str]) -> list[tuple[str, ...] | None]:
    """Enclosing scope path for each physical line (namespaces and classes)."""
    contexts: list[tuple[str, ...] | None] = [None] * len(lines)
    frames: list[tuple[str, str, int]] = []   # kind, name, close depth
    depth = 0
    pending: list[tuple[int, str]] = []

    def current_path() -> tuple[str, ...] | None:
        if not any(kind == "class" for kind, _, _ in frames):
            return None
        return tuple(name for _, name, _ in frames)

    def process(stmt: str, indices: list[int]) -> None:
        nonlocal depth
        for index in indices:
            contexts[index] = current_path()
        class_match = _CLASS_RE.match(stmt)
        if class_match is not None and class_match.group(4) == "{":
            frames.append(("class", class_match.group(2), depth))
        else:
            ns_match = _NAMESPACE_RE.match(stmt)
            if ns_match is not None:
                frames.append(
                    ("namespace", ns_match.group(1) or "<anonymous>", depth))
        depth += _brace_delta(stmt)
        while frames and depth <= frames[-1][2]:
            frames.pop()

    for index, raw in enumerate(lines):
        stripped = raw.strip()
        if stripped.startswith("#") or not stripped:
            if pending:
                process(" ".join(s for _, s in pending),
                        [i for i, _ in pending])
                pending = []
            contexts[index] = current_path()
            continue
        pending.append((index, stripped))
        joined = " ".join(s for _, s in pending)
        if _statement_complete(joined):
            process(joined, [i for i, _ in pending])
            pending = []
    if pending:
        process(" ".join(s for _, s in pending), [i for i, _ in pending])
    return contexts


def _info_for(registry: dict[str, ArchetypeInfo], *, class_name: str | None,
              context: tuple[str, ...] | None, file: str,
              line: int) -> ArchetypeInfo:
    if class_name is not None:
        if class_name in registry:
            return registry[class_name]
        for info in registry.values():
            if info.name == class_name:
                return info
        raise UnknownClass(f"no archetype named {class_name!r}",
                           file=file, line=line)
    if context is None:
        raise AmbiguousClass(
            "directive outside any class body needs an explicit class name",
            file=file, line=line)
    qualified = "::".join(context)
    if qualified in registry:
        return registry[qualified]
    for info in registry.values():
        if info.name == context[-1]:
            return info
    raise UnknownClass(f"class {qualified!r} carries no accumulated state",
                       file=file, line=line)


def generate(original_source: str, registry: dict[str, ArchetypeInfo], *,
             filename: str = "<source>") -> str:
    """Replace code-generation directives; all other lines pass through."""
    lines = original_source.split("\n")
    contexts = _line_contexts(lines)
    out: list[str] = []
    for index, raw in enumerate(lines):
        stripped = raw.strip()
        if not stripped.startswith("#") or _PRAGMA_RE.match(stripped) is None:
            out.append(raw)
            continue
        directive = parse_directive(stripped)
        if directive.kind in ("var", "note", "exec"):
            out.append(raw)
            continue
        info = _info_for(registry, class_name=directive.class_name,
                         context=contexts[index], file=filename,
                         line=index + 1)
        out.append(gen_block(directive, info))
    return "\n".join(out)


def preprocess(source: str, include_resolver: IncludeResolver = None,
               predefines=None, *, filename: str = "<source>") -> str:
    """All three passes over one translation unit."""
    normalized = normalize(source, include_resolver, predefines,
                           filename=filename)
    registry = accumulate(normalized)
    return generate(source, registry, filename=filename)
