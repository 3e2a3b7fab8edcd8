"""Schema generation, master-schema assembly, and input validation.

Schemas are RELAX NG pattern trees restricted to what the generator emits:
``element``, ``data``, ``text``, ``optional``, ``interleave``, ``choice``,
``oneOrMore``, ``group``, and ``grammar``/``start``/``define``/``ref``.

Validation matches documents against patterns with Brzozowski derivatives:
the residual pattern after consuming one child node is computed node by
node, and a sequence is accepted when the final residual is nullable.  The
pattern algebra is finite and every derivative strictly consumes input, so
matching always terminates.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .accumulator import ArchetypeInfo, StateVar
from .errors import DuplicateArchetypeName, SchemaError, UnmappableType
from .typesystem import CanonicalType
from .xmlkit import XmlNode, parse_xml, render_xml

XSD_TYPE_MAP = {
    "bool": "boolean",
    "int": "int",
    "float": "float",
    "double": "double",
    "std::string": "string",
}

_INT_LEXICAL_RE = re.compile(r"^[+-]?\d+$")
_DECIMAL_LEXICAL_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")

SUMMARY_LINE = " ERROR(core  ):Document failed schema validation"


@dataclass(frozen=True)
class Rng:
    """One RELAX NG pattern node.

    ``name`` holds the element/ref/define name or the data type; children
    of an element or define form an implicit sequence.
    """

    kind: str
    name: str = ""
    children: tuple["Rng", ...] = ()


NOT_ALLOWED = Rng("notAllowed")
EMPTY = Rng("empty")


def element(name: str, *children: Rng) -> Rng:
    return Rng("element", name, children)


def data(type_name: str) -> Rng:
    return Rng("data", type_name)


def text() -> Rng:
    return Rng("text")


def optional(*children: Rng) -> Rng:
    return Rng("optional", children=children)


def interleave(*children: Rng) -> Rng:
    return Rng("interleave", children=children)


def choice(*children: Rng) -> Rng:
    return Rng("choice", children=children)


def one_or_more(*children: Rng) -> Rng:
    return Rng("oneOrMore", children=children)


def group(*children: Rng) -> Rng:
    return Rng("group", children=children)


def ref(name: str) -> Rng:
    return Rng("ref", name)


def define(name: str, *children: Rng) -> Rng:
    return Rng("define", name, children)


def start(*children: Rng) -> Rng:
    return Rng("start", children=children)


def grammar(*children: Rng) -> Rng:
    return Rng("grammar", children=children)


@dataclass(frozen=True)
class ValidationError:
    """One failed check, pointing at the offending element."""

    line: int
    element: str
    message: str


# -- schema generation ----------------------------------------------------------

def _scalar_pattern(elem_name: str, t: CanonicalType, schematype) -> Rng:
    xsd = schematype if isinstance(schematype, str) else XSD_TYPE_MAP.get(t.name)
    if xsd is None:
        raise UnmappableType(
            f"no schema datatype for {t}; give a 'schematype' or 'schema' "
            "annotation")
    return element(elem_name, data(xsd))


def _type_pattern(elem_name: str, t: CanonicalType, schematype) -> Rng:
    if not t.params:
        return _scalar_pattern(elem_name, t, schematype)
    if t.name in ("std::vector", "std::set", "std::list"):
        return element(elem_name, one_or_more(
            _type_pattern("val", t.params[0], schematype)))
    if t.name == "std::map":
        key_st, val_st = _split_schematype(schematype)
        return element(elem_name, one_or_more(element(
            "item",
            _type_pattern("key", t.params[0], key_st),
            _type_pattern("val", t.params[1], val_st))))
    if t.name == "std::pair":
        first_st, second_st = _split_schematype(schematype)
        return element(elem_name,
                       _type_pattern("first", t.params[0], first_st),
                       _type_pattern("second", t.params[1], second_st))
    raise UnmappableType(f"no schema mapping for template {t.name}")


def _split_schematype(schematype):
    if isinstance(schematype, list) and len(schematype) == 2:
        return schematype[0], schematype[1]
    return None, None


def _var_pattern(var: StateVar) -> Rng:
    override = var.annotation.get("schema")
    if override is not None:
        if not isinstance(override, str):
            raise SchemaError(
                f"schema override for {var.name!r} must be a string")
        pattern = parse_rng(override)
    else:
        pattern = _type_pattern(var.name, var.type,
                                var.annotation.get("schematype"))
    if "default" in var.annotation and pattern.kind != "optional":
        pattern = optional(pattern)
    return pattern


def build_archetype_schema(info: ArchetypeInfo) -> Rng:
    """Element named after the class, wrapping one pattern per state var."""
    return element(info.name, interleave(
        *[_var_pattern(var) for var in info.state_vars]))


def assemble_master(schemas: list[Rng]) -> Rng:
    """Combine per-archetype schemas into the simulation grammar.

    The facility block admits one or more facilities, each with a name, an
    optional lifetime, and a config choosing among the installed archetypes.
    """
    if not schemas:
        raise SchemaError("master schema needs at least one archetype schema")
    names: list[str] = []
    for node in schemas:
        if node.kind != "element" or not node.name:
            raise SchemaError("archetype schemas must be named elements")
        if node.name in names:
            raise DuplicateArchetypeName(f"duplicate archetype {node.name!r}")
        names.append(node.name)
    facility_block = one_or_more(element(
        "facility",
        element("name", text()),
        optional(element("lifetime", data("nonNegativeInteger"))),
        element("config", choice(*[ref(name) for name in names]))))
    defines = [define(node.name, node) for node in schemas]
    return grammar(start(facility_block), *defines)


# -- rendering and parsing ------------------------------------------------------------

def _rng_to_xml(node: Rng) -> XmlNode:
    children = [_rng_to_xml(child) for child in node.children]
    if node.kind == "element":
        return XmlNode("element", {"name": node.name}, children)
    if node.kind == "data":
        return XmlNode("data", {"type": node.name})
    if node.kind in ("ref", "define"):
        return XmlNode(node.kind, {"name": node.name}, children)
    if node.kind in ("text", "empty", "notAllowed", "optional", "interleave",
                     "choice", "oneOrMore", "group", "start", "grammar"):
        return XmlNode(node.kind, {}, children)
    raise SchemaError(f"cannot render pattern kind {node.kind!r}")


def _xml_to_rng(node: XmlNode) -> Rng:
    if any(isinstance(c, str) for c in node.children):
        raise SchemaError(f"unexpected text inside <{node.name}>")
    children = tuple(_xml_to_rng(c) for c in node.child_elements())
    if node.name == "element":
        if "name" not in node.attrs:
            raise SchemaError("<element> needs a name attribute")
        return Rng("element", node.attrs["name"], children)
    if node.name == "data":
        if "type" not in node.attrs:
            raise SchemaError("<data> needs a type attribute")
        return Rng("data", node.attrs["type"])
    if node.name in ("ref", "define"):
        if "name" not in node.attrs:
            raise SchemaError(f"<{node.name}> needs a name attribute")
        return Rng(node.name, node.attrs["name"], children)
    if node.name in ("text", "empty", "notAllowed", "optional", "interleave",
                     "choice", "oneOrMore", "group", "start", "grammar"):
        return Rng(node.name, children=children)
    raise SchemaError(f"unsupported schema construct <{node.name}>")


def render_rng(node: Rng, indent: int = 2) -> str:
    """Schema text with two-space nesting."""
    return render_xml(_rng_to_xml(node), indent=indent)


def rng_lines(node: Rng, indent: int = 2) -> list[str]:
    return render_rng(node, indent=indent).splitlines()


def parse_rng(source: str) -> Rng:
    """Inverse of :func:`render_rng` on the supported subset."""
    return _xml_to_rng(parse_xml(source))


# -- validation ------------------------------------------------------------------------

def _datatype_ok(type_name: str, value: str) -> bool:
    v = value.strip()
    if type_name == "boolean":
        return v in ("true", "false", "1", "0")
    if type_name in ("int", "integer", "long"):
        return _INT_LEXICAL_RE.match(v) is not None
    if type_name == "nonNegativeInteger":
        return _INT_LEXICAL_RE.match(v) is not None and int(v) >= 0
    if type_name == "positiveInteger":
        return _INT_LEXICAL_RE.match(v) is not None and int(v) > 0
    if type_name in ("float", "double", "decimal"):
        return _DECIMAL_LEXICAL_RE.match(v) is not None
    # string, token, and anything unrecognized pass lexically
    return True


def _group_of(children: tuple[Rng, ...]) -> Rng:
    if not children:
        return EMPTY
    if len(children) == 1:
        return children[0]
    return Rng("group", children=children)


def _make_group(first: Rng, rest: Rng) -> Rng:
    if first.kind == "notAllowed" or rest.kind == "notAllowed":
        return NOT_ALLOWED
    if first.kind == "empty":
        return rest
    if rest.kind == "empty":
        return first
    return Rng("group", children=(first, rest))


def _make_choice(options: list[Rng]) -> Rng:
    seen: list[Rng] = []
    for option in options:
        if option.kind == "notAllowed" or option in seen:
            continue
        seen.append(option)
    if not seen:
        return NOT_ALLOWED
    if len(seen) == 1:
        return seen[0]
    return Rng("choice", children=tuple(seen))


class _Matcher:
    """Derivative-based matching over the supported pattern subset."""

    def __init__(self, defines: dict[str, Rng]) -> None:
        self.defines = defines

    def _resolve(self, name: str) -> Rng:
        if name not in self.defines:
            raise SchemaError(f"unresolvable ref {name!r}")
        return self.defines[name]

    def nullable(self, p: Rng) -> bool:
        kind = p.kind
        if kind in ("empty", "text", "optional"):
            return True
        if kind in ("element", "data", "notAllowed"):
            return False
        if kind in ("group", "interleave"):
            return all(self.nullable(c) for c in p.children)
        if kind == "choice":
            return any(self.nullable(c) for c in p.children)
        if kind == "oneOrMore":
            return self.nullable(_group_of(p.children))
        if kind == "ref":
            return self.nullable(self._resolve(p.name))
        raise SchemaError(f"cannot match pattern kind {p.kind!r}")

    def deriv(self, p: Rng, node) -> Rng:
        kind = p.kind
        if kind == "element":
            if isinstance(node, XmlNode) and node.name == p.name \
                    and self.content_matches(p, node):
                return EMPTY
            return NOT_ALLOWED
        if kind == "data":
            if isinstance(node, str) and _datatype_ok(p.name, node):
                return EMPTY
            return NOT_ALLOWED
        if kind == "text":
            return p if isinstance(node, str) else NOT_ALLOWED
        if kind in ("empty", "notAllowed"):
            return NOT_ALLOWED
        if kind == "optional":
            return self.deriv(_group_of(p.children), node)
        if kind == "group":
            first, rest = p.children[0], _group_of(p.children[1:])
            options = [_make_group(self.deriv(first, node), rest)]
            if self.nullable(first):
                options.append(self.deriv(rest, node))
            return _make_choice(options)
        if kind == "choice":
            return _make_choice([self.deriv(c, node) for c in p.children])
        if kind == "interleave":
            options = []
            for i, child in enumerate(p.children):
                d = self.deriv(child, node)
                if d.kind == "notAllowed":
                    continue
                parts = list(p.children)
                parts[i] = d
                remaining = tuple(part for part in parts if part.kind != "empty")
                if not remaining:
                    options.append(EMPTY)
                elif len(remaining) == 1:
                    options.append(remaining[0])
                else:
                    options.append(Rng("interleave", children=remaining))
            return _make_choice(options)
        if kind == "oneOrMore":
            body = _group_of(p.children)
            d = self.deriv(body, node)
            return _make_group(d, _make_choice([p, EMPTY]))
        if kind == "ref":
            return self.deriv(self._resolve(p.name), node)
        raise SchemaError(f"cannot match pattern kind {p.kind!r}")

    def contains_data(self, p: Rng) -> bool:
        if p.kind == "data":
            return True
        if p.kind == "ref":
            return self.contains_data(self._resolve(p.name))
        if p.kind == "element":
            return False
        return any(self.contains_data(c) for c in p.children)

    def _content_sequence(self, p: Rng, node: XmlNode) -> list:
        if not node.children and self.contains_data(p):
            return [""]  # an empty element still offers its (empty) value
        return node.children

    def content_matches(self, elem_pattern: Rng, node: XmlNode) -> bool:
        content = _group_of(elem_pattern.children)
        return self.matches_sequence(content, self._content_sequence(content, node))

    def matches_sequence(self, p: Rng, nodes: list) -> bool:
        for node in nodes:
            p = self.deriv(p, node)
            if p.kind == "notAllowed":
                return False
        return self.nullable(p)

    # -- failure diagnosis ---------------------------------------------------

    def startable_elements(self, p: Rng, out: dict[str, Rng] | None = None):
        if out is None:
            out = {}
        kind = p.kind
        if kind == "element":
            out.setdefault(p.name, p)
        elif kind == "group":
            self.startable_elements(p.children[0], out)
            if self.nullable(p.children[0]):
                self.startable_elements(_group_of(p.children[1:]), out)
        elif kind in ("choice", "interleave", "optional", "oneOrMore"):
            for child in p.children:
                self.startable_elements(child, out)
        elif kind == "ref":
            self.startable_elements(self._resolve(p.name), out)
        return out

    def required_elements(self, p: Rng) -> set[str]:
        """Element names that must still appear for ``p`` to become nullable."""
        kind = p.kind
        if kind == "element":
            return {p.name}
        if kind in ("group", "interleave"):
            out: set[str] = set()
            for child in p.children:
                out |= self.required_elements(child)
            return out
        if kind == "choice":
            branches = [self.required_elements(c) for c in p.children
                        if not self.nullable(c)]
            if not branches or any(self.nullable(c) for c in p.children):
                return set()
            common = set.intersection(*branches)
            return common if common else branches[0]
        if kind == "oneOrMore":
            return self.required_elements(_group_of(p.children))
        if kind == "ref":
            return self.required_elements(self._resolve(p.name))
        return set()

    def expected_datatypes(self, p: Rng, out: list[str] | None = None):
        if out is None:
            out = []
        kind = p.kind
        if kind == "data":
            if p.name not in out:
                out.append(p.name)
        elif kind == "group":
            self.expected_datatypes(p.children[0], out)
            if self.nullable(p.children[0]):
                self.expected_datatypes(_group_of(p.children[1:]), out)
        elif kind in ("choice", "interleave", "optional", "oneOrMore"):
            for child in p.children:
                self.expected_datatypes(child, out)
        elif kind == "ref":
            self.expected_datatypes(self._resolve(p.name), out)
        return out

    def diagnose(self, content: Rng, parent: XmlNode,
                 errors: list[ValidationError]) -> None:
        current = content
        for node in self._content_sequence(content, parent):
            d = self.deriv(current, node)
            if d.kind != "notAllowed":
                current = d
                continue
            if isinstance(node, str):
                expected = self.expected_datatypes(current)
                if expected:
                    datatype = expected[0]
                    errors.append(ValidationError(
                        parent.line, parent.name,
                        f"Type {datatype} doesn't allow value '{node}'"))
                    errors.append(ValidationError(
                        parent.line, parent.name,
                        f"Error validating datatype {datatype}"))
                    errors.append(ValidationError(
                        parent.line, parent.name,
                        f"Element {parent.name} failed to validate content"))
                else:
                    errors.append(ValidationError(
                        parent.line, parent.name,
                        f"Did not expect text content in element {parent.name}"))
                return
            startable = self.startable_elements(current)
            if node.name in startable:
                before = len(errors)
                self.diagnose(_group_of(startable[node.name].children),
                              node, errors)
                if len(errors) == before:
                    errors.append(ValidationError(
                        node.line, node.name,
                        f"Element {node.name} failed to validate content"))
                return
            errors.append(ValidationError(
                node.line, parent.name,
                f"Did not expect element {node.name}"))
            return
        if not self.nullable(current):
            names = sorted(self.required_elements(current)) \
                or sorted(self.startable_elements(current))
            what = names[0] if names else "content"
            errors.append(ValidationError(
                parent.line, parent.name,
                f"Expecting an element {what}, got nothing"))


def _split_grammar(schema: Rng) -> tuple[Rng, dict[str, Rng]]:
    if schema.kind != "grammar":
        return schema, {}
    start_pattern = None
    defines: dict[str, Rng] = {}
    for child in schema.children:
        if child.kind == "start":
            start_pattern = _group_of(child.children)
        elif child.kind == "define":
            defines[child.name] = _group_of(child.children)
        else:
            raise SchemaError(f"unexpected {child.kind!r} inside grammar")
    if start_pattern is None:
        raise SchemaError("grammar has no start pattern")
    return start_pattern, defines


def validate(doc: XmlNode, schema: Rng) -> list[ValidationError]:
    """Match a document against a schema; an empty list means it validates."""
    start_pattern, defines = _split_grammar(schema)
    matcher = _Matcher(defines)
    virtual_root = XmlNode("document", children=[doc], line=doc.line)
    if matcher.matches_sequence(start_pattern, [doc]):
        return []
    errors: list[ValidationError] = []
    matcher.diagnose(start_pattern, virtual_root, errors)
    if not errors:
        errors.append(ValidationError(
            doc.line, doc.name, f"Element {doc.name} failed to validate content"))
    return errors


def format_validation_errors(errors: list[ValidationError]) -> str:
    """The libxml-style report: one row per error plus the summary line."""
    rows = [f"Entity: line {e.line}: element {e.element}: "
            f"Relax-NG validity error : {e.message}" for e in errors]
    rows.append(SUMMARY_LINE)
    return "\n".join(rows)
