"""Canonical state-variable types and the database type table.

A canonical type is the unique spelling of a C++ type as the rest of the
toolchain understands it: every alias resolved away, every name fully
namespace-qualified, template parameters recursively canonical, and no pointer
or reference decoration anywhere.  Leaves render as plain strings and
templates as nested lists (``['std::map', 'int', ['std::vector', 'double']]``),
which is the form embedded in generated metadata.

The database type table assigns a stable integer id and an uppercase name to
every storable type flavor.  A type of rank ``r`` (its number of
variable-length dimensions: one per string and one per variable-length
container, counted recursively) owns exactly ``2**r`` entries, one per choice
of which dimensions are stored variable-length; chosen slots gain a ``VL_``
prefix at their position in the name.  Ids are assigned by one fixed
enumeration of the registered universe:

* the seven element types (``bool``, ``int``, ``float``, ``double``,
  ``std::string``, ``cyclus::Blob``, ``boost::uuids::uuid``), strings
  contributing their two flavors;
* ``std::vector``, ``std::set``, ``std::list`` of each element, flavors
  ordered by their slot bitmask with the outermost slot as the low bit;
* ``std::pair`` and ``std::map`` with first/key position ranging over
  ``int``, ``STRING`` and ``VL_STRING`` in that order, and second/value
  position ranging over the elements.

The table ships as ``dbtypes.tsv`` next to this module (one tab-separated
record per line: id, name, C++ spelling, rank, slot mask) and is loaded at
startup; :func:`generate_table` reproduces it from scratch.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .errors import (
    AliasCycle,
    NotFound,
    PointerOrReference,
    UnknownTemplate,
    UnregisteredType,
    UnresolvableName,
)

TABLE_FILE = "dbtypes.tsv"
TABLE_VERSION = 1

PRIMITIVES = frozenset({"bool", "int", "float", "double", "std::string"})
KNOWN_CLASSES = frozenset({
    "cyclus::Blob",
    "boost::uuids::uuid",
    "cyclus::toolkit::ResBuff",
    "cyclus::toolkit::ResMap",
})
TEMPLATES = {
    "std::vector": 1,
    "std::set": 1,
    "std::list": 1,
    "std::pair": 2,
    "std::map": 2,
}

# Variable-length contributors: each adds one rank dimension.
VL_LEAVES = frozenset({"std::string"})
VL_TEMPLATES = frozenset({"std::vector", "std::set", "std::list", "std::map"})

_MAX_ALIAS_DEPTH = 64


@dataclass(frozen=True)
class CanonicalType:
    """Alias-free, fully qualified type: a leaf name or a template with params."""

    name: str
    params: tuple["CanonicalType", ...] = ()

    def __post_init__(self) -> None:
        if not self.name or any(ch.isspace() for ch in self.name):
            raise ValueError(f"bad canonical type name {self.name!r}")

    @property
    def is_template(self) -> bool:
        return bool(self.params)

    def json_form(self) -> str | list:
        """Nested-list form: leaves are strings, templates are lists."""
        if not self.params:
            return self.name
        return [self.name, *(p.json_form() for p in self.params)]

    def __str__(self) -> str:
        return cpp_spelling(self)


def cpp_spelling(t: CanonicalType) -> str:
    """C++ source spelling; consecutive closing angle brackets get a space."""
    if not t.params:
        return t.name
    inner = ", ".join(cpp_spelling(p) for p in t.params)
    if inner.endswith(">"):
        inner += " "
    return f"{t.name}<{inner}>"


class TypeScope:
    """Alias edges plus namespace/class context for one pass over one file.

    Aliases are stored under their fully qualified name so that a typedef
    made inside a namespace is visible there (and, qualified, from outside)
    but never leaks into unqualified lookup elsewhere.
    """

    def __init__(self) -> None:
        self.aliases: dict[str, str] = {}
        self.namespaces: list[str] = []
        self.classes: list[str] = []
        self.using_namespaces: list[str] = []
        self.namespace_aliases: dict[str, str] = {}

    # -- scope bookkeeping --------------------------------------------------

    def path(self) -> tuple[str, ...]:
        return tuple(self.namespaces + self.classes)

    def push_namespace(self, name: str) -> None:
        self.namespaces.append(name or "<anonymous>")

    def pop_namespace(self) -> None:
        self.namespaces.pop()

    def push_class(self, name: str) -> None:
        self.classes.append(name)

    def pop_class(self) -> None:
        self.classes.pop()

    def add_using_namespace(self, ns: str) -> None:
        self.using_namespaces.append(ns)

    def using_mark(self) -> int:
        return len(self.using_namespaces)

    def truncate_using(self, mark: int) -> None:
        del self.using_namespaces[mark:]

    def add_namespace_alias(self, name: str, target: str) -> None:
        self.namespace_aliases[name] = target

    # -- alias edges ----------------------------------------------------------

    def add_alias(self, name: str, target: str) -> None:
        """Record ``name -> target`` from a typedef/using, rejecting cycles."""
        key = "::".join((*self.path(), name))
        self.aliases[key] = target.strip()
        try:
            self._walk_chain(key)
        except AliasCycle:
            del self.aliases[key]
            raise

    def alias_edge(self, name: str) -> tuple[str, str] | None:
        for cand in self.candidates(name):
            if cand in self.aliases:
                return cand, self.aliases[cand]
        return None

    def _walk_chain(self, start_key: str) -> None:
        seen = {start_key}
        current = self.aliases[start_key]
        for _ in range(_MAX_ALIAS_DEPTH):
            edge = self.alias_edge(current)
            if edge is None:
                return
            key, target = edge
            if key in seen:
                raise AliasCycle(f"alias cycle through {key!r}")
            seen.add(key)
            current = target
        raise AliasCycle(f"alias chain from {start_key!r} does not terminate")

    # -- name lookup ------------------------------------------------------------

    def expand_namespace_alias(self, name: str) -> str:
        head, sep, rest = name.partition("::")
        for _ in range(_MAX_ALIAS_DEPTH):
            if head not in self.namespace_aliases:
                break
            head = self.namespace_aliases[head]
        return head + sep + rest if sep else head

    def candidates(self, name: str) -> list[str]:
        """Possible qualified spellings, innermost scope first."""
        name = self.expand_namespace_alias(name)
        path = list(self.path())
        out = ["::".join(path[:i] + [name]) for i in range(len(path), 0, -1)]
        out.append(name)
        out.extend(f"{ns}::{name}" for ns in self.using_namespaces)
        return out


def resolve_alias(name: str, scope: TypeScope) -> str:
    """Follow alias edges from ``name`` to a fixed point.

    Names with no edge come back unchanged; a cycle in the walked graph
    raises :class:`AliasCycle`.
    """
    seen: set[str] = set()
    current = name
    for _ in range(_MAX_ALIAS_DEPTH):
        edge = scope.alias_edge(current)
        if edge is None:
            return current
        key, target = edge
        if key in seen:
            raise AliasCycle(f"alias cycle through {key!r}")
        seen.add(key)
        current = target
    raise AliasCycle(f"alias chain from {name!r} does not terminate")


# -- parsing and canonicalization ---------------------------------------------

_TYPE_TOKEN_RE = re.compile(r"\s*(::|[A-Za-z_]\w*|[<>,])")


def _tokenize_type(text: str) -> list[str]:
    tokens: list[str] = []
    pos = 0
    while pos < len(text):
        m = _TYPE_TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip():
                raise UnresolvableName(f"cannot parse type text {text!r}")
            break
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


class _TypeParser:
    """Recursive-descent parser for ``name`` / ``name<param, ...>`` trees."""

    def __init__(self, text: str) -> None:
        self.text = text
        self.tokens = _tokenize_type(text)
        self.pos = 0

    def _peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _next(self) -> str:
        tok = self._peek()
        if tok is None:
            raise UnresolvableName(f"unexpected end of type text {self.text!r}")
        self.pos += 1
        return tok

    def parse(self) -> tuple[str, list]:
        node = self._parse_type()
        if self._peek() is not None:
            raise UnresolvableName(f"trailing tokens in type text {self.text!r}")
        return node

    def _parse_type(self) -> tuple[str, list]:
        name = self._parse_qualified_name()
        params: list = []
        if self._peek() == "<":
            self._next()
            params.append(self._parse_type())
            while self._peek() == ",":
                self._next()
                params.append(self._parse_type())
            if self._next() != ">":
                raise UnresolvableName(f"unbalanced template brackets in {self.text!r}")
        return name, params

    def _parse_qualified_name(self) -> str:
        parts: list[str] = []
        if self._peek() == "::":
            self._next()
        tok = self._next()
        if not tok[0].isalpha() and tok[0] != "_":
            raise UnresolvableName(f"expected a name, got {tok!r} in {self.text!r}")
        parts.append(tok)
        while self._peek() == "::":
            self._next()
            parts.append(self._parse_qualified_name_part())
        return "::".join(parts)

    def _parse_qualified_name_part(self) -> str:
        tok = self._next()
        if not tok[0].isalpha() and tok[0] != "_":
            raise UnresolvableName(f"expected a name after '::' in {self.text!r}")
        return tok


def canonicalize(type_text: str, scope: TypeScope | None = None) -> CanonicalType:
    """Return the canonical form of a declaration-position type expression."""
    if "*" in type_text or "&" in type_text:
        raise PointerOrReference(
            f"pointer/reference types are not storable: {type_text.strip()!r}")
    scope = scope if scope is not None else TypeScope()
    tree = _TypeParser(type_text).parse()
    return _resolve_tree(tree, scope, 0)


def _resolve_tree(tree: tuple[str, list], scope: TypeScope, depth: int) -> CanonicalType:
    if depth > _MAX_ALIAS_DEPTH:
        raise UnresolvableName("alias expansion too deep")
    name, params = tree
    if params:
        template = _resolve_template_name(name, scope)
        arity = TEMPLATES[template]
        if len(params) != arity:
            raise UnknownTemplate(
                f"{template} takes {arity} parameter(s), got {len(params)}")
        return CanonicalType(
            template, tuple(_resolve_tree(p, scope, depth) for p in params))
    return _resolve_leaf(name, scope, depth)


def _resolve_template_name(name: str, scope: TypeScope) -> str:
    for cand in scope.candidates(name):
        if cand in TEMPLATES:
            return cand
    raise UnknownTemplate(f"unknown template {name!r}")


def _resolve_leaf(name: str, scope: TypeScope, depth: int) -> CanonicalType:
    for cand in scope.candidates(name):
        if cand in PRIMITIVES or cand in KNOWN_CLASSES:
            return CanonicalType(cand)
        if cand in scope.aliases:
            target = scope.aliases[cand]
            return _resolve_tree(_TypeParser(target).parse(), scope, depth + 1)
    raise UnresolvableName(f"unknown type name {name!r}")


def rank(t: CanonicalType) -> int:
    """Number of variable-length dimensions, counted recursively."""
    if t.params:
        own = 1 if t.name in VL_TEMPLATES else 0
        return own + sum(rank(p) for p in t.params)
    return 1 if t.name in VL_LEAVES else 0


# -- database type table ----------------------------------------------------------

@dataclass(frozen=True)
class DbTypeEntry:
    """One storable type flavor: id, name, canonical type, rank, slot mask."""

    id: int
    name: str
    cpp: CanonicalType
    rank: int
    vl_mask: int


_LEAF_PART = {
    "bool": "BOOL",
    "int": "INT",
    "float": "FLOAT",
    "double": "DOUBLE",
    "std::string": "STRING",
    "cyclus::Blob": "BLOB",
    "boost::uuids::uuid": "UUID",
}
_TEMPLATE_PART = {
    "std::vector": "VECTOR",
    "std::set": "SET",
    "std::list": "LIST",
    "std::pair": "PAIR",
    "std::map": "MAP",
}


def variant_name(t: CanonicalType, vl_mask: int) -> str:
    """Uppercase flavor name; masked slots carry a ``VL_`` prefix in place."""
    parts: list[str] = []
    bit = 0

    def walk(node: CanonicalType) -> None:
        nonlocal bit
        if node.params:
            part = _TEMPLATE_PART[node.name]
            if node.name in VL_TEMPLATES:
                if vl_mask >> bit & 1:
                    part = "VL_" + part
                bit += 1
            parts.append(part)
            for p in node.params:
                walk(p)
        else:
            part = _LEAF_PART[node.name]
            if node.name in VL_LEAVES:
                if vl_mask >> bit & 1:
                    part = "VL_" + part
                bit += 1
            parts.append(part)

    walk(t)
    return "_".join(parts)


def _iter_flavor_order():
    """Yield ``(type, vl_mask)`` in table order (see module docstring)."""
    leaf = CanonicalType
    elements = [leaf("bool"), leaf("int"), leaf("float"), leaf("double"),
                leaf("std::string"), leaf("cyclus::Blob"),
                leaf("boost::uuids::uuid")]
    string = leaf("std::string")
    intt = leaf("int")

    for e in elements:
        for mask in range(2 ** rank(e)):
            yield e, mask

    for container in ("std::vector", "std::set", "std::list"):
        for e in elements:
            t = CanonicalType(container, (e,))
            for mask in range(2 ** rank(t)):
                yield t, mask

    # First/key position kinds: int, then the two string flavors.
    firsts = [(intt, 0), (string, 0), (string, 1)]

    for first, fmask in firsts:
        nfirst = rank(first)
        for second in elements:
            t = CanonicalType("std::pair", (first, second))
            for smask in range(2 ** rank(second)):
                yield t, fmask | (smask << nfirst)

    for key, kmask in firsts:
        nkey = rank(key)
        for value in elements:
            t = CanonicalType("std::map", (key, value))
            for vmask in range(2 ** rank(value)):
                for outer in (0, 1):
                    yield t, outer | (kmask << 1) | (vmask << (1 + nkey))


def generate_table() -> list[DbTypeEntry]:
    """Build the full enumeration from scratch, in id order."""
    entries = []
    for type_id, (t, mask) in enumerate(_iter_flavor_order()):
        entries.append(DbTypeEntry(
            id=type_id,
            name=variant_name(t, mask),
            cpp=t,
            rank=rank(t),
            vl_mask=mask,
        ))
    return entries


def format_table(entries: list[DbTypeEntry]) -> str:
    lines = [f"# archpp database types, format version {TABLE_VERSION}"]
    for e in entries:
        lines.append(f"{e.id}\t{e.name}\t{cpp_spelling(e.cpp)}\t{e.rank}\t{e.vl_mask}")
    return "\n".join(lines) + "\n"


def parse_table(text: str) -> list[DbTypeEntry]:
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 5:
            raise ValueError(f"bad type table record on line {lineno}: {line!r}")
        type_id, name, cpp_text, rank_text, mask_text = fields
        entries.append(DbTypeEntry(
            id=int(type_id),
            name=name,
            cpp=canonicalize(cpp_text),
            rank=int(rank_text),
            vl_mask=int(mask_text),
        ))
    return entries


@lru_cache(maxsize=1)
def _table() -> tuple[tuple[DbTypeEntry, ...], dict, dict, dict]:
    text = resources.files(__package__).joinpath(TABLE_FILE).read_text("utf-8")
    entries = tuple(parse_table(text))
    by_id = {e.id: e for e in entries}
    by_name = {e.name: e for e in entries}
    by_cpp: dict[CanonicalType, list[DbTypeEntry]] = {}
    for e in entries:
        by_cpp.setdefault(e.cpp, []).append(e)
    return entries, by_id, by_name, by_cpp


def table_entries() -> tuple[DbTypeEntry, ...]:
    """Every shipped entry, in id order."""
    return _table()[0]


def lookup(id_or_name: int | str) -> DbTypeEntry:
    """Exact-match retrieval from the shipped table by id or name."""
    _, by_id, by_name, _ = _table()
    if isinstance(id_or_name, bool):
        raise NotFound(f"no database type with id {id_or_name!r}")
    if isinstance(id_or_name, int):
        entry = by_id.get(id_or_name)
    else:
        entry = by_name.get(id_or_name)
    if entry is None:
        raise NotFound(f"no database type {id_or_name!r}")
    return entry


def db_variants(t: CanonicalType) -> list[DbTypeEntry]:
    """All ``2**rank`` flavors of a registered type, in id order."""
    variants = _table()[3].get(t)
    if not variants:
        raise UnregisteredType(f"type {cpp_spelling(t)!r} has no table entries")
    return sorted(variants, key=lambda e: e.id)
