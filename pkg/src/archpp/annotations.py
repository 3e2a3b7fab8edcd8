"""Metadata value model, annotation-literal evaluation, and key registries.

Metadata values are plain Python data limited to the JSON universe: ``None``,
booleans, ints, floats, strings, lists, and insertion-ordered string-keyed
dicts.  Annotation arguments are written as Python dictionary literals; they
are evaluated here under a restricted grammar (literals, names bound by exec
directives, unary minus, and ``+``/``*`` on numbers and strings) rather than
by a full interpreter.
"""

from __future__ import annotations

import ast
import json
from dataclasses import dataclass
from typing import Union

from .errors import (
    AnnotationError,
    AnnotationSyntaxError,
    DefaultTypeMismatch,
    NotAnObject,
    ReadOnlyKeyViolation,
    ShapeRankMismatch,
    UnknownName,
)
from .typesystem import CanonicalType, rank

MetaValue = Union[None, bool, int, float, str, list, dict]

VAR_READ_ONLY_KEYS = ("type", "index")
ARCHETYPE_READ_ONLY_KEYS = ("name", "entity", "parents", "all_parents", "vars")
ENTITIES = ("region", "institution", "facility", "archetype", "unknown")


@dataclass(frozen=True)
class KeyInfo:
    reserved: bool
    read_only: bool
    description: str


def _reserved(description: str, read_only: bool = False) -> KeyInfo:
    return KeyInfo(reserved=True, read_only=read_only, description=description)


_VAR_REGISTRY = {
    "type": _reserved("C++ type of the state variable, filled in by the "
                      "preprocessor.", read_only=True),
    "index": _reserved("Zero-based declaration order of the state variable.",
                       read_only=True),
    "default": _reserved("Value used when the input file omits this variable; "
                         "must fit the variable type."),
    "shape": _reserved("Size hint per variable-length dimension; positive "
                       "entries fix a length, -1 keeps that dimension "
                       "variable."),
    "doc": _reserved("Documentation string."),
    "tooltip": _reserved("Short description for user interfaces."),
    "units": _reserved("Physical units label."),
    "userlevel": _reserved("Difficulty rating from 0 (basic) to 10 (expert) "
                           "used by interface filtering."),
    "schematype": _reserved("Schema datatype name (or list of names for "
                            "nested types) overriding the default mapping."),
    "initfromcopy": _reserved("Replacement code for this variable in the "
                              "agent-copy initializer."),
    "initfromdb": _reserved("Replacement code for this variable in the "
                            "database initializer."),
    "infiletodb": _reserved("Replacement code for input-file handling; an "
                            "object with 'read' and 'write' entries."),
    "schema": _reserved("Verbatim schema fragment replacing the generated "
                        "one for this variable."),
    "snapshot": _reserved("Replacement code for this variable in the state "
                          "snapshot writer."),
    "snapshotinv": _reserved("Replacement code for this variable in the "
                             "inventory snapshot writer."),
    "initinv": _reserved("Replacement code for this variable in the "
                         "inventory initializer."),
}

_ARCHETYPE_REGISTRY = {
    "vars": _reserved("Mapping of state-variable names to their annotations.",
                      read_only=True),
    "name": _reserved("Class name of the archetype.", read_only=True),
    "entity": _reserved("Role classification derived from superclass "
                        "ancestry: region, institution, facility, archetype, "
                        "or unknown.", read_only=True),
    "parents": _reserved("Direct superclass names in declaration order.",
                         read_only=True),
    "all_parents": _reserved("Transitive superclass closure.", read_only=True),
    "doc": _reserved("Documentation string."),
    "tooltip": _reserved("Short description for user interfaces."),
    "userlevel": _reserved("Difficulty rating from 0 (basic) to 10 (expert) "
                           "used by interface filtering."),
}

_UNRESERVED = KeyInfo(reserved=False, read_only=False, description="")


def registry_lookup(key: str, context: str) -> KeyInfo:
    """Describe a key in the var or archetype registry.

    Unknown keys are legal user metadata and come back unreserved.
    """
    if context == "var":
        return _VAR_REGISTRY.get(key, _UNRESERVED)
    if context == "archetype":
        return _ARCHETYPE_REGISTRY.get(key, _UNRESERVED)
    raise ValueError(f"unknown registry context {context!r}")


# -- restricted expression evaluation ------------------------------------------

def _is_number(value: object) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _eval_node(node: ast.AST, env: dict) -> MetaValue:
    if isinstance(node, ast.Constant):
        value = node.value
        if value is None or isinstance(value, (bool, int, float, str)):
            return value
        raise AnnotationSyntaxError(f"unsupported literal {value!r}")
    if isinstance(node, ast.Name):
        if node.id in env:
            return env[node.id]
        raise UnknownName(f"name {node.id!r} is not defined by any exec directive")
    if isinstance(node, ast.List):
        return [_eval_node(item, env) for item in node.elts]
    if isinstance(node, ast.Dict):
        out: dict[str, MetaValue] = {}
        for key_node, value_node in zip(node.keys, node.values):
            if key_node is None:
                raise AnnotationSyntaxError("'**' unpacking is not allowed")
            key = _eval_node(key_node, env)
            if not isinstance(key, str):
                raise AnnotationSyntaxError(
                    f"annotation keys must be strings, got {key!r}")
            if key in out:
                raise AnnotationSyntaxError(f"duplicate key {key!r}")
            out[key] = _eval_node(value_node, env)
        return out
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        operand = _eval_node(node.operand, env)
        if _is_number(operand):
            return -operand
        raise AnnotationSyntaxError("unary minus applies to numbers only")
    if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Mult)):
        left = _eval_node(node.left, env)
        right = _eval_node(node.right, env)
        if isinstance(node.op, ast.Add):
            if _is_number(left) and _is_number(right):
                return left + right
            if isinstance(left, str) and isinstance(right, str):
                return left + right
            raise AnnotationSyntaxError("'+' applies to two numbers or two strings")
        if _is_number(left) and _is_number(right):
            return left * right
        if isinstance(left, str) and isinstance(right, int):
            return left * right
        if isinstance(left, int) and isinstance(right, str):
            return left * right
        raise AnnotationSyntaxError("'*' applies to numbers, or a string and an int")
    raise AnnotationSyntaxError(
        f"{type(node).__name__} is outside the annotation grammar")


def parse_annotation_literal(text: str, env: dict | None = None, *,
                             require_object: bool = True) -> MetaValue:
    """Evaluate the dictionary argument of a var/note directive.

    ``env`` holds names bound by earlier exec directives.  With
    ``require_object`` (the var/note contract) a non-dict top level raises
    :class:`NotAnObject`.
    """
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise AnnotationSyntaxError(f"bad annotation literal: {exc.msg}") from None
    value = _eval_node(tree.body, env or {})
    if require_object and not isinstance(value, dict):
        raise NotAnObject(
            f"annotation must be a dictionary, got {type(value).__name__}")
    return value


def exec_statements(code: str, env: dict) -> dict:
    """Run ``name = expression`` statements, extending and returning ``env``."""
    code = code.strip()
    if not code:
        return env
    try:
        tree = ast.parse(code, mode="exec")
    except SyntaxError as exc:
        raise AnnotationSyntaxError(f"bad exec directive: {exc.msg}") from None
    for stmt in tree.body:
        if not (isinstance(stmt, ast.Assign) and len(stmt.targets) == 1
                and isinstance(stmt.targets[0], ast.Name)):
            raise AnnotationSyntaxError(
                "exec directives may only contain 'name = expression' statements")
        env[stmt.targets[0].id] = _eval_node(stmt.value, env)
    return env


# -- canonical JSON ---------------------------------------------------------------

def render_json(value: MetaValue) -> str:
    """Canonical JSON text: insertion-ordered keys, no extra whitespace."""
    return json.dumps(value, separators=(",", ":"), ensure_ascii=False)


# -- finalization -----------------------------------------------------------------

def default_compatible(var_type: CanonicalType, value: MetaValue) -> bool:
    """Whether a default value fits the variable type.

    Ints promote to float-typed variables.  Container defaults are arrays
    matched element-wise; maps additionally accept an object when the key
    type is ``std::string``.
    """
    name = var_type.name
    if not var_type.params:
        if name == "bool":
            return isinstance(value, bool)
        if name == "int":
            return isinstance(value, int) and not isinstance(value, bool)
        if name in ("float", "double"):
            return _is_number(value)
        if name in ("std::string", "cyclus::Blob", "boost::uuids::uuid"):
            return isinstance(value, str)
        return False
    if name in ("std::vector", "std::set", "std::list"):
        item = var_type.params[0]
        return (isinstance(value, list)
                and all(default_compatible(item, v) for v in value))
    if name == "std::pair":
        first, second = var_type.params
        return (isinstance(value, list) and len(value) == 2
                and default_compatible(first, value[0])
                and default_compatible(second, value[1]))
    if name == "std::map":
        key_type, value_type = var_type.params
        if isinstance(value, dict):
            return (key_type.name == "std::string"
                    and all(default_compatible(value_type, v)
                            for v in value.values()))
        pair = CanonicalType("std::pair", (key_type, value_type))
        return (isinstance(value, list)
                and all(default_compatible(pair, v) for v in value))
    return False


def _check_shape(shape: MetaValue, var_type: CanonicalType) -> None:
    if not isinstance(shape, list) or not all(
            isinstance(n, int) and not isinstance(n, bool) for n in shape):
        raise AnnotationError("shape must be a list of integers")
    if any(n == 0 or n < -1 for n in shape):
        raise AnnotationError("shape entries must be positive or -1")
    expected = rank(var_type)
    if len(shape) != expected:
        raise ShapeRankMismatch(
            f"shape has {len(shape)} entries but the type has rank {expected}")


def _check_userlevel(value: MetaValue) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value <= 10:
        raise AnnotationError("userlevel must be an integer in [0, 10]")


def finalize_var(user: MetaValue, var_type: CanonicalType, index: int) -> dict:
    """Merge a user annotation with the read-only ``type`` and ``index`` keys."""
    if not isinstance(user, dict):
        raise NotAnObject("state variable annotation must be a dictionary")
    for key in VAR_READ_ONLY_KEYS:
        if key in user:
            raise ReadOnlyKeyViolation(
                f"{key!r} is generated and cannot be set in an annotation")
    if "shape" in user:
        _check_shape(user["shape"], var_type)
    if "userlevel" in user:
        _check_userlevel(user["userlevel"])
    if "default" in user and not default_compatible(var_type, user["default"]):
        raise DefaultTypeMismatch(
            f"default {user['default']!r} does not fit type {var_type}")
    out = dict(user)
    out["type"] = var_type.json_form()
    out["index"] = index
    return out


def finalize_archetype(note: MetaValue, *, name: str, entity: str,
                       parents: list[str], all_parents: list[str],
                       vars: dict) -> dict:
    """Assemble the per-archetype annotation object.

    Read-only keys come first in their fixed order, then note keys in source
    order, with ``vars`` always last.
    """
    if not isinstance(note, dict):
        raise NotAnObject("archetype note must be a dictionary")
    for key in ARCHETYPE_READ_ONLY_KEYS:
        if key in note:
            raise ReadOnlyKeyViolation(
                f"{key!r} is generated and cannot be set in a note")
    if entity not in ENTITIES:
        raise AnnotationError(f"bad entity classification {entity!r}")
    if "userlevel" in note:
        _check_userlevel(note["userlevel"])
    out: dict = {
        "name": name,
        "entity": entity,
        "parents": list(parents),
        "all_parents": list(all_parents),
    }
    out.update(note)
    out["vars"] = vars
    return out
