import json
import random

import pytest

from archpp.annotations import (
    default_compatible,
    exec_statements,
    finalize_archetype,
    finalize_var,
    parse_annotation_literal,
    registry_lookup,
    render_json,
)
from archpp.errors import (
    AnnotationError,
    AnnotationSyntaxError,
    DefaultTypeMismatch,
    NotAnObject,
    ReadOnlyKeyViolation,
    ShapeRankMismatch,
    UnknownName,
)
from archpp.typesystem import CanonicalType, canonicalize

FLOAT = CanonicalType("float")
BOOL = CanonicalType("bool")
INT = CanonicalType("int")


# -- literal parsing -----------------------------------------------------------

def test_parse_flux_annotation():
    value = parse_annotation_literal('{"default": 42.0, "units": "n/cm2/s"}')
    assert value == {"default": 42.0, "units": "n/cm2/s"}
    assert isinstance(value["default"], float)


def test_parse_empty_object():
    assert parse_annotation_literal("{}") == {}


def test_parse_with_env_name():
    # a plain Python interpreter is the oracle for the literal subset
    text = "{'n': C}"
    expected = eval(text, {"C": 3})
    assert parse_annotation_literal(text, {"C": 3}) == expected


def test_parse_scientific_float():
    value = parse_annotation_literal("{'default': 4e14}")
    assert value == {"default": 4e14}
    assert isinstance(value["default"], float)


def test_parse_operators_match_python():
    for text in ("{'n': 2 + 3 * 4}", "{'s': 'ab' * 2}", "{'s': 'a' + 'b'}",
                 "{'x': [1, -1]}", "{'neg': -2.5}"):
        assert parse_annotation_literal(text) == eval(text)


def test_parse_errors():
    with pytest.raises(AnnotationSyntaxError):
        parse_annotation_literal("{'a': 1")
    with pytest.raises(AnnotationSyntaxError):
        parse_annotation_literal("{'a': open('x')}")
    with pytest.raises(AnnotationSyntaxError):
        parse_annotation_literal("{'a': 'x' + 1}")
    with pytest.raises(AnnotationSyntaxError):
        parse_annotation_literal("{1: 'a'}")
    with pytest.raises(UnknownName):
        parse_annotation_literal("{'a': missing}")
    with pytest.raises(NotAnObject):
        parse_annotation_literal("[1, 2]")


# -- exec directives --------------------------------------------------------------

def test_exec_binds_names_for_later_literals():
    env = exec_statements("n_default = 7", {})
    assert parse_annotation_literal("{'default': n_default}", env) == {"default": 7}


def test_exec_empty_body():
    env = {"a": 1}
    assert exec_statements("", env) == {"a": 1}


def test_exec_multiple_statements_and_references():
    env = exec_statements("a = 2; b = a * 3", {})
    assert env == {"a": 2, "b": 6}


def test_exec_rejects_imports_and_calls():
    with pytest.raises(AnnotationSyntaxError):
        exec_statements("import os", {})
    with pytest.raises(AnnotationSyntaxError):
        exec_statements("x = open('f')", {})


# -- canonical JSON -----------------------------------------------------------------

def test_render_json_examples():
    assert render_json({"doc": "Are we operating?"}) == '{"doc":"Are we operating?"}'
    assert render_json({}) == "{}"
    assert render_json({"x": [1, -1]}) == '{"x":[1,-1]}'


def test_render_json_float_shortest_roundtrip():
    assert render_json(4e14) == "400000000000000.0"
    assert render_json(0.1) == "0.1"


def random_meta_value(rng, depth=0):
    kind = rng.randint(0, 6 if depth < 3 else 4)
    if kind == 0:
        return None
    if kind == 1:
        return rng.random() < 0.5
    if kind == 2:
        return rng.randint(-10**6, 10**6)
    if kind == 3:
        return rng.choice([0.5, -1.25, 4e14, 1e-9, 123.456])
    if kind == 4:
        return "".join(rng.choice('abc"\\\n xyz') for _ in range(rng.randint(0, 8)))
    if kind == 5:
        return [random_meta_value(rng, depth + 1) for _ in range(rng.randint(0, 4))]
    return {f"k{i}": random_meta_value(rng, depth + 1)
            for i in range(rng.randint(0, 4))}


def test_render_json_roundtrip_property():
    rng = random.Random(2024)
    for _ in range(300):
        value = random_meta_value(rng)
        assert json.loads(render_json(value)) == value


# -- finalize_var ---------------------------------------------------------------------

def test_finalize_var_merges_read_only_keys():
    out = finalize_var({"default": 1000, "units": "MWe"}, FLOAT, 1)
    assert out == {"default": 1000, "units": "MWe", "type": "float", "index": 1}
    assert list(out) == ["default", "units", "type", "index"]


def test_finalize_var_empty_user():
    assert finalize_var({}, BOOL, 2) == {"type": "bool", "index": 2}


def test_finalize_var_rejects_read_only():
    with pytest.raises(ReadOnlyKeyViolation):
        finalize_var({"type": "int"}, INT, 0)
    with pytest.raises(ReadOnlyKeyViolation):
        finalize_var({"index": 3}, INT, 0)


def test_finalize_var_shape_checks():
    string = CanonicalType("std::string")
    assert finalize_var({"shape": [5]}, string, 0)["shape"] == [5]
    vec = canonicalize("std::vector<std::string>")
    assert finalize_var({"shape": [10, -1]}, vec, 0)["shape"] == [10, -1]
    with pytest.raises(ShapeRankMismatch):
        finalize_var({"shape": [5]}, CanonicalType("double"), 0)
    with pytest.raises(AnnotationError):
        finalize_var({"shape": [0]}, string, 0)
    with pytest.raises(AnnotationError):
        finalize_var({"shape": "5"}, string, 0)


def test_finalize_var_userlevel_range():
    assert finalize_var({"userlevel": 10}, INT, 0)["userlevel"] == 10
    with pytest.raises(AnnotationError):
        finalize_var({"userlevel": 11}, INT, 0)
    with pytest.raises(AnnotationError):
        finalize_var({"userlevel": "easy"}, INT, 0)


def test_finalize_var_default_type_checks():
    with pytest.raises(DefaultTypeMismatch):
        finalize_var({"default": "x"}, INT, 0)
    with pytest.raises(DefaultTypeMismatch):
        finalize_var({"default": 1.5}, INT, 0)
    # int promotes to float-typed variables
    assert finalize_var({"default": 1000}, FLOAT, 0)["default"] == 1000
    with pytest.raises(DefaultTypeMismatch):
        finalize_var({"default": True}, INT, 0)


def test_finalize_var_idempotent_after_strip():
    out = finalize_var({"default": 4e14, "units": "n/cm2/s"}, FLOAT, 4)
    stripped = {k: v for k, v in out.items() if k not in ("type", "index")}
    assert finalize_var(stripped, FLOAT, 4) == out


def test_default_compatible_containers():
    vec_int = canonicalize("std::vector<int>")
    assert default_compatible(vec_int, [1, 2, 3])
    assert not default_compatible(vec_int, [1, "a"])
    pair = canonicalize("std::pair<int, std::string>")
    assert default_compatible(pair, [1, "a"])
    assert not default_compatible(pair, [1])
    map_ss = canonicalize("std::map<std::string, double>")
    assert default_compatible(map_ss, {"a": 1.0})
    assert default_compatible(map_ss, [["a", 1.0]])
    map_is = canonicalize("std::map<int, std::string>")
    assert not default_compatible(map_is, {"a": "b"})
    assert default_compatible(map_is, [[1, "b"]])


# -- finalize_archetype -----------------------------------------------------------------

def test_finalize_archetype_layout():
    out = finalize_archetype({"doc": "d"}, name="Reactor", entity="facility",
                             parents=["cyclus::Facility"],
                             all_parents=["cyclus::Facility"],
                             vars={"flux": {"type": "double", "index": 0}})
    assert list(out) == ["name", "entity", "parents", "all_parents", "doc", "vars"]
    assert out["entity"] == "facility"


def test_finalize_archetype_rejects_read_only():
    for key in ("name", "entity", "parents", "all_parents", "vars"):
        with pytest.raises(ReadOnlyKeyViolation):
            finalize_archetype({key: "x"}, name="A", entity="unknown",
                               parents=[], all_parents=[], vars={})


# -- key registry ----------------------------------------------------------------------

def test_registry_examples():
    info = registry_lookup("schematype", "var")
    assert info.reserved and not info.read_only
    info = registry_lookup("parents", "archetype")
    assert info.reserved and info.read_only
    assert not registry_lookup("favorite_color", "var").reserved


def test_registry_covers_all_special_keys():
    var_read_only = {"type", "index"}
    var_writable = {"default", "shape", "doc", "tooltip", "units", "userlevel",
                    "schematype", "initfromcopy", "initfromdb", "infiletodb",
                    "schema", "snapshot", "snapshotinv", "initinv"}
    for key in var_read_only:
        info = registry_lookup(key, "var")
        assert info.reserved and info.read_only and info.description
    for key in var_writable:
        info = registry_lookup(key, "var")
        assert info.reserved and not info.read_only and info.description

    arch_read_only = {"vars", "name", "entity", "parents", "all_parents"}
    arch_writable = {"doc", "tooltip", "userlevel"}
    for key in arch_read_only:
        info = registry_lookup(key, "archetype")
        assert info.reserved and info.read_only and info.description
    for key in arch_writable:
        info = registry_lookup(key, "archetype")
        assert info.reserved and not info.read_only and info.description
