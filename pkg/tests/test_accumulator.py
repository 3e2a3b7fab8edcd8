import pytest

from archpp.accumulator import (
    FILTER_ORDER,
    ArchetypeInfo,
    StateAccumulator,
    accumulate,
    classify_entity,
    iter_statements,
)
from archpp.errors import (
    DanglingDecoration,
    MalformedDirective,
    PointerOrReference,
)
from archpp.normalizer import normalize
from archpp.typesystem import CanonicalType, canonicalize


def accumulate_text(text):
    return accumulate(normalize(text, filename="test.h"))


# -- the golden reactor ------------------------------------------------------------

def test_reactor_registry(reactor_registry):
    assert list(reactor_registry) == ["Reactor"]
    info = reactor_registry["Reactor"]
    assert info.name == "Reactor"
    assert [(v.name, str(v.type), v.annotation["index"])
            for v in info.state_vars] == [
        ("flux", "double", 0),
        ("power", "float", 1),
        ("shutdown", "bool", 2),
    ]
    assert info.parents == ["cyclus::Facility"]
    assert info.all_parents == ["cyclus::Facility"]
    assert info.entity == "facility"
    assert info.state_vars[0].annotation["default"] == 4e14
    assert info.state_vars[1].annotation["units"] == "MWe"
    assert info.state_vars[2].access == "private"


def test_no_pragmas_empty_registry():
    registry = accumulate_text("class Plain {\n public:\n  int x;\n};\n")
    assert registry == {}


def test_typedef_resolution_matches_type_system():
    registry = accumulate_text(
        "class A : public cyclus::Facility {\n"
        "  typedef double real;\n"
        "#pragma cyclus var {}\n"
        "  real x;\n"
        "};\n")
    (var,) = registry["A"].state_vars
    assert var.type == canonicalize("double")


# -- filter chain mechanics ----------------------------------------------------------

def test_filter_order_matches_the_published_chain():
    assert FILTER_ORDER == (
        "ClassAndSuperclassFilter",
        "AccessFilter",
        "ExecFilter",
        "UsingNamespaceFilter",
        "NamespaceAliasFilter",
        "NamespaceFilter",
        "TypedefFilter",
        "UsingFilter",
        "LinemarkerFilter",
        "NoteDecorationFilter",
        "VarDecorationFilter",
        "VarDeclarationFilter",
        "PragmaCyclusErrorFilter",
    )


def test_apply_filters_access_example():
    acc = StateAccumulator()
    acc.feed("class A {\n")
    assert acc.apply_filters("private:") == "AccessFilter"


def test_apply_filters_passthrough():
    acc = StateAccumulator()
    assert acc.apply_filters("int x = 3;") is None


def test_apply_filters_bad_pragma():
    acc = StateAccumulator()
    with pytest.raises(MalformedDirective):
        acc.apply_filters("#pragma cyclus nonsense")


def test_valid_codegen_pragma_passes_pass_two():
    acc = StateAccumulator()
    acc.feed("class A : public cyclus::Facility {\n")
    assert acc.apply_filters("#pragma cyclus def schema A") == \
        "PragmaCyclusErrorFilter"


def test_one_transformation_per_line():
    source = (
        "namespace outer {\n"
        "class A : public cyclus::Facility {\n"
        " public:\n"
        "#pragma cyclus exec n = 2\n"
        "#pragma cyclus var {'default': n}\n"
        "  int x;\n"
        "  int unannotated;\n"
        "};\n"
        "}\n"
    )
    acc = StateAccumulator()
    acc.feed(source)
    acc.finish()
    matched = [stmt for stmt, _ in acc.transform_log]
    assert len(matched) == len(set(matched))
    # the undecorated declaration passed through every window
    assert "int unannotated;" not in matched


def test_first_match_wins_order_sensitivity():
    # with the catch-all pragma filter hoisted above the decoration
    # filters, the same note line lands in the wrong window and its
    # metadata is silently lost: the chain order is behavior, not style
    chain = list(StateAccumulator().filters)
    reordered = [chain[-1]] + chain[:-1]
    acc = StateAccumulator(filters=tuple(reordered))
    acc.feed("class A : public cyclus::Facility {\n")
    assert acc.apply_filters("#pragma cyclus note {'doc': 'd'}") == \
        "PragmaCyclusErrorFilter"
    assert acc.current_class().info.notes == {}
    # in the shipped order the same line decorates the archetype
    acc = StateAccumulator()
    acc.feed("class A : public cyclus::Facility {\n")
    assert acc.apply_filters("#pragma cyclus note {'doc': 'd'}") == \
        "NoteDecorationFilter"
    assert acc.current_class().info.notes == {"doc": "d"}


# -- scope handling ----------------------------------------------------------------------

def test_namespace_qualifies_registry_key():
    registry = accumulate_text(
        "namespace mine {\n"
        "class A : public cyclus::Facility {\n"
        "#pragma cyclus var {}\n"
        "  double x;\n"
        "};\n"
        "}\n")
    assert list(registry) == ["mine::A"]
    assert registry["mine::A"].name == "A"
    assert registry["mine::A"].namespace == ("mine",)


def test_typedef_scope_hygiene():
    registry = accumulate_text(
        "namespace n {\n"
        "typedef double real;\n"
        "}\n"
        "class B : public cyclus::Facility {\n"
        "#pragma cyclus var {}\n"
        "  n::real x;\n"
        "};\n")
    (var,) = registry["B"].state_vars
    assert var.type == CanonicalType("double")


def test_typedef_not_visible_outside_namespace():
    with pytest.raises(Exception):
        accumulate_text(
            "namespace n {\n"
            "typedef double real;\n"
            "}\n"
            "class B : public cyclus::Facility {\n"
            "#pragma cyclus var {}\n"
            "  real x;\n"
            "};\n")


def test_using_namespace_inside_scope():
    registry = accumulate_text(
        "class A : public cyclus::Facility {\n"
        "  using namespace std;\n"
        "#pragma cyclus var {}\n"
        "  string name;\n"
        "};\n")
    (var,) = registry["A"].state_vars
    assert var.type == CanonicalType("std::string")


def test_multiline_declaration_joined():
    registry = accumulate_text(
        "class A : public cyclus::Facility {\n"
        "#pragma cyclus var {}\n"
        "  std::map<int,\n"
        "           double> efficiencies;\n"
        "};\n")
    (var,) = registry["A"].state_vars
    assert var.type == canonicalize("std::map<int, double>")


def test_access_levels_recorded():
    registry = accumulate_text(
        "class A : public cyclus::Facility {\n"
        " public:\n"
        "#pragma cyclus var {}\n"
        "  double exposed;\n"
        " private:\n"
        "#pragma cyclus var {}\n"
        "  double hidden;\n"
        "};\n")
    vars_ = registry["A"].state_vars
    assert [(v.name, v.access) for v in vars_] == [
        ("exposed", "public"), ("hidden", "private")]


# -- decorations ------------------------------------------------------------------------

def test_exec_feeds_var_annotation():
    registry = accumulate_text(
        "#pragma cyclus exec n_default = 7\n"
        "class A : public cyclus::Facility {\n"
        "#pragma cyclus var {'default': n_default}\n"
        "  int x;\n"
        "};\n")
    (var,) = registry["A"].state_vars
    assert var.annotation["default"] == 7


def test_two_decorations_without_declaration():
    with pytest.raises(DanglingDecoration):
        accumulate_text(
            "class A : public cyclus::Facility {\n"
            "#pragma cyclus var {}\n"
            "#pragma cyclus var {}\n"
            "  int x;\n"
            "};\n")


def test_dangling_decoration_at_class_end():
    with pytest.raises(DanglingDecoration):
        accumulate_text(
            "class A : public cyclus::Facility {\n"
            "#pragma cyclus var {}\n"
            "};\n")


def test_note_merges_into_annotations():
    registry = accumulate_text(
        "class A : public cyclus::Facility {\n"
        "#pragma cyclus note {'doc': 'a facility', 'tooltip': 'A'}\n"
        "#pragma cyclus var {}\n"
        "  double x;\n"
        "};\n")
    info = registry["A"]
    assert info.notes == {"doc": "a facility", "tooltip": "A"}
    annotation = info.annotation()
    assert list(annotation) == [
        "name", "entity", "parents", "all_parents", "doc", "tooltip", "vars"]


def test_note_outside_class_rejected():
    with pytest.raises(MalformedDirective):
        accumulate_text("#pragma cyclus note {'doc': 'x'}\n")


def test_pointer_member_rejected_with_origin():
    with pytest.raises(PointerOrReference) as excinfo:
        accumulate_text(
            "class A : public cyclus::Facility {\n"
            "#pragma cyclus var {}\n"
            "  double* leak;\n"
            "};\n")
    assert excinfo.value.file == "test.h"
    assert excinfo.value.line == 3


# -- entity classification -----------------------------------------------------------------

def test_classify_direct_facility(reactor_info):
    assert classify_entity(reactor_info) == "facility"


def test_classify_unknown():
    info = ArchetypeInfo(name="X", namespace=())
    assert classify_entity(info) == "unknown"


def test_classify_transitive_archetype():
    registry = accumulate_text(
        "class B : public cyclus::Agent {\n"
        "#pragma cyclus var {}\n"
        "  int b;\n"
        "};\n"
        "class A : public B {\n"
        "#pragma cyclus var {}\n"
        "  int a;\n"
        "};\n")
    info = registry["A"]
    assert info.all_parents == ["B", "cyclus::Agent"]
    assert info.entity == "archetype"
    assert classify_entity(info, registry) == "archetype"


def test_entity_priority_region_wins():
    registry = accumulate_text(
        "class R : public cyclus::Region, public cyclus::Facility {\n"
        "#pragma cyclus var {}\n"
        "  int r;\n"
        "};\n")
    assert registry["R"].entity == "region"


def test_using_namespace_base_resolution():
    registry = accumulate_text(
        "using namespace cyclus;\n"
        "class A : public Facility {\n"
        "#pragma cyclus var {}\n"
        "  int a;\n"
        "};\n")
    info = registry["A"]
    assert info.parents == ["Facility"]
    assert info.all_parents == ["cyclus::Facility"]
    assert info.entity == "facility"


# -- statement joining --------------------------------------------------------------------

def test_iter_statements_joins_until_balanced():
    lines = ["std::map<int,", "         double> x;", "", "int y;"]
    statements = [s for s, _ in iter_statements(lines)]
    assert statements == ["std::map<int, double> x;", "", "int y;"]


def test_iter_statements_directives_stand_alone():
    lines = ["int a", "#pragma cyclus", "= 3;"]
    statements = [s for s, _ in iter_statements(lines)]
    assert statements == ["int a", "#pragma cyclus", "= 3;"]
