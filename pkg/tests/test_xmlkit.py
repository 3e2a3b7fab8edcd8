import pytest

from archpp.errors import XmlSyntaxError
from archpp.xmlkit import XmlNode, parse_xml, render_xml


def test_parse_simple_nesting():
    root = parse_xml("<a><b>1</b></a>")
    assert root.name == "a"
    (child,) = root.children
    assert child.name == "b"
    assert child.children == ["1"]


def test_parse_attributes_and_self_closing():
    root = parse_xml('<data type="double" />')
    assert root.name == "data"
    assert root.attrs == {"type": "double"}
    assert root.children == []
    assert parse_xml("<text/>").name == "text"


def test_parse_single_quotes_and_entities():
    root = parse_xml("<a note='x &lt; y &amp; z'>&quot;q&quot;</a>")
    assert root.attrs["note"] == "x < y & z"
    assert root.children == ['"q"']


def test_parse_comments_and_prolog():
    root = parse_xml('<?xml version="1.0"?>\n<!-- top -->\n<a><!-- in -->'
                     "<b/></a>")
    assert root.name == "a"
    assert [c.name for c in root.child_elements()] == ["b"]


def test_parse_tracks_line_numbers():
    root = parse_xml("<a>\n  <b>\n    <c>text</c>\n  </b>\n</a>")
    b = root.child_elements()[0]
    c = b.child_elements()[0]
    assert (root.line, b.line, c.line) == (1, 2, 3)


def test_parse_whitespace_text_dropped():
    root = parse_xml("<a>\n  <b/>\n</a>")
    assert all(isinstance(c, XmlNode) for c in root.children)


def test_parse_errors():
    with pytest.raises(XmlSyntaxError):
        parse_xml("<a><b></a>")
    with pytest.raises(XmlSyntaxError):
        parse_xml("<a>&unknown;</a>")
    with pytest.raises(XmlSyntaxError):
        parse_xml("<!DOCTYPE html><a/>")
    with pytest.raises(XmlSyntaxError):
        parse_xml("<a>no close")
    with pytest.raises(XmlSyntaxError):
        parse_xml("<a/><b/>")


def test_error_carries_line_number():
    with pytest.raises(XmlSyntaxError) as excinfo:
        parse_xml("<a>\n<b>\n</mismatch>\n</a>")
    assert excinfo.value.line == 3


def test_render_roundtrip():
    text = ('<top kind="demo">\n'
            "  <empty/>\n"
            '  <leaf note="a &lt; b" />\n'
            "  <inline>words &amp; more</inline>\n"
            "</top>")
    root = parse_xml(text)
    again = parse_xml(render_xml(root))
    assert again == root


def test_render_self_closing_spacing():
    # attribute-carrying empties take a space before the slash, bare ones do not
    assert render_xml(XmlNode("data", {"type": "int"})) == '<data type="int" />'
    assert render_xml(XmlNode("text")) == "<text/>"
