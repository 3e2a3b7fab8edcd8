"""Minimal XML reading and writing: elements, attributes, text, comments.

Covers exactly what schemas and input files need.  No DTDs, no namespaces,
entities limited to the five predefined ones.  Parsed nodes remember their
line number for diagnostics.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import XmlSyntaxError

_NAME_RE = re.compile(r"[A-Za-z_][\w.:-]*")
_ENTITIES = {"lt": "<", "gt": ">", "amp": "&", "apos": "'", "quot": '"'}
_ENTITY_RE = re.compile(r"&([A-Za-z]+);")


@dataclass
class XmlNode:
    """One element: name, attributes, and ordered children (nodes or text)."""

    name: str
    attrs: dict[str, str] = field(default_factory=dict)
    children: list = field(default_factory=list)
    line: int = 0

    def child_elements(self) -> list["XmlNode"]:
        return [c for c in self.children if isinstance(c, XmlNode)]

    def text(self) -> str:
        return "".join(c for c in self.children if isinstance(c, str))


def _decode_entities(text: str, line: int) -> str:
    def replace(match: re.Match) -> str:
        name = match.group(1)
        if name not in _ENTITIES:
            raise XmlSyntaxError(f"unknown entity &{name};", line=line)
        return _ENTITIES[name]

    return _ENTITY_RE.sub(replace, text)


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0
        self.line = 1

    def _fail(self, message: str):
        raise XmlSyntaxError(message, line=self.line)

    def _advance(self, n: int) -> str:
        chunk = self.text[self.pos:self.pos + n]
        self.line += chunk.count("\n")
        self.pos += n
        return chunk

    def _starts_with(self, token: str) -> bool:
        return self.text.startswith(token, self.pos)

    def _skip_whitespace(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self._advance(1)

    def _skip_until(self, token: str, what: str) -> None:
        end = self.text.find(token, self.pos)
        if end < 0:
            self._fail(f"unterminated {what}")
        self._advance(end - self.pos + len(token))

    def _skip_misc(self) -> None:
        while True:
            self._skip_whitespace()
            if self._starts_with("<?"):
                self._skip_until("?>", "processing instruction")
            elif self._starts_with("<!--"):
                self._skip_until("-->", "comment")
            elif self._starts_with("<!"):
                self._fail("DTD declarations are not supported")
            else:
                return

    def _parse_name(self) -> str:
        m = _NAME_RE.match(self.text, self.pos)
        if m is None:
            self._fail("expected a name")
        self._advance(m.end() - self.pos)
        return m.group(0)

    def parse_document(self) -> XmlNode:
        self._skip_misc()
        if not self._starts_with("<"):
            self._fail("expected an element")
        node = self._parse_element()
        self._skip_misc()
        if self.pos < len(self.text):
            self._fail("content after the document element")
        return node

    def _parse_element(self) -> XmlNode:
        start_line = self.line
        self._advance(1)  # '<'
        name = self._parse_name()
        node = XmlNode(name, line=start_line)
        while True:
            self._skip_whitespace()
            if self._starts_with("/>"):
                self._advance(2)
                return node
            if self._starts_with("/"):
                # tolerate a stray space inside the self-closing bracket
                self._advance(1)
                self._skip_whitespace()
                if not self._starts_with(">"):
                    self._fail("malformed self-closing tag")
                self._advance(1)
                return node
            if self._starts_with(">"):
                self._advance(1)
                break
            attr = self._parse_name()
            self._skip_whitespace()
            if not self._starts_with("="):
                self._fail(f"attribute {attr!r} needs a value")
            self._advance(1)
            self._skip_whitespace()
            quote = self.text[self.pos:self.pos + 1]
            if quote not in ('"', "'"):
                self._fail("attribute values must be quoted")
            self._advance(1)
            end = self.text.find(quote, self.pos)
            if end < 0:
                self._fail("unterminated attribute value")
            raw = self._advance(end - self.pos)
            self._advance(1)
            node.attrs[attr] = _decode_entities(raw, self.line)

        while True:
            chunk_start = self.pos
            next_tag = self.text.find("<", self.pos)
            if next_tag < 0:
                self._fail(f"element {name!r} is never closed")
            raw_text = self.text[chunk_start:next_tag]
            if raw_text.strip():
                node.children.append(
                    _decode_entities(raw_text, self.line).strip())
            self._advance(next_tag - self.pos)
            if self._starts_with("<!--"):
                self._skip_until("-->", "comment")
                continue
            if self._starts_with("</"):
                self._advance(2)
                closing = self._parse_name()
                if closing != name:
                    self._fail(f"mismatched closing tag </{closing}> for <{name}>")
                self._skip_whitespace()
                if not self._starts_with(">"):
                    self._fail("malformed closing tag")
                self._advance(1)
                return node
            node.children.append(self._parse_element())


def parse_xml(text: str) -> XmlNode:
    """Parse one document; raises :class:`XmlSyntaxError` with a line number."""
    return _Parser(text).parse_document()


def _escape_text(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _escape_attr(text: str) -> str:
    return _escape_text(text).replace('"', "&quot;")


def render_xml(node: XmlNode, indent: int = 2, level: int = 0) -> str:
    """Pretty-print a tree; inverse of :func:`parse_xml` on this subset."""
    return "\n".join(_render_lines(node, indent, level))


def _render_lines(node: XmlNode, indent: int, level: int) -> list[str]:
    pad = " " * (indent * level)
    attrs = "".join(f' {k}="{_escape_attr(v)}"' for k, v in node.attrs.items())
    if not node.children:
        # a space before the slash only when attributes are present
        closer = " />" if node.attrs else "/>"
        return [f"{pad}<{node.name}{attrs}{closer}"]
    if len(node.children) == 1 and isinstance(node.children[0], str):
        text = _escape_text(node.children[0])
        return [f"{pad}<{node.name}{attrs}>{text}</{node.name}>"]
    lines = [f"{pad}<{node.name}{attrs}>"]
    for child in node.children:
        if isinstance(child, str):
            lines.append(" " * (indent * (level + 1)) + _escape_text(child))
        else:
            lines.extend(_render_lines(child, indent, level + 1))
    lines.append(f"{pad}</{node.name}>")
    return lines
