"""Shared error types for the toolchain.

Errors that can be traced to a source position carry ``file`` and ``line``
attributes; ``str()`` renders the conventional ``file:line: message``
diagnostic form when these are set.
"""

from __future__ import annotations


class ToolError(Exception):
    """Base class for every error raised by this package."""

    def __init__(self, message: str, *, file: str | None = None,
                 line: int | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.file = file
        self.line = line

    def __str__(self) -> str:
        if self.file is not None and self.line is not None:
            return f"{self.file}:{self.line}: {self.message}"
        if self.file is not None:
            return f"{self.file}: {self.message}"
        return self.message

    def at(self, file: str | None, line: int | None) -> "ToolError":
        """Attach an origin, keeping any more specific one already present."""
        if self.file is None:
            self.file = file
            self.line = line
        return self


# -- source normalization ----------------------------------------------------

class MalformedDirective(ToolError):
    """A preprocessor or pragma directive that does not fit its grammar."""


class UnresolvableInclude(UserWarning):
    """An include whose target is unknown; the line is dropped, not fatal."""


# -- annotation metadata -----------------------------------------------------

class AnnotationError(ToolError):
    """Base class for metadata annotation problems."""


class AnnotationSyntaxError(AnnotationError):
    """The annotation or exec text is not part of the restricted grammar."""


class UnknownName(AnnotationError):
    """An identifier in an annotation has no binding in the exec namespace."""


class NotAnObject(AnnotationError):
    """A var/note annotation whose top level is not a dictionary."""


class ReadOnlyKeyViolation(AnnotationError):
    """A user-supplied annotation tried to set a generated, read-only key."""


class ShapeRankMismatch(AnnotationError):
    """A shape list whose length differs from the rank of the variable type."""


class DefaultTypeMismatch(AnnotationError):
    """A default value incompatible with the declared variable type."""


# -- type system ---------------------------------------------------------------

class TypeSystemError(ToolError):
    """Base class for canonical-type resolution problems."""


class PointerOrReference(TypeSystemError):
    """State variable types may not contain ``*`` or ``&``."""


class UnknownTemplate(TypeSystemError):
    """Template name not registered, or used with the wrong arity."""


class UnresolvableName(TypeSystemError):
    """A type name that is not a known primitive, class, or alias in scope."""


class AliasCycle(TypeSystemError):
    """A typedef/using edge that would close a cycle in the alias graph."""


class UnregisteredType(TypeSystemError):
    """A canonical type with no entry in the shipped database-type table."""


class NotFound(ToolError):
    """Exact-match lookup failure (database-type table or archetype search)."""


# -- accumulation / code generation -------------------------------------------

class DanglingDecoration(ToolError):
    """A var annotation never attached to a member declaration."""


class UnknownClass(ToolError):
    """A targeted directive names a class absent from the registry."""


class AmbiguousClass(ToolError):
    """A directive outside any class body without an explicit class name."""


class OverrideShapeMismatch(ToolError):
    """An infiletodb override missing its ``read`` or ``write`` entry."""


# -- schemas and validation ----------------------------------------------------

class UnmappableType(ToolError):
    """State variable type with no schema datatype mapping and no override."""


class DuplicateArchetypeName(ToolError):
    """Two archetypes with the same name fed to master-schema assembly."""


class SchemaError(ToolError):
    """A schema that cannot be interpreted (bad pattern, unresolvable ref)."""


class XmlSyntaxError(ToolError):
    """Ill-formed XML input."""


# -- hash store ----------------------------------------------------------------

class TypeMismatch(ToolError):
    """A value that does not conform to the type it is stored under."""


class KeyNotFound(ToolError):
    """A digest with no entry in the value store."""


# -- archetype specifications ---------------------------------------------------

class EmptyArchetypeName(ToolError):
    """An archetype specification whose archetype part is empty."""


class TooManyColons(ToolError):
    """An archetype specification with more than three colon-separated parts."""
