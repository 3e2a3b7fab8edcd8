"""Build-time toolchain for pragma-annotated agent archetype sources.

Three passes turn an annotated C++ archetype into a fully implemented one:
normalization (macros, includes, linemarkers), state accumulation (the
filter chain building per-class metadata), and code generation (the nine
kernel-interface member functions).  Around them sit the canonical type
system, schema generation and validation, the content-hash value store,
and archetype location.
"""

from .accumulator import ArchetypeInfo, StateVar, accumulate, classify_entity
from .codegen import Directive, gen_member, generate, parse_directive, preprocess
from .normalizer import NormalizedSource, normalize, parse_linemarker
from .schema import (
    ValidationError,
    assemble_master,
    build_archetype_schema,
    parse_rng,
    render_rng,
    validate,
)
from .typesystem import CanonicalType, TypeScope, canonicalize, db_variants, rank
from .vlstore import Digest160, ValueStore, hash_value, sha1

__version__ = "0.1.0"

__all__ = [
    "ArchetypeInfo",
    "CanonicalType",
    "Digest160",
    "Directive",
    "NormalizedSource",
    "StateVar",
    "TypeScope",
    "ValidationError",
    "ValueStore",
    "accumulate",
    "assemble_master",
    "build_archetype_schema",
    "canonicalize",
    "classify_entity",
    "db_variants",
    "gen_member",
    "generate",
    "hash_value",
    "normalize",
    "parse_directive",
    "parse_linemarker",
    "parse_rng",
    "preprocess",
    "rank",
    "render_rng",
    "sha1",
    "validate",
    "__version__",
]
