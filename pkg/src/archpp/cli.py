"""Command-line entry point wiring the pipeline together.

Exit status: 0 on success, 1 for tool errors (with ``file:line: message``
diagnostics on stderr), 2 when a document fails validation or a table name
is reserved.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .accumulator import accumulate, registry_to_json
from .annotations import render_json
from .codegen import generate
from .errors import ToolError
from .locator import default_search_dirs, parse_spec, search
from .normalizer import normalize
from .schema import (
    assemble_master,
    build_archetype_schema,
    format_validation_errors,
    parse_rng,
    render_rng,
    validate,
)
from .vlstore import is_reserved_table_name
from .xmlkit import parse_xml

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_REJECTED = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="archpp",
        description="Preprocessor toolchain for pragma-annotated agent "
                    "archetype sources.")
    parser.add_argument("--json-diagnostics", action="store_true",
                        help="emit one JSON object per error on stderr")
    commands = parser.add_subparsers(dest="command", required=True)

    def add_source_flags(sub):
        sub.add_argument("-I", dest="include_dirs", action="append",
                         default=[], metavar="DIR",
                         help="directory searched for #include targets")
        sub.add_argument("-D", dest="defines", action="append", default=[],
                         metavar="NAME[=VALUE]",
                         help="predefine an object-like macro")

    sub = commands.add_parser(
        "preprocess", help="run all three passes over a source file")
    sub.add_argument("input", metavar="IN")
    sub.add_argument("-o", dest="output", metavar="OUT",
                     help="write generated source here instead of stdout")
    sub.add_argument("--dump-registry", action="store_true",
                     help="print the accumulated registry as JSON instead "
                          "of generated source")
    add_source_flags(sub)

    sub = commands.add_parser(
        "annotate", help="print each archetype's metadata as canonical JSON")
    sub.add_argument("input", metavar="IN")
    add_source_flags(sub)

    sub = commands.add_parser(
        "schema", help="print each archetype's generated schema")
    sub.add_argument("input", metavar="IN")
    add_source_flags(sub)

    sub = commands.add_parser(
        "master-schema",
        help="assemble the master schema over all archetypes in the inputs")
    sub.add_argument("inputs", metavar="IN", nargs="+")
    add_source_flags(sub)

    sub = commands.add_parser(
        "validate", help="validate an XML document against a schema file")
    sub.add_argument("schema", metavar="SCHEMA")
    sub.add_argument("document", metavar="XML")

    sub = commands.add_parser(
        "locate", help="resolve an archetype specification to a library path")
    sub.add_argument("spec", metavar="SPEC")

    sub = commands.add_parser(
        "check-table-name",
        help="fail when a table name is reserved by the kernel")
    sub.add_argument("name", metavar="NAME")

    return parser


def _parse_defines(pairs: list[str]) -> dict[str, str]:
    defines = {}
    for pair in pairs:
        name, sep, value = pair.partition("=")
        defines[name.strip()] = value.strip() if sep else "1"
    return defines


def _include_resolver(source_path: Path, include_dirs: list[str]):
    roots = [source_path.parent] + [Path(d) for d in include_dirs]

    def resolve(name: str) -> str | None:
        for root in roots:
            candidate = root / name
            if candidate.is_file():
                return candidate.read_text(encoding="utf-8")
        return None

    return resolve


def _pipeline(path_text: str, include_dirs: list[str], defines: list[str]):
    path = Path(path_text)
    source = path.read_text(encoding="utf-8")
    normalized = normalize(
        source,
        _include_resolver(path, include_dirs),
        _parse_defines(defines),
        filename=str(path))
    return source, accumulate(normalized)


def _emit_error(exc: ToolError, json_mode: bool) -> None:
    if json_mode:
        payload = {"file": exc.file, "line": exc.line, "message": exc.message}
        print(json.dumps(payload), file=sys.stderr)
    else:
        print(str(exc), file=sys.stderr)


def _cmd_preprocess(args) -> int:
    source, registry = _pipeline(args.input, args.include_dirs, args.defines)
    if args.dump_registry:
        print(registry_to_json(registry))
        return EXIT_OK
    generated = generate(source, registry, filename=args.input)
    if args.output:
        Path(args.output).write_text(generated, encoding="utf-8")
    else:
        sys.stdout.write(generated)
        if not generated.endswith("\n"):
            sys.stdout.write("\n")
    return EXIT_OK


def _cmd_annotate(args) -> int:
    _, registry = _pipeline(args.input, args.include_dirs, args.defines)
    for info in registry.values():
        print(render_json(info.annotation()))
    return EXIT_OK


def _cmd_schema(args) -> int:
    _, registry = _pipeline(args.input, args.include_dirs, args.defines)
    for info in registry.values():
        print(render_rng(build_archetype_schema(info)))
    return EXIT_OK


def _cmd_master_schema(args) -> int:
    schemas = []
    for path_text in args.inputs:
        _, registry = _pipeline(path_text, args.include_dirs, args.defines)
        schemas.extend(build_archetype_schema(info)
                       for info in registry.values())
    print(render_rng(assemble_master(schemas)))
    return EXIT_OK


def _cmd_validate(args, json_mode: bool) -> int:
    schema = parse_rng(Path(args.schema).read_text(encoding="utf-8"))
    document = parse_xml(Path(args.document).read_text(encoding="utf-8"))
    errors = validate(document, schema)
    if not errors:
        return EXIT_OK
    if json_mode:
        for error in errors:
            print(json.dumps({"file": args.document, "line": error.line,
                              "element": error.element,
                              "message": error.message}), file=sys.stderr)
    else:
        print(format_validation_errors(errors), file=sys.stderr)
    return EXIT_REJECTED


def _cmd_locate(args) -> int:
    print(search(parse_spec(args.spec), default_search_dirs()))
    return EXIT_OK


def _cmd_check_table_name(args) -> int:
    if is_reserved_table_name(args.name):
        print(f"table name {args.name!r} is reserved by the kernel",
              file=sys.stderr)
        return EXIT_REJECTED
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "preprocess":
            return _cmd_preprocess(args)
        if args.command == "annotate":
            return _cmd_annotate(args)
        if args.command == "schema":
            return _cmd_schema(args)
        if args.command == "master-schema":
            return _cmd_master_schema(args)
        if args.command == "validate":
            return _cmd_validate(args, args.json_diagnostics)
        if args.command == "locate":
            return _cmd_locate(args)
        if args.command == "check-table-name":
            return _cmd_check_table_name(args)
        raise AssertionError(f"unhandled command {args.command}")
    except ToolError as exc:
        _emit_error(exc, args.json_diagnostics)
        return EXIT_ERROR
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
