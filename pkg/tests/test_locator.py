from pathlib import Path

import pytest

from archpp.errors import EmptyArchetypeName, NotFound, TooManyColons
from archpp.locator import (
    ArchetypeSpec,
    default_search_dirs,
    parse_spec,
    search,
)


# -- parsing -----------------------------------------------------------------

def test_parse_full_spec():
    assert parse_spec("my/path:mylib:MyAgent") == ArchetypeSpec(
        "my/path", "mylib", "MyAgent")


def test_parse_bare_name_defaults_library():
    assert parse_spec("Reactor") == ArchetypeSpec("", "Reactor", "Reactor")


def test_parse_two_part_spec():
    assert parse_spec("mylib:MyAgent") == ArchetypeSpec("", "mylib", "MyAgent")


def test_parse_empty_library_defaults():
    assert parse_spec("::MyAgent") == ArchetypeSpec("", "MyAgent", "MyAgent")


def test_parse_errors():
    with pytest.raises(TooManyColons):
        parse_spec("a:b:c:d")
    with pytest.raises(EmptyArchetypeName):
        parse_spec("lib:")
    with pytest.raises(EmptyArchetypeName):
        parse_spec("")


def test_render_parse_roundtrip():
    for spec_text, normalized in [
        ("my/path:mylib:MyAgent", "my/path:mylib:MyAgent"),
        ("Reactor", ":Reactor:Reactor"),
        ("mylib:MyAgent", ":mylib:MyAgent"),
    ]:
        assert parse_spec(spec_text).render() == normalized
        assert parse_spec(parse_spec(spec_text).render()) == parse_spec(spec_text)


# -- search ------------------------------------------------------------------------

def make_lib(root: Path, rel: str) -> Path:
    path = root / rel
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"")
    return path


def test_search_continues_past_missing_dirs(tmp_path):
    d1 = tmp_path / "d1"
    d2 = tmp_path / "d2"
    d1.mkdir()
    hit = make_lib(d2, "my/path/libmylib.so")
    spec = parse_spec("my/path:mylib:MyAgent")
    assert search(spec, [d1, d2]) == hit


def test_search_first_directory_wins(tmp_path):
    d1 = tmp_path / "d1"
    d2 = tmp_path / "d2"
    first = make_lib(d1, "libr.so")
    make_lib(d2, "libr.so")
    assert search(parse_spec("r:R"), [d1, d2]) == first


def test_search_extension_probe_order(tmp_path):
    make_lib(tmp_path, "libx.dylib")
    so = make_lib(tmp_path, "libx.so")
    assert search(parse_spec("x:X"), [tmp_path]) == so


def test_search_not_found(tmp_path):
    with pytest.raises(NotFound):
        search(parse_spec("Reactor"), [tmp_path])


# -- default search dirs -----------------------------------------------------------------

def test_defaults_without_env(tmp_path):
    dirs = default_search_dirs(env={}, cwd=tmp_path,
                               install_dir="/opt/sim/lib",
                               build_dir="/opt/sim/build")
    assert dirs == [tmp_path, Path("/opt/sim/lib"), Path("/opt/sim/build")]


def test_cyclus_path_prepended(tmp_path):
    dirs = default_search_dirs(env={"CYCLUS_PATH": "/x:/y"}, cwd=tmp_path,
                               install_dir="/i", build_dir="/b")
    assert dirs == [Path("/x"), Path("/y"), tmp_path, Path("/i"), Path("/b")]


def test_empty_cyclus_path_means_defaults(tmp_path):
    dirs = default_search_dirs(env={"CYCLUS_PATH": ""}, cwd=tmp_path,
                               install_dir="/i", build_dir="/b")
    assert dirs == [tmp_path, Path("/i"), Path("/b")]


def test_env_dir_overrides(tmp_path):
    dirs = default_search_dirs(
        env={"CYCLUS_INSTALL_DIR": "/inst", "CYCLUS_BUILD_DIR": "/bld"},
        cwd=tmp_path)
    assert dirs == [tmp_path, Path("/inst"), Path("/bld")]
