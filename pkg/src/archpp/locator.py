"""Archetype specifications and library search along CYCLUS_PATH."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyArchetypeName, NotFound, TooManyColons

LIB_EXTENSIONS = (".so", ".dylib", ".dll")


@dataclass(frozen=True)
class ArchetypeSpec:
    """The ``path:library:archetype`` triple naming an installed archetype."""

    path: str
    library: str
    archetype: str

    def render(self) -> str:
        return f"{self.path}:{self.library}:{self.archetype}"


def parse_spec(text: str) -> ArchetypeSpec:
    """Split a specification right-to-left on colons.

    One part names just the archetype (the library defaults to it, the path
    stays empty); two parts are library:archetype; three are
    path:library:archetype.
    """
    parts = text.split(":")
    if len(parts) > 3:
        raise TooManyColons(f"too many colons in archetype spec {text!r}")
    archetype = parts[-1].strip()
    if not archetype:
        raise EmptyArchetypeName(f"archetype name missing in spec {text!r}")
    library = parts[-2].strip() if len(parts) >= 2 else ""
    path = parts[-3].strip() if len(parts) == 3 else ""
    return ArchetypeSpec(path=path, library=library or archetype,
                         archetype=archetype)


def search(spec: ArchetypeSpec, search_dirs) -> Path:
    """First ``dir/<path>/lib<library>.<ext>`` that exists, in dir order."""
    for base in search_dirs:
        root = Path(base) / spec.path if spec.path else Path(base)
        for ext in LIB_EXTENSIONS:
            candidate = root / f"lib{spec.library}{ext}"
            if candidate.is_file():
                return candidate
    raise NotFound(f"no library for {spec.render()!r} on the search path")


def default_search_dirs(env=None, *, cwd=None, install_dir=None,
                        build_dir=None) -> list[Path]:
    """CYCLUS_PATH entries (in order) ahead of cwd, install, and build dirs.

    The install and build directories fall back to CYCLUS_INSTALL_DIR /
    CYCLUS_BUILD_DIR, then to conventional locations.
    """
    env = os.environ if env is None else env
    cwd = Path.cwd() if cwd is None else Path(cwd)
    if install_dir is None:
        install_dir = Path(env.get("CYCLUS_INSTALL_DIR",
                                   Path(sys.prefix) / "lib" / "cyclus"))
    if build_dir is None:
        build_dir = Path(env.get("CYCLUS_BUILD_DIR", cwd / "build"))
    dirs = []
    raw = env.get("CYCLUS_PATH", "")
    for entry in raw.split(os.pathsep):
        if entry:
            dirs.append(Path(entry))
    dirs.extend([cwd, Path(install_dir), Path(build_dir)])
    return dirs
