"""Content hashing and the bidirectional variable-length value store.

Keys are SHA1 digests of a canonical byte serialization, so equal values
always share a key and every key determines exactly one value.  The
serialization is fixed and big-endian throughout:

* 4-byte type id of the fixed-length flavor of the value's type, then the
  payload;
* ``bool`` is one byte, ``int`` an 8-byte signed integer, ``float`` a 4-byte
  and ``double`` an 8-byte IEEE-754 pattern;
* strings are UTF-8 and blobs raw, both preceded by an 8-byte length;
  uuids are their 16 raw bytes;
* sequences are preceded by an 8-byte element count; set elements are
  ordered by their serialized bytes, map entries by their serialized keys,
  so logically equal containers serialize identically.

A store may be backed by an append-only log file (per record: 20-byte
digest, 8-byte payload length, payload); the in-memory index is rebuilt
when the store opens.  Digests render as lowercase hex in diagnostics.
"""

from __future__ import annotations

import hashlib
import struct
import threading
import uuid as _uuid
from dataclasses import dataclass
from pathlib import Path

from .errors import KeyNotFound, TypeMismatch
from .typesystem import CanonicalType, cpp_spelling, db_variants, lookup

DIGEST_SIZE = 20
_WORDS = struct.Struct(">5I")
_LEN = struct.Struct(">Q")
_TYPE_ID = struct.Struct(">i")


@dataclass(frozen=True)
class Digest160:
    """A 160-bit digest, choppable into five 32-bit unsigned integers."""

    value: bytes

    def __post_init__(self) -> None:
        if len(self.value) != DIGEST_SIZE:
            raise ValueError(f"digest must be {DIGEST_SIZE} bytes")

    def chop(self) -> tuple[int, int, int, int, int]:
        return _WORDS.unpack(self.value)

    @classmethod
    def reassemble(cls, words) -> "Digest160":
        return cls(_WORDS.pack(*words))

    @property
    def hex(self) -> str:
        return self.value.hex()

    def __str__(self) -> str:
        return self.hex


def sha1(data: bytes) -> Digest160:
    """Standard SHA1 of a byte string."""
    return Digest160(hashlib.sha1(data).digest())


# -- canonical serialization ---------------------------------------------------

def _fl_type_id(t: CanonicalType) -> int:
    return db_variants(t)[0].id


def _mismatch(t: CanonicalType, value: object) -> TypeMismatch:
    return TypeMismatch(
        f"value {value!r} does not conform to {cpp_spelling(t)}")


def _serialize_payload(t: CanonicalType, value: object, out: bytearray) -> None:
    name = t.name
    if not t.params:
        if name == "bool":
            if not isinstance(value, bool):
                raise _mismatch(t, value)
            out.append(1 if value else 0)
        elif name == "int":
            if not isinstance(value, int) or isinstance(value, bool):
                raise _mismatch(t, value)
            out += struct.pack(">q", value)
        elif name == "float":
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise _mismatch(t, value)
            out += struct.pack(">f", float(value))
        elif name == "double":
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise _mismatch(t, value)
            out += struct.pack(">d", float(value))
        elif name == "std::string":
            if not isinstance(value, str):
                raise _mismatch(t, value)
            data = value.encode("utf-8")
            out += _LEN.pack(len(data))
            out += data
        elif name == "cyclus::Blob":
            if not isinstance(value, (bytes, bytearray)):
                raise _mismatch(t, value)
            out += _LEN.pack(len(value))
            out += bytes(value)
        elif name == "boost::uuids::uuid":
            try:
                uid = value if isinstance(value, _uuid.UUID) else _uuid.UUID(str(value))
            except (ValueError, AttributeError, TypeError):
                raise _mismatch(t, value) from None
            out += uid.bytes
        else:
            raise _mismatch(t, value)
        return

    if name in ("std::vector", "std::list"):
        if not isinstance(value, (list, tuple)):
            raise _mismatch(t, value)
        out += _LEN.pack(len(value))
        for item in value:
            _serialize_payload(t.params[0], item, out)
    elif name == "std::set":
        if not isinstance(value, (list, tuple, set, frozenset)):
            raise _mismatch(t, value)
        chunks = []
        for item in value:
            chunk = bytearray()
            _serialize_payload(t.params[0], item, chunk)
            chunks.append(bytes(chunk))
        chunks.sort()
        out += _LEN.pack(len(chunks))
        for chunk in chunks:
            out += chunk
    elif name == "std::pair":
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise _mismatch(t, value)
        _serialize_payload(t.params[0], value[0], out)
        _serialize_payload(t.params[1], value[1], out)
    elif name == "std::map":
        if not isinstance(value, dict):
            raise _mismatch(t, value)
        entries = []
        for key, val in value.items():
            key_chunk = bytearray()
            _serialize_payload(t.params[0], key, key_chunk)
            val_chunk = bytearray()
            _serialize_payload(t.params[1], val, val_chunk)
            entries.append((bytes(key_chunk), bytes(val_chunk)))
        entries.sort(key=lambda kv: kv[0])
        out += _LEN.pack(len(entries))
        for key_chunk, val_chunk in entries:
            out += key_chunk
            out += val_chunk
    else:
        raise _mismatch(t, value)


def serialize_value(t: CanonicalType, value: object) -> bytes:
    """Canonical bytes for a typed value: type id, then payload."""
    out = bytearray(_TYPE_ID.pack(_fl_type_id(t)))
    _serialize_payload(t, value, out)
    return bytes(out)


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ValueError("truncated serialized value")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def length(self) -> int:
        return _LEN.unpack(self.take(8))[0]


def _deserialize_payload(t: CanonicalType, reader: _Reader):
    name = t.name
    if not t.params:
        if name == "bool":
            return reader.take(1) != b"\x00"
        if name == "int":
            return struct.unpack(">q", reader.take(8))[0]
        if name == "float":
            return struct.unpack(">f", reader.take(4))[0]
        if name == "double":
            return struct.unpack(">d", reader.take(8))[0]
        if name == "std::string":
            return reader.take(reader.length()).decode("utf-8")
        if name == "cyclus::Blob":
            return reader.take(reader.length())
        if name == "boost::uuids::uuid":
            return str(_uuid.UUID(bytes=reader.take(16)))
        raise ValueError(f"cannot deserialize {name}")
    if name in ("std::vector", "std::list"):
        return [_deserialize_payload(t.params[0], reader)
                for _ in range(reader.length())]
    if name == "std::set":
        return {_deserialize_payload(t.params[0], reader)
                for _ in range(reader.length())}
    if name == "std::pair":
        return (_deserialize_payload(t.params[0], reader),
                _deserialize_payload(t.params[1], reader))
    if name == "std::map":
        n = reader.length()
        out = {}
        for _ in range(n):
            key = _deserialize_payload(t.params[0], reader)
            out[key] = _deserialize_payload(t.params[1], reader)
        return out
    raise ValueError(f"cannot deserialize {name}")


def deserialize_value(data: bytes):
    """Invert :func:`serialize_value`; returns ``(type, value)``."""
    reader = _Reader(data)
    type_id = _TYPE_ID.unpack(reader.take(4))[0]
    t = lookup(type_id).cpp
    return t, _deserialize_payload(t, reader)


def hash_value(t: CanonicalType, value: object) -> Digest160:
    """SHA1 over the canonical serialization; equal values hash equal."""
    return sha1(serialize_value(t, value))


def chop(digest: Digest160) -> tuple[int, int, int, int, int]:
    """Split a digest into five 32-bit unsigned integers, big-endian."""
    return digest.chop()


def reassemble(words) -> Digest160:
    """Inverse of :func:`chop`."""
    return Digest160.reassemble(words)


# -- the store -------------------------------------------------------------------

class ValueStore:
    """Bidirectional content-keyed store, optionally backed by a log file.

    Reads are safe to share; writes are serialized by an internal lock
    (single-writer contract per store instance).
    """

    def __init__(self, log_path: str | Path | None = None) -> None:
        self._entries: dict[bytes, tuple[CanonicalType, object]] = {}
        self._lock = threading.Lock()
        self._log_path = Path(log_path) if log_path is not None else None
        self._log = None
        if self._log_path is not None:
            if self._log_path.exists():
                self._replay(self._log_path.read_bytes())
            self._log = open(self._log_path, "ab")

    def _replay(self, data: bytes) -> None:
        pos = 0
        while pos < len(data):
            digest = data[pos:pos + DIGEST_SIZE]
            pos += DIGEST_SIZE
            (size,) = _LEN.unpack(data[pos:pos + 8])
            pos += 8
            payload = data[pos:pos + size]
            pos += size
            if len(digest) != DIGEST_SIZE or len(payload) != size:
                raise ValueError(f"truncated store log {self._log_path}")
            t, value = deserialize_value(payload)
            self._entries[digest] = (t, value)

    def close(self) -> None:
        if self._log is not None:
            self._log.close()
            self._log = None

    def __enter__(self) -> "ValueStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def __len__(self) -> int:
        return len(self._entries)

    def insert(self, t: CanonicalType, value: object) -> Digest160:
        """Store a value; idempotent per unique value."""
        data = serialize_value(t, value)
        digest = sha1(data)
        with self._lock:
            if digest.value not in self._entries:
                self._entries[digest.value] = (t, value)
                if self._log is not None:
                    self._log.write(digest.value)
                    self._log.write(_LEN.pack(len(data)))
                    self._log.write(data)
                    self._log.flush()
        return digest

    def get_by_key(self, digest: Digest160):
        """The value stored under a digest."""
        try:
            return self._entries[digest.value][1]
        except KeyError:
            raise KeyNotFound(f"no value stored under {digest.hex}") from None

    def type_of(self, digest: Digest160) -> CanonicalType:
        try:
            return self._entries[digest.value][0]
        except KeyError:
            raise KeyNotFound(f"no value stored under {digest.hex}") from None

    def contains_value(self, t: CanonicalType, value: object) -> bool:
        return hash_value(t, value).value in self._entries


# -- reserved kernel table names -----------------------------------------------------

RESERVED_TABLE_NAMES = frozenset({
    "Resources",
    "Compositions",
    "Recipes",
    "Products",
    "ResCreators",
    "AgentEntry",
    "AgentExit",
    "Transactions",
    "Info",
    "Finish",
    "InputFiles",
    "DecomSchedule",
    "BuildSchedule",
    "Snapshots",
})


def is_reserved_table_name(name: str) -> bool:
    """Whether a custom table name collides with a kernel-owned table."""
    return name in RESERVED_TABLE_NAMES
