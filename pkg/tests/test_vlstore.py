import hashlib
import random
import struct

import pytest

from archpp.errors import KeyNotFound, TypeMismatch
from archpp.typesystem import CanonicalType, canonicalize
from archpp.vlstore import (
    Digest160,
    ValueStore,
    chop,
    deserialize_value,
    hash_value,
    is_reserved_table_name,
    reassemble,
    serialize_value,
    sha1,
)

INT = CanonicalType("int")
STRING = CanonicalType("std::string")


# -- sha1 ----------------------------------------------------------------------

def test_sha1_standard_vectors():
    assert sha1(b"").hex == "da39a3ee5e6b4b0d3255bfef95601890afd80709"
    assert sha1(b"abc").hex == "a9993e364706816aba3e25717850c26c9cd0d89d"


def test_sha1_distinct_random_buffers():
    rng = random.Random(0)
    a = bytes(rng.randrange(256) for _ in range(1024))
    b = bytes(rng.randrange(256) for _ in range(1024))
    assert a != b
    assert sha1(a) != sha1(b)


# -- chop/reassemble ---------------------------------------------------------------

def test_chop_zero_digest():
    assert chop(Digest160(bytes(20))) == (0, 0, 0, 0, 0)


def test_chop_first_word_of_empty_sha1():
    assert chop(sha1(b""))[0] == 0xDA39A3EE


def test_chop_reassemble_inverse():
    rng = random.Random(1)
    for _ in range(200):
        digest = Digest160(bytes(rng.randrange(256) for _ in range(20)))
        assert reassemble(chop(digest)) == digest


# -- hashing typed values -------------------------------------------------------------

def test_hash_value_deterministic():
    assert hash_value(INT, 0) == hash_value(INT, 0)


def test_hash_value_respects_order():
    vec = canonicalize("std::vector<int>")
    assert hash_value(vec, [1, 2]) != hash_value(vec, [2, 1])


def test_hash_value_matches_documented_serialization():
    # independent re-implementation of the documented layout for strings:
    # 4-byte type id (fixed-length flavor), 8-byte length, utf-8 bytes
    for text in ("", "abc", "hello world", "étoile"):
        data = text.encode("utf-8")
        expected = hashlib.sha1(
            struct.pack(">i", 4) + struct.pack(">Q", len(data)) + data
        ).hexdigest()
        assert hash_value(STRING, text).hex == expected


def test_hash_value_type_mismatch():
    with pytest.raises(TypeMismatch):
        hash_value(INT, "nope")
    with pytest.raises(TypeMismatch):
        hash_value(INT, True)
    with pytest.raises(TypeMismatch):
        hash_value(canonicalize("std::vector<int>"), [1, "x"])


def test_serialize_container_canonical_order():
    map_si = canonicalize("std::map<std::string, int>")
    assert (serialize_value(map_si, {"b": 2, "a": 1})
            == serialize_value(map_si, {"a": 1, "b": 2}))
    set_int = canonicalize("std::set<int>")
    assert serialize_value(set_int, [3, 1, 2]) == serialize_value(set_int, [2, 3, 1])


def test_serialize_roundtrip():
    cases = [
        (INT, -42),
        (CanonicalType("bool"), True),
        (CanonicalType("double"), 4e14),
        (STRING, "flux"),
        (canonicalize("std::vector<int>"), [1, 2, 3]),
        (canonicalize("std::pair<int, std::string>"), (7, "x")),
        (canonicalize("std::map<std::string, double>"), {"a": 0.5}),
        (canonicalize("std::set<std::string>"), {"u", "v"}),
    ]
    for t, value in cases:
        got_t, got_v = deserialize_value(serialize_value(t, value))
        assert got_t == t
        assert got_v == value


# -- the store -------------------------------------------------------------------------

def test_insert_is_idempotent():
    store = ValueStore()
    first = store.insert(STRING, "same")
    second = store.insert(STRING, "same")
    assert first == second
    assert len(store) == 1


def test_get_by_key_roundtrip_and_missing():
    store = ValueStore()
    digest = store.insert(STRING, "payload")
    assert store.get_by_key(digest) == "payload"
    assert store.contains_value(STRING, "payload")
    assert not store.contains_value(STRING, "other")
    with pytest.raises(KeyNotFound):
        store.get_by_key(Digest160(bytes(20)))


def test_store_bulk_random_strings():
    rng = random.Random(99)
    store = ValueStore()
    values = {f"value-{rng.getrandbits(64):x}-{i}" for i in range(2000)}
    digests = {}
    for value in values:
        digests[value] = store.insert(STRING, value)
    assert len(store) == len(values)
    assert len({d.value for d in digests.values()}) == len(values)
    for value, digest in digests.items():
        assert store.get_by_key(digest) == value
        assert store.contains_value(STRING, value)


def test_store_log_record_layout(tmp_path):
    # record layout is fixed: 20-byte digest, 8-byte big-endian payload
    # length, then the canonical payload bytes
    log = tmp_path / "one.log"
    with ValueStore(log) as store:
        digest = store.insert(STRING, "abc")
    raw = log.read_bytes()
    payload = serialize_value(STRING, "abc")
    assert raw[:20] == digest.value
    assert raw[20:28] == struct.pack(">Q", len(payload))
    assert raw[28:] == payload


def test_store_log_persistence(tmp_path):
    log = tmp_path / "values.log"
    with ValueStore(log) as store:
        d1 = store.insert(STRING, "one")
        d2 = store.insert(canonicalize("std::vector<int>"), [1, 2])
    with ValueStore(log) as again:
        assert len(again) == 2
        assert again.get_by_key(d1) == "one"
        assert again.get_by_key(d2) == [1, 2]
        assert again.type_of(d2) == canonicalize("std::vector<int>")
        # re-inserting does not grow the log
        again.insert(STRING, "one")
        assert len(again) == 2


# -- reserved table names ----------------------------------------------------------------

def test_reserved_table_names():
    for name in ("Resources", "Compositions", "Recipes", "Products",
                 "ResCreators", "AgentEntry", "AgentExit", "Transactions",
                 "Info", "Finish", "InputFiles", "DecomSchedule",
                 "BuildSchedule", "Snapshots"):
        assert is_reserved_table_name(name)
    assert not is_reserved_table_name("MyCustomTable")
