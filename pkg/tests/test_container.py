import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dnapool import container, tools
from dnapool.container import (
    DataFileRecord,
    StorageMethod,
    ToolFileRecord,
    ToolPayload,
    parse_data_file,
    parse_tool_file,
    read_file,
    serialize_data_file,
    serialize_tool_file,
)
from dnapool.errors import (
    BadFileType,
    BadMethodTag,
    BlobHashMismatch,
    FidNotFound,
    InvariantViolation,
    ToolDispatchFailure,
    ToolNotFound,
    Truncated,
    UnknownTool,
)

fids = st.integers(1, 2**32 - 1)


@st.composite
def data_records(draw):
    fid = draw(fids)
    sm = draw(st.sampled_from(list(StorageMethod)))
    d = draw(st.binary(max_size=64))
    if sm is StorageMethod.OF:
        return DataFileRecord.unprocessed(fid, d)
    if sm is StorageMethod.CPF:
        return DataFileRecord.inlined(fid, d, draw(st.binary(max_size=32)))
    return DataFileRecord.separate(fid, d, draw(fids))


def test_serialize_of_example():
    rec = DataFileRecord(1, StorageMethod.OF, 2, b"\x48\x49")
    assert serialize_data_file(rec).hex() == "00" "00000001" "00" "00000002" "4849"


def test_serialize_spf_example():
    rec = DataFileRecord.separate(7, b"\xab", 3)
    assert serialize_data_file(rec).hex() == "00" "00000007" "02" "00000003" "ab"


def test_parse_of_example():
    rec = parse_data_file(bytes.fromhex("00000000010000000002" "4849"))
    assert (rec.fid, rec.sm, rec.d) == (1, StorageMethod.OF, b"HI")


def test_parse_data_rejects_tool_byte():
    with pytest.raises(BadFileType):
        parse_data_file(bytes.fromhex("01000000010000000002"))


def test_parse_data_rejects_unassigned_method():
    with pytest.raises(BadMethodTag):
        parse_data_file(bytes.fromhex("000000000105000000024849"))


@pytest.mark.parametrize("raw", ["00", "0000000001", "000000000100000000", "00000000010000000005" "4849"])
def test_parse_data_truncated(raw):
    with pytest.raises(Truncated):
        parse_data_file(bytes.fromhex(raw))


def test_header_widths():
    assert container.DATA_HEADER_SIZE == 10 and container.TOOL_HEADER_SIZE == 5
    assert len(serialize_data_file(DataFileRecord.unprocessed(1, b""))) == 10
    assert len(serialize_tool_file(ToolFileRecord(1, b"x"))) == 6


def test_td_only_with_cpf():
    with pytest.raises(InvariantViolation):
        serialize_data_file(DataFileRecord(1, StorageMethod.OF, 1, b"a", b"td"))
    with pytest.raises(InvariantViolation):
        serialize_data_file(DataFileRecord(1, StorageMethod.SPF, 3, b"a", b"td"))


def test_dl_must_match():
    with pytest.raises(InvariantViolation):
        serialize_data_file(DataFileRecord(1, StorageMethod.CPF, 5, b"abc", b"t"))


def test_zero_fid_rejected():
    with pytest.raises(InvariantViolation):
        serialize_data_file(DataFileRecord.unprocessed(0, b"a"))
    with pytest.raises(InvariantViolation):
        serialize_data_file(DataFileRecord.separate(1, b"a", 0))


def test_tool_file_examples():
    assert serialize_tool_file(ToolFileRecord(3, b"\x01")).hex() == "01" "00000003" "01"
    assert parse_tool_file(bytes.fromhex("010000000301")) == ToolFileRecord(3, b"\x01")
    with pytest.raises(BadFileType):
        parse_tool_file(bytes.fromhex("000000000301"))
    with pytest.raises(Truncated):
        parse_tool_file(b"\x01\x00\x00")
    with pytest.raises(InvariantViolation):
        serialize_tool_file(ToolFileRecord(3, b""))


def test_parse_record_dispatches_on_type():
    assert isinstance(container.parse_record(bytes.fromhex("010000000301")), ToolFileRecord)
    with pytest.raises(BadFileType):
        container.parse_record(b"\x07abc")


@settings(max_examples=300)
@given(data_records())
def test_data_round_trip(rec):
    assert parse_data_file(serialize_data_file(rec)) == rec


@settings(max_examples=200)
@given(fids, st.binary(min_size=1, max_size=64))
def test_tool_round_trip(fid, td):
    rec = ToolFileRecord(fid, td)
    assert parse_tool_file(serialize_tool_file(rec)) == rec


@given(st.text(min_size=1, max_size=20), st.binary(max_size=40))
def test_tool_payload_round_trip(name, blob):
    p = ToolPayload(name, blob)
    assert ToolPayload.from_bytes(p.to_bytes()) == p


def test_tool_payload_errors():
    with pytest.raises(InvariantViolation):
        ToolPayload("", b"").to_bytes()
    with pytest.raises(Truncated):
        ToolPayload.from_bytes(b"\x00\x09abc")


@given(st.lists(st.binary(max_size=30), max_size=6), st.binary(max_size=10))
def test_stream_framing(records, trailer):
    s = container.pack_stream(records, trailer)
    assert container.stream_length(s[:4]) == len(s)
    body = container.stream_body(s)
    assert body.endswith(trailer)
    assert container.unframe(body[:len(body) - len(trailer)]) == records


def test_unframe_truncated():
    with pytest.raises(Truncated):
        container.unframe(b"\x00\x00\x00\x05abc")
    with pytest.raises(Truncated):
        container.stream_body(b"\x00\x00\x00\x09ab")


# -- read_file ----------------------------------------------------------------

def test_read_of():
    assert read_file(1, [DataFileRecord.unprocessed(1, b"HELLO")], []) == b"HELLO"


def test_read_spf_rle():
    d = tools.compress("rle-v1", b"AAAABBB")
    assert tools.decompress("rle-v1", d) == b"AAAABBB"
    datafiles = [DataFileRecord.separate(2, d, 3)]
    toolfiles = [ToolFileRecord(3, ToolPayload("rle-v1").to_bytes())]
    assert read_file(2, datafiles, toolfiles) == b"AAAABBB"


def test_read_cpf():
    d = tools.compress("deflate-v1", b"hello hello hello")
    rec = DataFileRecord.inlined(4, d, ToolPayload("deflate-v1", b"blob").to_bytes())
    assert read_file(4, [rec], []) == b"hello hello hello"


def test_read_errors():
    with pytest.raises(FidNotFound):
        read_file(9, [DataFileRecord.unprocessed(1, b"x")], [])
    with pytest.raises(ToolNotFound):
        read_file(2, [DataFileRecord.separate(2, b"x", 3)], [])
    bad = [ToolFileRecord(3, ToolPayload("zstd-v9").to_bytes())]
    with pytest.raises(UnknownTool):
        read_file(2, [DataFileRecord.separate(2, b"x", 3)], bad)
    garbage = [ToolFileRecord(3, ToolPayload("deflate-v1").to_bytes())]
    with pytest.raises(ToolDispatchFailure):
        read_file(2, [DataFileRecord.separate(2, b"\xff\xff\xff", 3)], garbage)


def test_read_checks_pinned_blob():
    reg = tools.DEFAULT_REGISTRY.pinned("rle-v1", b"good")
    d = tools.compress("rle-v1", b"zzzz")
    tf = [ToolFileRecord(3, ToolPayload("rle-v1", b"good").to_bytes())]
    assert read_file(2, [DataFileRecord.separate(2, d, 3)], tf, reg) == b"zzzz"
    tf = [ToolFileRecord(3, ToolPayload("rle-v1", b"evil").to_bytes())]
    with pytest.raises(BlobHashMismatch):
        read_file(2, [DataFileRecord.separate(2, d, 3)], tf, reg)


@settings(max_examples=100)
@given(st.binary(max_size=300), st.sampled_from(["store-v1", "rle-v1", "deflate-v1"]), st.booleans())
def test_read_restores_any_tool(x, name, inline):
    d = tools.compress(name, x)
    td = ToolPayload(name, b"img").to_bytes()
    if inline:
        assert read_file(5, [DataFileRecord.inlined(5, d, td)], []) == x
    else:
        assert read_file(5, [DataFileRecord.separate(5, d, 6)], [ToolFileRecord(6, td)]) == x


def test_read_is_order_invariant():
    rng = random.Random(3)
    datafiles = [DataFileRecord.separate(i, tools.compress("rle-v1", bytes([i]) * 9), 100 + i % 2)
                 for i in range(1, 8)]
    toolfiles = [ToolFileRecord(100, ToolPayload("rle-v1").to_bytes()),
                 ToolFileRecord(101, ToolPayload("rle-v1", b"other").to_bytes())]
    expected = {i: read_file(i, datafiles, toolfiles) for i in range(1, 8)}
    for _ in range(20):
        rng.shuffle(datafiles)
        rng.shuffle(toolfiles)
        assert {i: read_file(i, datafiles, toolfiles) for i in range(1, 8)} == expected
