"""Binary data-file / tool-file records, stream framing, and ReadFile.

Data-file record (10-byte header)::

    FT(1) | FID(4) | SM(1) | DL-or-TFID(4) | D | TD

Tool-file record (5-byte header)::

    FT(1) | FID(4) | TD

All integers are big-endian. Several records travel in one byte stream, each
prefixed by a 4-byte length (see ``pack_stream``).
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import tools
from .errors import (
    BadFileType,
    BadMethodTag,
    FidNotFound,
    InvariantViolation,
    ToolDispatchFailure,
    ToolNotFound,
    Truncated,
)

FT_DATA = 0x00
FT_TOOL = 0x01
DATA_HEADER_SIZE = 10
TOOL_HEADER_SIZE = 5
MAX_U32 = 0xFFFFFFFF

_DATA_HEADER = struct.Struct(">BIBI")
_TOOL_HEADER = struct.Struct(">BI")
_U32 = struct.Struct(">I")
_U16 = struct.Struct(">H")


class StorageMethod(enum.IntEnum):
    OF = 0x00   # unprocessed
    CPF = 0x01  # processed, tool inlined as TD
    SPF = 0x02  # processed, tool referenced by FID


def _check_fid(fid: int) -> None:
    if not (0 < fid <= MAX_U32):
        raise InvariantViolation(f"FID must be a nonzero 32-bit value, got {fid}")


@dataclass(frozen=True)
class ToolPayload:
    """Internal layout of a TD field: u16 name length, UTF-8 name, opaque blob."""

    tool_name: str
    tool_blob: bytes = b""

    def to_bytes(self) -> bytes:
        name = self.tool_name.encode("utf-8")
        if not name:
            raise InvariantViolation("tool name must be nonempty")
        if len(name) > 0xFFFF:
            raise InvariantViolation("tool name longer than 65535 bytes")
        return _U16.pack(len(name)) + name + bytes(self.tool_blob)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "ToolPayload":
        if len(raw) < 2:
            raise Truncated("tool payload shorter than its 2-byte name length")
        (n,) = _U16.unpack_from(raw)
        if n == 0:
            raise InvariantViolation("tool name must be nonempty")
        if len(raw) < 2 + n:
            raise Truncated("tool payload name overruns the field")
        try:
            name = bytes(raw[2:2 + n]).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ToolDispatchFailure(f"tool name is not UTF-8: {exc}") from exc
        return cls(name, bytes(raw[2 + n:]))


@dataclass(frozen=True)
class DataFileRecord:
    fid: int
    sm: StorageMethod
    dl_or_tfid: int
    d: bytes
    td: bytes = b""
    ft: int = FT_DATA

    def validate(self) -> None:
        if self.ft != FT_DATA:
            raise InvariantViolation(f"data record must have FT=0x00, got {self.ft:#04x}")
        _check_fid(self.fid)
        sm = StorageMethod(self.sm)
        if sm != StorageMethod.CPF and self.td:
            raise InvariantViolation(f"TD must be empty for SM={sm.name}")
        if sm in (StorageMethod.OF, StorageMethod.CPF):
            if self.dl_or_tfid != len(self.d):
                raise InvariantViolation(
                    f"DL={self.dl_or_tfid} does not match len(D)={len(self.d)}")
        else:
            _check_fid(self.dl_or_tfid)
        if not (0 <= self.dl_or_tfid <= MAX_U32):
            raise InvariantViolation("DL/TFID does not fit 32 bits")

    @property
    def tfid(self) -> int | None:
        return self.dl_or_tfid if self.sm == StorageMethod.SPF else None

    @classmethod
    def unprocessed(cls, fid: int, data: bytes) -> "DataFileRecord":
        return cls(fid, StorageMethod.OF, len(data), bytes(data))

    @classmethod
    def inlined(cls, fid: int, compressed: bytes, td: bytes) -> "DataFileRecord":
        return cls(fid, StorageMethod.CPF, len(compressed), bytes(compressed), bytes(td))

    @classmethod
    def separate(cls, fid: int, compressed: bytes, tool_fid: int) -> "DataFileRecord":
        return cls(fid, StorageMethod.SPF, tool_fid, bytes(compressed))


@dataclass(frozen=True)
class ToolFileRecord:
    fid: int
    td: bytes
    ft: int = FT_TOOL

    def validate(self) -> None:
        if self.ft != FT_TOOL:
            raise InvariantViolation(f"tool record must have FT=0x01, got {self.ft:#04x}")
        _check_fid(self.fid)
        if not self.td:
            raise InvariantViolation("tool record TD must be nonempty")


def serialize_data_file(record: DataFileRecord) -> bytes:
    record.validate()
    header = _DATA_HEADER.pack(record.ft, record.fid, int(record.sm), record.dl_or_tfid)
    return header + record.d + record.td


def parse_data_file(raw: bytes) -> DataFileRecord:
    """Parse one framed data-file record (``raw`` is exactly the record)."""
    raw = bytes(raw)
    if len(raw) >= 1 and raw[0] != FT_DATA:
        raise BadFileType(f"expected FT=0x00, got {raw[0]:#04x}")
    if len(raw) >= 6 and raw[5] not in StorageMethod._value2member_map_:
        raise BadMethodTag(f"unassigned storage method byte {raw[5]:#04x}")
    if len(raw) < DATA_HEADER_SIZE:
        raise Truncated(f"data record needs {DATA_HEADER_SIZE} header bytes, got {len(raw)}")
    ft, fid, sm_byte, dl_or_tfid = _DATA_HEADER.unpack_from(raw)
    sm = StorageMethod(sm_byte)
    body = raw[DATA_HEADER_SIZE:]
    if sm == StorageMethod.SPF:
        d, td = body, b""
    else:
        if len(body) < dl_or_tfid:
            raise Truncated(f"D declares {dl_or_tfid} bytes but only {len(body)} remain")
        d, td = body[:dl_or_tfid], body[dl_or_tfid:]
        if sm == StorageMethod.OF and td:
            raise InvariantViolation("trailing bytes after D in an OF record")
    record = DataFileRecord(fid, sm, dl_or_tfid, d, td, ft)
    record.validate()
    return record


def serialize_tool_file(record: ToolFileRecord) -> bytes:
    record.validate()
    return _TOOL_HEADER.pack(record.ft, record.fid) + record.td


def parse_tool_file(raw: bytes) -> ToolFileRecord:
    raw = bytes(raw)
    if len(raw) >= 1 and raw[0] != FT_TOOL:
        raise BadFileType(f"expected FT=0x01, got {raw[0]:#04x}")
    if len(raw) < TOOL_HEADER_SIZE:
        raise Truncated(f"tool record needs {TOOL_HEADER_SIZE} header bytes, got {len(raw)}")
    ft, fid = _TOOL_HEADER.unpack_from(raw)
    record = ToolFileRecord(fid, raw[TOOL_HEADER_SIZE:], ft)
    record.validate()
    return record


def serialize_record(record: DataFileRecord | ToolFileRecord) -> bytes:
    if isinstance(record, ToolFileRecord):
        return serialize_tool_file(record)
    return serialize_data_file(record)


def parse_record(raw: bytes) -> DataFileRecord | ToolFileRecord:
    """Parse a framed record of either kind, separated on its first byte."""
    if not raw:
        raise Truncated("empty record")
    if raw[0] == FT_DATA:
        return parse_data_file(raw)
    if raw[0] == FT_TOOL:
        return parse_tool_file(raw)
    raise BadFileType(f"unknown file type byte {raw[0]:#04x}")


# -- stream framing ---------------------------------------------------------
#
# stream := u32 body_len | body
# body   := (u32 rec_len | record)* | trailer
#
# The leading length lets a reader that has only the first fragment work out
# how many fragments the whole stream spans. The trailer is opaque here; the
# M-1CI planner uses it for the tool pointer and parses it from the end.

STREAM_HEADER_SIZE = 4


def pack_stream(records: Iterable[bytes], trailer: bytes = b"") -> bytes:
    body = bytearray()
    for rec in records:
        body += _U32.pack(len(rec))
        body += rec
    body += trailer
    return _U32.pack(len(body)) + bytes(body)


def stream_length(prefix: bytes) -> int:
    """Total stream size in bytes, read from the first four bytes."""
    if len(prefix) < STREAM_HEADER_SIZE:
        raise Truncated("stream header needs 4 bytes")
    return STREAM_HEADER_SIZE + _U32.unpack_from(prefix)[0]


def stream_body(stream: bytes) -> bytes:
    total = stream_length(stream)
    if len(stream) < total:
        raise Truncated(f"stream declares {total} bytes, got {len(stream)}")
    return bytes(stream[STREAM_HEADER_SIZE:total])


def unframe(body: bytes) -> list[bytes]:
    """Split a body (trailer already removed) into its framed records."""
    out, i = [], 0
    while i < len(body):
        if i + 4 > len(body):
            raise Truncated("dangling frame length")
        (n,) = _U32.unpack_from(body, i)
        i += 4
        if i + n > len(body):
            raise Truncated(f"frame declares {n} bytes, only {len(body) - i} remain")
        out.append(bytes(body[i:i + n]))
        i += n
    return out


def split_records(raws: Iterable[bytes]) -> tuple[list[DataFileRecord], list[ToolFileRecord]]:
    """Parse records and separate them by FT into (datafiles, toolfiles)."""
    datafiles, toolfiles = [], []
    for raw in raws:
        rec = parse_record(raw)
        (toolfiles if isinstance(rec, ToolFileRecord) else datafiles).append(rec)
    return datafiles, toolfiles


def _restore(td_raw: bytes, d: bytes, registry: tools.ToolRegistry) -> bytes:
    td = ToolPayload.from_bytes(td_raw)
    try:
        return tools.dispatch_tool(td, d, registry)
    except ToolDispatchFailure:
        raise
    except Exception as exc:  # decompressors are plugins; surface any failure uniformly
        raise ToolDispatchFailure(f"{td.tool_name!r} rejected the data: {exc}") from exc


def read_file(
    fid: int,
    datafiles: Sequence[DataFileRecord],
    toolfiles: Sequence[ToolFileRecord],
    registry: tools.ToolRegistry = tools.DEFAULT_REGISTRY,
) -> bytes:
    """Recover the original content of ``fid`` from parsed records."""
    for a in datafiles:
        if a.fid != fid:
            continue
        if a.sm == StorageMethod.OF:
            return bytes(a.d)
        if a.sm == StorageMethod.CPF:
            d, td = a.d[:a.dl_or_tfid], a.td
            return _restore(td, d, registry)
        for t in toolfiles:
            if t.fid == a.dl_or_tfid:
                return _restore(t.td, a.d, registry)
        raise ToolNotFound(f"file {fid} references missing tool FID {a.dl_or_tfid}")
    raise FidNotFound(f"no data file with FID {fid}")
