"""Registered decompressors and their reference compressors.

A recovered archive names its tool by a token (``ToolPayload.tool_name``);
dispatch maps that token onto one of the built-in codecs below, so tool bytes
read back from a pool can restore data without executing anything.
"""

from __future__ import annotations

import hashlib
import inspect
import random
import zlib
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Callable, Mapping

from .errors import BlobHashMismatch, CorruptStream, UnknownTool


def _store_compress(data: bytes) -> bytes:
    return bytes(data)


def _store_decompress(data: bytes) -> bytes:
    return bytes(data)


def _rle_compress(data: bytes) -> bytes:
    # PackBits: header h < 128 -> h+1 literals follow; h > 128 -> next byte repeats 257-h times.
    out = bytearray()
    i, n = 0, len(data)
    literal_start = 0
    while i < n:
        run = 1
        while i + run < n and run < 128 and data[i + run] == data[i]:
            run += 1
        if run >= 3:
            _flush_literals(out, data, literal_start, i)
            out.append(257 - run)
            out.append(data[i])
            i += run
            literal_start = i
        else:
            i += run
    _flush_literals(out, data, literal_start, n)
    return bytes(out)


def _flush_literals(out: bytearray, data: bytes, start: int, stop: int) -> None:
    while start < stop:
        chunk = data[start:min(stop, start + 128)]
        out.append(len(chunk) - 1)
        out += chunk
        start += len(chunk)


def _rle_decompress(data: bytes) -> bytes:
    out = bytearray()
    i, n = 0, len(data)
    while i < n:
        h = data[i]
        i += 1
        if h < 128:
            if i + h + 1 > n:
                raise CorruptStream("rle-v1: literal run overruns stream")
            out += data[i:i + h + 1]
            i += h + 1
        elif h > 128:
            if i >= n:
                raise CorruptStream("rle-v1: repeat run missing its byte")
            out += bytes((data[i],)) * (257 - h)
            i += 1
        else:
            raise CorruptStream("rle-v1: reserved header byte 0x80")
    return bytes(out)


def _deflate_compress(data: bytes) -> bytes:
    c = zlib.compressobj(level=9, wbits=-15, memLevel=9)
    return c.compress(data) + c.flush()


def _deflate_decompress(data: bytes) -> bytes:
    d = zlib.decompressobj(wbits=-15)
    try:
        out = d.decompress(data) + d.flush()
    except zlib.error as exc:
        raise CorruptStream(f"deflate-v1: {exc}") from exc
    if not d.eof or d.unused_data:
        raise CorruptStream("deflate-v1: stream not terminated cleanly")
    return out


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    compress: Callable[[bytes], bytes]
    decompress: Callable[[bytes], bytes]

    def source(self) -> bytes:
        """Python source of the decompressor, used as the archived program image."""
        return inspect.getsource(self.decompress).encode("utf-8")


BUILTIN_TOOLS = (
    ToolDescriptor("store-v1", _store_compress, _store_decompress),
    ToolDescriptor("rle-v1", _rle_compress, _rle_decompress),
    ToolDescriptor("deflate-v1", _deflate_compress, _deflate_decompress),
)


@dataclass(frozen=True)
class ToolRegistry:
    """Immutable name -> tool mapping, with optional pinned blob hashes."""

    tools: Mapping[str, ToolDescriptor]
    pins: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "tools", MappingProxyType(dict(self.tools)))
        object.__setattr__(self, "pins", MappingProxyType(dict(self.pins)))

    @classmethod
    def builtin(cls) -> "ToolRegistry":
        return cls({t.name: t for t in BUILTIN_TOOLS})

    def get(self, name: str) -> ToolDescriptor:
        try:
            return self.tools[name]
        except KeyError:
            raise UnknownTool(f"no registered tool named {name!r}") from None

    def pinned(self, name: str, blob: bytes) -> "ToolRegistry":
        """Return a registry that additionally requires ``name``'s blob to hash to ``blob``'s sha256."""
        self.get(name)
        pins = dict(self.pins)
        pins[name] = hashlib.sha256(blob).hexdigest()
        return ToolRegistry(self.tools, pins)

    def names(self) -> list[str]:
        return sorted(self.tools)


DEFAULT_REGISTRY = ToolRegistry.builtin()


def compress(name: str, data: bytes, registry: ToolRegistry = DEFAULT_REGISTRY) -> bytes:
    return registry.get(name).compress(bytes(data))


def decompress(name: str, data: bytes, registry: ToolRegistry = DEFAULT_REGISTRY) -> bytes:
    return registry.get(name).decompress(bytes(data))


def measured_ratio(original: bytes, compressed: bytes) -> Fraction:
    """r_c = |compressed| / |original|; defined as 1 for empty input."""
    if not original:
        return Fraction(1)
    return Fraction(len(compressed), len(original))


def dispatch_tool(td, compressed: bytes, registry: ToolRegistry = DEFAULT_REGISTRY) -> bytes:
    """Restore ``compressed`` with the tool named by ``td.tool_name``.

    ``td`` is anything carrying ``tool_name`` and ``tool_blob`` (normally a
    ``container.ToolPayload``). If the registry pins a hash for the tool, the
    recovered blob must match it.
    """
    tool = registry.get(td.tool_name)
    pin = registry.pins.get(td.tool_name)
    if pin is not None and hashlib.sha256(td.tool_blob).hexdigest() != pin:
        raise BlobHashMismatch(f"blob for {td.tool_name!r} does not match its pinned hash")
    return tool.decompress(bytes(compressed))


def tool_blob(name: str, size: int | None = None, registry: ToolRegistry = DEFAULT_REGISTRY) -> bytes:
    """Deterministic program image for a registered tool.

    The image starts with the decompressor's source text. When ``size`` is
    given the image is extended with seeded filler bytes (or truncated) to
    exactly ``size`` bytes, which lets cost experiments use the blob sizes of
    real archivers.
    """
    src = registry.get(name).source()
    if size is None:
        return src
    if size < 0:
        raise ValueError("blob size must be nonnegative")
    if size <= len(src):
        return src[:size]
    rng = random.Random(f"tool-blob:{name}")
    return src + rng.randbytes(size - len(src))
