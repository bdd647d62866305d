"""Deterministic synthetic test corpus.

Five files in the spirit of a mixed archive (photo, two novels, bitmap, a
mixed bag) and two tools. Everything is generated from fixed seeds, so the
corpus is byte-stable across runs and machines.
"""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass

from . import tools
from .methods import SourceFile, ToolSpec

_WORDS = (
    "the of and to a in that it was he for on with as his had at by not but from "
    "this which her she be they is were all have one so garden letter morning house "
    "river evening quiet window sister father mother walked answered little great "
    "country believe perhaps certainly remember dinner sudden pleasure honour manner"
).split()


def _text(seed: int, n_bytes: int) -> bytes:
    rng = random.Random(seed)
    out, size = [], 0
    while size < n_bytes:
        k = rng.randint(6, 18)
        words = [rng.choice(_WORDS) for _ in range(k)]
        sentence = " ".join(words).capitalize() + rng.choice([". ", ". ", "? ", "! ", ".\n\n"])
        out.append(sentence)
        size += len(sentence)
    return "".join(out).encode("ascii")[:n_bytes]


def _jpeg_like(seed: int, n_bytes: int) -> bytes:
    head = b"\xff\xd8\xff\xe0\x00\x10JFIF\x00\x01\x01\x00\x00\x01\x00\x01\x00\x00"
    body = random.Random(seed).randbytes(n_bytes - len(head) - 2)
    return head + body + b"\xff\xd9"


def _bmp_like(seed: int, width: int, height: int) -> bytes:
    # 8-bit palette image made of horizontal bands: long runs, RLE friendly
    rng = random.Random(seed)
    row_pad = -width % 4
    pixels = bytearray()
    for y in range(height):
        x = 0
        row = bytearray()
        while x < width:
            run = min(width - x, rng.randint(8, 90))
            row += bytes((rng.randint(0, 40) + (y // 16) * 3 % 200,)) * run
            x += run
        pixels += row + bytes(row_pad)
    palette = b"".join(bytes((i, i, i, 0)) for i in range(256))
    offset = 14 + 40 + len(palette)
    info = struct.pack("<IiiHHIIiiII", 40, width, height, 1, 8, 0, len(pixels), 2835, 2835, 256, 0)
    file_header = struct.pack("<2sIHHI", b"BM", offset + len(pixels), 0, 0, offset)
    return file_header + info + palette + bytes(pixels)


def _mix(seed: int) -> bytes:
    rng = random.Random(seed)
    parts = [_text(seed + 1, 4000), bytes(3000), _bmp_like(seed + 2, 64, 48),
             rng.randbytes(1500), b"\x00\xff" * 1200]
    return b"".join(parts)


@dataclass(frozen=True)
class Corpus:
    files: tuple[SourceFile, ...]
    tools: tuple[ToolSpec, ...]

    @property
    def original_bytes(self) -> int:
        return sum(len(f.data) for f in self.files)

    def by_name(self, name: str) -> SourceFile:
        for f in self.files:
            if f.name == name:
                return f
        raise KeyError(name)


TOOL_BLOB_SIZE = 2010


def acceptance_corpus(scale: int = 1, tool_blob_size: int = TOOL_BLOB_SIZE) -> Corpus:
    """The five-file, two-tool corpus used by the acceptance suite.

    ``deflate-v1`` (the 7z stand-in) serves the two novels; ``rle-v1`` (the
    zip stand-in) serves the photo, the bitmap and the mixed file. Tool
    blobs are ``tool_blob_size`` bytes each.
    """
    files = (
        SourceFile("cat.jpg", _jpeg_like(11, 24_000 * scale), "rle-v1"),
        SourceFile("jane.txt", _text(12, 40_000 * scale), "deflate-v1"),
        SourceFile("monalisa.bmp", _bmp_like(13, 250, 240 * scale), "rle-v1"),
        SourceFile("leo.txt", _text(14, 30_000 * scale), "deflate-v1"),
        SourceFile("mix", _mix(15) * scale, "rle-v1"),
    )
    tool_specs = tuple(ToolSpec(name, tools.tool_blob(name, tool_blob_size))
                       for name in ("deflate-v1", "rle-v1"))
    return Corpus(files, tool_specs)


def large_corpus(text_bytes: int = 4 * 2**20, photo_bytes: int = 1_650_000,
                       deflate_blob: int = 194 * 1024, rle_blob: int = 87 * 1024) -> Corpus:
    """Large corpus with tool blobs sized like real archivers (194 KB and 87 KB).

    Three English-like texts use ``deflate-v1`` (ratio near 0.25) and two
    photo-like files use ``rle-v1`` (next to incompressible). With the
    defaults the compressed data comes to about 6.5 MB.
    """
    files = []
    for i in range(5):
        if i % 2 == 0:
            files.append(SourceFile(f"text{i}.txt", _text(100 + i, text_bytes), "deflate-v1"))
        else:
            files.append(SourceFile(f"photo{i}.jpg", _jpeg_like(100 + i, photo_bytes), "rle-v1"))
    return Corpus(tuple(files), (ToolSpec("deflate-v1", tools.tool_blob("deflate-v1", deflate_blob)),
                                 ToolSpec("rle-v1", tools.tool_blob("rle-v1", rle_blob))))
