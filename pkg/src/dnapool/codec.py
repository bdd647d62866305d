"""Bytes <-> nucleotides, and long sequences <-> addressed fragments.

Two codec profiles are provided:

``naive2``
    A=00, C=01, G=10, T=11, most significant bit pair first. 2 bits/base, no
    homopolymer guarantee.

``rot3``
    Bytes are cut into 16-byte blocks, each block read as a big-endian integer
    and written as 81 base-3 digits (a trailing partial block of k bytes uses
    the fewest digits m with 3**m >= 256**k). Each digit then selects one of
    the three bases that differ from the previous base, so no base ever
    repeats. The rate is 128/81 bits/base and the encoded length of L bytes is
    exactly ceil(81 * L / 16).

Fragments are laid out 5' to 3' as::

    head sites | A | address | payload | class | T | tail site

with the address written in a fixed number of bases by the active profile and
the class flag a single base (A = data, C = tool).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BadClassFlag,
    BadDirectionMarker,
    BadPrimerSite,
    BadSymbol,
    CapacityExceeded,
    ConflictingDuplicate,
    LengthMismatch,
    MissingAddress,
    Truncated,
)

BASES = "ACGT"
_LUT = np.frombuffer(b"ACGT", dtype=np.uint8)
_INDEX = np.full(256, 255, dtype=np.uint8)
for _i, _c in enumerate(b"ACGT"):
    _INDEX[_c] = _i

_BLOCK_BYTES = 16
_BLOCK_TRITS = 81
_LIMB_MASK = np.uint64(0xFFFFFFFF)
# digits needed for a partial block of k bytes: smallest m with 3**m >= 256**k
_PARTIAL_TRITS = [0] + [next(m for m in range(200) if 3 ** m >= 256 ** k) for k in range(1, 17)]

_COMPLEMENT = str.maketrans("ACGT", "TGCA")


def reverse_complement(seq: str) -> str:
    return seq.translate(_COMPLEMENT)[::-1]


def _to_indices(seq: str) -> np.ndarray:
    raw = np.frombuffer(seq.encode("ascii", errors="replace"), dtype=np.uint8)
    idx = _INDEX[raw]
    bad = np.flatnonzero(idx == 255)
    if bad.size:
        pos = int(bad[0])
        raise BadSymbol(f"invalid nucleotide {seq[pos]!r} at position {pos}")
    return idx


def _to_str(idx: np.ndarray) -> str:
    return _LUT[idx].tobytes().decode("ascii")


# -- naive2 -----------------------------------------------------------------

def _naive2_encode(data: bytes) -> str:
    arr = np.frombuffer(data, dtype=np.uint8)
    digits = np.stack([(arr >> s) & 3 for s in (6, 4, 2, 0)], axis=1).reshape(-1)
    return _to_str(digits)


def _naive2_decode(seq: str) -> bytes:
    d = _to_indices(seq).reshape(-1, 4).astype(np.uint8)
    out = (d[:, 0] << 6) | (d[:, 1] << 4) | (d[:, 2] << 2) | d[:, 3]
    return out.astype(np.uint8).tobytes()


# -- rot3 -------------------------------------------------------------------

def _blocks_to_trits(blocks: np.ndarray, n_trits: int) -> np.ndarray:
    """(q, 16) uint8 -> (q, n_trits) trits, most significant first."""
    limbs = blocks.copy().view(">u4").astype(np.uint64)  # (q, 4)
    out = np.empty((blocks.shape[0], n_trits), dtype=np.uint8)
    for t in range(n_trits - 1, -1, -1):
        r = np.zeros(blocks.shape[0], dtype=np.uint64)
        for j in range(4):
            cur = (r << np.uint64(32)) | limbs[:, j]
            limbs[:, j] = cur // np.uint64(3)
            r = cur % np.uint64(3)
        out[:, t] = r
    return out


def _trits_to_blocks(trits: np.ndarray, n_bytes: int) -> np.ndarray:
    """(q, m) trits -> (q, n_bytes) uint8; raises BadSymbol on overflow."""
    q = trits.shape[0]
    limbs = np.zeros((q, 4), dtype=np.uint64)
    overflow = np.zeros(q, dtype=bool)
    for t in range(trits.shape[1]):
        carry = trits[:, t].astype(np.uint64)
        for j in range(3, -1, -1):
            cur = limbs[:, j] * np.uint64(3) + carry
            limbs[:, j] = cur & _LIMB_MASK
            carry = cur >> np.uint64(32)
        overflow |= carry != 0
    full = limbs.astype(">u4").view(np.uint8).reshape(q, _BLOCK_BYTES)
    if n_bytes < _BLOCK_BYTES:
        overflow |= full[:, : _BLOCK_BYTES - n_bytes].any(axis=1)
    if overflow.any():
        raise BadSymbol("rot3 digit group exceeds its byte range")
    return full[:, _BLOCK_BYTES - n_bytes:]


def _rotate(trits: np.ndarray, prev: int = 0) -> np.ndarray:
    # base_i = base_{i-1} + 1 + trit_i (mod 4), starting after ``prev``
    return ((np.cumsum(trits.astype(np.int64) + 1) + prev) % 4).astype(np.uint8)


def _unrotate(idx: np.ndarray, prev: int = 0) -> np.ndarray:
    prevs = np.concatenate(([prev], idx[:-1])).astype(np.int64)
    trits = (idx.astype(np.int64) - prevs - 1) % 4
    bad = np.flatnonzero(trits == 3)
    if bad.size:
        raise BadSymbol(f"repeated base at position {int(bad[0])} is not a rot3 image")
    return trits.astype(np.uint8)


def _rot3_encode(data: bytes) -> str:
    q, k = divmod(len(data), _BLOCK_BYTES)
    parts = []
    if q:
        blocks = np.frombuffer(data[: q * _BLOCK_BYTES], dtype=np.uint8).reshape(q, _BLOCK_BYTES)
        parts.append(_blocks_to_trits(blocks, _BLOCK_TRITS).reshape(-1))
    if k:
        tail = np.zeros((1, _BLOCK_BYTES), dtype=np.uint8)
        tail[0, _BLOCK_BYTES - k:] = np.frombuffer(data[q * _BLOCK_BYTES:], dtype=np.uint8)
        parts.append(_blocks_to_trits(tail, _PARTIAL_TRITS[k]).reshape(-1))
    if not parts:
        return ""
    return _to_str(_rotate(np.concatenate(parts)))


def _rot3_decode(seq: str, n_bytes: int) -> bytes:
    q, k = divmod(n_bytes, _BLOCK_BYTES)
    trits = _unrotate(_to_indices(seq))
    out = []
    if q:
        out.append(_trits_to_blocks(trits[: q * _BLOCK_TRITS].reshape(q, _BLOCK_TRITS),
                                    _BLOCK_BYTES).tobytes())
    if k:
        out.append(_trits_to_blocks(trits[q * _BLOCK_TRITS:].reshape(1, -1), k).tobytes())
    return b"".join(out)


# -- profiles ---------------------------------------------------------------

@dataclass(frozen=True)
class CodecProfile:
    name: str
    bits_per_base: Fraction
    homopolymer_limit: int | None
    address_radix: int = field(repr=False, default=4)

    @property
    def base_factor(self) -> Fraction:
        """a, in bases per bit."""
        return 1 / self.bits_per_base

    def encoded_length(self, n_bytes: int) -> int:
        return math.ceil(8 * n_bytes / self.bits_per_base)

    def decoded_length(self, n_bases: int) -> int:
        """Inverse of ``encoded_length``; LengthMismatch if ``n_bases`` is not an image."""
        n = math.floor(n_bases * self.bits_per_base / 8)
        while n > 0 and self.encoded_length(n) > n_bases:
            n -= 1
        if self.encoded_length(n) != n_bases:
            raise LengthMismatch(f"{n_bases} nt is not a valid {self.name} encoding length")
        return n

    def prefix_unit(self) -> tuple[int, int]:
        """(bases, bytes) of the smallest independently decodable leading unit."""
        if self.name == "rot3":
            return _BLOCK_TRITS, _BLOCK_BYTES
        return 4, 1

    def address_capacity(self, address_len: int) -> int:
        return self.address_radix ** address_len


NAIVE2 = CodecProfile("naive2", Fraction(2), None, 4)
ROT3 = CodecProfile("rot3", Fraction(128, 81), 1, 3)
PROFILES = {p.name: p for p in (NAIVE2, ROT3)}


def get_profile(name: str | CodecProfile) -> CodecProfile:
    if isinstance(name, CodecProfile):
        return name
    try:
        return PROFILES[name]
    except KeyError:
        raise ValueError(f"unknown codec {name!r}; choose from {sorted(PROFILES)}") from None


def encode_bits(data: bytes, profile: CodecProfile | str) -> str:
    profile = get_profile(profile)
    data = bytes(data)
    if profile.name == "naive2":
        return _naive2_encode(data)
    return _rot3_encode(data)


def decode_bits(seq: str, profile: CodecProfile | str, expected_len: int) -> bytes:
    profile = get_profile(profile)
    if len(seq) != profile.encoded_length(expected_len):
        # validate symbols first so a bad character is reported as such
        _to_indices(seq)
        raise LengthMismatch(
            f"{len(seq)} nt cannot hold exactly {expected_len} bytes under {profile.name}"
            f" (expected {profile.encoded_length(expected_len)} nt)")
    if profile.name == "naive2":
        return _naive2_decode(seq)
    return _rot3_decode(seq, expected_len)


def decode_prefix(seq: str, profile: CodecProfile | str, n_bytes: int) -> bytes:
    """First ``n_bytes`` of the stream whose encoding starts with ``seq``.

    Only valid when the full stream is at least as long as the decodable
    units covering ``n_bytes`` (always true for rot3 streams >= 16 bytes).
    """
    profile = get_profile(profile)
    unit_nt, unit_bytes = profile.prefix_unit()
    units = -(-n_bytes // unit_bytes)
    if len(seq) < units * unit_nt:
        raise Truncated(f"need {units * unit_nt} nt to read {n_bytes} leading bytes")
    return decode_bits(seq[: units * unit_nt], profile, units * unit_bytes)[:n_bytes]


# -- addresses --------------------------------------------------------------

def encode_address(address: int, profile: CodecProfile | str, width: int = 16) -> str:
    profile = get_profile(profile)
    cap = profile.address_capacity(width)
    if not (0 <= address < cap):
        raise CapacityExceeded(f"address {address} does not fit {width} {profile.name} digits")
    digits = np.zeros(width, dtype=np.uint8)
    r = profile.address_radix
    for i in range(width - 1, -1, -1):
        address, digits[i] = divmod(address, r)
    if profile.name == "rot3":
        # continues the rotation from the 5' direction marker A
        return _to_str(_rotate(digits, prev=0))
    return _to_str(digits)


def decode_address(seq: str, profile: CodecProfile | str) -> int:
    profile = get_profile(profile)
    idx = _to_indices(seq)
    digits = _unrotate(idx, prev=0) if profile.name == "rot3" else idx
    value = 0
    for d in digits.tolist():
        value = value * profile.address_radix + d
    return value


# -- fragments --------------------------------------------------------------

DIRECTION_HEAD = "A"
DIRECTION_TAIL = "T"
DIRECTION_LEN = 2
CLASS_LEN = 1


class SiteRole(enum.Enum):
    FILE_FWD = "file_fwd"
    FILE_REV = "file_rev"
    UNIVERSAL = "universal"
    EMBEDDED_POINTER = "embedded_pointer"


class FragmentClass(enum.Enum):
    DATA = "A"
    TOOL = "C"


@dataclass(frozen=True)
class FragmentLayout:
    """Length budget of one fragment kind.

    ``sites`` is the number of primer sites (2 for ordinary fragments, n+1
    for tool fragments bound to n files). When ``payload_len`` is omitted it
    is the remaining capacity rounded down to a multiple of 4.
    """

    ls: int = 220
    lp: int = 20
    sites: int = 2
    address_len: int = 16
    payload_len: int = -1

    def __post_init__(self):
        room = self.ls - self.sites * self.lp - self.index_len
        if self.payload_len < 0:
            object.__setattr__(self, "payload_len", (room // 4) * 4)
        if self.payload_len <= 0 or self.payload_len > room:
            raise CapacityExceeded(
                f"layout ls={self.ls} lp={self.lp} sites={self.sites} leaves {room} nt"
                f" for a payload of {self.payload_len}")

    @property
    def index_len(self) -> int:
        """Non-primer, non-payload bases: direction markers, address, class flag."""
        return DIRECTION_LEN + CLASS_LEN + self.address_len

    @property
    def overhead(self) -> int:
        return self.sites * self.lp + self.index_len

    @property
    def fragment_len(self) -> int:
        return self.overhead + self.payload_len


@dataclass(frozen=True)
class Fragment:
    primer_sites: tuple[tuple[SiteRole, str], ...]
    address: int
    class_flag: FragmentClass
    payload: str
    codec: str = "rot3"
    address_len: int = 16

    @property
    def head_sites(self) -> tuple[tuple[SiteRole, str], ...]:
        return self.primer_sites[:-1]

    @property
    def tail_site(self) -> tuple[SiteRole, str]:
        return self.primer_sites[-1]

    @property
    def flat(self) -> str:
        head = "".join(s for _, s in self.head_sites)
        addr = encode_address(self.address, self.codec, self.address_len)
        return (head + DIRECTION_HEAD + addr + self.payload + self.class_flag.value
                + DIRECTION_TAIL + self.tail_site[1])


def segment_sequence(seq: str, layout: FragmentLayout,
                     profile: CodecProfile | str = "rot3") -> list[tuple[int, str]]:
    """Cut ``seq`` into payload-sized chunks; the last chunk may be shorter."""
    profile = get_profile(profile)
    p = layout.payload_len
    chunks = [(i, seq[off:off + p]) for i, off in enumerate(range(0, len(seq), p))]
    if len(chunks) > profile.address_capacity(layout.address_len):
        raise CapacityExceeded(
            f"{len(chunks)} fragments exceed the {layout.address_len}-digit address space")
    return chunks


def build_fragment(chunk: str, address: int, class_flag: FragmentClass,
                   primer_sites: Sequence[tuple[SiteRole, str]], layout: FragmentLayout,
                   profile: CodecProfile | str = "rot3") -> Fragment:
    profile = get_profile(profile)
    if len(primer_sites) != layout.sites:
        raise CapacityExceeded(f"layout has {layout.sites} primer sites, got {len(primer_sites)}")
    if len(chunk) > layout.payload_len:
        raise CapacityExceeded(f"payload of {len(chunk)} nt exceeds {layout.payload_len}")
    frag = Fragment(tuple((SiteRole(r), s) for r, s in primer_sites), address,
                    FragmentClass(class_flag), chunk, profile.name, layout.address_len)
    n = len(frag.flat)
    if n > layout.ls:
        raise CapacityExceeded(f"fragment of {n} nt exceeds ls={layout.ls}")
    return frag


def parse_fragment(flat: str, layout: FragmentLayout,
                   expected_sites: Sequence[tuple[SiteRole, str]],
                   profile: CodecProfile | str = "rot3") -> Fragment:
    """Recover address, class and payload from ``flat``.

    ``expected_sites`` lists the primer sites the reader expects (head sites
    in order, then the tail site); they must match exactly.
    """
    profile = get_profile(profile)
    if len(expected_sites) != layout.sites:
        raise BadPrimerSite(f"layout has {layout.sites} sites, {len(expected_sites)} expected")
    head = "".join(s for _, s in expected_sites[:-1])
    tail = expected_sites[-1][1]
    if len(flat) < len(head) + len(tail) + layout.index_len:
        raise Truncated(f"fragment of {len(flat)} nt is too short for its layout")
    if not flat.startswith(head):
        raise BadPrimerSite("5' primer sites do not match")
    if not flat.endswith(tail):
        raise BadPrimerSite("3' primer site does not match")
    mid = flat[len(head): len(flat) - len(tail)]
    if mid[0] != DIRECTION_HEAD or mid[-1] != DIRECTION_TAIL:
        raise BadDirectionMarker(f"direction markers are {mid[0]!r}...{mid[-1]!r}, want 'A'...'T'")
    try:
        cls = FragmentClass(mid[-2])
    except ValueError:
        raise BadClassFlag(f"class flag {mid[-2]!r} is neither A (data) nor C (tool)") from None
    a = layout.address_len
    address = decode_address(mid[1:1 + a], profile)
    payload = mid[1 + a:-2]
    if len(payload) > layout.payload_len:
        raise LengthMismatch(f"payload of {len(payload)} nt exceeds {layout.payload_len}")
    _to_indices(payload)
    return Fragment(tuple((SiteRole(r), s) for r, s in expected_sites), address, cls,
                    payload, profile.name, a)


def reassemble(fragments: Iterable[Fragment], expected_count: int) -> str:
    """Concatenate payloads by address; order- and duplicate-insensitive."""
    by_addr: dict[int, str] = {}
    for f in fragments:
        seen = by_addr.get(f.address)
        if seen is None:
            by_addr[f.address] = f.payload
        elif seen != f.payload:
            raise ConflictingDuplicate(f"address {f.address} carries two different payloads")
    extra = [a for a in by_addr if a >= expected_count]
    if extra:
        raise LengthMismatch(f"addresses {sorted(extra)} lie beyond the expected {expected_count}")
    missing = [a for a in range(expected_count) if a not in by_addr]
    if missing:
        raise MissingAddress(missing, expected_count)
    return "".join(by_addr[a] for a in range(expected_count))
