"""Simulated oligo pool: persistence, PCR selection, sequencing and random read.

A pool directory holds two text files::

    pool.dnapool   #dnapool v1 codec=<c> ls=<n> lp=<n> method=<m>
                   <record-id>\\t<ACGT...>          (one line per oligo, sorted)
    manifest.tsv   fid name kind method fwd rev tool_fid orig_size comp_size

Record ids are the first 12 hex digits of the oligo's sha1. Empty manifest
cells are written as ``-``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from filelock import FileLock

from . import codec, container, tools
from .codec import Fragment, FragmentClass, FragmentLayout, SiteRole
from .errors import (
    BadClassFlag,
    BadDirectionMarker,
    BadPrimerSite,
    BadSymbol,
    CorruptPool,
    EmptyPrimerSet,
    FidNotFound,
    HeaderMismatch,
    InvariantViolation,
    LengthMismatch,
    MissingAddress,
    ToolNotFound,
    Truncated,
)
from .analytics import CostModelParams
from .methods import (ArchivePlan, MethodKind, decode_pointer, materialize_streams, mci_tool_sites,
                      pointer_size)
from .primers import PrimerPair

POOL_FILE = "pool.dnapool"
MANIFEST_FILE = "manifest.tsv"
LOCK_FILE = ".dnapool.lock"
MANIFEST_COLUMNS = ("fid", "name", "kind", "method", "fwd", "rev", "tool_fid",
                    "orig_size", "comp_size")


@dataclass(frozen=True)
class PoolHeader:
    codec: str
    ls: int
    lp: int
    method: str

    def line(self) -> str:
        return f"#dnapool v1 codec={self.codec} ls={self.ls} lp={self.lp} method={self.method}"

    @classmethod
    def parse(cls, line: str) -> "PoolHeader":
        parts = line.strip().split()
        if len(parts) != 6 or parts[:2] != ["#dnapool", "v1"]:
            raise CorruptPool(f"not a dnapool v1 header: {line.strip()[:60]!r}")
        try:
            kv = dict(p.split("=", 1) for p in parts[2:])
            h = cls(kv["codec"], int(kv["ls"]), int(kv["lp"]), kv["method"])
        except (ValueError, KeyError) as exc:
            raise CorruptPool(f"malformed pool header: {exc}") from None
        if h.codec not in codec.PROFILES:
            raise CorruptPool(f"unknown codec {h.codec!r} in header")
        try:
            MethodKind.parse(h.method)
        except ValueError:
            raise CorruptPool(f"unknown method {h.method!r} in header") from None
        return h


@dataclass(frozen=True)
class ManifestEntry:
    fid: int
    name: str
    kind: str  # "data" or "tool"
    method: str
    fwd: str
    rev: str
    tool_fid: int | None
    orig_size: int
    comp_size: int

    def row(self) -> list[str]:
        return [str(self.fid), self.name, self.kind, self.method, self.fwd or "-", self.rev or "-",
                "-" if self.tool_fid is None else str(self.tool_fid),
                str(self.orig_size), str(self.comp_size)]

    @classmethod
    def from_row(cls, row: Sequence[str]) -> "ManifestEntry":
        if len(row) != len(MANIFEST_COLUMNS):
            raise CorruptPool(f"manifest row has {len(row)} columns, want {len(MANIFEST_COLUMNS)}")
        v = [None if c == "-" else c for c in row]
        try:
            return cls(int(v[0]), v[1] or "", v[2], v[3], v[4] or "", v[5] or "",
                       None if v[6] is None else int(v[6]), int(v[7]), int(v[8]))
        except (TypeError, ValueError) as exc:
            raise CorruptPool(f"bad manifest row {row!r}: {exc}") from None


@dataclass
class Manifest:
    entries: list[ManifestEntry] = field(default_factory=list)

    def validate(self) -> None:
        fids = [e.fid for e in self.entries]
        if len(set(fids)) != len(fids):
            raise InvariantViolation("manifest FIDs must be unique")
        tools_ = {e.fid for e in self.entries if e.kind == "tool"}
        for e in self.entries:
            if e.kind == "data" and e.tool_fid is not None and e.tool_fid not in tools_:
                raise InvariantViolation(f"file {e.fid} names missing tool FID {e.tool_fid}")

    def get(self, fid: int) -> ManifestEntry:
        for e in self.entries:
            if e.fid == fid:
                return e
        raise FidNotFound(f"FID {fid} is not in the manifest")

    def find(self, key: str | int) -> ManifestEntry:
        """Look up by FID or by file name."""
        if isinstance(key, int) or str(key).isdigit():
            return self.get(int(key))
        for e in self.entries:
            if e.name == key and e.kind == "data":
                return e
        raise FidNotFound(f"no data file named {key!r}")

    def data(self) -> list[ManifestEntry]:
        return [e for e in self.entries if e.kind == "data"]

    def bound_to(self, tool_fid: int) -> list[ManifestEntry]:
        return sorted((e for e in self.data() if e.tool_fid == tool_fid), key=lambda e: e.fid)

    def dumps(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, delimiter="\t", lineterminator="\n")
        w.writerow(MANIFEST_COLUMNS)
        for e in sorted(self.entries, key=lambda e: e.fid):
            w.writerow(e.row())
        return buf.getvalue()

    @classmethod
    def loads(cls, text: str) -> "Manifest":
        rows = list(csv.reader(io.StringIO(text), delimiter="\t"))
        if not rows or tuple(rows[0]) != MANIFEST_COLUMNS:
            raise CorruptPool("manifest header row is missing or wrong")
        m = cls([ManifestEntry.from_row(r) for r in rows[1:] if r])
        m.validate()
        return m

    @classmethod
    def from_plan(cls, plan: ArchivePlan) -> "Manifest":
        tok = plan.method.value
        out = []
        inline: dict[str, int] = {}
        if plan.method is MethodKind.ONE_ONE_CS:
            # inlined tools own no oligos; their rows only record the TD size
            nxt = max(e.fid for e in plan.entries) + 1
            for name in plan.tool_sizes:
                inline[name] = nxt
                out.append(ManifestEntry(nxt, name, "tool", tok, "", "", None,
                                         plan.tool_sizes[name], plan.tool_sizes[name]))
                nxt += 1
        for e in plan.entries:
            tfid = inline.get(e.tool_name) if inline else e.record.tfid
            out.append(ManifestEntry(e.fid, e.name, "data", tok, *e.pair.seqs, tfid,
                                     e.original_size, e.compressed_size))
        for t in plan.tools:
            pair = t.pair if t.pair is not None else plan.universal
            size = len(t.record.td)
            out.append(ManifestEntry(t.fid, t.name, "tool", tok, *pair.seqs, None, size, size))
        return cls(out)


def record_id(seq: str) -> str:
    return hashlib.sha1(seq.encode("ascii")).hexdigest()[:12]


@dataclass
class OligoPool:
    header: PoolHeader
    fragments: list[str]
    path: Path | None = None

    def __post_init__(self):
        self.fragments = sorted(self.fragments, key=lambda s: (record_id(s), s))

    def validate(self) -> None:
        for s in self.fragments:
            if len(s) > self.header.ls:
                raise CorruptPool(f"oligo of {len(s)} nt exceeds ls={self.header.ls}")
            if set(s) - set("ACGT"):
                raise CorruptPool("oligo contains symbols outside ACGT")

    @property
    def total_bases(self) -> int:
        return sum(map(len, self.fragments))

    def dumps(self) -> str:
        lines = [self.header.line()] + [f"{record_id(s)}\t{s}" for s in self.fragments]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str, path: Path | None = None) -> "OligoPool":
        lines = text.splitlines()
        if not lines:
            raise CorruptPool("pool file is empty")
        header = PoolHeader.parse(lines[0])
        frags = []
        for n, line in enumerate(lines[1:], 2):
            if not line:
                continue
            rid, sep, seq = line.partition("\t")
            if not sep or record_id(seq) != rid:
                raise CorruptPool(f"line {n}: record id does not match its sequence")
            frags.append(seq)
        pool = cls(header, frags, path)
        pool.validate()
        return pool


def header_for(plan: ArchivePlan) -> PoolHeader:
    return PoolHeader(plan.codec.name, plan.layout.ls, plan.layout.lp, plan.method.value)


def pool_write(plan: ArchivePlan, pool_dir: str | Path, append: bool = False) -> tuple[OligoPool, Manifest]:
    """Materialize ``plan`` and persist it; ``append`` merges into an existing pool."""
    pool_dir = Path(pool_dir)
    pool_dir.mkdir(parents=True, exist_ok=True)
    header = header_for(plan)
    frags = [f.flat for ms in materialize_streams(plan) for f in ms.fragments]
    manifest = Manifest.from_plan(plan)
    with FileLock(str(pool_dir / LOCK_FILE)):
        if append and (pool_dir / POOL_FILE).exists():
            old_pool, old_manifest = pool_load(pool_dir)
            if old_pool.header != header:
                raise HeaderMismatch(f"pool header {old_pool.header.line()!r} differs from "
                                     f"{header.line()!r}")
            frags = old_pool.fragments + frags
            manifest = Manifest(old_manifest.entries + manifest.entries)
        manifest.validate()
        pool = OligoPool(header, frags, pool_dir)
        pool.validate()
        (pool_dir / POOL_FILE).write_text(pool.dumps())
        (pool_dir / MANIFEST_FILE).write_text(manifest.dumps())
    return pool, manifest


def pool_load(pool_dir: str | Path) -> tuple[OligoPool, Manifest]:
    pool_dir = Path(pool_dir)
    try:
        pool_text = (pool_dir / POOL_FILE).read_text()
        manifest_text = (pool_dir / MANIFEST_FILE).read_text()
    except UnicodeDecodeError as exc:
        raise CorruptPool(f"pool files are not text: {exc}") from None
    return OligoPool.loads(pool_text, pool_dir), Manifest.loads(manifest_text)


# -- wet-lab steps ----------------------------------------------------------

def _flanked(seq: str, primers: Sequence[str]) -> bool:
    # some p at i and some q (or its reverse complement) at j > i + |p|
    first_end = min((i + len(p) for p in primers if (i := seq.find(p)) >= 0), default=None)
    if first_end is None:
        return False
    for q in primers:
        for s in {q, codec.reverse_complement(q)}:
            if seq.rfind(s) > first_end:
                return True
    return False


def amplify(pool: OligoPool, primer_set: Iterable[str]) -> list[str]:
    """Copies of every oligo flanked by two sites from ``primer_set``."""
    primers = sorted(set(primer_set))
    if not primers:
        raise EmptyPrimerSet("amplification needs at least one primer")
    return [s for s in pool.fragments if _flanked(s, primers)]


@dataclass(frozen=True)
class SequencingRun:
    reads: tuple[str, ...]
    dropout_rate: float
    seed: int


def sequence(amplified: Sequence[str], dropout_rate: float = 0.0, seed: int = 0) -> SequencingRun:
    """Shuffle the amplified oligos and drop each with probability ``dropout_rate``."""
    if not (0.0 <= dropout_rate < 1.0):
        raise ValueError(f"dropout rate must lie in [0, 1), got {dropout_rate}")
    rng = random.Random(seed)
    reads = list(amplified)
    rng.shuffle(reads)
    if dropout_rate:
        reads = [r for r in reads if rng.random() >= dropout_rate]
    return SequencingRun(tuple(reads), dropout_rate, seed)


# -- decoding ---------------------------------------------------------------

def _layout(header: PoolHeader, sites: Sequence[tuple[SiteRole, str]]) -> FragmentLayout:
    lp = max([header.lp] + [len(s) for _, s in sites])
    return FragmentLayout(header.ls, lp, len(sites))


def _try_parse(read: str, layout: FragmentLayout, sites, profile) -> Fragment | None:
    try:
        return codec.parse_fragment(read, layout, sites, profile)
    except (BadPrimerSite, BadDirectionMarker, BadClassFlag, BadSymbol, LengthMismatch, Truncated):
        return None


def _stream_from(frags: Sequence[Fragment], layout: FragmentLayout, profile) -> bytes:
    """Reassemble one stream, working out its fragment count from its first bytes."""
    by_addr = {}
    for f in frags:
        by_addr.setdefault(f.address, f)
    unit_nt, _ = profile.prefix_unit()
    lead, a = "", 0
    while len(lead) < unit_nt and a in by_addr:
        lead += by_addr[a].payload
        a += 1
    if len(lead) < unit_nt:
        # the stream length is unknown, so report gaps up to the highest address seen
        expected = max(max(by_addr, default=-1) + 1, a + 1)
        raise MissingAddress([i for i in range(expected) if i not in by_addr], expected)
    total = container.stream_length(codec.decode_prefix(lead, profile, container.STREAM_HEADER_SIZE))
    n_nt = profile.encoded_length(total)
    count = -(-n_nt // layout.payload_len)
    seq = codec.reassemble(frags, count)
    return codec.decode_bits(seq, profile, total)


@dataclass
class ReadResult:
    data: bytes
    rounds_used: int
    reads: int
    bases: int
    tool: container.ToolPayload | None = None  # the TD that restored the data, if any


class _Reader:
    def __init__(self, pool: OligoPool, manifest: Manifest, dropout: float, seed: int,
                 registry: tools.ToolRegistry):
        self.pool, self.manifest = pool, manifest
        self.header = pool.header
        self.profile = codec.get_profile(pool.header.codec)
        self.dropout, self.seed = dropout, seed
        self.registry = registry
        self.rounds = self.reads = self.bases = 0

    def round(self, primers: Iterable[str]) -> tuple[str, ...]:
        run = sequence(amplify(self.pool, primers), self.dropout, self.seed + self.rounds)
        self.rounds += 1
        self.reads += len(run.reads)
        self.bases += sum(map(len, run.reads))
        return run.reads

    def collect(self, reads, site_options, cls: FragmentClass) -> tuple[list[Fragment], FragmentLayout]:
        layout = _layout(self.header, site_options[0])
        layout = FragmentLayout(layout.ls, max([layout.lp] + [len(s) for opt in site_options
                                                              for _, s in opt]), layout.sites)
        out = []
        for r in reads:
            for k, sites in enumerate(site_options):
                f = _try_parse(r, layout, sites, self.profile)
                if f is not None and f.class_flag is cls and (len(site_options) == 1
                                                              or f.address % 2 == k):
                    out.append(f)
                    break
        return out, layout

    def data_records(self, reads, entry: ManifestEntry) -> bytes:
        sites = ((SiteRole.FILE_FWD, entry.fwd), (SiteRole.FILE_REV, entry.rev))
        frags, layout = self.collect(reads, [sites], FragmentClass.DATA)
        return container.stream_body(_stream_from(frags, layout, self.profile))

    def tool_stream(self, reads, sites_options) -> bytes:
        frags, layout = self.collect(reads, sites_options, FragmentClass.TOOL)
        return container.stream_body(_stream_from(frags, layout, self.profile))


def random_read(pool: OligoPool, manifest: Manifest, fid: int | str, seed: int = 0,
                dropout_rate: float = 0.0,
                registry: tools.ToolRegistry = tools.DEFAULT_REGISTRY) -> ReadResult:
    """Recover file ``fid`` from the pool with the protocol of the pool's method."""
    entry = manifest.find(fid)
    if entry.kind != "data":
        raise FidNotFound(f"FID {entry.fid} is a tool, not a data file")
    method = MethodKind.parse(pool.header.method)
    rd = _Reader(pool, manifest, dropout_rate, seed, registry)
    raws: list[bytes] = []

    if method is MethodKind.ONE_ONE_CS:
        reads = rd.round([entry.fwd, entry.rev])
        raws = container.unframe(rd.data_records(reads, entry))

    elif method is MethodKind.M_ONE_CI:
        reads = rd.round([entry.fwd, entry.rev])
        body = rd.data_records(reads, entry)
        if entry.tool_fid is None:
            raws = container.unframe(body)
        else:
            (tf, tr), body = decode_pointer(body)
            raws = container.unframe(body)
            tool_reads = rd.round([tf, tr])
            sites = ((SiteRole.FILE_FWD, tf), (SiteRole.FILE_REV, tr))
            raws += container.unframe(rd.tool_stream(tool_reads, [sites]))

    else:
        if entry.tool_fid is None:
            reads = rd.round([entry.fwd, entry.rev])
            raws = container.unframe(rd.data_records(reads, entry))
        else:
            try:
                tool = manifest.get(entry.tool_fid)
            except FidNotFound:
                raise ToolNotFound(f"tool FID {entry.tool_fid} is not in the manifest") from None
            reads = rd.round([entry.fwd, entry.rev, tool.fwd, tool.rev])
            bound = [PrimerPair.of(e.fwd, e.rev, str(e.fid)) for e in manifest.bound_to(tool.fid)]
            universal = PrimerPair.of(tool.fwd, tool.rev, "universal", True)
            options = [mci_tool_sites(bound, universal, 0), mci_tool_sites(bound, universal, 1)]
            raws = container.unframe(rd.data_records(reads, entry))
            raws += container.unframe(rd.tool_stream(reads, options))

    datafiles, toolfiles = container.split_records(raws)
    data = container.read_file(entry.fid, datafiles, toolfiles, registry)
    return ReadResult(data, rd.rounds, rd.reads, rd.bases, _used_tool(entry.fid, datafiles, toolfiles))


def _used_tool(fid, datafiles, toolfiles) -> container.ToolPayload | None:
    rec = next(a for a in datafiles if a.fid == fid)
    if rec.sm == container.StorageMethod.CPF:
        return container.ToolPayload.from_bytes(rec.td)
    if rec.sm == container.StorageMethod.SPF:
        t = next(t for t in toolfiles if t.fid == rec.dl_or_tfid)
        return container.ToolPayload.from_bytes(t.td)
    return None


# -- statistics -------------------------------------------------------------

@dataclass
class PoolStats:
    method: str
    codec: str
    ls: int
    lp: int
    n_fragments: int
    total_bases: int
    per_file_bases: dict
    n_data_files: int
    original_bytes: int
    unclassified: int = 0

    @property
    def density(self) -> float:
        return 8 * self.original_bytes / self.total_bases if self.total_bases else 0.0

    @property
    def codec_density(self) -> float:
        return float(codec.get_profile(self.codec).bits_per_base)

    def report(self) -> str:
        lines = [f"method={self.method} codec={self.codec} ls={self.ls} lp={self.lp}",
                 f"fragments={self.n_fragments} bases={self.total_bases} data_files={self.n_data_files}"
                 f" original_bytes={self.original_bytes}",
                 f"density={self.density:.6f} codec_density={self.codec_density:.6f}"
                 f" ratio={self.density / self.codec_density:.6f}",
                 "fid\tbases"]
        lines += [f"{fid}\t{b}" for fid, b in sorted(self.per_file_bases.items())]
        return "\n".join(lines)


def classify(seq: str, manifest: Manifest, method: MethodKind) -> int | None:
    """FID whose stream this oligo belongs to, from its primer sites."""
    for e in manifest.entries:
        if e.fwd and (e.kind == "data" or method is not MethodKind.ONE_M_CI):
            if seq.startswith(e.fwd) and seq.endswith(e.rev):
                return e.fid
    for e in manifest.entries:
        if e.kind == "tool" and e.rev and seq.endswith(e.rev):
            bound = manifest.bound_to(e.fid)
            if bound and (seq.startswith(bound[0].fwd) or seq.startswith(bound[0].rev)):
                return e.fid
    return None


def pool_stats(pool: OligoPool, manifest: Manifest) -> PoolStats:
    method = MethodKind.parse(pool.header.method)
    per_file: Counter = Counter()
    unclassified = 0
    for s in pool.fragments:
        fid = classify(s, manifest, method)
        if fid is None:
            unclassified += 1
        else:
            per_file[fid] += len(s)
    data = manifest.data()
    return PoolStats(pool.header.method, pool.header.codec, pool.header.ls, pool.header.lp,
                     len(pool.fragments), pool.total_bases, dict(per_file), len(data),
                     sum(e.orig_size for e in data), unclassified)


def manifest_cost_groups(header: PoolHeader, manifest: Manifest,
                         geometry: str = "pool") -> list[CostModelParams]:
    """Cost-model parameters recovered from a manifest, one group per tool.

    Mirrors ``methods.cost_groups`` so a pool can be audited without its plan.
    """
    method = MethodKind.parse(header.method)
    a = codec.get_profile(header.codec).base_factor
    extra = {}
    if geometry == "pool":
        extra = {"index_len": FragmentLayout(header.ls, header.lp).index_len, "payload_quantum": 4}
    groups = []
    plain = [e for e in manifest.data() if e.tool_fid is None]
    for t in sorted((e for e in manifest.entries if e.kind == "tool"), key=lambda e: e.fid):
        es = manifest.bound_to(t.fid)
        if not es:
            continue
        ptr = None
        if method is MethodKind.M_ONE_CI:
            ptr = Fraction(pointer_size(len(t.fwd), len(t.rev)))
        orig = sum(e.orig_size for e in es)
        groups.append(CostModelParams(
            n=len(es), s_d=tuple(e.orig_size for e in es),
            r_c=Fraction(sum(e.comp_size for e in es), max(1, orig)),
            s_h=container.DATA_HEADER_SIZE, s_t=t.comp_size, l_s=header.ls, l_p=header.lp, a=a,
            pointer_bytes=ptr,
            tool_header=0 if method is MethodKind.ONE_ONE_CS else container.TOOL_HEADER_SIZE,
            compressed=tuple(e.comp_size for e in es), **extra))
    if plain:
        groups.append(CostModelParams(
            n=len(plain), s_d=tuple(e.orig_size for e in plain), r_c=1,
            s_h=container.DATA_HEADER_SIZE, s_t=0, l_s=header.ls, l_p=header.lp, a=a,
            compressed=tuple(e.comp_size for e in plain), has_tool=False, **extra))
    return groups


def ideal_bases(header: PoolHeader, manifest: Manifest) -> int:
    """Bases needed for the compressed data alone, in ordinary data fragments.

    No record headers, framing or tools: the best any self-contained layout
    with the same fragment geometry and codec could do.
    """
    prof = codec.get_profile(header.codec)
    lay = FragmentLayout(header.ls, header.lp)
    total = 0
    for e in manifest.data():
        nt = prof.encoded_length(e.comp_size)
        total += nt + -(-nt // lay.payload_len) * lay.overhead
    return total


def density_vs_ideal(stats: PoolStats, pool: OligoPool, manifest: Manifest) -> Fraction:
    """Ideal bases over measured bases (1 means no self-containment cost)."""
    if not stats.total_bases:
        return Fraction(0)
    return Fraction(ideal_bases(pool.header, manifest), stats.total_bases)


def primer_collisions(pool: OligoPool, manifest: Manifest) -> list[tuple[str, str]]:
    """(record id, primer) for every primer found strictly inside an oligo's core.

    The core is the oligo minus its first and last ``lp`` bases. Exact
    matches there could cause false amplification; they are reported rather
    than treated as errors.
    """
    seqs = sorted({s for e in manifest.entries for s in (e.fwd, e.rev) if s})
    seqs += [codec.reverse_complement(s) for s in seqs]
    out = []
    for frag in pool.fragments:
        core = frag[pool.header.lp:-pool.header.lp]
        for s in seqs:
            if s in core:
                out.append((record_id(frag), s))
    return out
