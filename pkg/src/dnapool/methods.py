"""Planners for the three self-containment methods and fragment materialization.

``1-1cs``  every data file carries its own copy of the tool (SM=CPF).
``m-1ci``  tools stored once under their own primer pair; each data stream
           ends with a pointer naming the tool's primers (two read rounds).
``1-mci``  tools stored once; every tool fragment carries a sub-primer of each
           bound data file plus the universal reverse primer (one read round).

FIDs are assigned deterministically: data files 1..n in input order, then
tools in order of first use. Primer pairs are consumed from the library in
the same order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import codec, container, tools
from .analytics import CostModelParams
from .codec import CodecProfile, Fragment, FragmentClass, FragmentLayout, SiteRole
from .container import DataFileRecord, StorageMethod, ToolFileRecord, ToolPayload
from .errors import CapacityExceeded, EmptyPlan, InvariantViolation, PrimerConflict, PrimerExhausted, Truncated
from .primers import PrimerLibrary, PrimerPair


class MethodKind(enum.Enum):
    ONE_ONE_CS = "1-1cs"
    M_ONE_CI = "m-1ci"
    ONE_M_CI = "1-mci"

    @classmethod
    def parse(cls, token: "str | MethodKind") -> "MethodKind":
        if isinstance(token, cls):
            return token
        try:
            return cls(str(token).lower())
        except ValueError:
            raise ValueError(f"unknown method {token!r}; choose from "
                             f"{[m.value for m in cls]}") from None


@dataclass(frozen=True)
class SourceFile:
    name: str
    data: bytes
    tool: str | None = None  # registered tool name, None -> stored unprocessed


@dataclass(frozen=True)
class ToolSpec:
    name: str
    blob: bytes

    @property
    def td(self) -> bytes:
        return ToolPayload(self.name, self.blob).to_bytes()


# -- M-1CI pointer ----------------------------------------------------------
#
# pointer := packed(fwd + rev) | u8 len(fwd) | u8 len(rev)
# with two bits per nucleotide (A=00 ... T=11), zero-padded to a whole byte.

def encode_pointer(pair: PrimerPair) -> bytes:
    fwd, rev = pair.seqs
    if len(fwd) > 255 or len(rev) > 255:
        raise InvariantViolation("pointer primers must be shorter than 256 nt")
    seq = fwd + rev
    seq += "A" * (-len(seq) % 4)
    return codec.decode_bits(seq, codec.NAIVE2, len(seq) // 4) + bytes((len(fwd), len(rev)))


def pointer_size(lf: int, lr: int) -> int:
    return -(-(lf + lr) // 4) + 2


def decode_pointer(body: bytes) -> tuple[tuple[str, str], bytes]:
    """Split a stream body into ((fwd, rev), body without the pointer)."""
    if len(body) < 2:
        raise Truncated("stream too short to hold a tool pointer")
    lf, lr = body[-2], body[-1]
    size = pointer_size(lf, lr)
    if len(body) < size:
        raise Truncated(f"pointer declares {size} bytes, stream body has {len(body)}")
    packed = body[len(body) - size:-2]
    seq = codec.encode_bits(packed, codec.NAIVE2)
    return (seq[:lf], seq[lf:lf + lr]), body[:len(body) - size]


# -- plans ------------------------------------------------------------------

@dataclass
class PlanEntry:
    name: str
    record: DataFileRecord
    pair: PrimerPair
    original_size: int
    tool_name: str | None = None
    pointer: bytes = b""

    @property
    def fid(self) -> int:
        return self.record.fid

    @property
    def compressed_size(self) -> int:
        return len(self.record.d)

    def records(self) -> list[bytes]:
        return [container.serialize_data_file(self.record)]

    def stream(self) -> bytes:
        return container.pack_stream(self.records(), self.pointer)


@dataclass
class ToolEntry:
    name: str
    record: ToolFileRecord
    pair: PrimerPair | None             # own pair (M-1CI) or None (1-MCI)
    bound_fids: tuple[int, ...] = ()
    bound_pairs: tuple[PrimerPair, ...] = ()

    @property
    def fid(self) -> int:
        return self.record.fid

    def stream(self) -> bytes:
        return container.pack_stream([container.serialize_tool_file(self.record)])


@dataclass
class ArchivePlan:
    method: MethodKind
    entries: list[PlanEntry]
    tools: list[ToolEntry]
    layout: FragmentLayout
    codec: CodecProfile
    universal: PrimerPair | None = None
    tool_sizes: dict = field(default_factory=dict)  # tool name -> len(TD)

    def entry(self, fid: int) -> PlanEntry:
        for e in self.entries:
            if e.fid == fid:
                return e
        raise KeyError(fid)

    def tool_layout(self, tool: ToolEntry) -> FragmentLayout:
        sites = len(tool.bound_fids) + 1 if self.method is MethodKind.ONE_M_CI else 2
        return FragmentLayout(self.layout.ls, self.layout.lp, sites, self.layout.address_len)

    def binary_size(self) -> int:
        """Bytes of all serialized records plus M-1CI pointers (framing excluded)."""
        total = 0
        for e in self.entries:
            total += sum(len(r) for r in e.records()) + len(e.pointer)
        for t in self.tools:
            total += len(container.serialize_tool_file(t.record))
        return total

    def pairs(self) -> list[PrimerPair]:
        out = [e.pair for e in self.entries] + [t.pair for t in self.tools if t.pair]
        if self.universal is not None:
            out.append(self.universal)
        return out


def _check_distinct(pairs: Sequence[PrimerPair]) -> None:
    seqs = [s for p in pairs for s in p.seqs]
    if len(set(seqs)) != len(seqs):
        raise PrimerConflict("primer pairs in a plan must be pairwise distinct")


class _PairSource:
    def __init__(self, library: PrimerLibrary):
        self.pairs = list(library.pairs)
        self.i = 0

    def take(self, what: str) -> PrimerPair:
        if self.i >= len(self.pairs):
            raise PrimerExhausted(f"library has {len(self.pairs)} primer pairs; ran out at {what}")
        p = self.pairs[self.i]
        self.i += 1
        return p


def _prepare(files: Sequence[SourceFile], tool_specs: Sequence[ToolSpec],
             registry: tools.ToolRegistry):
    if not files:
        raise EmptyPlan("a plan needs at least one data file")
    specs = {t.name: t for t in tool_specs}
    order: list[str] = []
    compressed = []
    for f in files:
        if f.tool is None:
            compressed.append(bytes(f.data))
            continue
        if f.tool not in specs:
            specs[f.tool] = ToolSpec(f.tool, tools.tool_blob(f.tool, registry=registry))
        if f.tool not in order:
            order.append(f.tool)
        compressed.append(tools.compress(f.tool, f.data, registry))
    return [specs[n] for n in order], compressed


def _default_layout(layout: FragmentLayout | None) -> FragmentLayout:
    return layout if layout is not None else FragmentLayout()


def plan_1_1cs(files: Sequence[SourceFile], tool_specs: Sequence[ToolSpec] = (),
               layout: FragmentLayout | None = None, profile: CodecProfile | str = "rot3",
               library: PrimerLibrary | None = None,
               registry: tools.ToolRegistry = tools.DEFAULT_REGISTRY,
               first_fid: int = 1) -> ArchivePlan:
    layout, profile = _default_layout(layout), codec.get_profile(profile)
    used, compressed = _prepare(files, tool_specs, registry)
    by_name = {t.name: t for t in used}
    src = _PairSource(library or PrimerLibrary())
    entries = []
    for fid, (f, c) in enumerate(zip(files, compressed), first_fid):
        pair = src.take(f.name)
        if f.tool is None:
            rec = DataFileRecord.unprocessed(fid, c)
        else:
            rec = DataFileRecord.inlined(fid, c, by_name[f.tool].td)
        entries.append(PlanEntry(f.name, rec, pair, len(f.data), f.tool))
    plan = ArchivePlan(MethodKind.ONE_ONE_CS, entries, [], layout, profile,
                       tool_sizes={t.name: len(t.td) for t in used})
    _check_distinct(plan.pairs())
    return plan


def plan_m_1ci(files: Sequence[SourceFile], tool_specs: Sequence[ToolSpec] = (),
               layout: FragmentLayout | None = None, profile: CodecProfile | str = "rot3",
               library: PrimerLibrary | None = None,
               registry: tools.ToolRegistry = tools.DEFAULT_REGISTRY,
               first_fid: int = 1) -> ArchivePlan:
    layout, profile = _default_layout(layout), codec.get_profile(profile)
    used, compressed = _prepare(files, tool_specs, registry)
    src = _PairSource(library or PrimerLibrary())
    file_pairs = [src.take(f.name) for f in files]
    n = len(files)
    tool_entries = {}
    for k, t in enumerate(used):
        tool_entries[t.name] = ToolEntry(t.name, ToolFileRecord(first_fid + n + k, t.td),
                                         src.take(f"tool {t.name}"))
    entries = []
    for fid, (f, c, pair) in enumerate(zip(files, compressed, file_pairs), first_fid):
        if f.tool is None:
            entries.append(PlanEntry(f.name, DataFileRecord.unprocessed(fid, c), pair, len(f.data)))
            continue
        t = tool_entries[f.tool]
        t.bound_fids += (fid,)
        t.bound_pairs += (pair,)
        entries.append(PlanEntry(f.name, DataFileRecord.separate(fid, c, t.fid), pair,
                                 len(f.data), f.tool, encode_pointer(t.pair)))
    plan = ArchivePlan(MethodKind.M_ONE_CI, entries, list(tool_entries.values()), layout, profile,
                       tool_sizes={t.name: len(t.td) for t in used})
    _check_distinct(plan.pairs())
    return plan


def plan_1_mci(files: Sequence[SourceFile], tool_specs: Sequence[ToolSpec] = (),
               layout: FragmentLayout | None = None, profile: CodecProfile | str = "rot3",
               library: PrimerLibrary | None = None,
               registry: tools.ToolRegistry = tools.DEFAULT_REGISTRY,
               first_fid: int = 1) -> ArchivePlan:
    layout, profile = _default_layout(layout), codec.get_profile(profile)
    library = library or PrimerLibrary()
    if not files:
        raise EmptyPlan("a plan needs at least one data file")
    limit = layout.ls // layout.lp
    counts: dict[str, int] = {}
    for f in files:
        if f.tool is not None:
            counts[f.tool] = counts.get(f.tool, 0) + 1
    for name, k in counts.items():
        if not (0 < k < limit):
            raise CapacityExceeded(f"tool {name!r} bound to {k} files; 1-MCI needs n < "
                                   f"floor({layout.ls}/{layout.lp}) = {limit}")
    used, compressed = _prepare(files, tool_specs, registry)
    src = _PairSource(library)
    file_pairs = [src.take(f.name) for f in files]
    if used and library.universal is None:
        raise PrimerExhausted("1-MCI needs a universal primer pair in the library")
    n = len(files)
    tool_entries = {t.name: ToolEntry(t.name, ToolFileRecord(first_fid + n + k, t.td), None)
                    for k, t in enumerate(used)}
    entries = []
    for fid, (f, c, pair) in enumerate(zip(files, compressed, file_pairs), first_fid):
        if f.tool is None:
            entries.append(PlanEntry(f.name, DataFileRecord.unprocessed(fid, c), pair, len(f.data)))
            continue
        t = tool_entries[f.tool]
        t.bound_fids += (fid,)
        t.bound_pairs += (pair,)
        entries.append(PlanEntry(f.name, DataFileRecord.separate(fid, c, t.fid), pair,
                                 len(f.data), f.tool))
    plan = ArchivePlan(MethodKind.ONE_M_CI, entries, list(tool_entries.values()), layout, profile,
                       universal=library.universal if used else None,
                       tool_sizes={t.name: len(t.td) for t in used})
    _check_distinct(plan.pairs())
    return plan


PLANNERS = {
    MethodKind.ONE_ONE_CS: plan_1_1cs,
    MethodKind.M_ONE_CI: plan_m_1ci,
    MethodKind.ONE_M_CI: plan_1_mci,
}


def plan(method: str | MethodKind, files, tool_specs=(), layout=None, profile="rot3",
         library=None, registry=tools.DEFAULT_REGISTRY, first_fid: int = 1) -> ArchivePlan:
    return PLANNERS[MethodKind.parse(method)](files, tool_specs, layout, profile, library,
                                              registry, first_fid)


# -- materialization --------------------------------------------------------

def data_sites(pair: PrimerPair) -> tuple[tuple[SiteRole, str], ...]:
    return ((SiteRole.FILE_FWD, pair.fwd.seq), (SiteRole.FILE_REV, pair.rev.seq))


def mci_tool_sites(bound: Sequence[PrimerPair], universal: PrimerPair,
                   address: int) -> tuple[tuple[SiteRole, str], ...]:
    """Sub-primers of the bound files (forward on even addresses, reverse on odd), then U-R."""
    pick = (lambda p: p.fwd.seq) if address % 2 == 0 else (lambda p: p.rev.seq)
    head = tuple((SiteRole.EMBEDDED_POINTER, pick(p)) for p in bound)
    return head + ((SiteRole.UNIVERSAL, universal.rev.seq),)


@dataclass
class MaterializedStream:
    fid: int
    kind: str  # "data" or "tool"
    stream: bytes
    fragments: list[Fragment]

    @property
    def bases(self) -> int:
        return sum(len(f.flat) for f in self.fragments)


def _layout_for(plan: ArchivePlan, sites: Sequence[tuple[SiteRole, str]], nsites: int) -> FragmentLayout:
    lp = max(len(s) for _, s in sites)
    return FragmentLayout(plan.layout.ls, max(lp, plan.layout.lp), nsites, plan.layout.address_len)


def _fragments(seq: str, layout: FragmentLayout, profile: CodecProfile, cls: FragmentClass,
               sites_for) -> list[Fragment]:
    out = []
    for addr, chunk in codec.segment_sequence(seq, layout, profile):
        out.append(codec.build_fragment(chunk, addr, cls, sites_for(addr), layout, profile))
    return out


def stream_layout(plan: ArchivePlan, fid: int) -> FragmentLayout:
    """Layout actually used for the stream of ``fid`` (primers longer than lp widen it)."""
    for e in plan.entries:
        if e.fid == fid:
            return _layout_for(plan, data_sites(e.pair), 2)
    for t in plan.tools:
        if t.fid == fid:
            if plan.method is MethodKind.ONE_M_CI:
                sites = mci_tool_sites(t.bound_pairs, plan.universal, 0)
                sites += mci_tool_sites(t.bound_pairs, plan.universal, 1)
                return _layout_for(plan, sites, len(t.bound_pairs) + 1)
            return _layout_for(plan, data_sites(t.pair), 2)
    raise KeyError(fid)


def materialize_streams(plan: ArchivePlan) -> list[MaterializedStream]:
    prof = plan.codec
    out = []
    for e in sorted(plan.entries, key=lambda e: e.fid):
        s = e.stream()
        sites = data_sites(e.pair)
        frags = _fragments(codec.encode_bits(s, prof), stream_layout(plan, e.fid), prof,
                           FragmentClass.DATA, lambda _a, s=sites: s)
        out.append(MaterializedStream(e.fid, "data", s, frags))
    for t in sorted(plan.tools, key=lambda t: t.fid):
        s = t.stream()
        if plan.method is MethodKind.ONE_M_CI:
            sites_for = lambda a, t=t: mci_tool_sites(t.bound_pairs, plan.universal, a)
        else:
            sites = data_sites(t.pair)
            sites_for = lambda _a, s=sites: s
        frags = _fragments(codec.encode_bits(s, prof), stream_layout(plan, t.fid), prof,
                           FragmentClass.TOOL, sites_for)
        out.append(MaterializedStream(t.fid, "tool", s, frags))
    return out


def materialize_fragments(plan: ArchivePlan | None) -> list[Fragment]:
    """All fragments of the plan, ordered by FID then address."""
    if plan is None:
        return []
    return [f for ms in materialize_streams(plan) for f in ms.fragments]


# -- cost-model parameters for a plan ----------------------------------------

def cost_groups(plan: ArchivePlan, geometry: str = "nominal",
                pointer: str = "module") -> list[CostModelParams]:
    """One ``CostModelParams`` per tool (plus one for tool-less files).

    ``geometry="nominal"`` uses the bare closed-form fragment model (no index field,
    unrounded payload, base factor 1/bits_per_base). ``geometry="pool"`` adds
    the 19-nt index field and the payload rounding used by ``FragmentLayout``.
    ``pointer="module"`` charges the actual pointer size; ``"nominal"`` uses 2*L_p.
    The tool-file header is charged in both cases.
    """
    a = plan.codec.base_factor
    lay = plan.layout
    extra = {"index_len": lay.index_len, "payload_quantum": 4} if geometry == "pool" else {}
    groups = []
    by_tool: dict[str, list[PlanEntry]] = {}
    plain = []
    for e in plan.entries:
        (by_tool.setdefault(e.tool_name, []) if e.tool_name else plain).append(e)
    for name, es in by_tool.items():
        ptr = None
        if plan.method is MethodKind.M_ONE_CI and pointer == "module":
            ptr = Fraction(sum(len(e.pointer) for e in es), len(es))
        td = plan.tool_sizes[name]
        groups.append(CostModelParams(
            n=len(es), s_d=tuple(e.original_size for e in es),
            r_c=Fraction(sum(e.compressed_size for e in es), max(1, sum(e.original_size for e in es))),
            s_h=container.DATA_HEADER_SIZE, s_t=td, l_s=lay.ls, l_p=lay.lp, a=a,
            pointer_bytes=ptr,
            tool_header=0 if plan.method is MethodKind.ONE_ONE_CS else container.TOOL_HEADER_SIZE,
            compressed=tuple(e.compressed_size for e in es), **extra))
    if plain:
        groups.append(CostModelParams(
            n=len(plain), s_d=tuple(e.original_size for e in plain), r_c=1,
            s_h=container.DATA_HEADER_SIZE, s_t=0, l_s=lay.ls, l_p=lay.lp, a=a,
            compressed=tuple(e.compressed_size for e in plain), has_tool=False, **extra))
    return groups
