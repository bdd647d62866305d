"""Closed-form storage cost model, density metrics, sweeps and pool audits.

With ``index_len=0`` and ``payload_quantum=1`` the model reduces to::

    Sb(1-1CS) = sum(r_c * S_Di) + n * (S_h + S_T)
    Sb(M-1CI) = sum(r_c * S_Di) + n * (S_h + 2 * L_p) + S_T
    Sb(1-MCI) = sum(r_c * S_Di) + n * S_h + S_T

    Sd(1-1CS / M-1CI) = a * Sb * (1 + 2 L_p / (L_s - 2 L_p))
    Sd(1-MCI) = a * Sb + a * (sum(r_c * S_Di) + n * S_h) * 2 L_p / L_s
                + a * S_T * (n + 1) L_p / (L_s - (n + 1) L_p)

Byte quantities are converted to bits (x8) before multiplying by the base
factor ``a`` (bases per bit). The "corrected" variant of the 1-MCI formula
divides the data-fragment primer term by L_s - 2 L_p, as the other two do.

Non-zero ``index_len`` / ``payload_quantum`` describe a real fragment layout
(address, direction markers and class flag take ``index_len`` bases; payload
capacity is rounded down to a multiple of ``payload_quantum``). The bare
formulas are the special case of zero index overhead.

All arithmetic is exact (``fractions.Fraction``); rounding only happens when
rows are written out.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import CapacityExceeded, NegativeCapacity

METHODS = ("1-1cs", "m-1ci", "1-mci")
KB_BINARY, KB_DECIMAL = 1024, 1000


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class CostModelParams:
    n: int
    s_d: Fraction | tuple = Fraction(100000)
    r_c: Fraction = Fraction(34, 100)
    s_h: Fraction = Fraction(10)
    s_t: Fraction = Fraction(2010)
    l_s: int = 220
    l_p: int = 20
    a: Fraction = Fraction(5, 8)
    pointer_bytes: Fraction | None = None  # None -> 2 * l_p
    tool_header: Fraction = Fraction(0)    # bytes of tool-record header, absent from the bare formulas
    compressed: tuple | None = None        # per-file compressed sizes, overrides r_c * S_Di
    index_len: int = 0
    payload_quantum: int = 1
    has_tool: bool = True

    def __post_init__(self):
        for name in ("r_c", "s_h", "s_t", "a", "tool_header"):
            object.__setattr__(self, name, _frac(getattr(self, name)))
        if isinstance(self.s_d, (list, tuple)):
            object.__setattr__(self, "s_d", tuple(_frac(x) for x in self.s_d))
        else:
            object.__setattr__(self, "s_d", _frac(self.s_d))
        if self.pointer_bytes is not None:
            object.__setattr__(self, "pointer_bytes", _frac(self.pointer_bytes))
        if self.compressed is not None:
            object.__setattr__(self, "compressed", tuple(_frac(x) for x in self.compressed))
        if self.n < 0:
            raise ValueError("n must be nonnegative")
        if not (0 <= self.r_c <= 1):
            raise ValueError(f"r_c must lie in [0, 1], got {self.r_c}")
        if self.a <= 0:
            raise ValueError("base factor a must be positive")

    @property
    def sizes(self) -> tuple:
        if isinstance(self.s_d, tuple):
            if len(self.s_d) != self.n:
                raise ValueError(f"{len(self.s_d)} file sizes given for n={self.n}")
            return self.s_d
        return (self.s_d,) * self.n

    @property
    def original_total(self) -> Fraction:
        return sum(self.sizes, Fraction(0))

    @property
    def data_bytes(self) -> Fraction:
        if self.compressed is not None:
            return sum(self.compressed, Fraction(0))
        return sum((self.r_c * s for s in self.sizes), Fraction(0))

    @property
    def pointer(self) -> Fraction:
        return Fraction(2 * self.l_p) if self.pointer_bytes is None else self.pointer_bytes

    def with_(self, **kw) -> "CostModelParams":
        return replace(self, **kw)


REFERENCE_PARAMS = CostModelParams(n=5, s_d=100000, r_c=Fraction(34, 100), s_h=10, s_t=2010,
                               l_s=400, l_p=20, a=Fraction(5, 8))


def compression_ratio(s_c, s_o) -> Fraction:
    s_o = _frac(s_o)
    if s_o == 0:
        raise ZeroDivisionError("original size must be positive")
    return _frac(s_c) / s_o


def compression_efficiency(r_c, s_o, s_t) -> Fraction:
    """e_c = 1 - (r_c * S_o + S_T) / S_o; s_t = 0 gives the ideal 1 - r_c."""
    s_o = _frac(s_o)
    if s_o == 0:
        raise ZeroDivisionError("original size must be positive")
    return 1 - _frac(r_c) - _frac(s_t) / s_o


def breakeven_tool_size(r_c, s_o) -> Fraction:
    """Largest tool size for which self-containment still saves space (e_c > 0 below it)."""
    return (1 - _frac(r_c)) * _frac(s_o)


def max_bound_files(l_s: int, l_p: int) -> int:
    """Largest n allowed by 0 < n < floor(L_s / L_p)."""
    return l_s // l_p - 1


def sb_for_method(method: str, p: CostModelParams) -> Fraction:
    """Binary bytes to store, per method."""
    data = p.data_bytes
    if not p.has_tool:
        return data + p.n * p.s_h
    if method == "1-1cs":
        return data + p.n * (p.s_h + p.s_t)
    if method == "m-1ci":
        return data + p.n * (p.s_h + p.pointer) + p.s_t + p.tool_header
    if method == "1-mci":
        if p.n and not (0 < p.n < p.l_s // p.l_p):
            raise CapacityExceeded(f"1-MCI needs 0 < n < floor({p.l_s}/{p.l_p}); n={p.n}")
        return data + p.n * p.s_h + p.s_t + p.tool_header
    raise ValueError(f"unknown method {method!r}")


def _payload(p: CostModelParams, sites: int) -> int:
    room = p.l_s - sites * p.l_p - p.index_len
    cap = (room // p.payload_quantum) * p.payload_quantum
    if cap <= 0:
        raise NegativeCapacity(f"L_s={p.l_s} leaves no payload with {sites} primer sites")
    return cap


def data_fragment_factor(p: CostModelParams) -> Fraction:
    """Bases per payload base for ordinary fragments: 1 + 2 L_p / (L_s - 2 L_p)."""
    payload = _payload(p, 2)
    return 1 + Fraction(2 * p.l_p + p.index_len, payload)


def sd_for_method(method: str, p: CostModelParams, variant: str = "verbatim") -> Fraction:
    """Number of bases to synthesise, per method."""
    if variant not in ("verbatim", "corrected"):
        raise ValueError(f"unknown variant {variant!r}")
    sb = sb_for_method(method, p)
    a_bits = 8 * p.a
    if method in ("1-1cs", "m-1ci") or not p.has_tool or p.n == 0:
        if p.n == 0 and method == "1-mci" and p.has_tool:
            sb = p.s_t + p.tool_header
            tool_sites = 1
            return a_bits * sb * (1 + Fraction(tool_sites * p.l_p + p.index_len, _payload(p, tool_sites)))
        return a_bits * sb * data_fragment_factor(p)
    data_part = p.data_bytes + p.n * p.s_h
    tool_part = p.s_t + p.tool_header
    data_overhead = 2 * p.l_p + p.index_len
    denom = p.l_s if variant == "verbatim" else _payload(p, 2)
    if variant == "verbatim":
        _payload(p, 2)
    sites = p.n + 1
    tool_payload = _payload(p, sites)
    return (a_bits * sb
            + a_bits * data_part * Fraction(data_overhead, denom)
            + a_bits * tool_part * Fraction(sites * p.l_p + p.index_len, tool_payload))


def storage_density(total_original_bytes, total_bases) -> Fraction:
    """Bits of original data per stored base."""
    total_bases = _frac(total_bases)
    if total_bases == 0:
        raise ZeroDivisionError("no bases stored")
    return 8 * _frac(total_original_bytes) / total_bases


# -- sweeps -----------------------------------------------------------------

CSV_COLUMNS = ("param", "method", "sb_bytes", "sd_bases", "e_c", "d")
SWEEP_METHODS = (("1-1cs", "verbatim"), ("m-1ci", "verbatim"), ("1-mci", "verbatim"),
                 ("1-mci", "corrected"))


@dataclass(frozen=True)
class SweepRow:
    param: Fraction
    method: str
    sb_bytes: Fraction
    sd_bases: Fraction
    e_c: Fraction
    d: Fraction


def _point(params: CostModelParams, vary: str, value) -> CostModelParams:
    if vary == "n":
        return params.with_(n=int(value))
    if vary == "ratio":
        return params.with_(l_s=int(value * params.l_p))
    if vary == "s_o":
        return params.with_(s_d=_frac(value), compressed=None)
    raise ValueError(f"cannot vary {vary!r}; choose n, ratio or s_o")


def sweep(params: CostModelParams, vary: str, values: Sequence) -> list[SweepRow]:
    """One row per grid point and method (1-MCI emitted in both variants)."""
    values = list(values)
    if not values:
        raise ValueError("sweep range is empty")
    rows = []
    for v in values:
        p = _point(params, vary, v)
        s_o = p.original_total
        for method, variant in SWEEP_METHODS:
            sb = sb_for_method(method, p)
            sd = sd_for_method(method, p, variant)
            label = method if variant == "verbatim" else f"{method}:corrected"
            e_c = 1 - sb / s_o if s_o else Fraction(0)
            d = storage_density(s_o, sd) if sd else Fraction(0)
            rows.append(SweepRow(_frac(v), label, sb, sd, e_c, d))
    return rows


def series(rows: Iterable[SweepRow], method: str, column: str = "sd_bases") -> list[Fraction]:
    return [getattr(r, column) for r in rows if r.method == method]


def _fmt(x: Fraction, digits: int) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return f"{float(x):.{digits}f}"


def to_csv(rows: Iterable[SweepRow], digits: int = 6) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.param, digits), r.method, _fmt(r.sb_bytes, digits),
                    _fmt(r.sd_bases, digits), _fmt(r.e_c, digits), _fmt(r.d, digits)])
    return buf.getvalue()


def parse_size(text: str, units: str = "binary") -> Fraction:
    """'500MB' -> bytes. KB/MB/GB are 1024-based unless units == 'decimal'."""
    k = KB_BINARY if units == "binary" else KB_DECIMAL
    t = text.strip().upper()
    for suffix, power in (("GB", 3), ("MB", 2), ("KB", 1), ("B", 0)):
        if t.endswith(suffix):
            return Fraction(t[: -len(suffix)].strip()) * k ** power
    return Fraction(t)


# -- audit ------------------------------------------------------------------

@dataclass
class Audit:
    method: str
    variant: str
    measured_bases: int
    analytic_bases: Fraction
    bound: int
    header_method: str
    attribution: dict = field(default_factory=dict)

    @property
    def deviation(self) -> Fraction:
        return self.measured_bases - self.analytic_bases

    @property
    def relative(self) -> Fraction:
        return self.deviation / self.analytic_bases if self.analytic_bases else Fraction(0)

    @property
    def method_mismatch(self) -> bool:
        return self.method != self.header_method

    @property
    def within_bound(self) -> bool:
        return abs(self.deviation) <= self.bound

    @property
    def flagged(self) -> bool:
        return self.method_mismatch or not self.within_bound

    def summary(self) -> str:
        flag = "FLAG" if self.flagged else "ok"
        return (f"audit method={self.method} variant={self.variant} measured={self.measured_bases}"
                f" analytic={float(self.analytic_bases):.1f} deviation={float(self.deviation):.1f}"
                f" relative={float(self.relative):.5f} bound={self.bound} {flag}")


def audit_pool(stats, groups: Sequence[CostModelParams], method: str | None = None,
               variant: str = "verbatim") -> Audit:
    """Compare a pool's measured base total with the analytic prediction.

    ``stats`` is a ``poolsim.PoolStats`` (anything with ``total_bases``,
    ``method``, ``n_data_files`` and ``ls``). ``groups`` holds one parameter
    set per tool (files sharing a tool), plus any tool-less group. The bound
    on the deviation is one maximal fragment per stored data file.
    """
    method = method or stats.method
    analytic = sum((sd_for_method(method, g, variant) for g in groups), Fraction(0))
    if not groups:
        analytic = Fraction(0)
    bare = sum((sd_for_method(method, g.with_(index_len=0, payload_quantum=1), variant)
                for g in groups), Fraction(0))
    audit = Audit(method, variant, stats.total_bases, analytic, stats.n_data_files * stats.ls,
                  stats.method)
    audit.attribution = {
        "index_fields": analytic - bare,
        "final_fragment_and_framing": stats.total_bases - analytic,
    }
    return audit
