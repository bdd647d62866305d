"""Primer validation, seeded generation, and primer libraries."""

from __future__ import annotations

import enum
import itertools
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

from .errors import PrimerConflict, PrimerExhausted


class PrimerRole(enum.Enum):
    FORWARD = "forward"
    REVERSE = "reverse"
    UNIVERSAL_FORWARD = "universal_forward"
    UNIVERSAL_REVERSE = "universal_reverse"


@dataclass(frozen=True)
class Primer:
    seq: str
    role: PrimerRole = PrimerRole.FORWARD

    def __len__(self) -> int:
        return len(self.seq)


@dataclass(frozen=True)
class PrimerPair:
    fwd: Primer
    rev: Primer
    label: str = ""

    def __post_init__(self):
        if self.fwd.seq == self.rev.seq:
            raise PrimerConflict("forward and reverse primers are identical")
        if self.fwd.seq in self.rev.seq or self.rev.seq in self.fwd.seq:
            raise PrimerConflict("one primer of the pair contains the other")

    @classmethod
    def of(cls, fwd: str, rev: str, label: str = "", universal: bool = False) -> "PrimerPair":
        if universal:
            return cls(Primer(fwd, PrimerRole.UNIVERSAL_FORWARD),
                       Primer(rev, PrimerRole.UNIVERSAL_REVERSE), label)
        return cls(Primer(fwd, PrimerRole.FORWARD), Primer(rev, PrimerRole.REVERSE), label)

    @property
    def seqs(self) -> tuple[str, str]:
        return self.fwd.seq, self.rev.seq


@dataclass(frozen=True)
class PrimerConstraints:
    min_len: int = 18
    max_len: int = 23
    gc_min: float = 0.40
    gc_max: float = 0.65
    max_homopolymer: int = 4
    min_hamming: int = 8
    length: int = 20  # length of generated primers

    def __post_init__(self):
        if not (0.0 <= self.gc_min <= self.gc_max <= 1.0):
            raise ValueError(f"invalid GC bounds [{self.gc_min}, {self.gc_max}]")
        if not (0 < self.min_len <= self.max_len):
            raise ValueError(f"invalid length bounds [{self.min_len}, {self.max_len}]")
        if self.max_homopolymer < 1:
            raise ValueError("max_homopolymer must be at least 1")


def gc_fraction(seq: str) -> float:
    return sum(c in "GC" for c in seq) / len(seq) if seq else 0.0


def longest_run(seq: str) -> int:
    return max((len(list(g)) for _, g in itertools.groupby(seq)), default=0)


def validate_primer(p: Primer | str, constraints: PrimerConstraints = PrimerConstraints()) -> list[str]:
    """Return the violated constraints (empty list means valid)."""
    seq = p.seq if isinstance(p, Primer) else p
    problems = []
    if set(seq) - set("ACGT"):
        problems.append(f"alphabet: contains {sorted(set(seq) - set('ACGT'))}")
    if not (constraints.min_len <= len(seq) <= constraints.max_len):
        problems.append(f"length: {len(seq)} outside [{constraints.min_len}, {constraints.max_len}]")
    gc = gc_fraction(seq)
    if not (constraints.gc_min <= gc <= constraints.gc_max):
        problems.append(f"gc: {gc:.3f} outside [{constraints.gc_min}, {constraints.gc_max}]")
    run = longest_run(seq)
    if run > constraints.max_homopolymer:
        problems.append(f"homopolymer: run of {run} exceeds {constraints.max_homopolymer}")
    return problems


def hamming_separation(a: Primer | str, b: Primer | str) -> int:
    """Hamming distance over the common prefix length."""
    a = a.seq if isinstance(a, Primer) else a
    b = b.seq if isinstance(b, Primer) else b
    return sum(x != y for x, y in zip(a, b))


@dataclass
class PrimerLibrary:
    pairs: list[PrimerPair] = field(default_factory=list)
    universal: PrimerPair | None = None
    min_pairwise_hamming: int = 8

    def sequences(self) -> list[str]:
        out = [s for p in self.pairs for s in p.seqs]
        if self.universal is not None:
            out.extend(self.universal.seqs)
        return out

    def conflicts_with(self, candidate: Iterable[str]) -> list[str]:
        """Describe every way ``candidate`` sequences clash with the library."""
        problems = []
        existing = self.sequences()
        for c in candidate:
            for s in existing:
                if c == s or c in s or s in c:
                    problems.append(f"{c} overlaps {s}")
                elif hamming_separation(c, s) < self.min_pairwise_hamming:
                    problems.append(f"{c} within {hamming_separation(c, s)} of {s}")
        return problems

    def violations(self) -> list[str]:
        """Pairwise-separation problems among the current members."""
        seqs = self.sequences()
        problems = []
        for a, b in itertools.combinations(seqs, 2):
            if a == b or a in b or b in a:
                problems.append(f"{a} overlaps {b}")
            elif hamming_separation(a, b) < self.min_pairwise_hamming:
                problems.append(f"{a} within {hamming_separation(a, b)} of {b}")
        return problems

    def add(self, pair: PrimerPair, check: bool = True) -> None:
        if check:
            problems = self.conflicts_with(pair.seqs)
            if hamming_separation(*pair.seqs) < self.min_pairwise_hamming:
                problems.append("pair members are too similar")
            if problems:
                raise PrimerConflict("; ".join(problems))
        self.pairs.append(pair)

    def set_universal(self, pair: PrimerPair, check: bool = True) -> None:
        if check:
            problems = self.conflicts_with(pair.seqs)
            if problems:
                raise PrimerConflict("; ".join(problems))
        self.universal = pair

    def by_label(self, label: str) -> PrimerPair:
        for p in self.pairs:
            if p.label == label:
                return p
        if self.universal is not None and self.universal.label == label:
            return self.universal
        raise KeyError(label)

    # -- file format: "<label> <role> <sequence>" per line -------------------

    def dumps(self) -> str:
        lines = []
        for p in self.pairs + ([self.universal] if self.universal else []):
            for primer in (p.fwd, p.rev):
                lines.append(f"{p.label} {primer.role.value} {primer.seq}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def loads(cls, text: str, min_pairwise_hamming: int = 8, check: bool = False) -> "PrimerLibrary":
        pending: dict[str, dict[PrimerRole, str]] = {}
        order: list[str] = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected '<label> <role> <sequence>'")
            label, role, seq = parts
            if label not in pending:
                pending[label] = {}
                order.append(label)
            pending[label][PrimerRole(role)] = seq.upper()
        lib = cls(min_pairwise_hamming=min_pairwise_hamming)
        for label in order:
            roles = pending[label]
            if PrimerRole.UNIVERSAL_FORWARD in roles:
                lib.set_universal(PrimerPair.of(roles[PrimerRole.UNIVERSAL_FORWARD],
                                                roles[PrimerRole.UNIVERSAL_REVERSE], label, True),
                                  check=check)
            else:
                lib.add(PrimerPair.of(roles[PrimerRole.FORWARD], roles[PrimerRole.REVERSE], label),
                        check=check)
        return lib

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path: str | Path, **kw) -> "PrimerLibrary":
        return cls.loads(Path(path).read_text(), **kw)


def load_fixture_primers() -> PrimerLibrary:
    """The published primer set: five file pairs, two tool pairs, one universal pair."""
    text = resources.files("dnapool").joinpath("data/fixture_primers.txt").read_text()
    return PrimerLibrary.loads(text, check=False)


def _random_primer(rng: random.Random, c: PrimerConstraints, attempts: int) -> tuple[str, int]:
    for used in range(1, attempts + 1):
        seq = "".join(rng.choice("ACGT") for _ in range(c.length))
        if not validate_primer(seq, c):
            return seq, used
    raise PrimerExhausted(f"no valid primer found in {attempts} attempts")


def generate_primer_pair(library: PrimerLibrary, constraints: PrimerConstraints = PrimerConstraints(),
                         seed: int | random.Random = 0, label: str = "",
                         max_attempts: int = 20_000) -> PrimerPair:
    """Draw a pair that satisfies ``constraints`` and stays separated from ``library``.

    ``seed`` may be an int or a ``random.Random`` to continue a stream. The
    library is not modified.
    """
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    budget = max_attempts
    lib = PrimerLibrary(list(library.pairs), library.universal,
                        max(library.min_pairwise_hamming, constraints.min_hamming))
    while budget > 0:
        fwd, used = _random_primer(rng, constraints, budget)
        budget -= used
        if lib.conflicts_with([fwd]):
            continue
        while budget > 0:
            rev, used = _random_primer(rng, constraints, budget)
            budget -= used
            if fwd in rev or rev in fwd or hamming_separation(fwd, rev) < lib.min_pairwise_hamming:
                continue
            if lib.conflicts_with([rev]):
                continue
            return PrimerPair.of(fwd, rev, label)
    raise PrimerExhausted(f"no separable primer pair found in {max_attempts} attempts")


def extend_library(library: PrimerLibrary, count: int, constraints: PrimerConstraints = PrimerConstraints(),
                   seed: int = 0, prefix: str = "p", universal: bool = False) -> PrimerLibrary:
    """Add ``count`` generated pairs (and optionally a universal pair) in place."""
    rng = random.Random(seed)
    for i in range(count):
        library.add(generate_primer_pair(library, constraints, rng, f"{prefix}{i}"))
    if universal and library.universal is None:
        u = generate_primer_pair(library, constraints, rng, "universal")
        library.set_universal(PrimerPair.of(u.fwd.seq, u.rev.seq, "universal", True))
    return library
