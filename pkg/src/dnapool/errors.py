"""Exception hierarchy shared by every pipeline stage."""


class DnaPoolError(Exception):
    """Base class for all pipeline errors."""


# container
class InvariantViolation(DnaPoolError, ValueError):
    pass


class Truncated(DnaPoolError, ValueError):
    pass


class BadFileType(DnaPoolError, ValueError):
    pass


class BadMethodTag(DnaPoolError, ValueError):
    pass


class FidNotFound(DnaPoolError, LookupError):
    pass


class ToolNotFound(DnaPoolError, LookupError):
    pass


class ToolDispatchFailure(DnaPoolError):
    pass


# tools
class UnknownTool(ToolDispatchFailure, LookupError):
    pass


class CorruptStream(ToolDispatchFailure, ValueError):
    pass


class BlobHashMismatch(ToolDispatchFailure, ValueError):
    pass


# codec
class BadSymbol(DnaPoolError, ValueError):
    pass


class LengthMismatch(DnaPoolError, ValueError):
    pass


class CapacityExceeded(DnaPoolError, ValueError):
    pass


class BadDirectionMarker(DnaPoolError, ValueError):
    pass


class BadClassFlag(DnaPoolError, ValueError):
    pass


class BadPrimerSite(DnaPoolError, ValueError):
    pass


class MissingAddress(DnaPoolError):
    def __init__(self, missing, expected_count=None):
        self.missing = tuple(sorted(missing))
        self.expected_count = expected_count
        shown = ", ".join(str(m) for m in self.missing[:20])
        if len(self.missing) > 20:
            shown += ", ..."
        super().__init__(f"missing fragment addresses: {shown}")


class ConflictingDuplicate(DnaPoolError, ValueError):
    pass


# primers / methods
class PrimerExhausted(DnaPoolError):
    pass


class PrimerConflict(DnaPoolError, ValueError):
    pass


class EmptyPlan(DnaPoolError, ValueError):
    pass


# poolsim
class HeaderMismatch(DnaPoolError, ValueError):
    pass


class CorruptPool(DnaPoolError, ValueError):
    pass


class EmptyPrimerSet(DnaPoolError, ValueError):
    pass


# analytics
class NegativeCapacity(DnaPoolError, ValueError):
    pass
