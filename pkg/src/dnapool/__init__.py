"""Simulated self-contained DNA storage: containers, codecs, primers, pools and cost models."""

from .codec import Fragment, FragmentLayout, NAIVE2, ROT3
from .container import DataFileRecord, StorageMethod, ToolFileRecord, ToolPayload
from .methods import ArchivePlan, MethodKind, SourceFile, ToolSpec, plan
from .poolsim import Manifest, OligoPool, pool_load, pool_write, random_read

__all__ = [
    "ArchivePlan", "DataFileRecord", "Fragment", "FragmentLayout", "Manifest", "MethodKind",
    "NAIVE2", "OligoPool", "ROT3", "SourceFile", "StorageMethod", "ToolFileRecord", "ToolPayload",
    "ToolSpec", "plan", "pool_load", "pool_write", "random_read",
]
