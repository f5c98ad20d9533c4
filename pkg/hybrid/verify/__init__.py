# hybrid/verify
# Static analyses over checked programs: exact-annotation certification,
# bounded-memory verdicts and the random-program soundness harness.

from .division import REFUTED, UNKNOWN, VERIFIED, DivisionReport, ExactVerdict, analyze_division
from .domain import AbsVal, Kind, join_envs
from .fuzz import FuzzReport, generate_program, soundness_fuzz
from .memory import K_MAX, M_MAX, MemConfig, MemoryVerdict, analyze_memory

__all__ = [
    "REFUTED", "UNKNOWN", "VERIFIED", "DivisionReport", "ExactVerdict", "analyze_division",
    "AbsVal", "Kind", "join_envs",
    "FuzzReport", "generate_program", "soundness_fuzz",
    "K_MAX", "M_MAX", "MemConfig", "MemoryVerdict", "analyze_memory",
]
