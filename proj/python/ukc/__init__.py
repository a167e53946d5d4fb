"""Micro-kernel compiler for a Snitch-like RISC-V core, with its simulator."""

from ._ukc import (
    CompileError,
    Error,
    OutOfRegisters,
    ParseError,
    SimError,
    ablate,
    compile,
    csv_header,
    flop_count,
    kernels,
    roundtrip,
    run,
    run_assembly,
    suite,
    suite_names,
)

__all__ = [
    "CompileError",
    "Error",
    "OutOfRegisters",
    "ParseError",
    "SimError",
    "ablate",
    "compile",
    "csv_header",
    "flop_count",
    "kernels",
    "roundtrip",
    "run",
    "run_assembly",
    "suite",
    "suite_names",
]
