"""
QJH Commands - one module per CLI subcommand.

Each command class exposes a static ``register(group, state)``.
"""

from .bench_airy import BenchAiryCommand
from .bench_gaussian import BenchGaussianCommand
from .lindblad_evolve import LindbladEvolveCommand
from .rmt_spacing import RMTSpacingCommand
from .sample import SampleCommand
from .sse_validate import SSEValidateCommand

__all__ = [
    "BenchAiryCommand",
    "BenchGaussianCommand",
    "LindbladEvolveCommand",
    "RMTSpacingCommand",
    "SampleCommand",
    "SSEValidateCommand",
]

# Subcommand name to command class, in help order
COMMANDS = {
    "sample": SampleCommand,
    "bench-gaussian": BenchGaussianCommand,
    "bench-airy": BenchAiryCommand,
    "rmt-spacing": RMTSpacingCommand,
    "sse-validate": SSEValidateCommand,
    "lindblad-evolve": LindbladEvolveCommand,
}
