"""
QJH

Density-matrix-preconditioned Hamiltonian Monte Carlo together with the
open-quantum-system numerics it builds on: Lindblad evolution, stochastic
Schrodinger equations, quantum Fisher information and circular-ensemble walks.
"""

__version__ = "1.0.0"
__author__ = "QJH Team"
__all__ = [
    "numkernel",
    "density",
    "lindblad",
    "sse",
    "rmt",
    "sampler",
    "bench",
    "cli",
    "config",
    "models",
    "utils",
]
