"""
Robust time-optimal quantum control under bang-bang gate errors.

Sub-packages: linalg, pauli, metrics, noise, dynamics, control, bounds,
config and experiments. The `qctl` command runs experiments from YAML files.
"""

__version__ = "0.1.0"
