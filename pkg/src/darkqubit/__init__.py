"""Protected dark-state qubits under continuous dynamical decoupling.

Operators are plain complex ``numpy`` arrays. Every frequency, Rabi rate and
magnetic field is an angular frequency in rad/s unless a name says otherwise.
"""

__version__ = "0.1.0"
