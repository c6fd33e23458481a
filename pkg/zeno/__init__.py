"""Dissipation-protected quantum gate simulator.

Two three-level atoms in a leaky cavity, the decoherence-free subspace they
share, and a CNOT gate whose success is conditioned on no photon emission.
"""

__version__ = "0.1.0"
