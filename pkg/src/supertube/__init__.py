"""Quasiparticle spectra and critical velocity of a Bose gas in a narrow periodic channel."""

__version__ = "0.1.0"

from .core import LatticeVector, PhysicalParams, flow_velocity, wavevector  # noqa: E402
from .potential import FourierTable, PotentialSpec, build_table, limit_table, v0_limit  # noqa: E402

__all__ = [
    "FourierTable",
    "LatticeVector",
    "PhysicalParams",
    "PotentialSpec",
    "build_table",
    "flow_velocity",
    "limit_table",
    "v0_limit",
    "wavevector",
]
