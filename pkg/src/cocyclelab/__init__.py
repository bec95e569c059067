"""Lyapunov exponents and proof-mechanism checks for Schrödinger cocycles over x -> bx mod 1."""

__version__ = "0.1.0"

from .core import SystemParams, OrbitTrace, orbit_trace, lognorm_growth, projective_step  # noqa: E402
from .potentials import PotentialSpec, make_builtin, parse_potential  # noqa: E402

__all__ = [
    "__version__",
    "SystemParams",
    "OrbitTrace",
    "orbit_trace",
    "lognorm_growth",
    "projective_step",
    "PotentialSpec",
    "make_builtin",
    "parse_potential",
]
