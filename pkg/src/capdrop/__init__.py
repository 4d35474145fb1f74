"""capdrop: exact discrete minimization of capillary drop energies on
periodic rough surfaces (min-cut cell problems, effective contact angles,
volume-constrained droplets, and homogenization-rate sweeps)."""

__version__ = "0.1.0"

from . import surface, lattice, maxflow, cellproblem, droplet, homogenize  # noqa: F401,E402
from .maxflow import KERNEL  # noqa: F401
