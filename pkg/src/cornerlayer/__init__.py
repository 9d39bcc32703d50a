"""Solver for singularly perturbed reaction-diffusion problems whose
boundary and initial data disagree at a corner of the domain.

The corner discontinuity is absorbed by an explicit erfc-based function,
the smooth remainder is solved with an implicit finite-difference scheme
on a tensor product of piecewise-uniform layer-adapted meshes, and
convergence is estimated with the two-mesh principle.
"""

__version__ = "0.1.0"
