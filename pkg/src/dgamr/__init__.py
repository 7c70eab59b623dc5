"""Discontinuous Galerkin solver with multi-agent RL driven adaptive mesh refinement.

The package couples a 2D nodal DG solver for hyperbolic conservation laws
(advection, compressible Euler) with a decentralized multi-agent environment
in which every coarse mesh element decides its own one-level h- or
p-refinement state, trained with independent PPO under parameter and
experience sharing. Threshold baselines and a cost/error/efficiency
evaluation harness round out the toolkit.
"""

__version__ = "0.1.0"
