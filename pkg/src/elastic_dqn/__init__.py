"""Elastic-step deep Q-learning on classic-control environments.

The training stack: seeded environments, a from-scratch one-hidden-layer
Q-network, variable-horizon replay, a density-clustering similarity oracle,
five agents (1-step, fixed n-step, double, averaged, elastic), and an
experiment harness with the statistical analyses used to compare them.
"""

__version__ = "0.1.0"
