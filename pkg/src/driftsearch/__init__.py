"""Bayesian search planning toolkit.

Builds scenario-mixture priors for a lost object's location, simulates
stochastic drift of floating objects, updates the location distribution on
unsuccessful search increments, and allocates search effort optimally.
"""

__version__ = "0.1.0"
