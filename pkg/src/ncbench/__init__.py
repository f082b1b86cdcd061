"""Normalizing-constant estimation toolkit.

Estimates Z = integral over the unit cube of exp(-lambda * f(x)) dx for
black-box f from (possibly noisy) point evaluations, via a Gaussian-process
surrogate with a two-batch residual correction, plus Monte Carlo and
piecewise-constant baselines and a reproducible benchmark harness.
"""

__version__ = "0.1.0"
