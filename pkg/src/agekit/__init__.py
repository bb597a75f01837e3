"""agekit: decision engine for finitely bounded homogeneous classes.

Computes orbits of tuples, behaviours of canonical functions, model-complete
cores with optimal presentations, definability expansions, and decides
bi-definability and (under preconditions) bi-interpretability of reducts,
emitting machine-checkable witness certificates.
"""

__version__ = "0.1.0"
