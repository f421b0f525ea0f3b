"""Differential-geometry engine for P-connections with contorsion, plus an
identity-verification harness over built-in model manifolds."""

__version__ = "0.1.0"
