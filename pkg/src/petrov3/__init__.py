"""Exact construction and verification of strictly non-Walker self-dual
neutral Einstein 4-metrics of Petrov type III, plus the solution theory of
the underlying quasi-linear PDE system."""

__version__ = "0.1.0"
