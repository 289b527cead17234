"""Exact and Monte Carlo tools for character laws, metric entropy and
randomized trace suprema over finite subgroups of U(d)."""

__version__ = "0.1.0"
