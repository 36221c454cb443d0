"""Stochastic economic dispatch toolkit: wind uncertainty via Karhunen-Loeve
expansions, per-scenario DC dispatch LPs, and expected-cost estimation by
Monte Carlo and sparse-quadrature polynomial chaos."""

__version__ = "0.1.0"
