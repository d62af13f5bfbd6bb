"""Spectral and Monte Carlo laboratory for incompressible flows, stochastic control
and divergence-free noise on flat tori."""

__version__ = "0.1.0"
