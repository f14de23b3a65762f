"""Numerical comparison geometry: model Riccati solutions, barrier
certificates, discrete varifolds and maximum-principle audits."""

__version__ = "0.1.0"
