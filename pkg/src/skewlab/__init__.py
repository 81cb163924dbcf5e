"""Numerical laboratory for polynomial skew products (p(z), q_z(w)) on C^2."""

__version__ = "0.1.0"
