"""Numerical lab for equidistribution of zeros of random sections on projective space."""

__version__ = "0.1.0"
