"""Fractional-time Schrodinger equation and quantum comb toolkit."""

__version__ = "0.1.0"
