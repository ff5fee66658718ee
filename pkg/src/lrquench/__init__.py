"""Quench dynamics of long-range Ising-type chains."""
__version__ = "0.1.0"
