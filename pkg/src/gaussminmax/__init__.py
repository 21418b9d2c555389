"""Gauss maps of surfaces in S^3, maps S^3 -> S^2 and discrete minmax widths."""

__version__ = "0.1.0"
