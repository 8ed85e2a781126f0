"""Desk-scale chained hydrologic-hydraulic flood modeling with ensemble DA."""

__version__ = "0.1.0"
