"""Rational trust modeling: trust functions, seller games, marketplace simulation."""

__version__ = "0.1.0"
