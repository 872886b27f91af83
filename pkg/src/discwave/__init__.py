"""Discrete wave equations on the integers, regular and biregular trees."""

__version__ = "0.1.0"
