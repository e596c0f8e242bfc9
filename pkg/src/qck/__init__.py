"""Classical and quantum analysis of intertwined measurement contexts ("quantum clouds")."""

__version__ = "0.1.0"
