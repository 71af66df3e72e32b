"""Local topology manipulation for connectivity-aware robot swarms."""

__version__ = "0.1.0"
