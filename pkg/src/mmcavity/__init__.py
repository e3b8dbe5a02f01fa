"""Near-confocal superconducting mm-wave Fabry-Perot cavity toolkit."""
__version__ = "0.1.0"
