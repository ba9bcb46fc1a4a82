"""Late-time tails of Maxwell fields on Schwarzschild with hyperboloidal and characteristic evolutions."""

__version__ = "0.1.0"
