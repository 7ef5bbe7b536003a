"""Log-integrable F-spaces over desk-scale measure spaces."""

__version__ = "0.1.0"
