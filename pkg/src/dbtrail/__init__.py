"""dbtrail: keyword search and trail navigation over relational data."""

__version__ = "0.1.0"
