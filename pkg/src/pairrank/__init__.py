"""pairrank: pairwise answer selection with a small transformer scorer."""

__version__ = "0.1.0"
