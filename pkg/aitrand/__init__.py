"""aitrand - randomness test battery grounded in algorithmic information theory."""

__version__ = "1.0.0"
