"""Semi-concrete scenario generation: t-wise sampling plus parameter sampling for ADAS testing."""

__version__ = "0.1.0"
