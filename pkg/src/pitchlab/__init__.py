"""pitchlab: soccer event/tracking standardization, models and analytics."""

__version__ = "0.1.0"
