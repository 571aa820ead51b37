"""Coverage-driven pseudo-labeling and recurrent extractive summarization for
longitudinal clinical notes."""

__version__ = "0.1.0"
