"""Fixed-point analysis of Kannan and generalized (three-point) Kannan maps."""

__version__ = "0.1.0"
