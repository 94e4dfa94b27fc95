"""Open-domain suggestion mining: discourse-marker oversampling and an
adapter-augmented transformer with two-tier suggestion/domain prediction."""

__version__ = "0.1.0"
