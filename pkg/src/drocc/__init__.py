"""Sample-based approximation of distributionally robust chance-constrained models."""
