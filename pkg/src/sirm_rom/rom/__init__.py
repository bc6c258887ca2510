"""Subspace machinery: information matrices, bases, projection and reduced models."""
