"""Spectral regularization tests."""
