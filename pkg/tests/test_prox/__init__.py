"""Proximal operator tests."""
