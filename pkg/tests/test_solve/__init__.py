"""Solver tests."""
