"""Forward operator tests."""
