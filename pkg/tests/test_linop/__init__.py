"""Linear map tests."""
