"""inverselab test suite."""
