"""Learning tests."""
