"""Integration tests for pme-lab."""
