"""Unit tests for pme-lab."""
