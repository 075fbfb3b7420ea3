"""Tests for pme-lab."""
