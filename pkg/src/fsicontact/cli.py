"""Placeholder, filled in incrementally."""
