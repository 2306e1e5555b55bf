"""Tests for stylequotient."""
