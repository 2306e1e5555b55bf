"""Benchmarking suite for stylequotient."""
