"""Algorithms of the approximation scheme and its diagnostics."""
