"""Numerical laboratory for dipolar SLE and its vertex-field correlators."""
