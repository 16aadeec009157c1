"""Restricted eigenvalues, compatibility, margin and contraction diagnostics."""
