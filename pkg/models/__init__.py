"""Sparse regression solvers and the spike-and-slab variational posterior."""
