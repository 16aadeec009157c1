"""Experiment, sweep and diagnostics orchestration."""
