"""Reward environments: context laws, noise and true parameters."""
