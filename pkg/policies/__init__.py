"""Bandit policies and the episode runner."""
