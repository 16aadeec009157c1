"""Logging, errors, seeding and dataset ingestion."""
