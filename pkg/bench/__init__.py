"""Experiment harness: scenarios, network extension, brute-force oracle, reports and CLI."""
