"""Recovering feasible bids from a relaxation by fixing complementarity branches."""
