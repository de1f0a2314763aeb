"""Semidefinite relaxations of the bidding QCQP."""
