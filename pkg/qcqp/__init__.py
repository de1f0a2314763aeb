"""The bidding MPEC written as a QCQP, its null-space reduction and the multi-slot extension."""
