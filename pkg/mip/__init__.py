"""Big-M MILP reformulations of the bidding MPEC."""
