"""Expected-cost analysis of probabilistic while programs."""
